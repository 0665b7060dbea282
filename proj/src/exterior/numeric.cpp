#include "dg4/numeric.hpp"

#include <Eigen/SVD>

namespace dg4 {

FieldBatch::FieldBatch(std::span<const VectorField> fields) : count_(static_cast<int>(fields.size())) {
    std::vector<Expr> roots;
    n_ = fields.empty() ? 0 : fields.front().dim();
    for (const auto& f : fields) {
        if (f.dim() != n_) throw Error(ErrorCode::ChartMismatch, "fields of different dimension in one batch");
        roots.insert(roots.end(), f.c.begin(), f.c.end());
    }
    ev_ = Evaluator(roots);
}

Eigen::MatrixXd FieldBatch::operator()(const Point& x) const {
    std::vector<double> v = ev_(x);
    Eigen::MatrixXd m(n_, count_);
    for (int j = 0; j < count_; ++j)
        for (int i = 0; i < n_; ++i) m(i, j) = v[static_cast<std::size_t>(j * n_ + i)];
    return m;
}

Eigen::VectorXd value(const VectorField& v, const Point& x) {
    std::vector<double> r = Evaluator(v.c)(x);
    return Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
}

Eigen::MatrixXd value(const ExprMatrix& m, const Point& x) {
    std::vector<double> r = Evaluator(m.a)(x);
    Eigen::MatrixXd out(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out(i, j) = r[static_cast<std::size_t>(i * m.cols + j)];
    return out;
}

Eigen::MatrixXd value(const EndoField& e, const Point& x) { return value(e.m, x); }

Eigen::VectorXd value(const DiffForm& f, const Point& x) {
    std::vector<double> r = Evaluator(f.c)(x);
    return Eigen::Map<Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
}

namespace {
Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return Eigen::VectorXd();
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
}
}  // namespace

int numeric_rank(const Eigen::MatrixXd& m, double rel_tol) {
    Eigen::VectorXd s = singular_values(m);
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return r;
}

double condition_ratio(const Eigen::MatrixXd& m) {
    Eigen::VectorXd s = singular_values(m);
    if (s.size() == 0 || s(0) == 0.0) return 0.0;
    return s(s.size() - 1) / s(0);
}

Eigen::MatrixXd orthonormal_span(const Eigen::MatrixXd& cols, double rel_tol) {
    if (cols.cols() == 0) return Eigen::MatrixXd(cols.rows(), 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cols, Eigen::ComputeThinU);
    int r = numeric_rank(cols, rel_tol);
    return svd.matrixU().leftCols(r);
}

Eigen::VectorXd orthogonal_part(const Eigen::MatrixXd& q, const Eigen::VectorXd& v) {
    if (q.cols() == 0) return v;
    return v - q * (q.transpose() * v);
}

double form_value(const Eigen::VectorXd& coeffs, int n, int k, const Eigen::MatrixXd& vectors) {
    const auto& idx = multi_indices(n, k);
    double s = 0.0;
    for (std::size_t p = 0; p < idx.size(); ++p) {
        auto rows = mask_indices(idx[p]);
        Eigen::MatrixXd sub(k, k);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) sub(a, b) = vectors(rows[static_cast<std::size_t>(a)], b);
        s += coeffs(static_cast<Eigen::Index>(p)) * (k == 0 ? 1.0 : sub.determinant());
    }
    return s;
}

Eigen::MatrixXd fd_jacobian(const FieldBatch& one_field, const Point& x, double h) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd jac(n, n);
    for (int k = 0; k < n; ++k) {
        auto central = [&](double step) {
            Point a = x, b = x;
            a[static_cast<std::size_t>(k)] += step;
            b[static_cast<std::size_t>(k)] -= step;
            return Eigen::VectorXd((one_field(a).col(0) - one_field(b).col(0)) / (2 * step));
        };
        jac.col(k) = (4 * central(h / 2) - central(h)) / 3;
    }
    return jac;
}

Eigen::VectorXd fd_bracket(const FieldBatch& pair, const Point& x, double h) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd vw = pair(x);
    Eigen::MatrixXd dv(n, n), dw(n, n);
    for (int k = 0; k < n; ++k) {
        auto central = [&](double step) {
            Point a = x, b = x;
            a[static_cast<std::size_t>(k)] += step;
            b[static_cast<std::size_t>(k)] -= step;
            return Eigen::MatrixXd((pair(a) - pair(b)) / (2 * step));
        };
        Eigen::MatrixXd d = (4 * central(h / 2) - central(h)) / 3;
        dv.col(k) = d.col(0);
        dw.col(k) = d.col(1);
    }
    return dw * vw.col(0) - dv * vw.col(1);
}

}  // namespace dg4
