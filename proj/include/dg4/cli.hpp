#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dg4::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Command-line overrides applied on top of the manifest.
struct Flags {
    std::optional<std::vector<int>> grid_counts;
    std::optional<std::uint64_t> seed;
    std::vector<std::pair<std::string, double>> tol;
    bool swap_ut_labels = false;
    bool numeric_bracket = false;
};

/// Invalid manifest; `field` is a JSON-pointer-like path.
class ManifestError : public std::runtime_error {
public:
    ManifestError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct RunResult {
    std::string report;  // empty when the manifest was rejected
    int exit_code = 0;   // 0 ok, 2 invalid manifest, 3 task error
    std::string error;   // message for exit code 2
};

RunResult run_manifest(const std::string& text, const Flags& flags = {});

/// Bundled example manifests by file name.
std::map<std::string, std::string> example_manifests();
/// Writes the bundled manifests and returns the written paths.
std::vector<std::filesystem::path> emit_example_manifests(const std::filesystem::path& dir);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace dg4::cli
