#pragma once

#include <mutex>
#include <optional>
#include <unordered_map>

#include "node.hpp"

namespace dg4 {

// Process-wide memo from (node, small int key) to a result node. Both sides are
// held weakly so cached entries never keep expressions alive.
class WeakMemo {
public:
    std::optional<Expr> find(const Expr& src, int key) {
        std::lock_guard lock(mu_);
        auto it = map_.find({src.id(), key});
        if (it == map_.end()) return std::nullopt;
        auto s = it->second.src.lock();
        auto r = it->second.result.lock();
        if (!s || !r || s.get() != src.id()) {
            map_.erase(it);
            return std::nullopt;
        }
        return ExprFactory::wrap(std::move(r));
    }

    void store(const Expr& src, int key, const Expr& result) {
        std::lock_guard lock(mu_);
        map_[{src.id(), key}] = Entry{ExprFactory::ptr(src), ExprFactory::ptr(result)};
        if (map_.size() > purge_at_) {
            for (auto it = map_.begin(); it != map_.end();) {
                if (it->second.src.expired() || it->second.result.expired())
                    it = map_.erase(it);
                else
                    ++it;
            }
            purge_at_ = std::max<std::size_t>(1u << 16, 2 * map_.size());
        }
    }

private:
    struct KeyT {
        const Node* n;
        int k;
        bool operator==(const KeyT& o) const noexcept { return n == o.n && k == o.k; }
    };
    struct KeyHash {
        std::size_t operator()(const KeyT& k) const noexcept {
            return std::hash<const void*>()(k.n) * 31u + static_cast<std::size_t>(k.k);
        }
    };
    struct Entry {
        std::weak_ptr<const Node> src;
        std::weak_ptr<const Node> result;
    };
    std::mutex mu_;
    std::unordered_map<KeyT, Entry, KeyHash> map_;
    std::size_t purge_at_ = 1u << 16;
};

}  // namespace dg4
