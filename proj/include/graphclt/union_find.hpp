#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace graphclt {

/// Disjoint-set forest with union by size and path halving. Tracks the
/// size of every component root.
class UnionFind {
public:
    explicit UnionFind(std::uint32_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), 0u);
    }

    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    /// Merges the components of a and b; returns the new root.
    /// Caller must ensure find(a) != find(b).
    std::uint32_t unite(std::uint32_t a, std::uint32_t b) {
        std::uint32_t ra = find(a), rb = find(b);
        if (size_[ra] < size_[rb]) std::swap(ra, rb);
        parent_[rb] = ra;
        size_[ra] += size_[rb];
        return ra;
    }

    std::uint32_t component_size(std::uint32_t x) { return size_[find(x)]; }

    std::uint32_t count() const { return static_cast<std::uint32_t>(parent_.size()); }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
};

}  // namespace graphclt
