#pragma once

#include "hofsurf/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hofsurf {

struct Neighbor {
    std::size_t index;
    double squared_distance;
};

// Balanced k-d tree over a fixed point set with axis-aligned median splits.
//
// Queries are exact: the answer always equals an exhaustive scan using
// squared_distance(), with ties resolved towards the lowest point index.
// The tree is immutable after construction, so concurrent queries are safe.
class KdTree {
public:
    explicit KdTree(std::span<const Vec3> points);

    std::size_t size() const noexcept { return points_.size(); }
    const std::vector<Vec3>& points() const noexcept { return points_; }

    Neighbor nearest(const Vec3& query) const;

    // The k closest points ordered by (squared distance, index).
    std::vector<Neighbor> k_nearest(const Vec3& query, std::size_t k) const;

private:
    struct Node {
        std::uint32_t begin;
        std::uint32_t end;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint8_t axis = 0;
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search_nearest(std::int32_t node, const Vec3& query, Neighbor& best) const;
    void search_k(std::int32_t node, const Vec3& query, std::size_t k,
                  std::vector<Neighbor>& heap) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

} // namespace hofsurf
