#include "hofsurf/kdtree.hpp"

#include "hofsurf/error.hpp"

#include <algorithm>
#include <limits>

namespace hofsurf {

namespace {

constexpr std::uint32_t kLeafSize = 8;

// Strict (distance, index) ordering; the heap keeps the worst candidate on top.
bool closer(const Neighbor& a, const Neighbor& b) {
    if (a.squared_distance != b.squared_distance) return a.squared_distance < b.squared_distance;
    return a.index < b.index;
}

} // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    if (points_.empty()) throw DomainError("cannot build a k-d tree over an empty point set");
    if (points_.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw DomainError("point set too large for the k-d tree");
    }
    order_.resize(points_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = points_[order_[begin]];
    Vec3 hi = lo;
    for (std::uint32_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    Vec3 extent = hi - lo;
    std::uint8_t axis = 0;
    if (extent.y() > extent[axis]) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         return points_[a][axis] < points_[b][axis];
                     });
    // Left holds coordinates <= split, right holds coordinates >= split.
    const double split = points_[order_[mid]][axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

Neighbor KdTree::nearest(const Vec3& query) const {
    Neighbor best{std::numeric_limits<std::size_t>::max(),
                  std::numeric_limits<double>::infinity()};
    search_nearest(0, query, best);
    return best;
}

void KdTree::search_nearest(std::int32_t id, const Vec3& query, Neighbor& best) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const Neighbor cand{order_[i], squared_distance(query, points_[order_[i]])};
            if (closer(cand, best)) best = cand;
        }
        return;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    search_nearest(near, query, best);
    // `<=` keeps equidistant candidates on the far side reachable for the
    // lowest-index tie rule.
    if (diff * diff <= best.squared_distance) search_nearest(far, query, best);
}

std::vector<Neighbor> KdTree::k_nearest(const Vec3& query, std::size_t k) const {
    if (k == 0) return {};
    k = std::min(k, points_.size());
    std::vector<Neighbor> heap;
    heap.reserve(k + 1);
    search_k(0, query, k, heap);
    std::sort_heap(heap.begin(), heap.end(), closer);
    return heap;
}

void KdTree::search_k(std::int32_t id, const Vec3& query, std::size_t k,
                      std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const Neighbor cand{order_[i], squared_distance(query, points_[order_[i]])};
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), closer);
            } else if (closer(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), closer);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), closer);
            }
        }
        return;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    search_k(near, query, k, heap);
    if (heap.size() < k || diff * diff <= heap.front().squared_distance) {
        search_k(far, query, k, heap);
    }
}

} // namespace hofsurf
