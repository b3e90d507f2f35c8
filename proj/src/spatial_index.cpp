#include "timberdiff/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace timberdiff {

SpatialIndex::SpatialIndex(const PointCloud& cloud) : SpatialIndex(cloud.points) {}

SpatialIndex::SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(points_.empty() ? 0 : 2 * points_.size() / kLeafSize + 2);
    if (!points_.empty()) root_ = build(0, static_cast<int>(points_.size()));
}

int SpatialIndex::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double ca = points_[a][axis], cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });

    const double split = points_[order_[mid]][axis];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void SpatialIndex::knn_search(int node, const Vec3& q, int k,
                              std::vector<std::pair<double, int>>& heap) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
        for (int i = n.begin; i < n.end; ++i) {
            const int idx = order_[i];
            const std::pair<double, int> cand{squared_distance(q, points_[idx]), idx};
            if (static_cast<int>(heap.size()) < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end());
            } else if (cand < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        return;
    }
    const double delta = q[n.axis] - n.split;
    const int near = delta < 0.0 ? n.left : n.right;
    const int far = delta < 0.0 ? n.right : n.left;
    knn_search(near, q, k, heap);
    // Visit the far side on ties as well: an equally distant lower index may
    // still displace the current heap worst.
    if (static_cast<int>(heap.size()) < k || delta * delta <= heap.front().first) {
        knn_search(far, q, k, heap);
    }
}

std::vector<SpatialIndex::Neighbor> SpatialIndex::knn(const Vec3& query, int k) const {
    std::vector<Neighbor> result;
    if (root_ < 0 || k <= 0) return result;
    std::vector<std::pair<double, int>> heap;
    heap.reserve(static_cast<std::size_t>(k));
    knn_search(root_, query, k, heap);
    std::sort(heap.begin(), heap.end());
    result.reserve(heap.size());
    for (const auto& [d2, idx] : heap) result.push_back({idx, std::sqrt(d2)});
    return result;
}

SpatialIndex::Neighbor SpatialIndex::nearest(const Vec3& query) const {
    const auto r = knn(query, 1);
    return r.empty() ? Neighbor{} : r.front();
}

void SpatialIndex::radius_search(int node, const Vec3& q, double r2,
                                 std::vector<std::pair<double, int>>& out) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
        for (int i = n.begin; i < n.end; ++i) {
            const int idx = order_[i];
            const double d2 = squared_distance(q, points_[idx]);
            if (d2 <= r2) out.emplace_back(d2, idx);
        }
        return;
    }
    const double delta = q[n.axis] - n.split;
    const int near = delta < 0.0 ? n.left : n.right;
    const int far = delta < 0.0 ? n.right : n.left;
    radius_search(near, q, r2, out);
    if (delta * delta <= r2) radius_search(far, q, r2, out);
}

std::vector<SpatialIndex::Neighbor> SpatialIndex::radius(const Vec3& query, double radius) const {
    std::vector<Neighbor> result;
    if (root_ < 0 || radius < 0.0) return result;
    std::vector<std::pair<double, int>> found;
    radius_search(root_, query, radius * radius, found);
    std::sort(found.begin(), found.end());
    result.reserve(found.size());
    for (const auto& [d2, idx] : found) result.push_back({idx, std::sqrt(d2)});
    return result;
}

}  // namespace timberdiff
