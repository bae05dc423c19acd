#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

#include "geometry.hpp"

namespace o2i {

/// Static 3-D k-d tree over a point set.
///
/// All queries return point indices in ascending order (k-nearest: ascending
/// (squared distance, index)), so results compare directly against a linear scan.
/// Inclusion tests use the same arithmetic as the documented predicate, never an
/// approximation, which keeps indexed and brute-force results bit-identical.
class KdTree {
public:
    KdTree() = default;

    explicit KdTree(std::vector<Vec3> points, std::size_t leaf_size = 16)
        : points_(std::move(points)), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
        perm_.resize(points_.size());
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        if (!points_.empty()) {
            nodes_.reserve(2 * points_.size() / leaf_size_ + 2);
            build(0, points_.size());
        }
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    /// Indices with |p - center|^2 <= radius^2.
    std::vector<std::size_t> radius_query(const Vec3& center, double radius) const {
        std::vector<std::size_t> out;
        if (nodes_.empty() || radius < 0.0) return out;
        const double r2 = radius * radius;
        visit(
            [&](const Aabb& box) { return box.distance2_to(center) <= r2; },
            [&](std::size_t i) {
                if (norm2(points_[i] - center) <= r2) out.push_back(i);
            });
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Indices inside the closed box.
    std::vector<std::size_t> box_query(const Aabb& query) const {
        std::vector<std::size_t> out;
        if (nodes_.empty()) return out;
        visit(
            [&](const Aabb& box) {
                for (int a = 0; a < 3; ++a)
                    if (box.hi[a] < query.lo[a] || box.lo[a] > query.hi[a]) return false;
                return true;
            },
            [&](std::size_t i) {
                const Vec3& p = points_[i];
                for (int a = 0; a < 3; ++a)
                    if (p[a] < query.lo[a] || p[a] > query.hi[a]) return;
                out.push_back(i);
            });
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Indices whose distance to the segment [a, b] is <= radius (capsule query).
    std::vector<std::size_t> segment_query(const Vec3& a, const Vec3& b, double radius) const {
        std::vector<std::size_t> out;
        if (nodes_.empty() || radius < 0.0) return out;
        Aabb capsule;
        capsule.extend(a);
        capsule.extend(b);
        capsule.lo -= Vec3{radius, radius, radius};
        capsule.hi += Vec3{radius, radius, radius};
        visit(
            [&](const Aabb& box) {
                for (int ax = 0; ax < 3; ++ax)
                    if (box.hi[ax] < capsule.lo[ax] || box.lo[ax] > capsule.hi[ax]) return false;
                return distance_to_segment(box.center(), a, b) - box.half_diagonal() <= radius;
            },
            [&](std::size_t i) {
                if (distance_to_segment(points_[i], a, b) <= radius) out.push_back(i);
            });
        std::sort(out.begin(), out.end());
        return out;
    }

    /// The k nearest indices ordered by (squared distance, index).
    std::vector<std::size_t> knn(const Vec3& center, std::size_t k) const {
        using Entry = std::pair<double, std::size_t>;
        std::priority_queue<Entry> heap;  // max-heap on (d2, index)
        if (nodes_.empty() || k == 0) return {};
        knn_recurse(0, center, k, heap);
        std::vector<std::size_t> out(heap.size());
        for (std::size_t i = out.size(); i-- > 0;) {
            out[i] = heap.top().second;
            heap.pop();
        }
        return out;
    }

private:
    struct Node {
        Aabb box;
        std::size_t begin = 0;
        std::size_t end = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
    };

    std::int32_t build(std::size_t begin, std::size_t end) {
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back({});
        Aabb box;
        for (std::size_t i = begin; i < end; ++i) box.extend(points_[perm_[i]]);
        nodes_[id].box = box;
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        if (end - begin <= leaf_size_) return id;

        const Vec3 ext = box.hi - box.lo;
        const int axis = ext.x >= ext.y ? (ext.x >= ext.z ? 0 : 2) : (ext.y >= ext.z ? 1 : 2);
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin),
                         perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                         perm_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t l, std::size_t r) {
                             const double pl = points_[l][axis], pr = points_[r][axis];
                             return pl < pr || (pl == pr && l < r);
                         });
        const std::int32_t left = build(begin, mid);
        const std::int32_t right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    template <class NodePred, class PointFn>
    void visit(NodePred&& node_pred, PointFn&& point_fn) const {
        std::vector<std::int32_t> stack{0};
        while (!stack.empty()) {
            const Node& n = nodes_[stack.back()];
            stack.pop_back();
            if (!node_pred(n.box)) continue;
            if (n.left < 0) {
                for (std::size_t i = n.begin; i < n.end; ++i) point_fn(perm_[i]);
            } else {
                stack.push_back(n.right);
                stack.push_back(n.left);
            }
        }
    }

    void knn_recurse(std::int32_t id, const Vec3& c, std::size_t k,
                     std::priority_queue<std::pair<double, std::size_t>>& heap) const {
        const Node& n = nodes_[id];
        if (heap.size() == k && n.box.distance2_to(c) > heap.top().first) return;
        if (n.left < 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                const std::size_t idx = perm_[i];
                const std::pair<double, std::size_t> e{norm2(points_[idx] - c), idx};
                if (heap.size() < k) {
                    heap.push(e);
                } else if (e < heap.top()) {
                    heap.pop();
                    heap.push(e);
                }
            }
            return;
        }
        const double dl = nodes_[n.left].box.distance2_to(c);
        const double dr = nodes_[n.right].box.distance2_to(c);
        if (dl <= dr) {
            knn_recurse(n.left, c, k, heap);
            knn_recurse(n.right, c, k, heap);
        } else {
            knn_recurse(n.right, c, k, heap);
            knn_recurse(n.left, c, k, heap);
        }
    }

    std::vector<Vec3> points_;
    std::vector<std::size_t> perm_;
    std::vector<Node> nodes_;
    std::size_t leaf_size_ = 16;
};

}  // namespace o2i
