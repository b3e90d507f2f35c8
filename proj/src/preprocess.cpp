#include "timberdiff/preprocess.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <unordered_map>

#include "timberdiff/errors.hpp"
#include "timberdiff/parallel.hpp"
#include "timberdiff/spatial_index.hpp"

namespace timberdiff {

namespace {

struct VoxelKey {
    std::int64_t x, y, z;
    bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey& k) const {
        std::uint64_t h = 1469598103934665603ULL;
        for (const std::int64_t v : {k.x, k.y, k.z}) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size,
                            std::optional<Vec3> anchor) {
    if (!(voxel_size > 0.0)) throw InvalidParameter("voxel_size must be > 0");
    if (cloud.empty()) return {};

    Vec3 origin;
    if (anchor) {
        origin = *anchor;
    } else {
        Vec3 hi;
        cloud.bounds(origin, hi);
    }

    struct Accumulator {
        Vec3 point = Vec3::Zero();
        Vec3 normal = Vec3::Zero();
        Vec3 color = Vec3::Zero();
        std::size_t count = 0;
    };

    const bool normals = cloud.has_normals();
    const bool colors = cloud.has_colors();

    std::unordered_map<VoxelKey, int, VoxelKeyHash> cells;
    cells.reserve(cloud.size());
    std::vector<Accumulator> accumulators;  // in first-occupancy order
    accumulators.reserve(cloud.size() / 4 + 1);

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        // Component-wise division, not Eigen's reciprocal-multiply, so the
        // binning matches a plain floor((p - origin) / voxel) computation.
        const VoxelKey key{
            static_cast<std::int64_t>(std::floor((p.x() - origin.x()) / voxel_size)),
            static_cast<std::int64_t>(std::floor((p.y() - origin.y()) / voxel_size)),
            static_cast<std::int64_t>(std::floor((p.z() - origin.z()) / voxel_size))};
        auto [it, inserted] = cells.try_emplace(key, static_cast<int>(accumulators.size()));
        if (inserted) accumulators.emplace_back();
        Accumulator& acc = accumulators[it->second];
        acc.point += cloud.points[i];
        if (normals) acc.normal += cloud.normals[i];
        if (colors) acc.color += cloud.colors[i];
        ++acc.count;
    }

    PointCloud out;
    out.points.reserve(accumulators.size());
    if (normals) out.normals.reserve(accumulators.size());
    if (colors) out.colors.reserve(accumulators.size());
    for (const Accumulator& acc : accumulators) {
        const double inv = 1.0 / static_cast<double>(acc.count);
        out.points.push_back(acc.point * inv);
        if (normals) {
            Vec3 n = acc.normal * inv;
            const double len = n.norm();
            out.normals.push_back(len > 0.0 ? Vec3(n / len) : Vec3::Zero());
        }
        if (colors) out.colors.push_back(acc.color * inv);
    }
    return out;
}

OutlierRemovalResult remove_statistical_outliers(const PointCloud& cloud, int k_neighbors,
                                                 double std_ratio) {
    if (k_neighbors < 1) throw InvalidParameter("k_neighbors must be >= 1");
    if (!(std_ratio > 0.0)) throw InvalidParameter("std_ratio must be > 0");
    if (cloud.size() <= static_cast<std::size_t>(k_neighbors)) {
        throw InvalidParameter("cloud must have more than k_neighbors points");
    }

    const SpatialIndex index(cloud);
    const std::size_t n = cloud.size();
    std::vector<double> mean_distance(n);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            // k nearest other points: query k+1 and drop the point itself.
            const auto nn = index.knn(cloud.points[i], k_neighbors + 1);
            double sum = 0.0;
            for (const auto& nb : nn) {
                if (nb.index != static_cast<int>(i)) sum += nb.distance;
            }
            mean_distance[i] = sum / static_cast<double>(k_neighbors);
        }
    });

    double mean = 0.0;
    for (const double d : mean_distance) mean += d;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const double d : mean_distance) var += (d - mean) * (d - mean);
    var /= static_cast<double>(n);
    const double cutoff = mean + std_ratio * std::sqrt(var);

    OutlierRemovalResult result;
    std::vector<int> kept;
    kept.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (mean_distance[i] > cutoff) result.removed_indices.push_back(static_cast<int>(i));
        else kept.push_back(static_cast<int>(i));
    }
    result.cloud = cloud.select(kept);
    return result;
}

namespace {

struct NormalFit {
    Vec3 normal = Vec3::Zero();
    bool degenerate = true;
};

NormalFit fit_normal(const PointCloud& cloud, const std::vector<SpatialIndex::Neighbor>& nn) {
    Vec3 centroid = Vec3::Zero();
    for (const auto& nb : nn) centroid += cloud.points[nb.index];
    centroid /= static_cast<double>(nn.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& nb : nn) {
        const Vec3 d = cloud.points[nb.index] - centroid;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(nn.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Vec3 eigenvalues = solver.eigenvalues();  // ascending
    NormalFit fit;
    // The plane is well defined only when the two larger eigenvalues carry
    // spread: coincident neighbors have all ~0, collinear ones have the middle
    // eigenvalue ~0.
    const double scale = eigenvalues[2];
    if (scale <= 0.0 || eigenvalues[1] <= std::max(1e-18, 1e-9 * scale)) return fit;
    fit.normal = solver.eigenvectors().col(0).normalized();
    fit.degenerate = false;
    return fit;
}

// Orientation consistency via a minimum spanning tree over the symmetrized
// k-NN graph, edge weight 1 - |n_i . n_j|. Each connected component is seeded
// at its highest-z point with the normal flipped toward +z.
void orient_by_mst(const PointCloud& cloud, std::vector<Vec3>& normals,
                   const std::vector<std::vector<int>>& adjacency) {
    const std::size_t n = normals.size();
    std::vector<char> oriented(n, 0);

    using QueueEntry = std::tuple<double, int, int>;  // (weight, to, from)
    for (;;) {
        // Next unoriented seed: highest z, ties by lower index.
        int seed = -1;
        for (std::size_t i = 0; i < n; ++i) {
            if (oriented[i] || normals[i].isZero()) continue;
            if (seed < 0 || cloud.points[i].z() > cloud.points[seed].z()) {
                seed = static_cast<int>(i);
            }
        }
        if (seed < 0) break;

        if (normals[seed].z() < 0.0) normals[seed] = -normals[seed];
        oriented[seed] = 1;

        std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> frontier;
        for (const int j : adjacency[seed]) frontier.emplace(1.0 - std::abs(normals[seed].dot(normals[j])), j, seed);
        while (!frontier.empty()) {
            const auto [w, to, from] = frontier.top();
            frontier.pop();
            if (oriented[to] || normals[to].isZero()) continue;
            if (normals[from].dot(normals[to]) < 0.0) normals[to] = -normals[to];
            oriented[to] = 1;
            for (const int j : adjacency[to]) {
                if (!oriented[j] && !normals[j].isZero()) {
                    frontier.emplace(1.0 - std::abs(normals[to].dot(normals[j])), j, to);
                }
            }
        }
    }
}

}  // namespace

PointCloud estimate_normals(const PointCloud& cloud, int k_neighbors,
                            std::optional<Vec3> orientation_hint) {
    if (k_neighbors < 3) throw InvalidParameter("k_neighbors must be >= 3");
    if (cloud.size() < static_cast<std::size_t>(k_neighbors)) {
        throw InvalidParameter("cloud must have at least k_neighbors points");
    }

    const SpatialIndex index(cloud);
    const std::size_t n = cloud.size();
    std::vector<Vec3> normals(n);
    std::vector<std::vector<int>> adjacency(orientation_hint ? 0 : n);

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto nn = index.knn(cloud.points[i], k_neighbors);
            const NormalFit fit = fit_normal(cloud, nn);
            normals[i] = fit.normal;
            if (!orientation_hint) {
                auto& adj = adjacency[i];
                adj.reserve(nn.size());
                for (const auto& nb : nn) {
                    if (nb.index != static_cast<int>(i)) adj.push_back(nb.index);
                }
            }
        }
    });

    if (orientation_hint) {
        for (std::size_t i = 0; i < n; ++i) {
            if (normals[i].isZero()) continue;
            if (normals[i].dot(*orientation_hint - cloud.points[i]) < 0.0) {
                normals[i] = -normals[i];
            }
        }
    } else {
        // Symmetrize the k-NN graph so propagation can cross in both directions.
        for (std::size_t i = 0; i < n; ++i) {
            for (const int j : adjacency[i]) {
                adjacency[j].push_back(static_cast<int>(i));
            }
        }
        for (auto& adj : adjacency) {
            std::sort(adj.begin(), adj.end());
            adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
        }
        orient_by_mst(cloud, normals, adjacency);
    }

    PointCloud out = cloud;
    out.normals = std::move(normals);
    return out;
}

}  // namespace timberdiff
