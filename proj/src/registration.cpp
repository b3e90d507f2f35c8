#include "timberdiff/registration.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "timberdiff/errors.hpp"
#include "timberdiff/parallel.hpp"
#include "timberdiff/rng.hpp"
#include "timberdiff/spatial_index.hpp"

namespace timberdiff {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct NeighborRef {
    int index;
    float distance;
};

/// Darboux-frame angle triple of a point pair. The pair is reordered so the
/// source is the point whose normal better aligns with the connecting line,
/// making the triple symmetric in its arguments.
bool pair_feature(const Vec3& p1, const Vec3& n1, const Vec3& p2, const Vec3& n2, double& alpha,
                  double& phi, double& theta) {
    Vec3 d = p2 - p1;
    const double dist = d.norm();
    if (dist <= 0.0) return false;
    d /= dist;

    const double a1 = n1.dot(d);
    const double a2 = n2.dot(-d);
    Vec3 u = n1;
    Vec3 nt = n2;
    if (std::abs(a1) < std::abs(a2)) {
        u = n2;
        nt = n1;
        d = -d;
        phi = a2;
    } else {
        phi = a1;
    }

    Vec3 v = d.cross(u);
    const double vnorm = v.norm();
    if (vnorm <= 1e-12) return false;  // connecting line parallel to the normal
    v /= vnorm;
    const Vec3 w = u.cross(v);

    alpha = v.dot(nt);
    theta = std::atan2(w.dot(nt), u.dot(nt));
    return true;
}

inline int angle_bin(double value, double lo, double hi) {
    const int bin = static_cast<int>((value - lo) / (hi - lo) * 11.0);
    return std::clamp(bin, 0, 10);
}

void accumulate_spfh(std::array<double, 33>& hist, double alpha, double phi, double theta) {
    hist[angle_bin(alpha, -1.0, 1.0)] += 1.0;
    hist[11 + angle_bin(phi, -1.0, 1.0)] += 1.0;
    hist[22 + angle_bin(theta, -kPi, kPi)] += 1.0;
}

}  // namespace

FeatureSet compute_fpfh(const PointCloud& cloud, double radius) {
    if (!cloud.has_normals()) throw MissingNormals("FPFH requires normals");
    if (!(radius > 0.0)) throw InvalidParameter("feature radius must be > 0");

    const std::size_t n = cloud.size();
    FeatureSet features;
    features.histograms.assign(n, {});
    features.valid.assign(n, 0);
    if (n == 0) return features;

    const SpatialIndex index(cloud);
    std::vector<std::vector<NeighborRef>> neighbors(n);
    std::vector<std::array<double, 33>> spfh(n);

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            spfh[i] = {};
            auto& list = neighbors[i];
            for (const auto& nb : index.radius(cloud.points[i], radius)) {
                if (nb.index == static_cast<int>(i)) continue;
                list.push_back({nb.index, static_cast<float>(nb.distance)});
                double alpha, phi, theta;
                if (pair_feature(cloud.points[i], cloud.normals[i], cloud.points[nb.index],
                                 cloud.normals[nb.index], alpha, phi, theta)) {
                    accumulate_spfh(spfh[i], alpha, phi, theta);
                }
            }
        }
    });

    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (neighbors[i].empty()) continue;  // zero histogram, flagged invalid
            auto& hist = features.histograms[i];
            hist = spfh[i];
            for (const NeighborRef& nb : neighbors[i]) {
                if (nb.distance <= 0.0f) continue;
                const double w = 1.0 / static_cast<double>(nb.distance);
                const auto& other = spfh[nb.index];
                for (int b = 0; b < 33; ++b) hist[b] += w * other[b];
            }
            for (int block = 0; block < 3; ++block) {
                double sum = 0.0;
                for (int b = 0; b < 11; ++b) sum += hist[block * 11 + b];
                if (sum > 0.0) {
                    for (int b = 0; b < 11; ++b) hist[block * 11 + b] /= sum;
                }
            }
            features.valid[i] = 1;
        }
    });
    return features;
}

RigidTransform fit_rigid_correspondences(const std::vector<Vec3>& source_points,
                                         const std::vector<Vec3>& target_points) {
    if (source_points.size() != target_points.size()) {
        throw LengthMismatch("correspondence lists differ in length");
    }
    const std::size_t n = source_points.size();
    if (n < 3) throw DegenerateConfiguration("need at least 3 correspondence pairs");

    Vec3 cs = Vec3::Zero(), ct = Vec3::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        cs += source_points[i];
        ct += target_points[i];
    }
    cs /= static_cast<double>(n);
    ct /= static_cast<double>(n);

    Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();  // Σ (t - ct)(s - cs)^T
    for (std::size_t i = 0; i < n; ++i) {
        cross += (target_points[i] - ct) * (source_points[i] - cs).transpose();
    }

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sigma = svd.singularValues();
    if (sigma[0] <= 0.0 || sigma[1] <= 1e-12 * sigma[0]) {
        throw DegenerateConfiguration("correspondence points are collinear or coincident");
    }

    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;

    RigidTransform t;
    t.rotation = svd.matrixU() * d * svd.matrixV().transpose();
    t.translation = ct - t.rotation * cs;
    return t;
}

namespace {

/// Correspondence candidates: nearest neighbor in 33-d feature space for a
/// (possibly subsampled) set of source points. Brute force, exact, ties by
/// lower target index.
struct CorrespondencePool {
    std::vector<int> source;
    std::vector<int> target;
};

CorrespondencePool build_pool(const PointCloud& source, const PointCloud& target,
                              const FeatureSet& source_features,
                              const FeatureSet& target_features, int pool_cap, Rng rng) {
    std::vector<int> candidates;
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (source_features.valid[i]) candidates.push_back(static_cast<int>(i));
    }
    if (pool_cap > 0 && static_cast<int>(candidates.size()) > pool_cap) {
        // Deterministic partial Fisher-Yates, then restore index order.
        for (int i = 0; i < pool_cap; ++i) {
            const auto j = i + static_cast<int>(rng.uniform_index(candidates.size() - i));
            std::swap(candidates[i], candidates[j]);
        }
        candidates.resize(pool_cap);
        std::sort(candidates.begin(), candidates.end());
    }

    std::vector<int> valid_targets;
    for (std::size_t j = 0; j < target.size(); ++j) {
        if (target_features.valid[j]) valid_targets.push_back(static_cast<int>(j));
    }
    if (valid_targets.empty()) return {};

    CorrespondencePool pool;
    pool.source = candidates;
    pool.target.assign(candidates.size(), -1);
    parallel_for(candidates.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const auto& f = source_features.histograms[pool.source[c]];
            double best = std::numeric_limits<double>::infinity();
            int best_idx = -1;
            for (const int j : valid_targets) {
                const auto& g = target_features.histograms[j];
                double d2 = 0.0;
                for (int b = 0; b < 33; ++b) {
                    const double diff = f[b] - g[b];
                    d2 += diff * diff;
                }
                if (d2 < best) {
                    best = d2;
                    best_idx = j;
                }
            }
            pool.target[c] = best_idx;
        }
    });
    return pool;
}

struct FullEvaluation {
    double fitness = 0.0;
    double rmse = 0.0;
};

FullEvaluation evaluate_transform(const PointCloud& source, const SpatialIndex& target_index,
                                  const RigidTransform& t, double threshold) {
    const std::size_t n = source.size();
    std::vector<double> d(n, -1.0);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto nn = target_index.nearest(t.apply(source.points[i]));
            if (nn.index >= 0 && nn.distance <= threshold) d[i] = nn.distance;
        }
    });
    FullEvaluation eval;
    std::size_t matched = 0;
    double sq = 0.0;
    for (const double di : d) {
        if (di >= 0.0) {
            ++matched;
            sq += di * di;
        }
    }
    if (n > 0) eval.fitness = static_cast<double>(matched) / static_cast<double>(n);
    if (matched > 0) eval.rmse = std::sqrt(sq / static_cast<double>(matched));
    return eval;
}

}  // namespace

RegistrationResult ransac_register(const PointCloud& source, const PointCloud& target,
                                   const FeatureSet& source_features,
                                   const FeatureSet& target_features, const RansacParams& params) {
    if (params.sample_size < 3) throw InvalidParameter("sample_size must be >= 3");
    if (!(params.distance_threshold > 0.0)) {
        throw InvalidParameter("distance_threshold must be > 0");
    }
    if (source.size() < static_cast<std::size_t>(params.sample_size) ||
        target.size() < static_cast<std::size_t>(params.sample_size)) {
        throw InsufficientPoints("clouds must have at least sample_size points");
    }
    if (source_features.size() != source.size() || target_features.size() != target.size()) {
        throw LengthMismatch("feature sets are not parallel to their clouds");
    }

    Rng rng(params.seed);
    const CorrespondencePool pool = build_pool(source, target, source_features, target_features,
                                               params.correspondence_pool, rng.split("pool"));
    const std::size_t pool_size = pool.source.size();
    if (pool_size < static_cast<std::size_t>(params.sample_size)) {
        throw NoConsensus("not enough feature correspondences to sample from");
    }

    std::vector<Vec3> src_pts(pool_size), tgt_pts(pool_size);
    for (std::size_t c = 0; c < pool_size; ++c) {
        src_pts[c] = source.points[pool.source[c]];
        tgt_pts[c] = target.points[pool.target[c]];
    }

    Rng draw = rng.split("draw");
    const int m = params.sample_size;
    const double ratio = params.edge_length_ratio;
    const double thr2 = params.distance_threshold * params.distance_threshold;

    RigidTransform best_transform;
    int best_inliers = -1;
    int executed = 0;
    std::vector<int> sample(m);
    std::vector<Vec3> sample_src(m), sample_tgt(m);

    for (int it = 0; it < params.max_iterations; ++it) {
        ++executed;

        bool distinct = true;
        for (int k = 0; k < m; ++k) {
            sample[k] = static_cast<int>(draw.uniform_index(pool_size));
            for (int j = 0; j < k; ++j) distinct &= sample[j] != sample[k];
        }
        if (!distinct) continue;

        // Edge-length similarity gate on all pairwise edges.
        bool edges_ok = true;
        for (int a = 0; a < m && edges_ok; ++a) {
            for (int b = a + 1; b < m && edges_ok; ++b) {
                const double ds = (src_pts[sample[a]] - src_pts[sample[b]]).norm();
                const double dt = (tgt_pts[sample[a]] - tgt_pts[sample[b]]).norm();
                edges_ok = ds > ratio * dt && dt > ratio * ds && ds > 1e-9;
            }
        }
        if (!edges_ok) continue;

        for (int k = 0; k < m; ++k) {
            sample_src[k] = src_pts[sample[k]];
            sample_tgt[k] = tgt_pts[sample[k]];
        }
        RigidTransform candidate;
        try {
            candidate = fit_rigid_correspondences(sample_src, sample_tgt);
        } catch (const DegenerateConfiguration&) {
            continue;
        }

        int inliers = 0;
        for (std::size_t c = 0; c < pool_size; ++c) {
            if ((candidate.apply(src_pts[c]) - tgt_pts[c]).squaredNorm() <= thr2) ++inliers;
        }
        if (inliers > best_inliers) {
            best_inliers = inliers;
            best_transform = candidate;

            // Confidence-based early exit.
            const double w =
                static_cast<double>(best_inliers) / static_cast<double>(pool_size);
            if (w >= 1.0) break;
            if (w > 0.0) {
                const double denom = std::log(1.0 - std::pow(w, m));
                if (denom < 0.0) {
                    const double needed = std::log(1.0 - params.confidence) / denom;
                    if (static_cast<double>(executed) >= needed) break;
                }
            }
        }
    }

    if (best_inliers < params.sample_size) {
        throw NoConsensus("RANSAC found no consensus set");
    }

    // Refit on the winning inlier correspondences.
    std::vector<Vec3> inl_src, inl_tgt;
    for (std::size_t c = 0; c < pool_size; ++c) {
        if ((best_transform.apply(src_pts[c]) - tgt_pts[c]).squaredNorm() <= thr2) {
            inl_src.push_back(src_pts[c]);
            inl_tgt.push_back(tgt_pts[c]);
        }
    }
    if (inl_src.size() >= 3) {
        try {
            best_transform = fit_rigid_correspondences(inl_src, inl_tgt);
        } catch (const DegenerateConfiguration&) {
            // Keep the sample fit.
        }
    }

    const SpatialIndex target_index(target);
    const FullEvaluation eval =
        evaluate_transform(source, target_index, best_transform, params.distance_threshold);
    if (eval.fitness < params.fitness_floor) {
        throw NoConsensus("registration fitness " + std::to_string(eval.fitness) +
                          " is below the floor " + std::to_string(params.fitness_floor));
    }

    RegistrationResult result;
    result.transform = best_transform;
    result.fitness = eval.fitness;
    result.inlier_rmse = eval.rmse;
    result.iterations = executed;
    return result;
}

namespace {

RigidTransform fit_point_to_plane(const std::vector<Vec3>& src, const std::vector<Vec3>& tgt,
                                  const std::vector<Vec3>& tgt_normals) {
    Eigen::Matrix<double, 6, 6> ata = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> atb = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Vec3& n = tgt_normals[i];
        Eigen::Matrix<double, 6, 1> a;
        a.head<3>() = src[i].cross(n);
        a.tail<3>() = n;
        const double r = n.dot(tgt[i] - src[i]);
        ata += a * a.transpose();
        atb += a * r;
    }
    const Eigen::Matrix<double, 6, 1> x = ata.ldlt().solve(atb);
    const Vec3 omega = x.head<3>();
    RigidTransform t;
    const double angle = omega.norm();
    if (angle > 0.0) {
        t.rotation = Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
    }
    t.translation = x.tail<3>();
    return t;
}

}  // namespace

RegistrationResult icp_refine(const PointCloud& source, const PointCloud& target,
                              const RigidTransform& initial, const IcpParams& params) {
    if (source.empty() || target.empty()) throw InsufficientPoints("clouds must be non-empty");
    if (!(params.max_correspondence_distance > 0.0)) {
        throw InvalidParameter("max_correspondence_distance must be > 0");
    }
    if (params.point_to_plane && !target.has_normals()) {
        throw MissingNormals("point-to-plane ICP requires target normals");
    }

    const SpatialIndex index(target);
    const double cap = params.max_correspondence_distance;
    const std::size_t n = source.size();

    RigidTransform t = initial;
    std::vector<int> match(n);
    std::vector<Vec3> moved(n);

    auto correspond = [&]() {
        parallel_for(n, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                moved[i] = t.apply(source.points[i]);
                const auto nn = index.nearest(moved[i]);
                match[i] = (nn.index >= 0 && nn.distance <= cap) ? nn.index : -1;
            }
        });
    };

    RegistrationResult result;
    double prev_rmse = -1.0, prev_fitness = -1.0;
    std::vector<Vec3> pair_src, pair_tgt, pair_nrm;

    for (int it = 0;; ++it) {
        correspond();
        pair_src.clear();
        pair_tgt.clear();
        pair_nrm.clear();
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (match[i] < 0) continue;
            pair_src.push_back(moved[i]);
            pair_tgt.push_back(target.points[match[i]]);
            if (params.point_to_plane) pair_nrm.push_back(target.normals[match[i]]);
            sq += (moved[i] - target.points[match[i]]).squaredNorm();
        }
        if (pair_src.empty()) {
            if (it == 0) {
                throw NoCorrespondences("no point pair within " + std::to_string(cap) +
                                        " m at the initial alignment");
            }
            break;
        }
        const double fitness = static_cast<double>(pair_src.size()) / static_cast<double>(n);
        const double rmse = std::sqrt(sq / static_cast<double>(pair_src.size()));
        result.fitness = fitness;
        result.inlier_rmse = rmse;

        if (it > 0) {
            const double rmse_change = std::abs(rmse - prev_rmse) / std::max(prev_rmse, 1e-12);
            const double fit_change =
                std::abs(fitness - prev_fitness) / std::max(prev_fitness, 1e-12);
            if (rmse_change < params.rel_rmse_change && fit_change < params.rel_fitness_change) {
                break;
            }
        }
        prev_rmse = rmse;
        prev_fitness = fitness;
        if (it >= params.max_iterations) break;

        try {
            const RigidTransform delta =
                params.point_to_plane ? fit_point_to_plane(pair_src, pair_tgt, pair_nrm)
                                      : fit_rigid_correspondences(pair_src, pair_tgt);
            t = delta.compose(t);
        } catch (const DegenerateConfiguration&) {
            break;
        }
        result.iterations = it + 1;
    }

    result.transform = t;
    return result;
}

}  // namespace timberdiff
