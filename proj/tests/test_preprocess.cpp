#include <doctest.h>

#include <cmath>
#include <set>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "timberdiff/errors.hpp"
#include "timberdiff/preprocess.hpp"
#include "timberdiff/rng.hpp"

using namespace timberdiff;

namespace {

PointCloud unit_cube_corners() {
    PointCloud cloud;
    for (int i = 0; i < 8; ++i) {
        cloud.points.emplace_back(i & 1 ? 1.0 : 0.0, i & 2 ? 1.0 : 0.0, i & 4 ? 1.0 : 0.0);
    }
    return cloud;
}

PointCloud random_cube_cloud(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i) {
        cloud.points.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
    }
    return cloud;
}

}  // namespace

TEST_CASE("voxel_downsample: all corners into one voxel") {
    const PointCloud out = voxel_downsample(unit_cube_corners(), 3.0);
    REQUIRE(out.size() == 1);
    CHECK((out.points[0] - Vec3(0.5, 0.5, 0.5)).norm() < 1e-12);
}

TEST_CASE("voxel_downsample: one point per voxel leaves cloud unchanged") {
    const PointCloud out = voxel_downsample(unit_cube_corners(), 0.5);
    CHECK(out.size() == 8);
}

TEST_CASE("voxel_downsample: centroids match brute-force binning") {
    const PointCloud cloud = random_cube_cloud(5, 100000);
    const double voxel = 0.1;
    const PointCloud out = voxel_downsample(cloud, voxel);
    CHECK(out.size() <= 1000);

    Vec3 lo, hi;
    cloud.bounds(lo, hi);
    const auto cells = tdtest::oracle::brute_voxel_centroids(cloud, voxel, lo);
    REQUIRE(out.size() == cells.size());

    // Match output points to oracle cells by voxel coordinate.
    std::set<std::array<long long, 3>> seen;
    for (const Vec3& p : out.points) {
        const std::array<long long, 3> key = {
            static_cast<long long>(std::floor((p.x() - lo.x()) / voxel)),
            static_cast<long long>(std::floor((p.y() - lo.y()) / voxel)),
            static_cast<long long>(std::floor((p.z() - lo.z()) / voxel))};
        seen.insert(key);
    }
    CHECK(seen.size() == out.size());  // one output point per occupied voxel
    for (const auto& cell : cells) {
        // Find the matching output point; centroid must agree.
        bool found = false;
        for (const Vec3& p : out.points) {
            if ((p - cell.centroid).norm() < 1e-9) {
                found = true;
                break;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("voxel_downsample: idempotent with an explicit anchor") {
    const PointCloud cloud = random_cube_cloud(6, 5000);
    Vec3 lo, hi;
    cloud.bounds(lo, hi);
    const PointCloud once = voxel_downsample(cloud, 0.07, lo);
    const PointCloud twice = voxel_downsample(once, 0.07, lo);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK((once.points[i] - twice.points[i]).norm() == 0.0);
    }
}

TEST_CASE("voxel_downsample: output never larger than input") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const PointCloud cloud = random_cube_cloud(seed, 500);
        for (const double voxel : {0.01, 0.1, 0.5}) {
            CHECK(voxel_downsample(cloud, voxel).size() <= cloud.size());
        }
    }
}

TEST_CASE("voxel_downsample: averaged normals renormalized, colors averaged") {
    PointCloud cloud;
    cloud.points = {Vec3(0.1, 0.1, 0.1), Vec3(0.2, 0.2, 0.2)};
    cloud.normals = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
    cloud.colors = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
    const PointCloud out = voxel_downsample(cloud, 1.0);
    REQUIRE(out.size() == 1);
    CHECK(out.normals[0].norm() == doctest::Approx(1.0));
    CHECK((out.normals[0] - Vec3(1, 1, 0).normalized()).norm() < 1e-12);
    CHECK((out.colors[0] - Vec3(0.5, 0.5, 0.5)).norm() < 1e-12);
}

TEST_CASE("voxel_downsample: invalid voxel size") {
    CHECK_THROWS_AS(voxel_downsample(unit_cube_corners(), 0.0), InvalidParameter);
    CHECK_THROWS_AS(voxel_downsample(unit_cube_corners(), -1.0), InvalidParameter);
}

TEST_CASE("outlier removal: a single far point is removed") {
    PointCloud cloud;
    for (int x = 0; x < 10; ++x) {
        for (int y = 0; y < 10; ++y) {
            cloud.points.emplace_back(0.01 * x, 0.01 * y, 0.0);
        }
    }
    cloud.points.emplace_back(1.0, 1.0, 1.0);  // 1 m away from the grid

    const auto result = remove_statistical_outliers(cloud, 10, 2.0);
    REQUIRE(result.removed_indices == std::vector<int>{100});
    CHECK(result.cloud.size() == 100);

    const auto expected = tdtest::oracle::brute_outlier_indices(cloud, 10, 2.0);
    CHECK(result.removed_indices == expected);
}

TEST_CASE("outlier removal: uniform grid untouched at std_ratio 10") {
    PointCloud cloud;
    for (int x = 0; x < 8; ++x) {
        for (int y = 0; y < 8; ++y) {
            cloud.points.emplace_back(0.01 * x, 0.01 * y, 0.0);
        }
    }
    const auto result = remove_statistical_outliers(cloud, 8, 10.0);
    CHECK(result.removed_indices.empty());
    CHECK(result.cloud.size() == cloud.size());
}

TEST_CASE("outlier removal: kept and removed partition the input") {
    const PointCloud cloud = random_cube_cloud(9, 400);
    const auto result = remove_statistical_outliers(cloud, 12, 1.0);
    CHECK(result.cloud.size() + result.removed_indices.size() == cloud.size());
    // Every removed index matches the brute-force criterion.
    CHECK(result.removed_indices == tdtest::oracle::brute_outlier_indices(cloud, 12, 1.0));
}

TEST_CASE("outlier removal: k >= point count is rejected") {
    PointCloud cloud;
    for (int i = 0; i < 5; ++i) cloud.points.emplace_back(i, 0, 0);
    CHECK_THROWS_AS(remove_statistical_outliers(cloud, 10, 2.0), InvalidParameter);
    CHECK_THROWS_AS(remove_statistical_outliers(cloud, 5, 2.0), InvalidParameter);
}

TEST_CASE("estimate_normals: plane gives +-z") {
    Rng rng(3);
    PointCloud cloud;
    for (int i = 0; i < 2000; ++i) {
        cloud.points.emplace_back(rng.uniform(), rng.uniform(), 0.0);
    }
    const PointCloud withn = estimate_normals(cloud, 12);
    REQUIRE(withn.has_normals());
    for (const Vec3& n : withn.normals) {
        CHECK(std::abs(std::abs(n.z()) - 1.0) < 1e-6);
    }
}

TEST_CASE("estimate_normals: sphere with hint at origin points inward") {
    Rng rng(4);
    PointCloud cloud;
    for (int i = 0; i < 3000; ++i) cloud.points.push_back(tdtest::random_unit(rng));
    const PointCloud withn = estimate_normals(cloud, 12, Vec3::Zero());
    for (std::size_t i = 0; i < withn.size(); ++i) {
        CHECK(withn.normals[i].dot(-withn.points[i]) > 0.99);
    }
}

TEST_CASE("estimate_normals: analytic surfaces under 2 degrees at k=20") {
    // Evenly sampled surfaces, 1e4 points, zero noise.
    Rng rng(5);
    const double limit_deg = 2.0;
    auto max_angle_deg = [](const PointCloud& cloud, auto&& reference) {
        double worst = 0.0;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const double c = std::abs(cloud.normals[i].dot(reference(cloud.points[i])));
            worst = std::max(worst, std::acos(std::min(1.0, c)) * 180.0 / M_PI);
        }
        return worst;
    };

    SUBCASE("plane") {
        PointCloud cloud;
        for (int i = 0; i < 10000; ++i) {
            cloud.points.emplace_back(rng.uniform(), rng.uniform(), 0.0);
        }
        const PointCloud withn = estimate_normals(cloud, 20);
        CHECK(max_angle_deg(withn, [](const Vec3&) { return Vec3(0, 0, 1); }) < limit_deg);
    }
    SUBCASE("sphere") {
        // Fibonacci sphere: near-uniform spacing.
        PointCloud cloud;
        const int n = 10000;
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < n; ++i) {
            const double y = 1.0 - 2.0 * (i + 0.5) / n;
            const double r = std::sqrt(1.0 - y * y);
            const double a = golden * i;
            cloud.points.emplace_back(r * std::cos(a), y, r * std::sin(a));
        }
        const PointCloud withn = estimate_normals(cloud, 20);
        CHECK(max_angle_deg(withn, [](const Vec3& p) { return p.normalized(); }) < limit_deg);
    }
    SUBCASE("cylinder") {
        PointCloud cloud;
        const double radius = 0.2;
        const int around = 125, along = 80;  // 1e4 points, ~1 cm spacing both ways
        for (int i = 0; i < around; ++i) {
            const double a = 2.0 * M_PI * i / around;
            for (int j = 0; j < along; ++j) {
                cloud.points.emplace_back(radius * std::cos(a), radius * std::sin(a),
                                          j / static_cast<double>(along));
            }
        }
        const PointCloud withn = estimate_normals(cloud, 20);
        CHECK(max_angle_deg(withn, [](const Vec3& p) {
                  return Vec3(p.x(), p.y(), 0.0).normalized();
              }) < limit_deg);
    }
}

TEST_CASE("estimate_normals: collinear neighborhood flagged with zero normal") {
    PointCloud cloud;
    for (int i = 0; i < 10; ++i) cloud.points.emplace_back(0.01 * i, 0.0, 0.0);
    const PointCloud withn = estimate_normals(cloud, 3);
    for (const Vec3& n : withn.normals) CHECK(n.isZero());
}

TEST_CASE("estimate_normals: MST orientation is consistent on a plane") {
    Rng rng(6);
    PointCloud cloud;
    for (int i = 0; i < 3000; ++i) {
        cloud.points.emplace_back(rng.uniform(), rng.uniform(), 0.0);
    }
    const PointCloud withn = estimate_normals(cloud, 15);
    // All normals must agree in sign, not just direction.
    int positive = 0;
    for (const Vec3& n : withn.normals) positive += n.z() > 0.0 ? 1 : 0;
    CHECK((positive == 0 || positive == static_cast<int>(withn.size())));
}

TEST_CASE("estimate_normals: precondition on cloud size") {
    PointCloud cloud;
    cloud.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    CHECK_THROWS_AS(estimate_normals(cloud, 3), InvalidParameter);
}
