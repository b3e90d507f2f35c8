#include <doctest.h>

#include "timberdiff/errors.hpp"
#include "timberdiff/point_cloud.hpp"

using namespace timberdiff;

TEST_CASE("empty cloud is valid") {
    PointCloud cloud;
    CHECK(cloud.empty());
    CHECK_NOTHROW(cloud.validate());
}

TEST_CASE("validate rejects mismatched channels") {
    PointCloud cloud;
    cloud.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    cloud.normals = {Vec3(0, 0, 1)};
    CHECK_THROWS_AS(cloud.validate(), SemanticError);
}

TEST_CASE("validate accepts unit and zero normals, rejects others") {
    PointCloud cloud;
    cloud.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    cloud.normals = {Vec3(0, 0, 1), Vec3::Zero()};  // zero marks degenerate
    CHECK_NOTHROW(cloud.validate());
    cloud.normals[1] = Vec3(0, 0, 0.5);
    CHECK_THROWS_AS(cloud.validate(), SemanticError);
}

TEST_CASE("validate rejects colors outside [0,1]") {
    PointCloud cloud;
    cloud.points = {Vec3(0, 0, 0)};
    cloud.colors = {Vec3(0.5, 1.5, 0.0)};
    CHECK_THROWS_AS(cloud.validate(), SemanticError);
}

TEST_CASE("select carries attributes") {
    PointCloud cloud;
    for (int i = 0; i < 5; ++i) {
        cloud.points.emplace_back(i, 0, 0);
        cloud.normals.emplace_back(0, 0, 1);
        cloud.colors.emplace_back(i / 4.0, 0, 0);
    }
    const PointCloud subset = cloud.select({1, 3});
    REQUIRE(subset.size() == 2);
    CHECK(subset.points[0].x() == 1.0);
    CHECK(subset.points[1].x() == 3.0);
    CHECK(subset.colors[1].x() == doctest::Approx(0.75));
}

TEST_CASE("concatenate drops channels missing from any part") {
    PointCloud a, b;
    a.points = {Vec3(0, 0, 0)};
    a.normals = {Vec3(0, 0, 1)};
    b.points = {Vec3(1, 0, 0)};
    const PointCloud joined = concatenate({a, b});
    CHECK(joined.size() == 2);
    CHECK_FALSE(joined.has_normals());

    b.normals = {Vec3(0, 1, 0)};
    const PointCloud with_normals = concatenate({a, b});
    CHECK(with_normals.has_normals());
}

TEST_CASE("bounds") {
    PointCloud cloud;
    cloud.points = {Vec3(1, 2, 3), Vec3(-1, 5, 0)};
    Vec3 lo, hi;
    cloud.bounds(lo, hi);
    CHECK(lo == Vec3(-1, 2, 0));
    CHECK(hi == Vec3(1, 5, 3));
}
