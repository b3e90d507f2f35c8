#pragma once

#include <cstdint>
#include <vector>

#include "timberdiff/assembly.hpp"
#include "timberdiff/point_cloud.hpp"

namespace timberdiff {

/// Area-weighted uniform random surface sampling. Expected point count is
/// density * total area (per-triangle counts use stochastic rounding, so the
/// realized count varies by at most one per triangle). Every sample carries
/// its triangle's geometric normal. Deterministic given the seed.
PointCloud sample_mesh(const std::vector<Vec3>& vertices, const std::vector<MeshFace>& faces,
                       double density, std::uint64_t seed);

PointCloud sample_face(const std::vector<Vec3>& vertices, const MeshFace& face, double density,
                       std::uint64_t seed);

/// Whole-beam cloud: all faces sampled with one stream.
PointCloud sample_beam(const Beam& beam, double density, std::uint64_t seed);

}  // namespace timberdiff
