#include "timberdiff/mesh_sampling.hpp"

#include <cmath>

#include "timberdiff/errors.hpp"
#include "timberdiff/rng.hpp"

namespace timberdiff {

PointCloud sample_mesh(const std::vector<Vec3>& vertices, const std::vector<MeshFace>& faces,
                       double density, std::uint64_t seed) {
    if (!(density > 0.0)) throw InvalidParameter("sampling density must be > 0");

    Rng rng(seed);
    PointCloud cloud;
    for (const MeshFace& face : faces) {
        for (const auto& tri : face.triangles) {
            const Vec3 &a = vertices[tri[0]], &b = vertices[tri[1]], &c = vertices[tri[2]];
            const Vec3 cross = (b - a).cross(c - a);
            const double area = 0.5 * cross.norm();
            if (area <= 0.0) continue;  // degenerate triangle contributes nothing
            const Vec3 normal = cross / (2.0 * area);

            const double expected = density * area;
            auto count = static_cast<std::size_t>(std::floor(expected));
            if (rng.uniform() < expected - std::floor(expected)) ++count;

            for (std::size_t i = 0; i < count; ++i) {
                // Uniform barycentric draw.
                const double r1 = std::sqrt(rng.uniform());
                const double r2 = rng.uniform();
                const double u = 1.0 - r1;
                const double v = r1 * (1.0 - r2);
                const double w = r1 * r2;
                cloud.points.push_back(u * a + v * b + w * c);
                cloud.normals.push_back(normal);
            }
        }
    }
    return cloud;
}

PointCloud sample_face(const std::vector<Vec3>& vertices, const MeshFace& face, double density,
                       std::uint64_t seed) {
    return sample_mesh(vertices, {face}, density, seed);
}

PointCloud sample_beam(const Beam& beam, double density, std::uint64_t seed) {
    return sample_mesh(beam.vertices, beam.faces, density, seed);
}

}  // namespace timberdiff
