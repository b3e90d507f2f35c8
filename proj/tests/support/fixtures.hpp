#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "timberdiff/assembly.hpp"
#include "timberdiff/point_cloud.hpp"
#include "timberdiff/rng.hpp"
#include "timberdiff/transform.hpp"

// Synthetic geometry used across the test suites: box beams with machined
// notches built by extruding a 2D profile, small assemblies, labeled scans.
namespace tdtest {

using timberdiff::Assembly;
using timberdiff::Beam;
using timberdiff::PointCloud;
using timberdiff::RigidTransform;
using timberdiff::Rng;
using timberdiff::Vec3;

/// Simple CCW polygon in the x-y plane, extruded along +z.
struct Profile {
    std::vector<Eigen::Vector2d> points;
};

/// Per-profile-edge joint tag (edge i runs from vertex i to i+1); -1 = plain.
struct EdgeTag {
    int joint = -1;
    int face = -1;
};

/// Ear-clipping triangulation of a simple CCW polygon (indices into it).
std::vector<std::array<int, 3>> triangulate_polygon(const std::vector<Eigen::Vector2d>& polygon);

/// Closed beam mesh from profile extrusion. Side faces inherit their edge's
/// tag; the two profile faces are plain.
Beam extrude_beam(int id, const Profile& profile, double width, const std::vector<EdgeTag>& tags);

/// Rectangular notch machined into the top edge of a box beam profile.
struct Notch {
    double x0 = 0.0;     // start along the beam axis
    double length = 0.0;  // extent along the beam axis
    double depth = 0.0;   // cut depth from the top surface
};

/// Box beam along x (length L, height H, width W) with optional top notches.
/// Each notch becomes one joint with three tagged faces (wall, floor, wall).
/// end_angle_deg > 0 replaces the far end with an angled butt cut tagged as a
/// single-face joint.
Beam make_box_beam(int id, double length, double height, double width,
                   const std::vector<Notch>& notches = {}, double end_angle_deg = 0.0);

/// Box beam with an end lap: the top half of the last lap_length is removed,
/// leaving a two-face joint (cheek + shoulder).
Beam make_end_lap_beam(int id, double length, double height, double width, double lap_length,
                       double lap_depth);

/// Strips all joint tags (for joint-detection fixtures).
Beam untagged(const Beam& beam);

/// Rigidly transforms a beam's vertices (rebuilding derived face data).
Beam transform_beam(const Beam& beam, const RigidTransform& pose);

/// Assembly of beams-with-joints at distinct poses. Deterministic.
Assembly make_assembly(int beam_count, std::uint64_t seed = 7);

/// Four-beam rectangular frame.
Assembly make_log_frame();

/// Scan sampled from an assembly with per-point provenance labels.
struct LabeledScan {
    PointCloud cloud;
    std::vector<int> beam_label;
    std::vector<int> face_label;  // MeshFace::id within the beam
};

LabeledScan sample_assembly_labeled(const Assembly& assembly, double density, std::uint64_t seed);

/// Adds isotropic Gaussian noise to point positions.
PointCloud add_noise(const PointCloud& cloud, double sigma, std::uint64_t seed);

/// Uniform random rotation (angle <= max_angle_rad) and translation in
/// [-max_translation, max_translation]^3.
RigidTransform random_rigid(Rng& rng, double max_angle_rad, double max_translation);

/// Uniform random unit vector.
Vec3 random_unit(Rng& rng);

}  // namespace tdtest
