#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "support/fixtures.hpp"
#include "timberdiff/assembly.hpp"
#include "timberdiff/assembly_io.hpp"
#include "timberdiff/errors.hpp"

using namespace timberdiff;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("timberdiff-asm-" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

// Unit cube as OBJ face lines (1-based, vertices written separately).
const char* kCubeVertices =
    "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
    "v 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n";
// 12 triangles, outward wound, top face (z=1) last.
const char* kCubeFacesNoTop =
    "f 1 3 2\nf 1 4 3\n"      // bottom
    "f 1 2 6\nf 1 6 5\n"      // front
    "f 2 3 7\nf 2 7 6\n"      // right
    "f 3 4 8\nf 3 8 7\n"      // back
    "f 4 1 5\nf 4 5 8\n";     // left
const char* kCubeTop = "f 5 6 7\nf 5 7 8\n";

std::string obj_permutation_of(const Assembly& a) { return io::assembly_to_json(a); }

void check_same_structure(const Assembly& a, const Assembly& b) {
    REQUIRE(a.beams.size() == b.beams.size());
    CHECK(a.name == b.name);
    for (std::size_t i = 0; i < a.beams.size(); ++i) {
        const Beam& ba = a.beams[i];
        const Beam& bb = b.beams[i];
        CHECK(ba.id == bb.id);
        CHECK(ba.open == bb.open);
        REQUIRE(ba.vertices.size() == bb.vertices.size());
        for (std::size_t v = 0; v < ba.vertices.size(); ++v) {
            CHECK((ba.vertices[v] - bb.vertices[v]).cwiseAbs().maxCoeff() < 1e-7);
        }
        REQUIRE(ba.faces.size() == bb.faces.size());
        for (std::size_t f = 0; f < ba.faces.size(); ++f) {
            CHECK(ba.faces[f].joint_id == bb.faces[f].joint_id);
            CHECK(ba.faces[f].joint_face_id == bb.faces[f].joint_face_id);
            CHECK(ba.faces[f].triangles.size() == bb.faces[f].triangles.size());
        }
        REQUIRE(ba.joints.size() == bb.joints.size());
        for (std::size_t j = 0; j < ba.joints.size(); ++j) {
            CHECK(ba.joints[j].id == bb.joints[j].id);
            CHECK(ba.joints[j].faces == bb.joints[j].faces);
        }
    }
}

}  // namespace

TEST_CASE("obj: minimal cube with one tagged face") {
    TempDir dir;
    const auto path = dir.file("one.obj");
    write_text(path, std::string("g beam0\n") + kCubeVertices + kCubeFacesNoTop +
                         "g beam0_joint0_face0\n" + kCubeTop);
    const Assembly assembly = io::load_assembly(path);
    REQUIRE(assembly.beams.size() == 1);
    const Beam& beam = assembly.beams.front();
    CHECK(beam.id == 0);
    REQUIRE(beam.joints.size() == 1);
    CHECK(beam.joints[0].id == 0);
    REQUIRE(beam.joints[0].faces.size() == 1);
    const MeshFace& face = beam.faces[beam.joints[0].faces[0]];
    CHECK(face.joint_face_id == 0);
    CHECK(face.triangles.size() == 2);
    CHECK(face.area == doctest::Approx(1.0));
    // Tagged face is the z=1 top plane.
    CHECK(std::abs(face.normal.z()) == doctest::Approx(1.0));
    CHECK(face.plane_deviation < 1e-12);
}

TEST_CASE("obj: orphan joint group is a semantic error") {
    TempDir dir;
    const auto path = dir.file("orphan.obj");
    write_text(path, std::string(kCubeVertices) + "g beam0_joint0_face0\n" + kCubeTop);
    CHECK_THROWS_AS(io::load_assembly(path), SemanticError);
}

TEST_CASE("obj: quads are rejected with triangulation advice") {
    TempDir dir;
    const auto path = dir.file("quad.obj");
    write_text(path, "g beam0\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
    CHECK_THROWS_WITH_AS(io::load_assembly(path), doctest::Contains("triangulate"), ParseError);
}

TEST_CASE("obj: bad group names rejected") {
    TempDir dir;
    const auto path = dir.file("grp.obj");
    write_text(path, "g girder1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    CHECK_THROWS_AS(io::load_assembly(path), ParseError);
}

TEST_CASE("obj: non-closed beam rejected unless declared open") {
    TempDir dir;
    const auto path = dir.file("open.obj");
    write_text(path, std::string("g beam0\n") + kCubeVertices + kCubeFacesNoTop);  // no top
    CHECK_THROWS_AS(io::load_assembly(path), SemanticError);

    const auto path2 = dir.file("open_ok.obj");
    write_text(path2, std::string("# open beam0\ng beam0\n") + kCubeVertices + kCubeFacesNoTop);
    const Assembly assembly = io::load_assembly(path2);
    CHECK(assembly.beams.front().open);
}

TEST_CASE("obj: 13-beam assembly loads with ids 0..12") {
    // Mirror of the robotic study-case scale: thirteen distinct elements.
    const Assembly reference = tdtest::make_assembly(13);
    TempDir dir;

    // Write it as OBJ through the naming convention.
    std::string obj;
    int vertex_base = 1;
    for (const Beam& beam : reference.beams) {
        for (const Vec3& v : beam.vertices) {
            char line[128];
            std::snprintf(line, sizeof(line), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
            obj += line;
        }
        auto face_line = [&](const Eigen::Vector3i& t) {
            char line[64];
            std::snprintf(line, sizeof(line), "f %d %d %d\n", vertex_base + t[0],
                          vertex_base + t[1], vertex_base + t[2]);
            return std::string(line);
        };
        obj += "g beam" + std::to_string(beam.id) + "\n";
        for (const MeshFace& face : beam.faces) {
            if (face.is_joint_face()) continue;
            for (const auto& t : face.triangles) obj += face_line(t);
        }
        for (const MeshFace& face : beam.faces) {
            if (!face.is_joint_face()) continue;
            obj += "g beam" + std::to_string(beam.id) + "_joint" +
                   std::to_string(face.joint_id) + "_face" + std::to_string(face.joint_face_id) +
                   "\n";
            for (const auto& t : face.triangles) obj += face_line(t);
        }
        vertex_base += static_cast<int>(beam.vertices.size());
    }
    const auto path = dir.file("thirteen.obj");
    write_text(path, obj);

    const Assembly loaded = io::load_assembly(path);
    REQUIRE(loaded.beams.size() == 13);
    for (int i = 0; i < 13; ++i) {
        CHECK(loaded.beams[i].id == i);
        CHECK(loaded.beams[i].joints.size() == reference.beams[i].joints.size());
    }
}

TEST_CASE("json sidecar round-trip preserves the assembly") {
    const Assembly assembly = tdtest::make_assembly(4);
    TempDir dir;
    const auto path = dir.file("a.json");
    io::save_assembly(assembly, path);
    const Assembly loaded = io::load_assembly(path);
    check_same_structure(assembly, loaded);

    // Save -> load -> save is byte-stable.
    const std::string first = obj_permutation_of(assembly);
    const std::string second = obj_permutation_of(loaded);
    CHECK(first == second);
}

TEST_CASE("json sidecar: joint face triangles must exist in the beam") {
    const Assembly assembly = tdtest::make_assembly(1);
    std::string json = io::assembly_to_json(assembly);
    // Corrupt: change a joint-face triangle to an unknown triple.
    const auto pos = json.find("\"joints\"");
    REQUIRE(pos != std::string::npos);
    const auto tri_pos = json.find("\"triangles\": [", pos);
    REQUIRE(tri_pos != std::string::npos);
    auto bracket = json.find('[', tri_pos + 14);
    json.replace(bracket + 1, json.find(']', bracket) - bracket - 1, "999,998,997");
    CHECK_THROWS_AS(io::assembly_from_json(json), Error);
}

TEST_CASE("duplicate beam ids rejected") {
    Assembly assembly;
    assembly.beams.push_back(tdtest::make_box_beam(3, 1.0, 0.1, 0.1));
    assembly.beams.push_back(tdtest::make_box_beam(3, 0.8, 0.1, 0.1));
    CHECK_THROWS_AS(assembly.validate(), SemanticError);
}

TEST_CASE("detect_joints: plain box has none") {
    const Beam beam = tdtest::make_box_beam(0, 1.0, 0.1, 0.08);
    const Beam detected = detect_joints(beam, 5.0);
    CHECK(detected.joints.empty());
}

TEST_CASE("detect_joints: half-lap notch gives one joint with three faces") {
    const Beam tagged = tdtest::make_box_beam(0, 1.0, 0.1, 0.08, {{0.45, 0.1, 0.04}});
    const Beam detected = detect_joints(tdtest::untagged(tagged), 5.0);
    REQUIRE(detected.joints.size() == 1);
    CHECK(detected.joints[0].faces.size() == 3);
}

TEST_CASE("detect_joints: two disjoint notches give two joints") {
    const Beam tagged =
        tdtest::make_box_beam(0, 1.2, 0.1, 0.08, {{0.2, 0.1, 0.05}, {0.8, 0.12, 0.03}});
    const Beam detected = detect_joints(tdtest::untagged(tagged), 5.0);
    REQUIRE(detected.joints.size() == 2);
    CHECK(detected.joints[0].faces.size() == 3);
    CHECK(detected.joints[1].faces.size() == 3);
}

TEST_CASE("detect_joints: reproduces explicit tags on the fixture suite") {
    // Half-lap, half-lap cross (same cut family), end lap, angled butt.
    std::vector<Beam> fixtures;
    fixtures.push_back(tdtest::make_box_beam(0, 1.0, 0.1, 0.08, {{0.45, 0.1, 0.04}}));
    fixtures.push_back(
        tdtest::make_box_beam(1, 1.4, 0.12, 0.1, {{0.3, 0.1, 0.06}, {0.9, 0.1, 0.06}}));
    fixtures.push_back(tdtest::make_end_lap_beam(2, 1.0, 0.1, 0.08, 0.15, 0.05));
    fixtures.push_back(tdtest::make_box_beam(3, 1.0, 0.1, 0.08, {}, 15.0));

    for (const Beam& tagged : fixtures) {
        CAPTURE(tagged.id);
        const Beam detected = detect_joints(tdtest::untagged(tagged), 7.0);
        REQUIRE(detected.joints.size() == tagged.joints.size());
        // Same partition: compare the triangle sets of each joint.
        auto joint_triangles = [](const Beam& beam, const Joint& joint) {
            std::set<std::array<int, 3>> set;
            for (const int f : joint.faces) {
                for (const auto& t : beam.faces[f].triangles) set.insert({t[0], t[1], t[2]});
            }
            return set;
        };
        for (std::size_t j = 0; j < tagged.joints.size(); ++j) {
            CHECK(joint_triangles(tagged, tagged.joints[j]) ==
                  joint_triangles(detected, detected.joints[j]));
            CHECK(tagged.joints[j].faces.size() == detected.joints[j].faces.size());
        }
    }
}

TEST_CASE("detect_joints: explicit tags win") {
    const Beam tagged = tdtest::make_box_beam(0, 1.0, 0.1, 0.08, {{0.45, 0.1, 0.04}});
    CHECK_THROWS_AS(detect_joints(tagged, 5.0), NotApplicable);
}

TEST_CASE("beam helpers") {
    const Beam beam = tdtest::make_box_beam(0, 1.0, 0.1, 0.08, {{0.45, 0.1, 0.04}});
    CHECK(beam.cross_section_diagonal() ==
          doctest::Approx(std::sqrt(0.1 * 0.1 + 0.08 * 0.08)).epsilon(0.05));
    CHECK(beam.total_area() > 0.0);
    CHECK(beam.find_joint(0) != nullptr);
    CHECK(beam.find_joint(1) == nullptr);
    CHECK(beam.find_joint_face(0, 1) != nullptr);
    CHECK(beam.find_joint_face(0, 9) == nullptr);
}
