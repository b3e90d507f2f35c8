#include "timberdiff/assembly_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "timberdiff/errors.hpp"

namespace timberdiff::io {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure on '" + path + "'");
    return buf.str();
}

/// Parses `beam<i>` or `beam<i>_joint<j>_face<k>`. Returns false when the
/// name does not match either pattern.
struct GroupTag {
    int beam = -1;
    int joint = -1;  // -1 for plain beam groups
    int face = -1;
};

bool parse_int(const char*& p, const char* end, int& out) {
    const auto [next, ec] = std::from_chars(p, end, out);
    if (ec != std::errc{} || next == p) return false;
    p = next;
    return true;
}

bool consume(const char*& p, const char* end, const char* word) {
    const std::size_t len = std::strlen(word);
    if (static_cast<std::size_t>(end - p) < len || std::strncmp(p, word, len) != 0) return false;
    p += len;
    return true;
}

bool parse_group_name(const std::string& name, GroupTag& tag) {
    const char* p = name.data();
    const char* end = p + name.size();
    if (!consume(p, end, "beam") || !parse_int(p, end, tag.beam)) return false;
    if (p == end) return true;
    if (!consume(p, end, "_joint") || !parse_int(p, end, tag.joint)) return false;
    if (!consume(p, end, "_face") || !parse_int(p, end, tag.face)) return false;
    return p == end;
}

}  // namespace

Assembly load_assembly_obj(const std::string& path) {
    const std::string data = read_file(path);

    std::vector<Vec3> global_vertices;
    struct RawBeam {
        bool has_base_group = false;
        bool open = false;
        std::vector<Eigen::Vector3i> plain;                 // global vertex indices
        std::map<std::pair<int, int>, std::vector<Eigen::Vector3i>> joint_faces;
    };
    std::map<int, RawBeam> raw;

    std::istringstream in(data);
    std::string line;
    std::size_t line_no = 0;
    bool have_group = false;
    GroupTag group;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;

        if (word == "#") {
            std::string directive, name;
            if (ls >> directive >> name && directive == "open") {
                GroupTag tag;
                if (parse_group_name(name, tag) && tag.joint < 0) raw[tag.beam].open = true;
            }
            continue;
        }
        if (word == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) throw ParseError("malformed vertex in '" + path + "'", line_no);
            global_vertices.emplace_back(x, y, z);
        } else if (word == "g") {
            std::string name;
            if (!(ls >> name)) throw ParseError("group statement without a name in '" + path + "'",
                                                line_no);
            GroupTag tag;
            if (!parse_group_name(name, tag)) {
                throw ParseError("group '" + name +
                                     "' does not follow the beam<i>[_joint<j>_face<k>] "
                                     "naming convention in '" + path + "'",
                                 line_no);
            }
            group = tag;
            have_group = true;
            RawBeam& beam = raw[tag.beam];
            if (tag.joint < 0) beam.has_base_group = true;
        } else if (word == "f") {
            if (!have_group) {
                throw ParseError("face before any beam group in '" + path + "'", line_no);
            }
            std::vector<int> indices;
            std::string corner;
            while (ls >> corner) {
                // Take the vertex index, dropping /vt and /vn references.
                const std::size_t slash = corner.find('/');
                const std::string head = slash == std::string::npos ? corner : corner.substr(0, slash);
                int idx = 0;
                const auto [next, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
                if (ec != std::errc{} || next != head.data() + head.size()) {
                    throw ParseError("malformed face corner '" + corner + "' in '" + path + "'",
                                     line_no);
                }
                if (idx <= 0 || static_cast<std::size_t>(idx) > global_vertices.size()) {
                    throw ParseError("face references vertex " + std::to_string(idx) +
                                         " out of range in '" + path + "'",
                                     line_no);
                }
                indices.push_back(idx - 1);
            }
            if (indices.size() != 3) {
                throw ParseError("face with " + std::to_string(indices.size()) +
                                     " vertices; only triangles are supported, "
                                     "pre-triangulate the model ('" + path + "')",
                                 line_no);
            }
            const Eigen::Vector3i tri(indices[0], indices[1], indices[2]);
            RawBeam& beam = raw[group.beam];
            if (group.joint < 0) beam.plain.push_back(tri);
            else beam.joint_faces[{group.joint, group.face}].push_back(tri);
        }
        // vn / vt / usemtl / mtllib / s / o are irrelevant here.
    }

    Assembly assembly;
    {
        // Model name from the file stem.
        std::size_t start = path.find_last_of("/\\");
        start = start == std::string::npos ? 0 : start + 1;
        std::size_t dot = path.find_last_of('.');
        if (dot == std::string::npos || dot < start) dot = path.size();
        assembly.name = path.substr(start, dot - start);
    }

    for (const auto& [beam_id, raw_beam] : raw) {
        if (!raw_beam.has_base_group) {
            throw SemanticError("joint groups reference beam " + std::to_string(beam_id) +
                                " but there is no group 'beam" + std::to_string(beam_id) + "'");
        }
        // Remap the referenced global vertices to a per-beam pool, first-use order.
        std::map<int, int> remap;
        std::vector<Vec3> vertices;
        auto local = [&](const Eigen::Vector3i& tri) {
            Eigen::Vector3i out;
            for (int v = 0; v < 3; ++v) {
                auto [it, inserted] = remap.try_emplace(tri[v], static_cast<int>(vertices.size()));
                if (inserted) vertices.push_back(global_vertices[tri[v]]);
                out[v] = it->second;
            }
            return out;
        };
        std::vector<Eigen::Vector3i> plain;
        plain.reserve(raw_beam.plain.size());
        for (const auto& tri : raw_beam.plain) plain.push_back(local(tri));
        std::vector<JointFaceInput> joint_faces;
        for (const auto& [key, triangles] : raw_beam.joint_faces) {
            JointFaceInput input;
            input.joint_id = key.first;
            input.face_id = key.second;
            input.triangles.reserve(triangles.size());
            for (const auto& tri : triangles) input.triangles.push_back(local(tri));
            joint_faces.push_back(std::move(input));
        }
        assembly.beams.push_back(build_beam(beam_id, std::move(vertices), std::move(plain),
                                            std::move(joint_faces), raw_beam.open));
    }
    assembly.validate();
    return assembly;
}

namespace {

json triangles_to_json(const std::vector<Eigen::Vector3i>& triangles) {
    json out = json::array();
    for (const auto& tri : triangles) out.push_back({tri[0], tri[1], tri[2]});
    return out;
}

std::vector<Eigen::Vector3i> triangles_from_json(const json& j) {
    std::vector<Eigen::Vector3i> out;
    out.reserve(j.size());
    for (const auto& tri : j) {
        if (tri.size() != 3) throw ParseError("triangle entry is not a 3-tuple");
        out.emplace_back(tri[0].get<int>(), tri[1].get<int>(), tri[2].get<int>());
    }
    return out;
}

}  // namespace

std::string assembly_to_json(const Assembly& assembly) {
    json j;
    j["name"] = assembly.name;
    j["beams"] = json::array();
    for (const Beam& beam : assembly.beams) {
        json jb;
        jb["id"] = beam.id;
        if (beam.open) jb["open"] = true;
        jb["vertices"] = json::array();
        for (const Vec3& v : beam.vertices) jb["vertices"].push_back({v.x(), v.y(), v.z()});
        jb["triangles"] = triangles_to_json(beam.all_triangles());
        jb["joints"] = json::array();
        for (const Joint& joint : beam.joints) {
            json jj;
            jj["id"] = joint.id;
            jj["faces"] = json::array();
            for (const int f : joint.faces) {
                json jf;
                jf["id"] = beam.faces[f].joint_face_id;
                jf["triangles"] = triangles_to_json(beam.faces[f].triangles);
                jj["faces"].push_back(std::move(jf));
            }
            jb["joints"].push_back(std::move(jj));
        }
        j["beams"].push_back(std::move(jb));
    }
    return j.dump(1);
}

Assembly assembly_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid assembly JSON: ") + e.what());
    }

    Assembly assembly;
    try {
        assembly.name = j.value("name", "");
        for (const auto& jb : j.at("beams")) {
            const int id = jb.at("id").get<int>();
            std::vector<Vec3> vertices;
            for (const auto& v : jb.at("vertices")) {
                if (v.size() != 3) throw ParseError("vertex entry is not a 3-tuple");
                vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
            }
            auto all = triangles_from_json(jb.at("triangles"));

            // Joint faces list their own triangles; the remaining triangles
            // form the plain faces.
            auto key = [](const Eigen::Vector3i& t) { return std::array<int, 3>{t[0], t[1], t[2]}; };
            std::map<std::array<int, 3>, int> pool;  // triangle -> remaining multiplicity
            for (const auto& tri : all) ++pool[key(tri)];

            std::vector<JointFaceInput> joint_faces;
            if (jb.contains("joints")) {
                for (const auto& jj : jb.at("joints")) {
                    const int joint_id = jj.at("id").get<int>();
                    for (const auto& jf : jj.at("faces")) {
                        JointFaceInput input;
                        input.joint_id = joint_id;
                        input.face_id = jf.at("id").get<int>();
                        input.triangles = triangles_from_json(jf.at("triangles"));
                        for (const auto& tri : input.triangles) {
                            auto it = pool.find(key(tri));
                            if (it == pool.end() || it->second == 0) {
                                throw SemanticError(
                                    "beam " + std::to_string(id) + ": joint face triangle is not "
                                    "part of the beam's triangle list");
                            }
                            --it->second;
                        }
                        joint_faces.push_back(std::move(input));
                    }
                }
            }
            std::vector<Eigen::Vector3i> plain;
            for (const auto& tri : all) {
                auto it = pool.find(key(tri));
                if (it->second > 0) {
                    plain.push_back(tri);
                    --it->second;
                }
            }
            assembly.beams.push_back(build_beam(id, std::move(vertices), std::move(plain),
                                                std::move(joint_faces), jb.value("open", false)));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid assembly JSON: ") + e.what());
    }
    assembly.validate();
    return assembly;
}

Assembly load_assembly_json(const std::string& path) {
    return assembly_from_json(read_file(path));
}

Assembly load_assembly(const std::string& path) {
    const std::size_t dot = path.find_last_of('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == "obj") return load_assembly_obj(path);
    if (ext == "json") return load_assembly_json(path);
    throw InvalidParameter("cannot deduce assembly format from path '" + path +
                           "' (expected .obj or .json)");
}

void save_assembly(const Assembly& assembly, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << assembly_to_json(assembly) << "\n";
    if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace timberdiff::io
