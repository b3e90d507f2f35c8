#include "timberdiff/cloud_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "timberdiff/errors.hpp"
#include "timberdiff/version.hpp"

namespace timberdiff::io {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure on '" + path + "'");
    return buf.str();
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

void normalize_or_keep(Vec3& n) {
    const double len = n.norm();
    if (len == 0.0) return;
    if (std::abs(len - 1.0) > 1e-6) n /= len;
}

// ---------------------------------------------------------------- XYZ ------

PointCloud load_xyz(const std::string& path) {
    const std::string data = read_file(path);
    PointCloud cloud;
    std::istringstream in(data);
    std::string line;
    std::size_t line_no = 0;
    bool any_normals = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        double v[6];
        int count = 0;
        const char* p = line.c_str() + first;
        char* end = nullptr;
        while (count < 6) {
            const double x = std::strtod(p, &end);
            if (end == p) break;
            v[count++] = x;
            p = end;
        }
        while (*p == ' ' || *p == '\t') ++p;
        if ((count != 3 && count != 6) || *p != '\0') {
            throw ParseError("expected 'x y z' or 'x y z nx ny nz' in '" + path + "'", line_no);
        }
        cloud.points.emplace_back(v[0], v[1], v[2]);
        if (count == 6) {
            Vec3 n(v[3], v[4], v[5]);
            normalize_or_keep(n);
            cloud.normals.push_back(n);
            any_normals = true;
        } else if (any_normals) {
            throw ParseError("mixed records with and without normals in '" + path + "'", line_no);
        }
    }
    if (any_normals && cloud.normals.size() != cloud.points.size()) {
        throw ParseError("mixed records with and without normals in '" + path + "'", line_no);
    }
    return cloud;
}

std::vector<std::string> save_xyz(const PointCloud& cloud, const std::string& path) {
    std::vector<std::string> warnings;
    if (cloud.has_colors()) warnings.push_back("XYZ format cannot carry colors; colors dropped");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    char buf[256];
    const bool n = cloud.has_normals();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        if (n) {
            const Vec3& m = cloud.normals[i];
            std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g\n", p.x(), p.y(),
                          p.z(), m.x(), m.y(), m.z());
        } else {
            std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        }
        out << buf;
    }
    if (!out) throw IoError("write failure on '" + path + "'");
    return warnings;
}

// ---------------------------------------------------------------- PLY ------

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

std::size_t ply_type_size(PlyType t) {
    switch (t) {
        case PlyType::I8:
        case PlyType::U8: return 1;
        case PlyType::I16:
        case PlyType::U16: return 2;
        case PlyType::I32:
        case PlyType::U32: return 4;
        case PlyType::F32: return 4;
        case PlyType::F64: return 8;
    }
    return 0;
}

PlyType parse_ply_type(const std::string& word, std::size_t line_no) {
    if (word == "char" || word == "int8") return PlyType::I8;
    if (word == "uchar" || word == "uint8") return PlyType::U8;
    if (word == "short" || word == "int16") return PlyType::I16;
    if (word == "ushort" || word == "uint16") return PlyType::U16;
    if (word == "int" || word == "int32") return PlyType::I32;
    if (word == "uint" || word == "uint32") return PlyType::U32;
    if (word == "float" || word == "float32") return PlyType::F32;
    if (word == "double" || word == "float64") return PlyType::F64;
    throw ParseError("unknown PLY property type '" + word + "'", line_no);
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::F32;
    bool is_list = false;
    PlyType count_type = PlyType::U8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

struct BinaryCursor {
    const char* p;
    const char* end;
    const std::string& path;

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end - p) < n) {
            throw ParseError("unexpected end of binary PLY data in '" + path + "'");
        }
    }

    double read(PlyType t) {
        need(ply_type_size(t));
        double v = 0.0;
        switch (t) {
            case PlyType::I8: v = *reinterpret_cast<const std::int8_t*>(p); break;
            case PlyType::U8: v = *reinterpret_cast<const std::uint8_t*>(p); break;
            case PlyType::I16: { std::int16_t x; std::memcpy(&x, p, 2); v = x; break; }
            case PlyType::U16: { std::uint16_t x; std::memcpy(&x, p, 2); v = x; break; }
            case PlyType::I32: { std::int32_t x; std::memcpy(&x, p, 4); v = x; break; }
            case PlyType::U32: { std::uint32_t x; std::memcpy(&x, p, 4); v = x; break; }
            case PlyType::F32: { float x; std::memcpy(&x, p, 4); v = x; break; }
            case PlyType::F64: { double x; std::memcpy(&x, p, 8); v = x; break; }
        }
        p += ply_type_size(t);
        return v;
    }

    void skip(std::size_t n) {
        need(n);
        p += n;
    }
};

struct AsciiCursor {
    std::istringstream in;
    const std::string& path;

    explicit AsciiCursor(const std::string& data, const std::string& file)
        : in(data), path(file) {}

    double read() {
        double v = 0.0;
        if (!(in >> v)) throw ParseError("unexpected end of ascii PLY data in '" + path + "'");
        return v;
    }
};

// Column roles of the vertex element we actually consume.
struct VertexLayout {
    int x = -1, y = -1, z = -1;
    int nx = -1, ny = -1, nz = -1;
    int red = -1, green = -1, blue = -1;
};

VertexLayout vertex_layout(const PlyElement& e, const std::string& path) {
    VertexLayout l;
    for (std::size_t i = 0; i < e.properties.size(); ++i) {
        const auto& prop = e.properties[i];
        if (prop.is_list) {
            throw ParseError("list property '" + prop.name + "' on vertex element in '" + path + "'");
        }
        const int col = static_cast<int>(i);
        if (prop.name == "x") l.x = col;
        else if (prop.name == "y") l.y = col;
        else if (prop.name == "z") l.z = col;
        else if (prop.name == "nx") l.nx = col;
        else if (prop.name == "ny") l.ny = col;
        else if (prop.name == "nz") l.nz = col;
        else if (prop.name == "red") l.red = col;
        else if (prop.name == "green") l.green = col;
        else if (prop.name == "blue") l.blue = col;
    }
    if (l.x < 0 || l.y < 0 || l.z < 0) {
        throw ParseError("vertex element missing x/y/z properties in '" + path + "'");
    }
    return l;
}

PointCloud load_ply(const std::string& path) {
    const std::string data = read_file(path);

    // Header: text lines up to and including "end_header".
    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&]() -> std::string {
        if (pos >= data.size()) throw ParseError("unterminated PLY header in '" + path + "'");
        const std::size_t nl = data.find('\n', pos);
        std::string line = data.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? data.size() : nl + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++line_no;
        return line;
    };

    if (next_line() != "ply") throw ParseError("missing 'ply' magic in '" + path + "'", 1);

    bool binary = false;
    bool format_seen = false;
    std::vector<PlyElement> elements;
    for (;;) {
        const std::string line = next_line();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word.empty() || word == "comment" || word == "obj_info") continue;
        if (word == "format") {
            std::string kind, version;
            ls >> kind >> version;
            if (kind == "ascii") binary = false;
            else if (kind == "binary_little_endian") binary = true;
            else if (kind == "binary_big_endian")
                throw ParseError("binary_big_endian PLY is not supported in '" + path + "'", line_no);
            else throw ParseError("unknown PLY format '" + kind + "' in '" + path + "'", line_no);
            format_seen = true;
        } else if (word == "element") {
            PlyElement e;
            if (!(ls >> e.name >> e.count))
                throw ParseError("malformed element declaration in '" + path + "'", line_no);
            elements.push_back(std::move(e));
        } else if (word == "property") {
            if (elements.empty())
                throw ParseError("property before any element in '" + path + "'", line_no);
            PlyProperty prop;
            std::string t;
            ls >> t;
            if (t == "list") {
                prop.is_list = true;
                std::string ct, vt;
                if (!(ls >> ct >> vt >> prop.name))
                    throw ParseError("malformed list property in '" + path + "'", line_no);
                prop.count_type = parse_ply_type(ct, line_no);
                prop.type = parse_ply_type(vt, line_no);
            } else {
                if (!(ls >> prop.name))
                    throw ParseError("malformed property in '" + path + "'", line_no);
                prop.type = parse_ply_type(t, line_no);
            }
            elements.back().properties.push_back(std::move(prop));
        } else if (word == "end_header") {
            break;
        } else {
            throw ParseError("unknown PLY header keyword '" + word + "' in '" + path + "'", line_no);
        }
    }
    if (!format_seen) throw ParseError("missing PLY format line in '" + path + "'");

    PointCloud cloud;
    std::vector<double> row;

    BinaryCursor bin{data.data() + pos, data.data() + data.size(), path};
    AsciiCursor asc(data.substr(pos), path);

    for (const PlyElement& e : elements) {
        const bool is_vertex = e.name == "vertex";
        VertexLayout layout;
        if (is_vertex) {
            layout = vertex_layout(e, path);
            cloud.points.reserve(e.count);
        }
        row.resize(e.properties.size());
        for (std::size_t i = 0; i < e.count; ++i) {
            for (std::size_t c = 0; c < e.properties.size(); ++c) {
                const PlyProperty& prop = e.properties[c];
                if (prop.is_list) {
                    const double n = binary ? bin.read(prop.count_type) : asc.read();
                    const auto count = static_cast<std::size_t>(n);
                    if (binary) bin.skip(count * ply_type_size(prop.type));
                    else for (std::size_t j = 0; j < count; ++j) asc.read();
                } else {
                    row[c] = binary ? bin.read(prop.type) : asc.read();
                }
            }
            if (!is_vertex) continue;
            cloud.points.emplace_back(row[layout.x], row[layout.y], row[layout.z]);
            if (layout.nx >= 0 && layout.ny >= 0 && layout.nz >= 0) {
                Vec3 n(row[layout.nx], row[layout.ny], row[layout.nz]);
                normalize_or_keep(n);
                cloud.normals.push_back(n);
            }
            if (layout.red >= 0 && layout.green >= 0 && layout.blue >= 0) {
                cloud.colors.emplace_back(row[layout.red] / 255.0, row[layout.green] / 255.0,
                                          row[layout.blue] / 255.0);
            }
        }
    }
    return cloud;
}

std::vector<std::string> save_ply(const PointCloud& cloud, const std::string& path, bool binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");

    const bool normals = cloud.has_normals();
    const bool colors = cloud.has_colors();

    out << "ply\n";
    out << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
    out << "comment " << kToolName << " " << kToolVersion << "\n";
    out << "element vertex " << cloud.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
    if (colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";

    auto to_byte = [](double v) {
        const double s = std::round(v * 255.0);
        return static_cast<std::uint8_t>(std::clamp(s, 0.0, 255.0));
    };

    if (binary) {
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            double coords[3] = {cloud.points[i].x(), cloud.points[i].y(), cloud.points[i].z()};
            out.write(reinterpret_cast<const char*>(coords), sizeof(coords));
            if (normals) {
                double n[3] = {cloud.normals[i].x(), cloud.normals[i].y(), cloud.normals[i].z()};
                out.write(reinterpret_cast<const char*>(n), sizeof(n));
            }
            if (colors) {
                std::uint8_t rgb[3] = {to_byte(cloud.colors[i].x()), to_byte(cloud.colors[i].y()),
                                       to_byte(cloud.colors[i].z())};
                out.write(reinterpret_cast<const char*>(rgb), sizeof(rgb));
            }
        }
    } else {
        char buf[512];
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const Vec3& p = cloud.points[i];
            int len = std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", p.x(), p.y(), p.z());
            if (normals) {
                const Vec3& n = cloud.normals[i];
                len += std::snprintf(buf + len, sizeof(buf) - len, " %.17g %.17g %.17g", n.x(),
                                     n.y(), n.z());
            }
            if (colors) {
                len += std::snprintf(buf + len, sizeof(buf) - len, " %d %d %d",
                                     to_byte(cloud.colors[i].x()), to_byte(cloud.colors[i].y()),
                                     to_byte(cloud.colors[i].z()));
            }
            out << buf << "\n";
        }
    }
    if (!out) throw IoError("write failure on '" + path + "'");
    return {};
}

}  // namespace

CloudFormat format_from_path(const std::string& path) {
    const std::size_t dot = path.find_last_of('.');
    const std::string ext = dot == std::string::npos ? "" : lower(path.substr(dot + 1));
    if (ext == "ply") return CloudFormat::Ply;
    if (ext == "xyz") return CloudFormat::Xyz;
    throw InvalidParameter("cannot deduce cloud format from path '" + path + "'");
}

PointCloud load_cloud(const std::string& path, CloudFormat format) {
    switch (format) {
        case CloudFormat::Ply:
        case CloudFormat::PlyAscii: return load_ply(path);
        case CloudFormat::Xyz: return load_xyz(path);
    }
    throw InvalidParameter("unknown cloud format");
}

PointCloud load_cloud(const std::string& path) {
    return load_cloud(path, format_from_path(path));
}

std::vector<std::string> save_cloud(const PointCloud& cloud, const std::string& path,
                                    CloudFormat format) {
    switch (format) {
        case CloudFormat::Ply: return save_ply(cloud, path, /*binary=*/true);
        case CloudFormat::PlyAscii: return save_ply(cloud, path, /*binary=*/false);
        case CloudFormat::Xyz: return save_xyz(cloud, path);
    }
    throw InvalidParameter("unknown cloud format");
}

std::vector<std::string> save_cloud(const PointCloud& cloud, const std::string& path) {
    return save_cloud(cloud, path, format_from_path(path));
}

}  // namespace timberdiff::io
