#pragma once

#include <string>

#include "timberdiff/assembly.hpp"

namespace timberdiff::io {

/// Loads a semantically tagged CAD model. Dispatches on extension:
/// .obj  — triangle OBJ with groups `beam<i>` and `beam<i>_joint<j>_face<k>`;
///         a comment line `# open beam<i>` declares a beam's mesh open.
/// .json — the sidecar format (canonical save format).
/// Vertices are meters. Throws ParseError / SemanticError / IoError.
Assembly load_assembly(const std::string& path);

Assembly load_assembly_obj(const std::string& path);
Assembly load_assembly_json(const std::string& path);

/// Canonical save format (JSON sidecar). Round-trips losslessly.
void save_assembly(const Assembly& assembly, const std::string& path);

std::string assembly_to_json(const Assembly& assembly);
Assembly assembly_from_json(const std::string& json_text);

}  // namespace timberdiff::io
