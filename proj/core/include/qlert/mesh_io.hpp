#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "qlert/mesh.hpp"

namespace qlert {

// Text format:
//   qlmesh 1
//   nodes N        followed by N lines "x y"
//   elements M     followed by M lines "i j k region_label"
//   boundary K     followed by K lines "i j electrode_id"   (-1 for gaps)
// Whitespace separated; '#' starts a comment. Coordinates are written with
// enough digits to round-trip exactly.
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);

// File variants; I/O failures throw IoError, malformed content ParseError.
void write_mesh(const std::filesystem::path& path, const Mesh& mesh);
Mesh read_mesh(const std::filesystem::path& path);

// 16 hex digits (FNV-1a over coordinates, elements, labels and boundary tags).
std::string mesh_fingerprint(const Mesh& mesh);

}  // namespace qlert
