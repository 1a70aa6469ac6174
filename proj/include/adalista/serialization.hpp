// JSON interchange for dense matrices and vectors:
//   {"rows": n, "cols": m, "data": [row-major values]}
// Vectors are stored as single-column matrices.

#pragma once

#include "adalista/core.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace adalista {

using Json = nlohmann::json;

Json to_json(const Matrix& m);
Json to_json(const Vector& v);
Matrix matrix_from_json(const Json& j);
Vector vector_from_json(const Json& j);

/// Parses text, rethrowing parse failures as std::runtime_error that names
/// the line and column of the offending byte.
Json parse_json_text(const std::string& text, const std::string& origin);
Json read_json_file(const std::filesystem::path& path);

/// Writes through a temporary sibling file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace adalista
