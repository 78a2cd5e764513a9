#pragma once

#include <json.hpp>

#include <string>

#include "rtc/errors.hpp"
#include "rtc/types.hpp"

namespace rtc {

// Order-preserving JSON document. All emitters in this project insert keys in
// a fixed order so repeated runs produce identical bytes.
using Json = nlohmann::ordered_json;

// Deterministic serializer. Floating-point numbers are printed with up to 17
// significant digits ("%.17g"), which is enough for doubles to round-trip
// bit-exactly; integers are printed as integers. Throws std::invalid_argument
// on non-finite numbers (they have no JSON representation).
std::string dump_json(const Json& j, int indent = 2);

// Parse helpers; both throw ParseError with a descriptive message.
Json parse_json_text(const std::string& text, const std::string& origin = "<string>");
Json parse_json_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Conversions between JSON arrays and Eigen types. Matrices are row-major
// nested arrays. The `where` string names the field in error messages.
Json to_json(const Vec& v);
Json to_json(const Mat& m);
Vec vec_from_json(const Json& j, const std::string& where);
Mat mat_from_json(const Json& j, const std::string& where);

}  // namespace rtc
