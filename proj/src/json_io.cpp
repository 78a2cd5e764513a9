#include "rtc/json_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rtc {
namespace {

void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

void append_number(std::string& out, const Json& j) {
  if (j.is_number_integer()) {
    out += std::to_string(j.get<std::int64_t>());
  } else if (j.is_number_unsigned()) {
    out += std::to_string(j.get<std::uint64_t>());
  } else {
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      throw std::invalid_argument("cannot serialize non-finite number to JSON");
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
  }
}

void write_value(std::string& out, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  switch (j.type()) {
    case Json::value_t::null: out += "null"; break;
    case Json::value_t::boolean: out += (j.get<bool>() ? "true" : "false"); break;
    case Json::value_t::string: append_escaped(out, j.get<std::string>()); break;
    case Json::value_t::number_integer:
    case Json::value_t::number_unsigned:
    case Json::value_t::number_float: append_number(out, j); break;
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      // Arrays of plain scalars stay on one line; nested structures expand.
      bool scalars_only = true;
      for (const auto& e : j) {
        if (e.is_array() || e.is_object()) {
          scalars_only = false;
          break;
        }
      }
      if (scalars_only) {
        out += '[';
        bool first = true;
        for (const auto& e : j) {
          if (!first) out += ", ";
          first = false;
          write_value(out, e, indent, depth + 1);
        }
        out += ']';
      } else {
        out += "[\n";
        bool first = true;
        for (const auto& e : j) {
          if (!first) out += ",\n";
          first = false;
          out += pad_in;
          write_value(out, e, indent, depth + 1);
        }
        out += '\n';
        out += pad;
        out += ']';
      }
      break;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        append_escaped(out, it.key());
        out += ": ";
        write_value(out, it.value(), indent, depth + 1);
      }
      out += '\n';
      out += pad;
      out += '}';
      break;
    }
    default:
      throw std::invalid_argument("cannot serialize JSON value of this type");
  }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  write_value(out, j, indent, 0);
  out += '\n';
  return out;
}

Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

Json parse_json_file(const std::string& path) {
  return parse_json_text(read_text_file(path), path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw ParseError("write failed: " + path);
}

Json to_json(const Vec& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vec vec_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) {
    if (!e.is_number()) throw ParseError(where + ": expected an array of numbers");
    v(i++) = e.get<double>();
  }
  return v;
}

Mat mat_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a non-empty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) throw ParseError(where + ": expected non-empty rows");
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  Eigen::Index r = 0;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols) {
      throw ParseError(where + ": rows must all have the same length");
    }
    Eigen::Index c = 0;
    for (const auto& e : row) {
      if (!e.is_number()) throw ParseError(where + ": entries must be numbers");
      m(r, c++) = e.get<double>();
    }
    ++r;
  }
  return m;
}

}  // namespace rtc
