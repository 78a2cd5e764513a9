#include "rtc/design.hpp"

#include <cmath>

namespace rtc {
namespace {

std::uint64_t pow_u64(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

void check_table(const std::vector<int>& table, std::uint64_t want_size, int value_bound,
                 const std::string& what) {
  if (table.size() != want_size) {
    throw DimensionMismatchError(what + " must have " + std::to_string(want_size) +
                                 " entries (got " + std::to_string(table.size()) + ")");
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i] < 0 || table[i] >= value_bound) {
      throw DimensionMismatchError(what + "[" + std::to_string(i) + "] = " +
                                   std::to_string(table[i]) + " is outside [0, " +
                                   std::to_string(value_bound) + ")");
    }
  }
}

std::vector<int> int_table_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of integers");
  std::vector<int> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_number_integer()) throw ParseError(where + ": expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

Json int_table_to_json(const std::vector<int>& t) {
  Json arr = Json::array();
  for (int v : t) arr.push_back(v);
  return arr;
}

}  // namespace

void check_design_dims(const Instance& inst, const StructuredDesign& d) {
  if (static_cast<int>(d.stages.size()) != inst.horizon) {
    throw DimensionMismatchError("design must have " + std::to_string(inst.horizon) +
                                 " stages (got " + std::to_string(d.stages.size()) + ")");
  }
  const std::uint64_t ym = static_cast<std::uint64_t>(inst.ny) * inst.nm;
  for (std::size_t t = 0; t < d.stages.size(); ++t) {
    const StructuredStage& s = d.stages[t];
    const std::string at = "stage " + std::to_string(t + 1);
    if (s.beliefs.empty()) {
      throw DimensionMismatchError(at + " encoder belief table is empty");
    }
    for (std::size_t k = 0; k < s.beliefs.size(); ++k) {
      if (static_cast<int>(s.beliefs[k].size()) != inst.nm) {
        throw DimensionMismatchError(at + " belief " + std::to_string(k) + " must have length " +
                                     std::to_string(inst.nm) + " (got " +
                                     std::to_string(s.beliefs[k].size()) + ")");
      }
    }
    check_table(s.encoder, static_cast<std::uint64_t>(inst.nx) * s.beliefs.size(), inst.nz,
                at + " encoder table");
    check_table(s.decoder.table, ym, inst.nxh, at + " decoder table");
    check_table(s.memory.table, ym, inst.nm, at + " memory table");
  }
}

void check_design_dims(const Instance& inst, const HistoryDesign& d) {
  if (static_cast<int>(d.stages.size()) != inst.horizon) {
    throw DimensionMismatchError("design must have " + std::to_string(inst.horizon) +
                                 " stages (got " + std::to_string(d.stages.size()) + ")");
  }
  const std::uint64_t ym = static_cast<std::uint64_t>(inst.ny) * inst.nm;
  for (std::size_t t = 0; t < d.stages.size(); ++t) {
    const HistoryStage& s = d.stages[t];
    const std::string at = "stage " + std::to_string(t + 1);
    const std::uint64_t domain = pow_u64(static_cast<std::uint64_t>(inst.nx), static_cast<int>(t) + 1) *
                                 pow_u64(static_cast<std::uint64_t>(inst.nyt), static_cast<int>(t));
    check_table(s.encoder, domain, inst.nz, at + " encoder table");
    check_table(s.decoder.table, ym, inst.nxh, at + " decoder table");
    check_table(s.memory.table, ym, inst.nm, at + " memory table");
  }
}

void check_design_dims(const Instance& inst, const Design& d) {
  std::visit([&](const auto& inner) { check_design_dims(inst, inner); }, d);
}

Json design_to_json(const Design& d) {
  Json doc = Json::object();
  if (std::holds_alternative<StructuredDesign>(d)) {
    doc["type"] = "structured";
    Json stages = Json::array();
    for (const StructuredStage& s : std::get<StructuredDesign>(d).stages) {
      Json stage = Json::object();
      Json enc = Json::object();
      Json beliefs = Json::array();
      for (const BeliefM& b : s.beliefs) beliefs.push_back(to_json(b));
      enc["beliefs"] = std::move(beliefs);
      enc["table"] = int_table_to_json(s.encoder);
      stage["encoder"] = std::move(enc);
      stage["decoder"] = int_table_to_json(s.decoder.table);
      stage["memory"] = int_table_to_json(s.memory.table);
      stages.push_back(std::move(stage));
    }
    doc["stages"] = std::move(stages);
  } else {
    doc["type"] = "history";
    Json stages = Json::array();
    for (const HistoryStage& s : std::get<HistoryDesign>(d).stages) {
      Json stage = Json::object();
      stage["encoder"] = int_table_to_json(s.encoder);
      stage["decoder"] = int_table_to_json(s.decoder.table);
      stage["memory"] = int_table_to_json(s.memory.table);
      stages.push_back(std::move(stage));
    }
    doc["stages"] = std::move(stages);
  }
  return doc;
}

Design design_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("type") || !doc.at("type").is_string()) {
    throw ParseError("design: missing \"type\" (\"structured\" or \"history\")");
  }
  const std::string type = doc.at("type").get<std::string>();
  if (!doc.contains("stages") || !doc.at("stages").is_array()) {
    throw ParseError("design: missing \"stages\" array");
  }
  if (type == "structured") {
    StructuredDesign d;
    std::size_t t = 0;
    for (const auto& stage : doc.at("stages")) {
      const std::string at = "design.stages[" + std::to_string(t) + "]";
      if (!stage.is_object() || !stage.contains("encoder") || !stage.contains("decoder") ||
          !stage.contains("memory")) {
        throw ParseError(at + ": expected encoder, decoder, and memory fields");
      }
      const Json& enc = stage.at("encoder");
      if (!enc.is_object() || !enc.contains("beliefs") || !enc.contains("table")) {
        throw ParseError(at + ".encoder: expected beliefs and table fields");
      }
      StructuredStage s;
      if (!enc.at("beliefs").is_array()) throw ParseError(at + ".encoder.beliefs: expected an array");
      std::size_t k = 0;
      for (const auto& b : enc.at("beliefs")) {
        s.beliefs.push_back(vec_from_json(b, at + ".encoder.beliefs[" + std::to_string(k) + "]"));
        ++k;
      }
      s.encoder = int_table_from_json(enc.at("table"), at + ".encoder.table");
      s.decoder.table = int_table_from_json(stage.at("decoder"), at + ".decoder");
      s.memory.table = int_table_from_json(stage.at("memory"), at + ".memory");
      d.stages.push_back(std::move(s));
      ++t;
    }
    return d;
  }
  if (type == "history") {
    HistoryDesign d;
    std::size_t t = 0;
    for (const auto& stage : doc.at("stages")) {
      const std::string at = "design.stages[" + std::to_string(t) + "]";
      if (!stage.is_object() || !stage.contains("encoder") || !stage.contains("decoder") ||
          !stage.contains("memory")) {
        throw ParseError(at + ": expected encoder, decoder, and memory fields");
      }
      HistoryStage s;
      s.encoder = int_table_from_json(stage.at("encoder"), at + ".encoder");
      s.decoder.table = int_table_from_json(stage.at("decoder"), at + ".decoder");
      s.memory.table = int_table_from_json(stage.at("memory"), at + ".memory");
      d.stages.push_back(std::move(s));
      ++t;
    }
    return d;
  }
  throw ParseError("design: unknown type \"" + type + "\"");
}

Design load_design(const std::string& path) { return design_from_json(parse_json_file(path)); }

void save_design(const Design& d, const std::string& path) {
  write_text_file(path, dump_json(design_to_json(d)));
}

EncoderRule bind_encoder(const StructuredStage& stage, const InfoState1& pi1,
                         const BeliefSpace& space) {
  std::vector<BeliefId> support;
  for (const Atom1& a : pi1.atoms) support.push_back(a.b);
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());

  const std::size_t k = stage.beliefs.size();
  std::vector<int> column_of;  // per support id, column in the stage's belief table
  column_of.reserve(support.size());
  for (BeliefId b : support) {
    const Vec& target = space.on_m.value(b);
    int found = -1;
    for (std::size_t j = 0; j < k; ++j) {
      if (stage.beliefs[j].size() == target.size() &&
          (stage.beliefs[j] - target).cwiseAbs().maxCoeff() <= kBeliefMergeTol) {
        found = static_cast<int>(j);
        break;
      }
    }
    if (found < 0) {
      throw BeliefMismatchError(
          "stage belief table has no entry matching a reachable belief (id " +
          std::to_string(b) + ")");
    }
    column_of.push_back(found);
  }

  const int nx = k ? static_cast<int>(stage.encoder.size() / k) : 0;
  EncoderRule rule;
  rule.support = support;
  rule.table.resize(static_cast<std::size_t>(nx) * support.size());
  for (int x = 0; x < nx; ++x) {
    for (std::size_t p = 0; p < support.size(); ++p) {
      rule.table[static_cast<std::size_t>(x) * support.size() + p] =
          stage.encoder[static_cast<std::size_t>(x) * k + static_cast<std::size_t>(column_of[p])];
    }
  }
  return rule;
}

}  // namespace rtc
