#include "rtc/model.hpp"

#include <cmath>
#include <cstdio>

namespace rtc {
namespace {

std::string num_str(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

Real clamp_prob(Real v) { return (v > kNegClampTol && v < 0.0) ? 0.0 : v; }

void clamp_vec(Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = clamp_prob(v(i));
}

void clamp_mat(Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = clamp_prob(m(r, c));
  }
}

const Json& require(const Json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(ctx + ": missing required field \"" + key + "\"");
  }
  return j.at(key);
}

int require_size(const Json& j, const char* key, const std::string& ctx) {
  const Json& v = require(j, key, ctx);
  if (!v.is_number_integer()) {
    throw ParseError(ctx + ": field \"" + key + "\" must be an integer");
  }
  return v.get<int>();
}

ChannelSpec channel_from_json(const Json& j, const std::string& ctx) {
  if (!j.is_object()) throw ParseError(ctx + ": expected an object");
  ChannelSpec spec;
  if (j.contains("matrix")) {
    Mat m = mat_from_json(j.at("matrix"), ctx + ".matrix");
    clamp_mat(m);
    spec.matrix = std::move(m);
  }
  if (j.contains("function")) {
    const Json& f = j.at("function");
    FunctionalChannel fc;
    const Json& table = require(f, "table", ctx + ".function");
    if (!table.is_array()) throw ParseError(ctx + ".function.table: expected an array of rows");
    for (const auto& row : table) {
      if (!row.is_array()) throw ParseError(ctx + ".function.table: expected an array of rows");
      std::vector<int> r;
      for (const auto& e : row) {
        if (!e.is_number_integer()) {
          throw ParseError(ctx + ".function.table: entries must be integers");
        }
        r.push_back(e.get<int>());
      }
      fc.table.push_back(std::move(r));
    }
    fc.noise = vec_from_json(require(f, "noise", ctx + ".function"), ctx + ".function.noise");
    clamp_vec(fc.noise);
    spec.functional = std::move(fc);
  }
  if (!spec.matrix && !spec.functional) {
    throw ParseError(ctx + ": expected either \"matrix\" or \"function\"");
  }
  return spec;
}

Json channel_to_json(const ChannelSpec& spec) {
  Json j = Json::object();
  if (spec.matrix) {
    j["matrix"] = to_json(*spec.matrix);
  }
  if (spec.functional) {
    Json f = Json::object();
    Json table = Json::array();
    for (const auto& row : spec.functional->table) {
      Json r = Json::array();
      for (int e : row) r.push_back(e);
      table.push_back(std::move(r));
    }
    f["table"] = std::move(table);
    f["noise"] = to_json(spec.functional->noise);
    j["function"] = std::move(f);
  }
  return j;
}

void check_pmf(const Vec& p, const std::string& what, std::vector<std::string>& out) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p(i))) {
      out.push_back(what + "[" + std::to_string(i) + "] is not finite");
    } else if (p(i) < 0.0) {
      out.push_back(what + "[" + std::to_string(i) + "] is negative (" + num_str(p(i)) + ")");
    }
  }
  const Real s = p.sum();
  if (!(std::abs(s - 1.0) <= kSumTol)) {
    out.push_back(what + " sums to " + num_str(s) + ", expected 1 within 1e-12");
  }
}

void check_stochastic(const Mat& m, const std::string& what, std::vector<std::string>& out) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    check_pmf(m.row(r).transpose(), what + " row " + std::to_string(r), out);
  }
}

void check_channel(const ChannelSpec& spec, const Mat& compiled, int n_in, int n_out,
                   const std::string& what, std::vector<std::string>& out) {
  if (spec.matrix && spec.functional) {
    out.push_back(what + " must give either a matrix or a function, not both");
    return;
  }
  if (!spec.matrix && !spec.functional) {
    out.push_back(what + " must give a matrix or a function");
    return;
  }
  if (spec.matrix) {
    if (spec.matrix->rows() != n_in || spec.matrix->cols() != n_out) {
      out.push_back(what + ".matrix must be " + std::to_string(n_in) + " x " +
                    std::to_string(n_out) + " (got " + std::to_string(spec.matrix->rows()) +
                    " x " + std::to_string(spec.matrix->cols()) + ")");
      return;
    }
    check_stochastic(*spec.matrix, what + ".matrix", out);
    return;  // compiled == the given matrix; avoid duplicate reports
  } else {
    const FunctionalChannel& fc = *spec.functional;
    if (static_cast<int>(fc.table.size()) != n_in) {
      out.push_back(what + ".function.table must have " + std::to_string(n_in) + " rows (got " +
                    std::to_string(fc.table.size()) + ")");
      return;
    }
    const std::size_t n_noise = static_cast<std::size_t>(fc.noise.size());
    for (std::size_t i = 0; i < fc.table.size(); ++i) {
      if (fc.table[i].size() != n_noise) {
        out.push_back(what + ".function.table row " + std::to_string(i) + " must have " +
                      std::to_string(n_noise) + " entries (one per noise symbol)");
        return;
      }
      for (std::size_t k = 0; k < fc.table[i].size(); ++k) {
        const int o = fc.table[i][k];
        if (o < 0 || o >= n_out) {
          out.push_back(what + ".function.table[" + std::to_string(i) + "][" +
                        std::to_string(k) + "] = " + std::to_string(o) +
                        " is outside the output alphabet [0, " + std::to_string(n_out) + ")");
        }
      }
    }
    check_pmf(fc.noise, what + ".function.noise", out);
  }
  if (compiled.rows() == n_in && compiled.cols() == n_out) {
    check_stochastic(compiled, what + " (compiled from function)", out);
  }
}

}  // namespace

bool is_pmf(const Vec& p, Real tol) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) >= 0.0)) return false;
  }
  return std::abs(p.sum() - 1.0) <= tol;
}

Mat compile_channel(const ChannelSpec& spec, int n_in, int n_out) {
  if (spec.matrix) return *spec.matrix;
  Mat m = Mat::Zero(n_in, n_out);
  if (spec.functional) {
    const FunctionalChannel& fc = *spec.functional;
    const int rows = std::min<int>(n_in, static_cast<int>(fc.table.size()));
    for (int i = 0; i < rows; ++i) {
      const auto& row = fc.table[i];
      const int cols = std::min<int>(static_cast<int>(row.size()), static_cast<int>(fc.noise.size()));
      for (int k = 0; k < cols; ++k) {
        const int o = row[k];
        if (o >= 0 && o < n_out) m(i, o) += fc.noise(k);
      }
    }
  }
  return m;
}

std::vector<std::string> validate_instance(const Instance& inst) {
  std::vector<std::string> out;
  struct SizeField {
    const char* name;
    int value;
  };
  const SizeField sizes[] = {{"alphabets.X", inst.nx},     {"alphabets.Z", inst.nz},
                             {"alphabets.Y", inst.ny},     {"alphabets.Ytilde", inst.nyt},
                             {"alphabets.M", inst.nm},     {"alphabets.Xhat", inst.nxh}};
  for (const auto& f : sizes) {
    if (f.value < 1) {
      out.push_back(std::string(f.name) + " must be >= 1 (got " + std::to_string(f.value) + ")");
    }
  }
  if (inst.horizon < 1) {
    out.push_back("horizon must be >= 1 (got " + std::to_string(inst.horizon) + ")");
  }
  if (!out.empty()) return out;  // size errors make the shape checks below meaningless

  if (inst.source_initial.size() != inst.nx) {
    out.push_back("source.initial must have length " + std::to_string(inst.nx) + " (got " +
                  std::to_string(inst.source_initial.size()) + ")");
  } else {
    check_pmf(inst.source_initial, "source.initial", out);
  }

  if (static_cast<int>(inst.source_transitions.size()) != inst.horizon - 1) {
    out.push_back("source.transitions must have " + std::to_string(inst.horizon - 1) +
                  " matrices (got " + std::to_string(inst.source_transitions.size()) + ")");
  } else {
    for (std::size_t k = 0; k < inst.source_transitions.size(); ++k) {
      const Mat& tr = inst.source_transitions[k];
      const std::string what = "source.transitions[" + std::to_string(k) + "]";
      if (tr.rows() != inst.nx || tr.cols() != inst.nx) {
        out.push_back(what + " must be " + std::to_string(inst.nx) + " x " +
                      std::to_string(inst.nx) + " (got " + std::to_string(tr.rows()) + " x " +
                      std::to_string(tr.cols()) + ")");
      } else {
        check_stochastic(tr, what, out);
      }
    }
  }

  check_channel(inst.forward_spec, inst.forward, inst.nz, inst.ny, "forward", out);
  check_channel(inst.backward_spec, inst.backward, inst.ny, inst.nyt, "backward", out);

  if (inst.distortion.rows() != inst.nx || inst.distortion.cols() != inst.nxh) {
    out.push_back("distortion must be " + std::to_string(inst.nx) + " x " +
                  std::to_string(inst.nxh) + " (got " + std::to_string(inst.distortion.rows()) +
                  " x " + std::to_string(inst.distortion.cols()) + ")");
  } else {
    for (Eigen::Index r = 0; r < inst.distortion.rows(); ++r) {
      for (Eigen::Index c = 0; c < inst.distortion.cols(); ++c) {
        const Real v = inst.distortion(r, c);
        if (!std::isfinite(v)) {
          out.push_back("distortion[" + std::to_string(r) + "][" + std::to_string(c) +
                        "] is not finite");
        } else if (v < 0.0) {
          out.push_back("distortion[" + std::to_string(r) + "][" + std::to_string(c) +
                        "] is negative (" + num_str(v) + ")");
        }
      }
    }
  }
  return out;
}

Instance instance_from_json(const Json& doc) {
  if (!doc.is_object()) throw ParseError("instance: expected a JSON object");
  Instance inst;
  const Json& alpha = require(doc, "alphabets", "instance");
  inst.nx = require_size(alpha, "X", "instance.alphabets");
  inst.nz = require_size(alpha, "Z", "instance.alphabets");
  inst.ny = require_size(alpha, "Y", "instance.alphabets");
  inst.nyt = require_size(alpha, "Ytilde", "instance.alphabets");
  inst.nm = require_size(alpha, "M", "instance.alphabets");
  inst.nxh = require_size(alpha, "Xhat", "instance.alphabets");
  inst.horizon = require_size(doc, "horizon", "instance");

  const Json& source = require(doc, "source", "instance");
  inst.source_initial = vec_from_json(require(source, "initial", "instance.source"),
                                      "instance.source.initial");
  clamp_vec(inst.source_initial);
  if (source.contains("transitions")) {
    const Json& trs = source.at("transitions");
    if (!trs.is_array()) throw ParseError("instance.source.transitions: expected an array");
    std::size_t k = 0;
    for (const auto& tr : trs) {
      Mat m = mat_from_json(tr, "instance.source.transitions[" + std::to_string(k) + "]");
      clamp_mat(m);
      inst.source_transitions.push_back(std::move(m));
      ++k;
    }
  } else if (source.contains("transition")) {
    Mat m = mat_from_json(source.at("transition"), "instance.source.transition");
    clamp_mat(m);
    const int copies = std::max(0, inst.horizon - 1);
    inst.source_transitions.assign(static_cast<std::size_t>(copies), m);
  } else if (inst.horizon > 1) {
    throw ParseError("instance.source: missing \"transition\" or \"transitions\"");
  }

  inst.forward_spec = channel_from_json(require(doc, "forward", "instance"), "forward");
  inst.backward_spec = channel_from_json(require(doc, "backward", "instance"), "backward");
  inst.forward = compile_channel(inst.forward_spec, inst.nz, inst.ny);
  inst.backward = compile_channel(inst.backward_spec, inst.ny, inst.nyt);

  inst.distortion = mat_from_json(require(doc, "distortion", "instance"), "instance.distortion");
  return inst;
}

Json instance_to_json(const Instance& inst) {
  Json doc = Json::object();
  Json alpha = Json::object();
  alpha["X"] = inst.nx;
  alpha["Z"] = inst.nz;
  alpha["Y"] = inst.ny;
  alpha["Ytilde"] = inst.nyt;
  alpha["M"] = inst.nm;
  alpha["Xhat"] = inst.nxh;
  doc["alphabets"] = std::move(alpha);
  doc["horizon"] = inst.horizon;
  Json source = Json::object();
  source["initial"] = to_json(inst.source_initial);
  if (!inst.source_transitions.empty()) {
    Json trs = Json::array();
    for (const auto& tr : inst.source_transitions) trs.push_back(to_json(tr));
    source["transitions"] = std::move(trs);
  }
  doc["source"] = std::move(source);
  doc["forward"] = channel_to_json(inst.forward_spec);
  doc["backward"] = channel_to_json(inst.backward_spec);
  doc["distortion"] = to_json(inst.distortion);
  return doc;
}

Instance parse_instance(const std::string& text, const std::string& origin) {
  Instance inst = instance_from_json(parse_json_text(text, origin));
  auto violations = validate_instance(inst);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return inst;
}

Instance load_instance(const std::string& path) {
  return parse_instance(read_text_file(path), path);
}

void save_instance(const Instance& inst, const std::string& path) {
  write_text_file(path, dump_json(instance_to_json(inst)));
}

}  // namespace rtc
