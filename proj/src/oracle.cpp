#include "rtc/oracle.hpp"

#include <atomic>
#include <limits>
#include <thread>

namespace rtc {
namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && r > kSaturated / base) return kSaturated;
    r *= base;
  }
  return r;
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kSaturated / a) return kSaturated;
  return a * b;
}

// One enumerated digit of the composite design odometer: a value in
// [0, base) written into one or more table cells (several cells when a
// reduced domain, e.g. a feedback-blind encoder, expands into a full table).
struct DigitSpec {
  int base = 0;
  std::vector<int*> targets;
};

HistoryDesign blank_design(const Instance& inst) {
  HistoryDesign d;
  std::uint64_t x_dom = 1, yt_dom = 1;
  for (int t = 1; t <= inst.horizon; ++t) {
    x_dom *= static_cast<std::uint64_t>(inst.nx);
    HistoryStage s;
    s.encoder.assign(static_cast<std::size_t>(x_dom * yt_dom), 0);
    s.decoder.table.assign(static_cast<std::size_t>(inst.ny) * inst.nm, 0);
    if (t == inst.horizon) {
      s.memory = identity_memory_rule(inst.ny, inst.nm);  // never read; fixed canonical rule
    } else {
      s.memory.table.assign(static_cast<std::size_t>(inst.ny) * inst.nm, 0);
    }
    d.stages.push_back(std::move(s));
    yt_dom *= static_cast<std::uint64_t>(inst.nyt);
  }
  return d;
}

// Digit layout, most significant first. Must match count_designs.
std::vector<DigitSpec> build_digits(const Instance& inst, OracleMode mode, bool skip_decoders,
                                    HistoryDesign& d) {
  std::vector<DigitSpec> digits;
  std::uint64_t x_dom = 1, yt_dom = 1;
  std::vector<std::uint64_t> yt_doms;  // nyt^(t-1) per stage
  for (int t = 1; t <= inst.horizon; ++t) {
    x_dom *= static_cast<std::uint64_t>(inst.nx);
    yt_doms.push_back(yt_dom);
    HistoryStage& s = d.stages[static_cast<std::size_t>(t - 1)];
    if (mode == OracleMode::kFull) {
      for (std::size_t c = 0; c < s.encoder.size(); ++c) {
        digits.push_back({inst.nz, {&s.encoder[c]}});
      }
    } else {
      // Feedback-blind: one digit per source history, fanned out over every
      // feedback history.
      for (std::uint64_t xh = 0; xh < x_dom; ++xh) {
        DigitSpec spec;
        spec.base = inst.nz;
        for (std::uint64_t q = 0; q < yt_dom; ++q) {
          spec.targets.push_back(&s.encoder[static_cast<std::size_t>(xh * yt_dom + q)]);
        }
        digits.push_back(std::move(spec));
      }
    }
    yt_dom *= static_cast<std::uint64_t>(inst.nyt);
  }
  if (!skip_decoders) {
    for (int t = 1; t <= inst.horizon; ++t) {
      HistoryStage& s = d.stages[static_cast<std::size_t>(t - 1)];
      if (t == 1) {
        // Memory starts at symbol 0, so only the (y, 0) cells are live.
        for (int y = 0; y < inst.ny; ++y) {
          digits.push_back({inst.nxh, {&s.decoder.table[static_cast<std::size_t>(ym_index(y, 0, inst.nm))]}});
        }
      } else {
        for (std::size_t c = 0; c < s.decoder.table.size(); ++c) {
          digits.push_back({inst.nxh, {&s.decoder.table[c]}});
        }
      }
    }
  }
  for (int t = 1; t < inst.horizon; ++t) {
    HistoryStage& s = d.stages[static_cast<std::size_t>(t - 1)];
    if (t == 1) {
      for (int y = 0; y < inst.ny; ++y) {
        digits.push_back({inst.nm, {&s.memory.table[static_cast<std::size_t>(ym_index(y, 0, inst.nm))]}});
      }
    } else {
      for (std::size_t c = 0; c < s.memory.table.size(); ++c) {
        digits.push_back({inst.nm, {&s.memory.table[c]}});
      }
    }
  }
  return digits;
}

struct Odometer {
  std::vector<DigitSpec> specs;
  std::vector<int> values;

  void set_index(std::uint64_t index) {
    values.assign(specs.size(), 0);
    for (std::size_t j = specs.size(); j-- > 0;) {
      values[j] = static_cast<int>(index % static_cast<std::uint64_t>(specs[j].base));
      index /= static_cast<std::uint64_t>(specs[j].base);
    }
    apply_all();
  }

  void apply_all() {
    for (std::size_t j = 0; j < specs.size(); ++j) {
      for (int* cell : specs[j].targets) *cell = values[j];
    }
  }

  bool advance() {
    for (std::size_t j = specs.size(); j-- > 0;) {
      if (++values[j] < specs[j].base) {
        for (int* cell : specs[j].targets) *cell = values[j];
        return true;
      }
      values[j] = 0;
      for (int* cell : specs[j].targets) *cell = values[j];
    }
    return false;
  }
};

// Per-stage unnormalized joints P(x, y, m) reached under a fixed encoder and
// memory assignment; enough to build the optimal decoders pointwise.
class JointAccumulator {
 public:
  JointAccumulator(const Instance& inst, const HistoryDesign& d) : inst_(inst), d_(d) {
    const std::size_t per_stage = static_cast<std::size_t>(inst.ny) * inst.nm * inst.nx;
    joints_.assign(static_cast<std::size_t>(inst.horizon) * per_stage, 0.0);
    fwd_rows_.resize(static_cast<std::size_t>(inst.nz));
    for (int z = 0; z < inst.nz; ++z) {
      for (int y = 0; y < inst.ny; ++y) {
        if (inst.forward(z, y) > 0.0) fwd_rows_[static_cast<std::size_t>(z)].push_back({y, inst.forward(z, y)});
      }
    }
    bwd_rows_.resize(static_cast<std::size_t>(inst.ny));
    for (int y = 0; y < inst.ny; ++y) {
      for (int yt = 0; yt < inst.nyt; ++yt) {
        if (inst.backward(y, yt) > 0.0) bwd_rows_[static_cast<std::size_t>(y)].push_back({yt, inst.backward(y, yt)});
      }
    }
  }

  // cost = sum over stages and reachable (y, m) cells of the cell's minimum
  // posterior expected distortion. If g_out is given, also writes the argmin
  // decoder tables (ties to the smallest index, unreachable cells 0).
  Real run(HistoryDesign* g_out) {
    std::fill(joints_.begin(), joints_.end(), 0.0);
    dfs(1, 1.0, -1, 0, 0, 0);
    Real cost = 0;
    const int cells = inst_.ny * inst_.nm;
    for (int t = 1; t <= inst_.horizon; ++t) {
      for (int c = 0; c < cells; ++c) {
        const Real* w = cell_ptr(t, c);
        Real mass = 0;
        for (int x = 0; x < inst_.nx; ++x) mass += w[x];
        if (mass <= kReachableMassTol) {
          if (g_out) g_out->stages[static_cast<std::size_t>(t - 1)].decoder.table[static_cast<std::size_t>(c)] = 0;
          continue;
        }
        Real best = std::numeric_limits<Real>::infinity();
        int best_xh = 0;
        for (int xh = 0; xh < inst_.nxh; ++xh) {
          Real v = 0;
          for (int x = 0; x < inst_.nx; ++x) v += inst_.distortion(x, xh) * w[x];
          if (v < best) {
            best = v;
            best_xh = xh;
          }
        }
        cost += best;
        if (g_out) g_out->stages[static_cast<std::size_t>(t - 1)].decoder.table[static_cast<std::size_t>(c)] = best_xh;
      }
    }
    return cost;
  }

 private:
  Real* cell_ptr(int t, int cell) {
    const std::size_t per_stage = static_cast<std::size_t>(inst_.ny) * inst_.nm * inst_.nx;
    return &joints_[static_cast<std::size_t>(t - 1) * per_stage +
                    static_cast<std::size_t>(cell) * inst_.nx];
  }

  void dfs(int t, Real w, int x_prev, std::uint64_t x_hist, std::uint64_t yt_hist, int m) {
    const HistoryStage& stage = d_.stages[static_cast<std::size_t>(t - 1)];
    std::uint64_t yt_dom = 1;
    for (int i = 1; i < t; ++i) yt_dom *= static_cast<std::uint64_t>(inst_.nyt);
    for (int x = 0; x < inst_.nx; ++x) {
      const Real wx = (t == 1) ? inst_.source_initial(x) : inst_.transition(t - 1)(x_prev, x);
      if (wx <= 0.0) continue;
      const std::uint64_t xh = x_hist * static_cast<std::uint64_t>(inst_.nx) + static_cast<std::uint64_t>(x);
      const int z = stage.encoder[xh * yt_dom + yt_hist];
      for (const auto& [y, wy] : fwd_rows_[static_cast<std::size_t>(z)]) {
        const Real w2 = w * wx * wy;
        cell_ptr(t, ym_index(y, m, inst_.nm))[x] += w2;
        const int m2 = stage.memory.table[ym_index(y, m, inst_.nm)];
        if (t < inst_.horizon) {
          for (const auto& [yt, wyt] : bwd_rows_[static_cast<std::size_t>(y)]) {
            dfs(t + 1, w2 * wyt, x, xh,
                yt_hist * static_cast<std::uint64_t>(inst_.nyt) + static_cast<std::uint64_t>(yt), m2);
          }
        }
      }
    }
  }

  const Instance& inst_;
  const HistoryDesign& d_;
  std::vector<Real> joints_;
  std::vector<std::vector<std::pair<int, Real>>> fwd_rows_, bwd_rows_;
};

}  // namespace

DesignSpaceCount count_designs(const Instance& inst, OracleMode mode) {
  DesignSpaceCount c;
  std::uint64_t x_dom = 1, yt_dom = 1;
  for (int t = 1; t <= inst.horizon; ++t) {
    x_dom = sat_mul(x_dom, static_cast<std::uint64_t>(inst.nx));
    const std::uint64_t enc_cells =
        (mode == OracleMode::kFull) ? sat_mul(x_dom, yt_dom) : x_dom;
    c.encoders.push_back(enc_cells == kSaturated
                             ? kSaturated
                             : sat_pow(static_cast<std::uint64_t>(inst.nz), enc_cells));
    const std::uint64_t dec_cells =
        (t == 1) ? static_cast<std::uint64_t>(inst.ny)
                 : static_cast<std::uint64_t>(inst.ny) * static_cast<std::uint64_t>(inst.nm);
    c.decoders.push_back(sat_pow(static_cast<std::uint64_t>(inst.nxh), dec_cells));
    if (t < inst.horizon) {
      const std::uint64_t mem_cells =
          (t == 1) ? static_cast<std::uint64_t>(inst.ny)
                   : static_cast<std::uint64_t>(inst.ny) * static_cast<std::uint64_t>(inst.nm);
      c.memories.push_back(sat_pow(static_cast<std::uint64_t>(inst.nm), mem_cells));
    }
    yt_dom = sat_mul(yt_dom, static_cast<std::uint64_t>(inst.nyt));
  }
  c.total = 1;
  for (std::uint64_t v : c.encoders) c.total = sat_mul(c.total, v);
  for (std::uint64_t v : c.decoders) c.total = sat_mul(c.total, v);
  for (std::uint64_t v : c.memories) c.total = sat_mul(c.total, v);
  for (std::uint64_t v : c.encoders) c.overflow |= (v == kSaturated);
  for (std::uint64_t v : c.decoders) c.overflow |= (v == kSaturated);
  for (std::uint64_t v : c.memories) c.overflow |= (v == kSaturated);
  c.overflow |= (c.total == kSaturated);
  return c;
}

OracleResult brute_force(const Instance& inst, OracleMode mode, const OracleOptions& opt) {
  OracleResult result;
  result.counts = count_designs(inst, mode);

  // Size of the space actually enumerated here (decoders drop out in
  // pointwise mode).
  std::uint64_t total = 1;
  for (std::uint64_t v : result.counts.encoders) total = sat_mul(total, v);
  if (!opt.pointwise_decoders) {
    for (std::uint64_t v : result.counts.decoders) total = sat_mul(total, v);
  }
  for (std::uint64_t v : result.counts.memories) total = sat_mul(total, v);
  if (total > opt.max_designs) throw LimitError("designs", total, opt.max_designs);

  struct ThreadBest {
    Real value = std::numeric_limits<Real>::infinity();
    std::uint64_t index = 0;
    std::uint64_t visited = 0;
  };

  const int n_workers = std::max(1, std::min<int>(opt.threads, static_cast<int>(
                                                      std::min<std::uint64_t>(total, 64))));
  std::vector<ThreadBest> best(static_cast<std::size_t>(n_workers));

  auto work = [&](int w) {
    const std::uint64_t lo = total * static_cast<std::uint64_t>(w) / static_cast<std::uint64_t>(n_workers);
    const std::uint64_t hi =
        total * (static_cast<std::uint64_t>(w) + 1) / static_cast<std::uint64_t>(n_workers);
    if (lo >= hi) return;
    HistoryDesign working = blank_design(inst);
    Odometer odo;
    odo.specs = build_digits(inst, mode, opt.pointwise_decoders, working);
    odo.set_index(lo);
    ThreadBest& tb = best[static_cast<std::size_t>(w)];
    if (opt.pointwise_decoders) {
      JointAccumulator acc(inst, working);
      for (std::uint64_t i = lo; i < hi; ++i) {
        const Real v = acc.run(nullptr);
        if (v < tb.value) {
          tb.value = v;
          tb.index = i;
        }
        ++tb.visited;
        odo.advance();
      }
    } else {
      for (std::uint64_t i = lo; i < hi; ++i) {
        const Real v = evaluate_exact(inst, working).value;
        if (v < tb.value) {
          tb.value = v;
          tb.index = i;
        }
        ++tb.visited;
        odo.advance();
      }
    }
  };

  if (n_workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }

  // Deterministic reduction: smallest value, ties to the smallest index.
  ThreadBest overall;
  for (const ThreadBest& tb : best) {
    result.visited += tb.visited;
    if (tb.value < overall.value ||
        (tb.value == overall.value && tb.visited > 0 && tb.index < overall.index)) {
      overall = tb;
    }
  }

  // Rebuild the winning design from its index.
  HistoryDesign winner = blank_design(inst);
  Odometer odo;
  odo.specs = build_digits(inst, mode, opt.pointwise_decoders, winner);
  odo.set_index(overall.index);
  if (opt.pointwise_decoders) {
    JointAccumulator acc(inst, winner);
    acc.run(&winner);
  }
  result.j_star = overall.value;
  result.design = std::move(winner);
  return result;
}

OracleResult brute_force_full(const Instance& inst, const OracleOptions& opt) {
  return brute_force(inst, OracleMode::kFull, opt);
}

OracleResult brute_force_no_feedback(const Instance& inst, const OracleOptions& opt) {
  return brute_force(inst, OracleMode::kNoFeedback, opt);
}

CompareReport compare(const Instance& inst, const Design& heuristic,
                      const SolverOptions& solver_opt) {
  check_design_dims(inst, heuristic);
  const ExactReport h = evaluate_exact(inst, heuristic);
  const SolveResult s = solve(inst, solver_opt);
  CompareReport r;
  r.heuristic_cost = h.value;
  r.j_star = s.j_star;
  r.gap_abs = h.value - s.j_star;
  if (s.j_star > kReachableMassTol) r.gap_rel = r.gap_abs / s.j_star;
  return r;
}

}  // namespace rtc
