#include "rtc/solver.hpp"

#include <limits>
#include <stdexcept>

namespace rtc {
namespace {

// Saturating power; UINT64_MAX acts as "too many".
std::uint64_t checked_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && r > std::numeric_limits<std::uint64_t>::max() / base) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    r *= base;
  }
  return r;
}

// Odometer step over a flat digit table: last digit fastest, so successive
// states run in lexicographic order. Returns false on wrap-around.
bool increment_digits(std::vector<int>& digits, int base) {
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (++*it < base) return true;
    *it = 0;
  }
  return false;
}

std::vector<BeliefId> support_ids(const InfoState1& pi1) {
  std::vector<BeliefId> ids;
  for (const Atom1& a : pi1.atoms) ids.push_back(a.b);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace

EncoderRuleEnumerator::EncoderRuleEnumerator(const InfoState1& pi1, int nx, int nz,
                                             std::uint64_t max_rules)
    : nz_(nz) {
  rule_.support = support_ids(pi1);
  const std::uint64_t cells = static_cast<std::uint64_t>(nx) * rule_.support.size();
  count_ = checked_pow(static_cast<std::uint64_t>(nz), cells);
  if (count_ > max_rules) throw LimitError("rules", count_, max_rules);
  rule_.table.assign(cells, 0);
}

bool EncoderRuleEnumerator::advance() {
  if (exhausted_) return false;
  if (!increment_digits(rule_.table, nz_)) {
    exhausted_ = true;
    return false;
  }
  return true;
}

std::vector<EncoderRule> enumerate_encoder_rules(const InfoState1& pi1, int nx, int nz,
                                                 std::uint64_t max_rules) {
  EncoderRuleEnumerator en(pi1, nx, nz, max_rules);
  std::vector<EncoderRule> out;
  out.reserve(static_cast<std::size_t>(en.count()));
  do {
    out.push_back(en.current());
  } while (en.advance());
  return out;
}

std::pair<DecoderRule, Real> optimize_decoder(const InfoState2& pi2, const Mat& rho, int ny,
                                              int nm, int nxh) {
  const int nx = static_cast<int>(rho.rows());
  const int cells = ny * nm;
  std::vector<Real> joint(static_cast<std::size_t>(cells) * nx, 0.0);  // P(x, y, m)
  std::vector<Real> mass(static_cast<std::size_t>(cells), 0.0);
  for (const Atom2& a : pi2.atoms) {
    const int c = ym_index(a.y, a.m, nm);
    joint[static_cast<std::size_t>(c) * nx + a.x] += a.mass;
    mass[static_cast<std::size_t>(c)] += a.mass;
  }
  DecoderRule g;
  g.table.assign(static_cast<std::size_t>(cells), 0);
  for (int c = 0; c < cells; ++c) {
    if (mass[static_cast<std::size_t>(c)] <= kReachableMassTol) continue;  // unreachable: keep 0
    Real best = std::numeric_limits<Real>::infinity();
    int best_xh = 0;
    for (int xh = 0; xh < nxh; ++xh) {
      Real cost = 0;
      for (int x = 0; x < nx; ++x) {
        cost += rho(x, xh) * joint[static_cast<std::size_t>(c) * nx + x];
      }
      if (cost < best) {  // strict: ties keep the smallest estimate index
        best = cost;
        best_xh = xh;
      }
    }
    g.table[static_cast<std::size_t>(c)] = best_xh;
  }
  return {g, stage_cost(pi2, g, rho, nm)};
}

Solver::Solver(const Instance& inst, SolverOptions opt)
    : inst_(inst),
      opt_(opt),
      cache1_(static_cast<std::size_t>(inst.horizon)),
      cache2_(static_cast<std::size_t>(inst.horizon)),
      cache3_(static_cast<std::size_t>(inst.horizon)),
      start_(std::chrono::steady_clock::now()) {}

void Solver::on_expand() {
  ++nodes_expanded_;
  if (nodes_expanded_ > opt_.limits.max_nodes) {
    throw LimitError("nodes", nodes_expanded_, opt_.limits.max_nodes);
  }
  const Real elapsed =
      std::chrono::duration<Real>(std::chrono::steady_clock::now() - start_).count();
  if (elapsed > opt_.limits.time_budget_s) {
    throw LimitError("time-seconds", static_cast<std::uint64_t>(elapsed),
                     static_cast<std::uint64_t>(opt_.limits.time_budget_s));
  }
}

std::pair<Real, EncoderRule> Solver::bellman_1V(const InfoState1& pi1, int t) {
  if (t < 1 || t > inst_.horizon) {
    throw std::invalid_argument("encoder-stage value undefined at t=" + std::to_string(t));
  }
  std::string key = canonical_key(pi1, space_);
  auto& cache = cache1_[static_cast<std::size_t>(t - 1)];
  if (auto it = cache.find(key); it != cache.end()) {
    ++cache_hits_;
    return {it->second.value, it->second.rule};
  }
  on_expand();
  Real best = std::numeric_limits<Real>::infinity();
  EncoderRule best_rule;
  EncoderRuleEnumerator en(pi1, inst_.nx, inst_.nz, opt_.limits.max_rules_per_node);
  do {
    InfoState2 pi2 = apply_1Q(pi1, en.current(), inst_.forward, space_);
    const Real v = bellman_2V(pi2, t).first;
    if (v < best) {
      best = v;
      best_rule = en.current();
    }
  } while (en.advance());
  cache.emplace(std::move(key), Entry1{best, best_rule});
  return {best, best_rule};
}

std::pair<Real, DecoderRule> Solver::bellman_2V(const InfoState2& pi2, int t) {
  if (t < 1 || t > inst_.horizon) {
    throw std::invalid_argument("decoder-stage value undefined at t=" + std::to_string(t));
  }
  std::string key = canonical_key(pi2, space_);
  auto& cache = cache2_[static_cast<std::size_t>(t - 1)];
  if (auto it = cache.find(key); it != cache.end()) {
    ++cache_hits_;
    return {it->second.value, it->second.rule};
  }
  on_expand();
  DecoderRule g;
  Real decode_cost;
  if (opt_.debug_enumerate_decoders) {
    const int cells = inst_.ny * inst_.nm;
    const std::uint64_t count =
        checked_pow(static_cast<std::uint64_t>(inst_.nxh), static_cast<std::uint64_t>(cells));
    if (count > opt_.limits.max_rules_per_node) {
      throw LimitError("rules", count, opt_.limits.max_rules_per_node);
    }
    DecoderRule candidate;
    candidate.table.assign(static_cast<std::size_t>(cells), 0);
    decode_cost = std::numeric_limits<Real>::infinity();
    do {
      const Real cost = stage_cost(pi2, candidate, inst_.distortion, inst_.nm);
      if (cost < decode_cost) {
        decode_cost = cost;
        g = candidate;
      }
    } while (increment_digits(candidate.table, inst_.nxh));
  } else {
    std::tie(g, decode_cost) = optimize_decoder(pi2, inst_.distortion, inst_.ny, inst_.nm, inst_.nxh);
  }
  Real continuation = 0;
  if (t < inst_.horizon) {
    InfoState3 pi3 = apply_2Q(pi2, inst_.backward, space_);
    continuation = bellman_3V(pi3, t).first;
  }
  const Real value = decode_cost + continuation;
  cache.emplace(std::move(key), Entry2{value, g});
  return {value, g};
}

std::pair<Real, MemoryRule> Solver::bellman_3V(const InfoState3& pi3, int t) {
  if (t < 1 || t > inst_.horizon) {
    throw std::invalid_argument("memory-stage value undefined at t=" + std::to_string(t));
  }
  if (t == inst_.horizon) {
    // The last memory symbol is never read; nothing to optimize.
    return {0.0, identity_memory_rule(inst_.ny, inst_.nm)};
  }
  std::string key = canonical_key(pi3, space_);
  auto& cache = cache3_[static_cast<std::size_t>(t - 1)];
  if (auto it = cache.find(key); it != cache.end()) {
    ++cache_hits_;
    return {it->second.value, it->second.rule};
  }
  on_expand();

  // Only (y, m) cells that carry mass influence the successor state, so the
  // enumeration runs over those cells; off-support cells stay at memory 0.
  // Full-table enumeration would visit |M|^(|Y||M|) rules and reach the same
  // minimum, since rules differing off-support share a successor.
  std::vector<std::pair<int, int>> cells;
  for (const Atom3& a : pi3.atoms) {
    if (cells.empty() || cells.back() != std::make_pair(a.y, a.m)) cells.push_back({a.y, a.m});
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  const std::uint64_t count =
      checked_pow(static_cast<std::uint64_t>(inst_.nm), static_cast<std::uint64_t>(cells.size()));
  if (count > opt_.limits.max_rules_per_node) {
    throw LimitError("rules", count, opt_.limits.max_rules_per_node);
  }

  Real best = std::numeric_limits<Real>::infinity();
  MemoryRule best_rule;
  std::vector<int> digits(cells.size(), 0);
  MemoryRule rule;
  rule.table.assign(static_cast<std::size_t>(inst_.ny) * inst_.nm, 0);
  do {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      rule.table[ym_index(cells[i].first, cells[i].second, inst_.nm)] = digits[i];
    }
    InfoState1 next = apply_3Q(pi3, rule, inst_.transition(t), inst_.nm, space_);
    const Real v = bellman_1V(next, t + 1).first;
    if (v < best) {
      best = v;
      best_rule = rule;
    }
  } while (increment_digits(digits, inst_.nm));
  cache.emplace(std::move(key), Entry3{best, best_rule});
  return {best, best_rule};
}

Real Solver::value_at(const InfoState1& s, int t) {
  if (t == inst_.horizon + 1) return 0.0;
  return bellman_1V(s, t).first;
}

Real Solver::value_at(const InfoState2& s, int t) { return bellman_2V(s, t).first; }

Real Solver::value_at(const InfoState3& s, int t) { return bellman_3V(s, t).first; }

SolveResult Solver::solve() {
  InfoState1 pi1 = initial_state();
  auto [j_star, first_rule] = bellman_1V(pi1, 1);
  (void)first_rule;

  // Forward replay along the cached argmin chain to materialize one design.
  StructuredDesign design;
  InfoState1 cur = pi1;
  for (int t = 1; t <= inst_.horizon; ++t) {
    const Entry1& e1 = cache1_[static_cast<std::size_t>(t - 1)].at(canonical_key(cur, space_));
    const EncoderRule& c = e1.rule;
    InfoState2 pi2 = apply_1Q(cur, c, inst_.forward, space_);
    const Entry2& e2 = cache2_[static_cast<std::size_t>(t - 1)].at(canonical_key(pi2, space_));

    StructuredStage stage;
    for (BeliefId b : c.support) stage.beliefs.push_back(space_.on_m.value(b));
    stage.encoder = c.table;
    stage.decoder = e2.rule;
    if (t < inst_.horizon) {
      InfoState3 pi3 = apply_2Q(pi2, inst_.backward, space_);
      const Entry3& e3 = cache3_[static_cast<std::size_t>(t - 1)].at(canonical_key(pi3, space_));
      stage.memory = e3.rule;
      cur = apply_3Q(pi3, e3.rule, inst_.transition(t), inst_.nm, space_);
    } else {
      stage.memory = identity_memory_rule(inst_.ny, inst_.nm);
    }
    design.stages.push_back(std::move(stage));
  }

  SolveResult result;
  result.j_star = j_star;
  result.design = std::move(design);
  result.stats = stats();
  return result;
}

SolverStats Solver::stats() const {
  SolverStats s;
  s.states_per_stage.resize(static_cast<std::size_t>(inst_.horizon));
  s.cache_entries = 0;
  for (int t = 0; t < inst_.horizon; ++t) {
    auto& row = s.states_per_stage[static_cast<std::size_t>(t)];
    row.encoder = cache1_[static_cast<std::size_t>(t)].size();
    row.decoder = cache2_[static_cast<std::size_t>(t)].size();
    row.memory = cache3_[static_cast<std::size_t>(t)].size();
    s.cache_entries += row.encoder + row.decoder + row.memory;
  }
  s.nodes_expanded = nodes_expanded_;
  s.cache_hits = cache_hits_;
  s.wall_time_s =
      std::chrono::duration<Real>(std::chrono::steady_clock::now() - start_).count();
  return s;
}

SolveResult solve(const Instance& inst, SolverOptions opt) { return Solver(inst, opt).solve(); }

}  // namespace rtc
