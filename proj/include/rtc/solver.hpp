#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rtc/design.hpp"
#include "rtc/infostate.hpp"
#include "rtc/model.hpp"

namespace rtc {

// Guardrails for the exponential search. The recursion aborts with a
// LimitError naming the offending count instead of hanging.
struct SolverLimits {
  std::uint64_t max_rules_per_node = 1'000'000;  // candidate rules at one Bellman node
  std::uint64_t max_nodes = 1'000'000;           // expanded (non-cached) Bellman nodes
  Real time_budget_s = 600.0;
};

struct SolverOptions {
  SolverLimits limits;
  // Re-enable naive enumeration of all decoder tables instead of the
  // pointwise construction; for cross-checking only.
  bool debug_enumerate_decoders = false;
};

struct StageStateCounts {
  std::uint64_t encoder = 0, decoder = 0, memory = 0;  // distinct states per decision point
};

struct SolverStats {
  std::vector<StageStateCounts> states_per_stage;  // index t-1
  std::uint64_t nodes_expanded = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_entries = 0;
  Real wall_time_s = 0;
};

struct SolveResult {
  Real j_star = 0;
  StructuredDesign design;
  SolverStats stats;
};

// Streams all total encoder tables on (x, support belief id) in lexicographic
// order of the x-major table (last cell fastest); the first rule maps
// everything to channel input 0. Throws LimitError("rules") on construction
// if |Z|^(|X|*k) exceeds max_rules.
class EncoderRuleEnumerator {
 public:
  EncoderRuleEnumerator(const InfoState1& pi1, int nx, int nz, std::uint64_t max_rules);
  std::uint64_t count() const { return count_; }
  const EncoderRule& current() const { return rule_; }
  bool advance();  // false once all rules have been produced

 private:
  int nz_;
  std::uint64_t count_;
  EncoderRule rule_;
  bool exhausted_ = false;
};

// Convenience wrapper that materializes the whole sequence.
std::vector<EncoderRule> enumerate_encoder_rules(const InfoState1& pi1, int nx, int nz,
                                                 std::uint64_t max_rules = 1'000'000);

// Minimum-conditional-risk decoder of pi2, built cell by cell: for each (y,m)
// with marginal mass > kReachableMassTol, picks the estimate minimizing the
// posterior expected distortion, ties to the smallest index; unreachable
// cells get estimate 0. The returned cost is stage_cost(pi2, rule, rho) and
// equals the minimum over all decoder tables.
std::pair<DecoderRule, Real> optimize_decoder(const InfoState2& pi2, const Mat& rho, int ny,
                                              int nm, int nxh);

// Memoized backward recursion over the three per-stage decision points, plus
// forward extraction of one optimal design. A Solver instance owns the belief
// registries its information states refer to; states passed to the bellman_*
// and value_at entry points must be built against belief_space().
class Solver {
 public:
  explicit Solver(const Instance& inst, SolverOptions opt = SolverOptions{});

  SolveResult solve();

  // Optimal cost-to-go at each decision point. Encoder states accept
  // t in [1, horizon+1] (the value after the last stage is 0); decoder and
  // memory states accept t in [1, horizon].
  Real value_at(const InfoState1& s, int t);
  Real value_at(const InfoState2& s, int t);
  Real value_at(const InfoState3& s, int t);

  // The Bellman operators, exposed for tests. Each returns the optimal value
  // and the lexicographically first minimizing rule.
  std::pair<Real, EncoderRule> bellman_1V(const InfoState1& pi1, int t);
  std::pair<Real, DecoderRule> bellman_2V(const InfoState2& pi2, int t);
  std::pair<Real, MemoryRule> bellman_3V(const InfoState3& pi3, int t);

  InfoState1 initial_state() { return initial_info_state(inst_, space_); }
  BeliefSpace& belief_space() { return space_; }
  const Instance& instance() const { return inst_; }

  // Assembled from the live counters and cache sizes, so it is also valid
  // after a LimitError aborts a solve partway.
  SolverStats stats() const;

 private:
  struct Entry1 {
    Real value;
    EncoderRule rule;
  };
  struct Entry2 {
    Real value;
    DecoderRule rule;
  };
  struct Entry3 {
    Real value;
    MemoryRule rule;
  };

  void on_expand();  // node accounting + guardrails

  Instance inst_;
  SolverOptions opt_;
  BeliefSpace space_;
  std::vector<std::unordered_map<std::string, Entry1>> cache1_;  // index t-1
  std::vector<std::unordered_map<std::string, Entry2>> cache2_;
  std::vector<std::unordered_map<std::string, Entry3>> cache3_;
  std::uint64_t nodes_expanded_ = 0;
  std::uint64_t cache_hits_ = 0;
  std::chrono::steady_clock::time_point start_;
};

// Convenience wrapper: solve with fresh state.
SolveResult solve(const Instance& inst, SolverOptions opt = SolverOptions{});

}  // namespace rtc
