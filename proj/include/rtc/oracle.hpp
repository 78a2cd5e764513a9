#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rtc/design.hpp"
#include "rtc/evaluator.hpp"
#include "rtc/model.hpp"
#include "rtc/solver.hpp"

namespace rtc {

// full: stage-t encoders are functions of (x_1..x_t, yt_1..yt_{t-1}).
// no_feedback: encoders ignore the feedback history (functions of x_1..x_t).
enum class OracleMode { kFull, kNoFeedback };

// Exact size of the searched design space. Encoder counts are per stage;
// memory counts cover stages 1..T-1 only (the last memory update is never
// read and is not searched). Saturated entries set `overflow`.
struct DesignSpaceCount {
  std::vector<std::uint64_t> encoders;
  std::vector<std::uint64_t> decoders;
  std::vector<std::uint64_t> memories;
  std::uint64_t total = 0;
  bool overflow = false;
};

DesignSpaceCount count_designs(const Instance& inst, OracleMode mode);

struct OracleOptions {
  std::uint64_t max_designs = 50'000'000;
  int threads = 1;
  // Optimize decoders pointwise per (encoder, memory) assignment instead of
  // enumerating decoder tables. Same minimum, far fewer visited designs;
  // off by default so the oracle stays a plain exhaustive search.
  bool pointwise_decoders = false;
};

struct OracleResult {
  Real j_star = 0;
  HistoryDesign design;  // lexicographically first minimizer
  DesignSpaceCount counts;
  std::uint64_t visited = 0;  // assignments actually evaluated
};

// Exhaustive minimum of evaluate_exact over every design in the mode's class.
// Designs are ordered lexicographically by the concatenated table digits
// (encoders for t=1..T, then decoders t=1..T, then memories t=1..T-1; within
// a table, cell index ascending, last cell fastest). Throws
// LimitError("designs", ...) when the space exceeds max_designs.
OracleResult brute_force(const Instance& inst, OracleMode mode,
                         const OracleOptions& opt = OracleOptions{});
OracleResult brute_force_full(const Instance& inst, const OracleOptions& opt = OracleOptions{});
OracleResult brute_force_no_feedback(const Instance& inst,
                                     const OracleOptions& opt = OracleOptions{});

struct CompareReport {
  Real heuristic_cost = 0;
  Real j_star = 0;
  Real gap_abs = 0;
  std::optional<Real> gap_rel;  // empty when j_star is (numerically) zero
};

// Exact cost of a given design against the solver's optimum.
CompareReport compare(const Instance& inst, const Design& heuristic,
                      const SolverOptions& solver_opt = SolverOptions{});

}  // namespace rtc
