#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtc/design.hpp"
#include "rtc/model.hpp"

namespace rtc {

// Exact expected total distortion, computed as an exhaustive sum over source
// and channel-noise realizations. weight_sum collects the probability of
// every enumerated path and must come out as 1 (diagnostic).
struct ExactReport {
  Real value = 0;
  std::vector<Real> per_stage;
  Real weight_sum = 0;
};

struct SimReport {
  Real estimate = 0;
  Real std_error = 0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<Real> per_stage;  // per-stage mean distortion
};

ExactReport evaluate_exact(const Instance& inst, const HistoryDesign& d);
ExactReport evaluate_exact(const Instance& inst, const StructuredDesign& d);
ExactReport evaluate_exact(const Instance& inst, const Design& d);

// Monte-Carlo estimate over `samples` independent episodes. Episode i draws
// from its own generator stream (see episode_stream_seed), and partial sums
// are reduced in a fixed chunk order, so the report is bit-identical for a
// given (seed, samples) regardless of thread count.
SimReport simulate(const Instance& inst, const Design& d, std::uint64_t samples,
                   std::uint64_t seed, int threads = 1);

// One simulated episode's variables in generation order. Symbol events carry
// `symbol` >= 0 and an empty belief; belief events (structured designs only:
// names "b1", "b2", "b3") carry the tracked belief vector. Noise events "n"
// and "ntilde" appear only for channels given in functional form; matrix
// channels draw the output directly.
struct TraceEvent {
  std::string name;  // x, b1, z, n, y, b2, xhat, m, ntilde, ytilde, b3
  int stage = 0;     // 1-based
  int symbol = -1;
  Vec belief;
};

std::vector<TraceEvent> trace(const Instance& inst, const Design& d, std::uint64_t seed);

// Fixed-increment 64-bit generator (splitmix64). Small state, full period,
// and a strong output mixer; chosen because its behavior is easy to
// reproduce in any language from the constants alone.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1) with 53 random bits.
  Real next_unit() { return static_cast<Real>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Episode i's generator is SplitMix64 seeded with this value: the base seed
// XOR (i+1) times the splitmix increment, giving each episode a distinct,
// reproducible stream.
inline std::uint64_t episode_stream_seed(std::uint64_t seed, std::uint64_t episode) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (episode + 1));
}

}  // namespace rtc
