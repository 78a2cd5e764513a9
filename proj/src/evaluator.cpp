#include "rtc/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "rtc/beliefs.hpp"

namespace rtc {
namespace {

// Per channel input: the list of (output symbol, weight) pairs this input can
// produce, in enumeration order. Functional channels enumerate their noise
// symbols (the same output may appear several times); matrix channels
// enumerate outputs directly, which acts as the canonical noise alphabet.
struct Outcomes {
  std::vector<std::vector<std::pair<int, Real>>> per_input;
};

Outcomes channel_outcomes(const ChannelSpec& spec, const Mat& compiled) {
  Outcomes o;
  if (spec.functional) {
    const FunctionalChannel& fc = *spec.functional;
    o.per_input.resize(fc.table.size());
    for (std::size_t i = 0; i < fc.table.size(); ++i) {
      for (Eigen::Index k = 0; k < fc.noise.size(); ++k) {
        if (fc.noise(k) > 0.0) o.per_input[i].push_back({fc.table[i][static_cast<std::size_t>(k)], fc.noise(k)});
      }
    }
  } else {
    o.per_input.resize(static_cast<std::size_t>(compiled.rows()));
    for (Eigen::Index i = 0; i < compiled.rows(); ++i) {
      for (Eigen::Index j = 0; j < compiled.cols(); ++j) {
        if (compiled(i, j) > 0.0) o.per_input[static_cast<std::size_t>(i)].push_back({static_cast<int>(j), compiled(i, j)});
      }
    }
  }
  return o;
}

// Exhaustive sum over all (source path, forward noise, backward noise)
// realizations, in the per-stage order: draw x_t, encode, channel output,
// decode + distortion, memory update, then (except at the last stage) the
// feedback symbol.
class HistoryEvaluator {
 public:
  HistoryEvaluator(const Instance& inst, const HistoryDesign& d)
      : inst_(inst),
        d_(d),
        fwd_(channel_outcomes(inst.forward_spec, inst.forward)),
        bwd_(channel_outcomes(inst.backward_spec, inst.backward)) {
    pow_nyt_.resize(static_cast<std::size_t>(inst.horizon) + 1, 1);
    for (int t = 1; t <= inst_.horizon; ++t) {
      pow_nyt_[static_cast<std::size_t>(t)] =
          pow_nyt_[static_cast<std::size_t>(t - 1)] * static_cast<std::uint64_t>(inst_.nyt);
    }
    report_.per_stage.assign(static_cast<std::size_t>(inst.horizon), 0.0);
  }

  ExactReport run() {
    dfs(1, 1.0, -1, 0, 0, 0);
    report_.value = 0;
    for (Real c : report_.per_stage) report_.value += c;
    return report_;
  }

 private:
  void dfs(int t, Real w, int x_prev, std::uint64_t x_hist, std::uint64_t yt_hist, int m) {
    const HistoryStage& stage = d_.stages[static_cast<std::size_t>(t - 1)];
    for (int x = 0; x < inst_.nx; ++x) {
      const Real wx = (t == 1) ? inst_.source_initial(x) : inst_.transition(t - 1)(x_prev, x);
      if (wx <= 0.0) continue;
      const std::uint64_t xh = x_hist * static_cast<std::uint64_t>(inst_.nx) + static_cast<std::uint64_t>(x);
      const int z = stage.encoder[xh * pow_nyt_[static_cast<std::size_t>(t - 1)] + yt_hist];
      for (const auto& [y, wy] : fwd_.per_input[static_cast<std::size_t>(z)]) {
        const Real w2 = w * wx * wy;
        const int xhat = stage.decoder.table[ym_index(y, m, inst_.nm)];
        report_.per_stage[static_cast<std::size_t>(t - 1)] += w2 * inst_.distortion(x, xhat);
        const int m2 = stage.memory.table[ym_index(y, m, inst_.nm)];
        if (t == inst_.horizon) {
          report_.weight_sum += w2;
        } else {
          for (const auto& [yt, wyt] : bwd_.per_input[static_cast<std::size_t>(y)]) {
            dfs(t + 1, w2 * wyt, x, xh,
                yt_hist * static_cast<std::uint64_t>(inst_.nyt) + static_cast<std::uint64_t>(yt), m2);
          }
        }
      }
    }
  }

  const Instance& inst_;
  const HistoryDesign& d_;
  Outcomes fwd_, bwd_;
  std::vector<std::uint64_t> pow_nyt_;
  ExactReport report_;
};

// Same enumeration for a belief-form design: the recursion tracks the
// encoder's belief alongside the path and matches it against each stage's
// belief table.
class StructuredEvaluator {
 public:
  StructuredEvaluator(const Instance& inst, const StructuredDesign& d)
      : inst_(inst),
        d_(d),
        fwd_(channel_outcomes(inst.forward_spec, inst.forward)),
        bwd_(channel_outcomes(inst.backward_spec, inst.backward)) {
    report_.per_stage.assign(static_cast<std::size_t>(inst.horizon), 0.0);
  }

  ExactReport run() {
    Vec b1 = Vec::Zero(inst_.nm);
    b1(0) = 1.0;
    dfs(1, 1.0, -1, b1, 0);
    report_.value = 0;
    for (Real c : report_.per_stage) report_.value += c;
    return report_;
  }

 private:
  int belief_column(const StructuredStage& stage, const Vec& b1, int t) const {
    for (std::size_t j = 0; j < stage.beliefs.size(); ++j) {
      if (stage.beliefs[j].size() == b1.size() &&
          (stage.beliefs[j] - b1).cwiseAbs().maxCoeff() <= kBeliefMergeTol) {
        return static_cast<int>(j);
      }
    }
    throw BeliefMismatchError("stage " + std::to_string(t) +
                              " belief table has no entry matching the tracked belief");
  }

  void dfs(int t, Real w, int x_prev, const Vec& b1, int m) {
    const StructuredStage& stage = d_.stages[static_cast<std::size_t>(t - 1)];
    const int col = belief_column(stage, b1, t);
    const std::size_t k = stage.beliefs.size();
    for (int x = 0; x < inst_.nx; ++x) {
      const Real wx = (t == 1) ? inst_.source_initial(x) : inst_.transition(t - 1)(x_prev, x);
      if (wx <= 0.0) continue;
      const int z = stage.encoder[static_cast<std::size_t>(x) * k + static_cast<std::size_t>(col)];
      const Vec b2 = belief_after_transmission(b1, z, inst_.forward);
      for (const auto& [y, wy] : fwd_.per_input[static_cast<std::size_t>(z)]) {
        const Real w2 = w * wx * wy;
        const int xhat = stage.decoder.table[ym_index(y, m, inst_.nm)];
        report_.per_stage[static_cast<std::size_t>(t - 1)] += w2 * inst_.distortion(x, xhat);
        const int m2 = stage.memory.table[ym_index(y, m, inst_.nm)];
        if (t == inst_.horizon) {
          report_.weight_sum += w2;
        } else {
          for (const auto& [yt, wyt] : bwd_.per_input[static_cast<std::size_t>(y)]) {
            const Vec b3 = belief_after_feedback(b2, yt, inst_.backward);
            const Vec b1_next = advance_belief_through_memory(b3, stage.memory, inst_.nm);
            dfs(t + 1, w2 * wyt, x, b1_next, m2);
          }
        }
      }
    }
  }

  const Instance& inst_;
  const StructuredDesign& d_;
  Outcomes fwd_, bwd_;
  ExactReport report_;
};

int sample_pmf(const Vec& p, Real u) {
  int last_positive = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) last_positive = static_cast<int>(i);
  }
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    u -= p(i);
    if (u < 0.0) return static_cast<int>(i);
  }
  return last_positive;  // guard against accumulated rounding at u ~ 1
}

// Draw one use of a channel. Functional channels consume one uniform draw for
// the noise symbol; matrix channels consume one draw for the output directly.
// noise_out receives the noise symbol, or -1 when the channel is a matrix.
int sample_channel(const ChannelSpec& spec, const Mat& compiled, int input, SplitMix64& rng,
                   int* noise_out) {
  if (spec.functional) {
    const FunctionalChannel& fc = *spec.functional;
    const int n = sample_pmf(fc.noise, rng.next_unit());
    if (noise_out) *noise_out = n;
    return fc.table[static_cast<std::size_t>(input)][static_cast<std::size_t>(n)];
  }
  if (noise_out) *noise_out = -1;
  return sample_pmf(compiled.row(input).transpose(), rng.next_unit());
}

// Runs one episode; returns per-stage realized distortion. When `log` is
// given, appends every generated variable in order.
void run_episode(const Instance& inst, const Design& d, SplitMix64& rng,
                 std::vector<Real>& stage_costs, std::vector<TraceEvent>* log) {
  const bool structured = std::holds_alternative<StructuredDesign>(d);
  const StructuredDesign* sd = structured ? &std::get<StructuredDesign>(d) : nullptr;
  const HistoryDesign* hd = structured ? nullptr : &std::get<HistoryDesign>(d);

  auto log_symbol = [&](const char* name, int t, int v) {
    if (log) log->push_back(TraceEvent{name, t, v, Vec()});
  };
  auto log_belief = [&](const char* name, int t, const Vec& b) {
    if (log) log->push_back(TraceEvent{name, t, -1, b});
  };

  Vec b1;
  if (structured) {
    b1 = Vec::Zero(inst.nm);
    b1(0) = 1.0;
  }
  int x = 0, m = 0;
  std::uint64_t x_hist = 0, yt_hist = 0;
  for (int t = 1; t <= inst.horizon; ++t) {
    // source step
    if (t == 1) {
      x = sample_pmf(inst.source_initial, rng.next_unit());
    } else {
      x = sample_pmf(inst.transition(t - 1).row(x).transpose(), rng.next_unit());
    }
    log_symbol("x", t, x);

    // encode
    int z;
    const DecoderRule* decoder;
    const MemoryRule* memory;
    if (structured) {
      const StructuredStage& stage = sd->stages[static_cast<std::size_t>(t - 1)];
      log_belief("b1", t, b1);
      int col = -1;
      for (std::size_t j = 0; j < stage.beliefs.size(); ++j) {
        if (stage.beliefs[j].size() == b1.size() &&
            (stage.beliefs[j] - b1).cwiseAbs().maxCoeff() <= kBeliefMergeTol) {
          col = static_cast<int>(j);
          break;
        }
      }
      if (col < 0) {
        throw BeliefMismatchError("stage " + std::to_string(t) +
                                  " belief table has no entry matching the tracked belief");
      }
      z = stage.encoder[static_cast<std::size_t>(x) * stage.beliefs.size() + static_cast<std::size_t>(col)];
      decoder = &stage.decoder;
      memory = &stage.memory;
    } else {
      const HistoryStage& stage = hd->stages[static_cast<std::size_t>(t - 1)];
      x_hist = x_hist * static_cast<std::uint64_t>(inst.nx) + static_cast<std::uint64_t>(x);
      std::uint64_t pow_nyt = 1;
      for (int i = 1; i < t; ++i) pow_nyt *= static_cast<std::uint64_t>(inst.nyt);
      z = stage.encoder[x_hist * pow_nyt + yt_hist];
      decoder = &stage.decoder;
      memory = &stage.memory;
    }
    log_symbol("z", t, z);

    // forward channel
    int noise = -1;
    const int y = sample_channel(inst.forward_spec, inst.forward, z, rng, &noise);
    if (noise >= 0) log_symbol("n", t, noise);
    log_symbol("y", t, y);

    Vec b2;
    if (structured) {
      b2 = belief_after_transmission(b1, z, inst.forward);
      log_belief("b2", t, b2);
    }

    // decode, pay distortion, update memory
    const int xhat = decoder->table[ym_index(y, m, inst.nm)];
    log_symbol("xhat", t, xhat);
    stage_costs[static_cast<std::size_t>(t - 1)] = inst.distortion(x, xhat);
    const int m_next = memory->table[ym_index(y, m, inst.nm)];
    log_symbol("m", t, m_next);

    // feedback channel (not used after the last stage)
    if (t < inst.horizon) {
      int noise_b = -1;
      const int yt = sample_channel(inst.backward_spec, inst.backward, y, rng, &noise_b);
      if (noise_b >= 0) log_symbol("ntilde", t, noise_b);
      log_symbol("ytilde", t, yt);
      if (structured) {
        const StructuredStage& stage = sd->stages[static_cast<std::size_t>(t - 1)];
        const Vec b3 = belief_after_feedback(b2, yt, inst.backward);
        log_belief("b3", t, b3);
        b1 = advance_belief_through_memory(b3, stage.memory, inst.nm);
      } else {
        yt_hist = yt_hist * static_cast<std::uint64_t>(inst.nyt) + static_cast<std::uint64_t>(yt);
      }
    }
    m = m_next;
  }
}

}  // namespace

ExactReport evaluate_exact(const Instance& inst, const HistoryDesign& d) {
  check_design_dims(inst, d);
  return HistoryEvaluator(inst, d).run();
}

ExactReport evaluate_exact(const Instance& inst, const StructuredDesign& d) {
  check_design_dims(inst, d);
  return StructuredEvaluator(inst, d).run();
}

ExactReport evaluate_exact(const Instance& inst, const Design& d) {
  return std::visit([&](const auto& inner) { return evaluate_exact(inst, inner); }, d);
}

SimReport simulate(const Instance& inst, const Design& d, std::uint64_t samples,
                   std::uint64_t seed, int threads) {
  check_design_dims(inst, d);
  if (samples < 1) throw std::invalid_argument("simulate requires at least one sample");

  constexpr std::uint64_t kChunk = 4096;
  const std::uint64_t n_chunks = (samples + kChunk - 1) / kChunk;
  const int T = inst.horizon;

  struct ChunkSums {
    Real total = 0, total_sq = 0;
    std::vector<Real> per_stage;
  };
  std::vector<ChunkSums> chunks(static_cast<std::size_t>(n_chunks));
  for (auto& c : chunks) c.per_stage.assign(static_cast<std::size_t>(T), 0.0);

  auto work = [&](std::uint64_t chunk_idx) {
    ChunkSums& out = chunks[static_cast<std::size_t>(chunk_idx)];
    const std::uint64_t lo = chunk_idx * kChunk;
    const std::uint64_t hi = std::min(samples, lo + kChunk);
    std::vector<Real> stage_costs(static_cast<std::size_t>(T), 0.0);
    for (std::uint64_t i = lo; i < hi; ++i) {
      SplitMix64 rng(episode_stream_seed(seed, i));
      run_episode(inst, d, rng, stage_costs, nullptr);
      Real total = 0;
      for (int t = 0; t < T; ++t) {
        out.per_stage[static_cast<std::size_t>(t)] += stage_costs[static_cast<std::size_t>(t)];
        total += stage_costs[static_cast<std::size_t>(t)];
      }
      out.total += total;
      out.total_sq += total * total;
    }
  };

  const int n_workers = std::max(1, threads);
  if (n_workers == 1 || n_chunks == 1) {
    for (std::uint64_t c = 0; c < n_chunks; ++c) work(c);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (std::uint64_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) work(c);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Chunk partials are combined in index order: the result does not depend on
  // which worker produced which chunk.
  Real s1 = 0, s2 = 0;
  std::vector<Real> per_stage(static_cast<std::size_t>(T), 0.0);
  for (const auto& c : chunks) {
    s1 += c.total;
    s2 += c.total_sq;
    for (int t = 0; t < T; ++t) per_stage[static_cast<std::size_t>(t)] += c.per_stage[static_cast<std::size_t>(t)];
  }

  SimReport report;
  report.samples = samples;
  report.seed = seed;
  const Real n = static_cast<Real>(samples);
  report.estimate = s1 / n;
  if (samples > 1) {
    Real var = (s2 - n * report.estimate * report.estimate) / (n - 1.0);
    if (var < 0) var = 0;  // rounding guard for zero-variance designs
    report.std_error = std::sqrt(var / n);
  }
  report.per_stage.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    report.per_stage[static_cast<std::size_t>(t)] = per_stage[static_cast<std::size_t>(t)] / n;
  }
  return report;
}

std::vector<TraceEvent> trace(const Instance& inst, const Design& d, std::uint64_t seed) {
  check_design_dims(inst, d);
  std::vector<TraceEvent> log;
  SplitMix64 rng(episode_stream_seed(seed, 0));
  std::vector<Real> stage_costs(static_cast<std::size_t>(inst.horizon), 0.0);
  run_episode(inst, d, rng, stage_costs, &log);
  return log;
}

}  // namespace rtc
