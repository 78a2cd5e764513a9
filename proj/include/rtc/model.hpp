#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtc/errors.hpp"
#include "rtc/json_io.hpp"
#include "rtc/types.hpp"

namespace rtc {

// Deterministic channel with an explicit noise alphabet:
// output = table[input][noise], noise drawn from `noise` independently per use.
struct FunctionalChannel {
  std::vector<std::vector<int>> table;  // [input][noise] -> output symbol
  Vec noise;                            // pmf over the noise alphabet
};

// A channel is given either as a row-stochastic matrix P(output | input) or as
// a functional description; exactly one member is set.
struct ChannelSpec {
  std::optional<Mat> matrix;
  std::optional<FunctionalChannel> functional;
};

// One problem instance: a Markov source observed causally by an encoder, a
// noisy forward channel to the receiver, a noisy feedback channel back to the
// encoder, a finite receiver memory, and a per-stage distortion.
//
// Alphabet sizes: nx source symbols X, nz channel inputs Z, ny channel
// outputs Y, nyt feedback symbols Ytilde, nm memory symbols M, nxh estimates
// Xhat. Stages are 1-based: t = 1..horizon.
struct Instance {
  int nx = 0, nz = 0, ny = 0, nyt = 0, nm = 0, nxh = 0;
  int horizon = 0;

  Vec source_initial;                   // pmf of X_1, length nx
  std::vector<Mat> source_transitions;  // horizon-1 row-stochastic nx x nx matrices

  ChannelSpec forward_spec;   // as given in the input file
  ChannelSpec backward_spec;
  Mat forward;    // compiled nz x ny, rows = channel inputs
  Mat backward;   // compiled ny x nyt

  Mat distortion;  // nx x nxh, nonnegative

  // Transition matrix for the step from stage t to t+1, t in [1, horizon-1].
  const Mat& transition(int t) const { return source_transitions.at(static_cast<std::size_t>(t - 1)); }

  Real rho_max() const { return distortion.size() ? distortion.maxCoeff() : 0.0; }
};

// True if p is entrywise >= 0 and sums to 1 within tol.
bool is_pmf(const Vec& p, Real tol = kSumTol);

// Collapse a channel description to its transition matrix. For a functional
// channel, entry (i, o) accumulates the noise mass of every noise symbol that
// maps input i to output o. Matrix specs are passed through unchanged.
Mat compile_channel(const ChannelSpec& spec, int n_in, int n_out);

// Returns every violated invariant, in a fixed order; empty means valid.
std::vector<std::string> validate_instance(const Instance& inst);

// Build an Instance from its JSON form without validating model invariants
// (shape/type problems still raise ParseError). Probabilities in
// (kNegClampTol, 0) are clamped to exact 0.
Instance instance_from_json(const Json& doc);
Json instance_to_json(const Instance& inst);

// Parse + compile + validate. Throws ParseError or ValidationError.
Instance load_instance(const std::string& path);
Instance parse_instance(const std::string& text, const std::string& origin = "<string>");
void save_instance(const Instance& inst, const std::string& path);

}  // namespace rtc
