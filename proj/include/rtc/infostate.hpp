#pragma once

#include <deque>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtc/beliefs.hpp"
#include "rtc/model.hpp"
#include "rtc/rules.hpp"
#include "rtc/types.hpp"

namespace rtc {

// Quantize each coordinate to a 1e-12 grid and join the resulting integers
// with commas. Beliefs closer than the grid step share a key.
std::string quantized_key(const Vec& v);

// Interns belief vectors and hands out dense ids. Two beliefs within
// kBeliefMergeTol in L-infinity receive the same id; the first one registered
// is kept as the representative. Lookup is by quantized key with a linear
// fallback scan, so near-duplicates that straddle a grid boundary still
// merge. get_or_insert is safe to call concurrently.
class BeliefRegistry {
 public:
  BeliefId get_or_insert(const Vec& belief);
  const Vec& value(BeliefId id) const;
  const std::string& key(BeliefId id) const;  // representative's quantized key
  int size() const;

 private:
  mutable std::mutex mu_;
  std::deque<Vec> values_;  // deque: references stay valid as the registry grows
  std::deque<std::string> keys_;
  std::unordered_map<std::string, BeliefId> by_key_;
};

// The two belief registries a solve works over: beliefs on M (encoder-stage
// states) and beliefs on Y x M (decoder- and memory-stage states). Ids are
// only meaningful within the registry that produced them.
struct BeliefSpace {
  BeliefRegistry on_m;
  BeliefRegistry on_ym;
};

// Information states: finitely supported distributions over
// (group variables, encoder belief). Atoms are kept sorted by their integer
// coordinates then belief id, with zero-mass atoms pruned.
struct Atom1 {
  int x, m;
  BeliefId b;  // belief on M
  Real mass;
};
struct Atom2 {
  int x, y, m;
  BeliefId b;  // belief on Y x M
  Real mass;
};
struct Atom3 {
  int x, y, yt, m;
  BeliefId b;  // belief on Y x M
  Real mass;
};

struct InfoState1 {
  std::vector<Atom1> atoms;
  Real total_mass() const;
};
struct InfoState2 {
  std::vector<Atom2> atoms;
  Real total_mass() const;
};
struct InfoState3 {
  std::vector<Atom3> atoms;
  Real total_mass() const;
};

// State at the first encoder decision: the receiver holds the fixed reset
// memory symbol 0 and the encoder knows it.
InfoState1 initial_info_state(const Instance& inst, BeliefSpace& space);

// One-step transforms between the three decision points of a stage.
//
// apply_1Q: encoder rule c acts, the forward channel fires. Each atom
// (x, m, b) splits over channel outputs y with weight fwd(c(x, b), y), and the
// attached belief advances b -> belief_after_transmission(b, z, fwd).
InfoState2 apply_1Q(const InfoState1& pi1, const EncoderRule& c, const Mat& fwd,
                    BeliefSpace& space);

// apply_2Q: the feedback channel fires. Each atom (x, y, m, b) splits over
// feedback symbols yt with weight bwd(y, yt); beliefs update by Bayes rule.
InfoState3 apply_2Q(const InfoState2& pi2, const Mat& bwd, BeliefSpace& space);

// apply_3Q: memory rule l acts and the source steps through src_next. Feedback
// and output coordinates are marginalized out; m' = l(y, m), x' ~ src_next
// row x, beliefs advance through l.
InfoState1 apply_3Q(const InfoState3& pi3, const MemoryRule& l, const Mat& src_next, int nm,
                    BeliefSpace& space);

// Expected distortion of decoder rule g under pi2.
Real stage_cost(const InfoState2& pi2, const DecoderRule& g, const Mat& rho, int nm);

// Canonical string form: atoms sorted by (coordinates, representative belief
// key), masses quantized to the 1e-12 grid. Equal states (same space, masses
// within ~1e-13) produce equal keys; used for value-cache lookups.
std::string canonical_key(const InfoState1& s, const BeliefSpace& space);
std::string canonical_key(const InfoState2& s, const BeliefSpace& space);
std::string canonical_key(const InfoState3& s, const BeliefSpace& space);

// Convex combination: scales each state's masses by its weight and merges
// atoms with identical (coordinates, belief id).
InfoState1 mix(const std::vector<InfoState1>& states, const Vec& weights);
InfoState2 mix(const std::vector<InfoState2>& states, const Vec& weights);
InfoState3 mix(const std::vector<InfoState3>& states, const Vec& weights);

// Largest deviation between each attached belief and the conditional law of
// the group coordinates it claims to describe: for every belief id with group
// mass > kReachableMassTol, compares P(receiver coords | belief id) against
// the registered belief vector, and returns the max absolute difference.
// Well-formed reachable states stay within kBeliefMergeTol.
Real calibration_error(const InfoState1& s, const BeliefSpace& space);
Real calibration_error(const InfoState2& s, const BeliefSpace& space, int nm);
Real calibration_error(const InfoState3& s, const BeliefSpace& space, int nm);

}  // namespace rtc
