#pragma once

#include "rtc/rules.hpp"
#include "rtc/types.hpp"

namespace rtc {

struct InfoState2;  // defined in infostate.hpp

// The encoder's beliefs about the receiver, updated three times per stage.
//
//   b1 on M:      before transmitting (what the receiver remembers)
//   b2 on Y x M:  after choosing channel input z, before feedback
//   b3 on Y x M:  after observing the feedback symbol
//
// b2 and b3 use the flat layout ym_index(y, m, nm).

// b2(y, m) = P(channel output y | input z) * b1(m). Linear in b1; output mass
// equals b1's mass when fwd's row z is a pmf.
BeliefYM belief_after_transmission(const BeliefM& b1, int z, const Mat& fwd);

// Bayes update of b2 on feedback symbol ytilde:
//   b3(y, m) = bwd(y, ytilde) * b2(y, m) / D,  D = sum of the numerators.
// Not linear in b2. Throws ZeroMassError when D <= 1e-300: the belief rules
// out the observed feedback, which means the caller fed an impossible
// (belief, observation) pair or the state is corrupted.
BeliefYM belief_after_feedback(const BeliefYM& b2, int ytilde, const Mat& bwd);

// Push b3 through the receiver's memory update l to get the next stage's b1:
//   b1'(m') = sum of b3(y, m) over cells with l(y, m) = m'. Linear in b3.
BeliefM advance_belief_through_memory(const BeliefYM& b3, const MemoryRule& l, int nm);

// The receiver's posterior pmf over the current source symbol given its
// observation y and memory m, extracted from a decoder-stage information
// state. Throws ZeroMassError when pi2 gives the cell (y, m) zero marginal
// mass (conditioning on an unreachable observation).
Vec receiver_posterior(const InfoState2& pi2, int y, int m, int nx);

}  // namespace rtc
