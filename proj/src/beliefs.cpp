#include "rtc/beliefs.hpp"

#include "rtc/infostate.hpp"

namespace rtc {

BeliefYM belief_after_transmission(const BeliefM& b1, int z, const Mat& fwd) {
  const int nm = static_cast<int>(b1.size());
  const int ny = static_cast<int>(fwd.cols());
  BeliefYM b2(static_cast<Eigen::Index>(ny) * nm);
  for (int y = 0; y < ny; ++y) {
    b2.segment(static_cast<Eigen::Index>(y) * nm, nm) = fwd(z, y) * b1;
  }
  return b2;
}

BeliefYM belief_after_feedback(const BeliefYM& b2, int ytilde, const Mat& bwd) {
  const int nyt = static_cast<int>(bwd.cols());
  const int ny = static_cast<int>(bwd.rows());
  const int nm = static_cast<int>(b2.size()) / ny;
  (void)nyt;
  BeliefYM w(b2.size());
  for (int y = 0; y < ny; ++y) {
    w.segment(static_cast<Eigen::Index>(y) * nm, nm) =
        bwd(y, ytilde) * b2.segment(static_cast<Eigen::Index>(y) * nm, nm);
  }
  const Real d = w.sum();
  if (d <= 1e-300) {
    throw ZeroMassError("feedback symbol " + std::to_string(ytilde) +
                        " has zero probability under the current belief");
  }
  return w / d;
}

BeliefM advance_belief_through_memory(const BeliefYM& b3, const MemoryRule& l, int nm) {
  const int ny = static_cast<int>(b3.size()) / nm;
  BeliefM b1 = BeliefM::Zero(nm);
  for (int y = 0; y < ny; ++y) {
    for (int m = 0; m < nm; ++m) {
      b1(l.table[ym_index(y, m, nm)]) += b3(ym_index(y, m, nm));
    }
  }
  return b1;
}

Vec receiver_posterior(const InfoState2& pi2, int y, int m, int nx) {
  Vec w = Vec::Zero(nx);
  for (const Atom2& a : pi2.atoms) {
    if (a.y == y && a.m == m) w(a.x) += a.mass;
  }
  const Real total = w.sum();
  if (total <= kReachableMassTol) {
    throw ZeroMassError("observation (y=" + std::to_string(y) + ", m=" + std::to_string(m) +
                        ") has zero marginal mass; cannot form a posterior");
  }
  return w / total;
}

}  // namespace rtc
