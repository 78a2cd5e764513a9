#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace rtc {

using Real = double;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Beliefs are probability vectors. BeliefM lives on the memory alphabet M;
// BeliefYM lives on Y x M, flattened with ym_index below.
using BeliefM = Vec;
using BeliefYM = Vec;

// Handle into a BeliefRegistry. Ids are dense and assigned in insertion order.
using BeliefId = std::int32_t;

inline int ym_index(int y, int m, int nm) { return y * nm + m; }

// Shared numeric tolerances.
inline constexpr Real kSumTol = 1e-12;         // probability vectors must sum to 1 within this
inline constexpr Real kNegClampTol = -1e-15;   // values in (kNegClampTol, 0) are treated as 0
inline constexpr Real kMassPruneTol = 1e-15;   // atoms below this mass are dropped
inline constexpr Real kBeliefMergeTol = 1e-9;  // L-inf radius within which beliefs share an id
inline constexpr Real kReachableMassTol = 1e-12;  // cells above this count as reachable

}  // namespace rtc
