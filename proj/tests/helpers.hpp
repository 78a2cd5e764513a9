#pragma once

#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "rtc/errors.hpp"
#include "rtc/infostate.hpp"
#include "rtc/model.hpp"

// Shared fixtures: file locations, matrix shorthands, in-memory builders for
// the stock instances under data/instances/, and the reference values for
// them produced by an independent exhaustive search (17 significant digits).

namespace rtc::testutil {

inline std::string data_dir() { return RTC_DATA_DIR; }
inline std::string instance_path(const std::string& name) {
  return data_dir() + "/instances/" + name + ".json";
}
inline std::string design_path(const std::string& name) {
  return data_dir() + "/designs/" + name + ".json";
}

inline Vec vec(std::initializer_list<Real> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (Real x : xs) v(i++) = x;
  return v;
}

inline Mat mat(std::initializer_list<std::initializer_list<Real>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  Mat m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (Real x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

inline Mat bsc(Real e) { return mat({{1 - e, e}, {e, 1 - e}}); }
inline Mat identity2() { return mat({{1.0, 0.0}, {0.0, 1.0}}); }
inline Mat uninformative2() { return mat({{0.5, 0.5}, {0.5, 0.5}}); }
inline Mat hamming2() { return mat({{0.0, 1.0}, {1.0, 0.0}}); }

// Builds a validated matrix-channel instance; alphabet sizes are inferred
// from the matrix shapes. Throws ValidationError if the pieces do not form a
// valid instance, so tests fail loudly on a bad fixture.
inline Instance make_instance(const Vec& init, const Mat& trans, const Mat& fwd, const Mat& bwd,
                              const Mat& rho, int horizon = 2, int nm = 2) {
  Instance inst;
  inst.nx = static_cast<int>(init.size());
  inst.nz = static_cast<int>(fwd.rows());
  inst.ny = static_cast<int>(fwd.cols());
  inst.nyt = static_cast<int>(bwd.cols());
  inst.nm = nm;
  inst.nxh = static_cast<int>(rho.cols());
  inst.horizon = horizon;
  inst.source_initial = init;
  inst.source_transitions.assign(static_cast<std::size_t>(horizon - 1), trans);
  inst.forward_spec.matrix = fwd;
  inst.backward_spec.matrix = bwd;
  inst.forward = compile_channel(inst.forward_spec, inst.nz, inst.ny);
  inst.backward = compile_channel(inst.backward_spec, inst.ny, inst.nyt);
  inst.distortion = rho;
  auto violations = validate_instance(inst);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return inst;
}

// The stock instances (same parameters as the files in data/instances/).
inline Instance bsc_flip(int nm = 2) {
  return make_instance(vec({0.5, 0.5}), bsc(0.3), bsc(0.1), bsc(0.2), hamming2(), 2, nm);
}
inline Instance bsc_weak() {
  return make_instance(vec({0.5, 0.5}), bsc(0.1), bsc(0.05), bsc(0.3), hamming2());
}
inline Instance asym_drift() {
  return make_instance(vec({0.7, 0.3}), mat({{0.6, 0.4}, {0.2, 0.8}}),
                       mat({{0.8, 0.2}, {0.3, 0.7}}), bsc(0.25), hamming2());
}
inline Instance zchan_uninformative_fb() {
  return make_instance(vec({0.5, 0.5}), bsc(0.2), mat({{1.0, 0.0}, {0.3, 0.7}}), uninformative2(),
                       hamming2());
}
// Channels given in functional form: y = z XOR n with flip masses 0.15
// forward and 0.25 backward; asymmetric distortion.
inline Instance xor_biased() {
  Instance inst;
  inst.nx = inst.nz = inst.ny = inst.nyt = inst.nm = inst.nxh = 2;
  inst.horizon = 2;
  inst.source_initial = vec({0.4, 0.6});
  inst.source_transitions.assign(1, bsc(0.45));
  FunctionalChannel xor_fwd{{{0, 1}, {1, 0}}, vec({0.85, 0.15})};
  FunctionalChannel xor_bwd{{{0, 1}, {1, 0}}, vec({0.75, 0.25})};
  inst.forward_spec.functional = xor_fwd;
  inst.backward_spec.functional = xor_bwd;
  inst.forward = compile_channel(inst.forward_spec, 2, 2);
  inst.backward = compile_channel(inst.backward_spec, 2, 2);
  inst.distortion = mat({{0.0, 0.5}, {2.0, 0.0}});
  auto violations = validate_instance(inst);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return inst;
}
inline Instance zchan_clean_fb() {
  return make_instance(vec({0.5, 0.5}), bsc(0.05), mat({{1.0, 0.0}, {0.4, 0.6}}), identity2(),
                       hamming2());
}
inline Instance noiseless(int horizon = 2) {
  return make_instance(vec({0.5, 0.5}), bsc(0.3), identity2(), bsc(0.2), hamming2(), horizon);
}
inline Instance uninformative(int horizon = 2) {
  return make_instance(vec({0.5, 0.5}), uninformative2(), uninformative2(), bsc(0.2), hamming2(),
                       horizon);
}

// Optimal total distortion of each stock instance, from an independent
// exhaustive search over the full design class (and over the feedback-blind
// class for the *_nf values). guess_* are the no-channel guessing bounds
// sum_t min_xhat E[rho(X_t, xhat)].
namespace frozen {
inline constexpr Real bsc_flip_j = 0.20000000000000001;
inline constexpr Real bsc_weak_j = 0.10000000000000001;
inline constexpr Real asym_drift_j = 0.47799999999999992;
inline constexpr Real zchan_uninformative_fb_j = 0.28599999999999998;
inline constexpr Real xor_biased_j = 0.38974999999999993;
inline constexpr Real zchan_clean_fb_j = 0.29200000000000004;
inline constexpr Real zchan_clean_fb_j_nf = 0.30100000000000005;
inline constexpr Real noiseless_j = 0.0;
inline constexpr Real uninformative_j = 1.0;
inline constexpr Real asym_drift_guess = 0.78000000000000003;
inline constexpr Real xor_biased_guess = 0.44500000000000006;
}  // namespace frozen

// Atom lookup by coordinates and belief value (L-infinity within tol against
// the registered representative). Returns nullptr when absent.
inline const Atom1* find_atom1(const InfoState1& s, const BeliefSpace& space, int x, int m,
                               const Vec& b, Real tol = 1e-9) {
  for (const auto& a : s.atoms) {
    if (a.x == x && a.m == m &&
        (space.on_m.value(a.b) - b).cwiseAbs().maxCoeff() <= tol) {
      return &a;
    }
  }
  return nullptr;
}
inline const Atom2* find_atom2(const InfoState2& s, const BeliefSpace& space, int x, int y, int m,
                               const Vec& b, Real tol = 1e-9) {
  for (const auto& a : s.atoms) {
    if (a.x == x && a.y == y && a.m == m &&
        (space.on_ym.value(a.b) - b).cwiseAbs().maxCoeff() <= tol) {
      return &a;
    }
  }
  return nullptr;
}
inline const Atom3* find_atom3(const InfoState3& s, const BeliefSpace& space, int x, int y, int yt,
                               int m, const Vec& b, Real tol = 1e-9) {
  for (const auto& a : s.atoms) {
    if (a.x == x && a.y == y && a.yt == yt && a.m == m &&
        (space.on_ym.value(a.b) - b).cwiseAbs().maxCoeff() <= tol) {
      return &a;
    }
  }
  return nullptr;
}

}  // namespace rtc::testutil
