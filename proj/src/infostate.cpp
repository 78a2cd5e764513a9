#include "rtc/infostate.hpp"

#include <array>
#include <cmath>
#include <map>
#include <tuple>

namespace rtc {
namespace {

long long quantize(Real v) { return std::llround(v * 1e12); }

void append_quantized(std::string& out, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(quantize(v(i)));
  }
}

template <int N>
std::string join_canonical(
    std::vector<std::tuple<std::array<int, N>, const std::string*, long long>>& rows) {
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) {
              if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
              return *std::get<1>(a) < *std::get<1>(b);
            });
  std::string out;
  for (const auto& [coords, key, qmass] : rows) {
    for (int c : coords) {
      out += std::to_string(c);
      out += ',';
    }
    out += '|';
    out += *key;
    out += '|';
    out += std::to_string(qmass);
    out += ';';
  }
  return out;
}

}  // namespace

std::string quantized_key(const Vec& v) {
  std::string out;
  out.reserve(static_cast<std::size_t>(v.size()) * 8);
  append_quantized(out, v);
  return out;
}

BeliefId BeliefRegistry::get_or_insert(const Vec& belief) {
  std::lock_guard<std::mutex> lock(mu_);
  const std::string key = quantized_key(belief);
  auto it = by_key_.find(key);
  if (it != by_key_.end()) return it->second;
  // A near-duplicate may sit on the far side of a quantization boundary:
  // fall back to a scan before creating a new id.
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i].size() == belief.size() &&
        (values_[i] - belief).cwiseAbs().maxCoeff() <= kBeliefMergeTol) {
      const BeliefId id = static_cast<BeliefId>(i);
      by_key_.emplace(key, id);  // alias this grid cell to the representative
      return id;
    }
  }
  const BeliefId id = static_cast<BeliefId>(values_.size());
  values_.push_back(belief);
  keys_.push_back(key);
  by_key_.emplace(key, id);
  return id;
}

const Vec& BeliefRegistry::value(BeliefId id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return values_.at(static_cast<std::size_t>(id));
}

const std::string& BeliefRegistry::key(BeliefId id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return keys_.at(static_cast<std::size_t>(id));
}

int BeliefRegistry::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return static_cast<int>(values_.size());
}

Real InfoState1::total_mass() const {
  Real s = 0;
  for (const auto& a : atoms) s += a.mass;
  return s;
}
Real InfoState2::total_mass() const {
  Real s = 0;
  for (const auto& a : atoms) s += a.mass;
  return s;
}
Real InfoState3::total_mass() const {
  Real s = 0;
  for (const auto& a : atoms) s += a.mass;
  return s;
}

InfoState1 initial_info_state(const Instance& inst, BeliefSpace& space) {
  Vec delta = Vec::Zero(inst.nm);
  delta(0) = 1.0;  // the receiver starts in the reset memory symbol, and the encoder knows it
  const BeliefId b0 = space.on_m.get_or_insert(delta);
  InfoState1 s;
  for (int x = 0; x < inst.nx; ++x) {
    const Real p = inst.source_initial(x);
    if (p >= kMassPruneTol) s.atoms.push_back({x, 0, b0, p});
  }
  return s;
}

InfoState2 apply_1Q(const InfoState1& pi1, const EncoderRule& c, const Mat& fwd,
                    BeliefSpace& space) {
  const int ny = static_cast<int>(fwd.cols());
  std::map<std::array<int, 4>, Real> acc;                 // (x, y, m, b2)
  std::map<std::pair<BeliefId, int>, BeliefId> advanced;  // (b1, z) -> b2
  for (const Atom1& a : pi1.atoms) {
    const int z = c.z_of(a.x, a.b);
    BeliefId b2;
    if (auto it = advanced.find({a.b, z}); it != advanced.end()) {
      b2 = it->second;
    } else {
      b2 = space.on_ym.get_or_insert(belief_after_transmission(space.on_m.value(a.b), z, fwd));
      advanced.emplace(std::make_pair(a.b, z), b2);
    }
    for (int y = 0; y < ny; ++y) {
      const Real w = fwd(z, y);
      if (w <= 0.0) continue;
      acc[{a.x, y, a.m, b2}] += a.mass * w;
    }
  }
  InfoState2 out;
  for (const auto& [k, mass] : acc) {
    if (mass >= kMassPruneTol) out.atoms.push_back({k[0], k[1], k[2], k[3], mass});
  }
  return out;
}

InfoState3 apply_2Q(const InfoState2& pi2, const Mat& bwd, BeliefSpace& space) {
  const int nyt = static_cast<int>(bwd.cols());
  std::map<std::array<int, 5>, Real> acc;                 // (x, y, yt, m, b3)
  std::map<std::pair<BeliefId, int>, BeliefId> advanced;  // (b2, yt) -> b3
  for (const Atom2& a : pi2.atoms) {
    for (int yt = 0; yt < nyt; ++yt) {
      const Real w = bwd(a.y, yt);
      if (w <= 0.0) continue;
      BeliefId b3;
      if (auto it = advanced.find({a.b, yt}); it != advanced.end()) {
        b3 = it->second;
      } else {
        b3 = space.on_ym.get_or_insert(belief_after_feedback(space.on_ym.value(a.b), yt, bwd));
        advanced.emplace(std::make_pair(a.b, yt), b3);
      }
      acc[{a.x, a.y, yt, a.m, b3}] += a.mass * w;
    }
  }
  InfoState3 out;
  for (const auto& [k, mass] : acc) {
    if (mass >= kMassPruneTol) out.atoms.push_back({k[0], k[1], k[2], k[3], k[4], mass});
  }
  return out;
}

InfoState1 apply_3Q(const InfoState3& pi3, const MemoryRule& l, const Mat& src_next, int nm,
                    BeliefSpace& space) {
  const int nx_next = static_cast<int>(src_next.cols());
  std::map<std::array<int, 3>, Real> acc;    // (x', m', b1')
  std::map<BeliefId, BeliefId> advanced;     // b3 -> b1' (l is fixed for the call)
  for (const Atom3& a : pi3.atoms) {
    const int m_next = l.table[ym_index(a.y, a.m, nm)];
    BeliefId b1;
    if (auto it = advanced.find(a.b); it != advanced.end()) {
      b1 = it->second;
    } else {
      b1 = space.on_m.get_or_insert(
          advance_belief_through_memory(space.on_ym.value(a.b), l, nm));
      advanced.emplace(a.b, b1);
    }
    for (int x2 = 0; x2 < nx_next; ++x2) {
      const Real w = src_next(a.x, x2);
      if (w <= 0.0) continue;
      acc[{x2, m_next, b1}] += a.mass * w;
    }
  }
  InfoState1 out;
  for (const auto& [k, mass] : acc) {
    if (mass >= kMassPruneTol) out.atoms.push_back({k[0], k[1], k[2], mass});
  }
  return out;
}

Real stage_cost(const InfoState2& pi2, const DecoderRule& g, const Mat& rho, int nm) {
  Real cost = 0;
  for (const Atom2& a : pi2.atoms) {
    cost += a.mass * rho(a.x, g.table[ym_index(a.y, a.m, nm)]);
  }
  return cost;
}

std::string canonical_key(const InfoState1& s, const BeliefSpace& space) {
  std::vector<std::tuple<std::array<int, 2>, const std::string*, long long>> rows;
  rows.reserve(s.atoms.size());
  for (const Atom1& a : s.atoms) {
    rows.push_back({{a.x, a.m}, &space.on_m.key(a.b), quantize(a.mass)});
  }
  return join_canonical<2>(rows);
}

std::string canonical_key(const InfoState2& s, const BeliefSpace& space) {
  std::vector<std::tuple<std::array<int, 3>, const std::string*, long long>> rows;
  rows.reserve(s.atoms.size());
  for (const Atom2& a : s.atoms) {
    rows.push_back({{a.x, a.y, a.m}, &space.on_ym.key(a.b), quantize(a.mass)});
  }
  return join_canonical<3>(rows);
}

std::string canonical_key(const InfoState3& s, const BeliefSpace& space) {
  std::vector<std::tuple<std::array<int, 4>, const std::string*, long long>> rows;
  rows.reserve(s.atoms.size());
  for (const Atom3& a : s.atoms) {
    rows.push_back({{a.x, a.y, a.yt, a.m}, &space.on_ym.key(a.b), quantize(a.mass)});
  }
  return join_canonical<4>(rows);
}

namespace {

template <class State, class Atom, int N>
State mix_impl(const std::vector<State>& states, const Vec& weights,
               std::array<int, N> (*coords)(const Atom&), Atom (*make)(const std::array<int, N>&, Real)) {
  std::map<std::array<int, N>, Real> acc;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Real w = weights(static_cast<Eigen::Index>(i));
    for (const Atom& a : states[i].atoms) acc[coords(a)] += w * a.mass;
  }
  State out;
  for (const auto& [k, mass] : acc) {
    if (mass >= kMassPruneTol) out.atoms.push_back(make(k, mass));
  }
  return out;
}

}  // namespace

InfoState1 mix(const std::vector<InfoState1>& states, const Vec& weights) {
  return mix_impl<InfoState1, Atom1, 3>(
      states, weights, +[](const Atom1& a) { return std::array<int, 3>{a.x, a.m, a.b}; },
      +[](const std::array<int, 3>& k, Real mass) { return Atom1{k[0], k[1], k[2], mass}; });
}

InfoState2 mix(const std::vector<InfoState2>& states, const Vec& weights) {
  return mix_impl<InfoState2, Atom2, 4>(
      states, weights, +[](const Atom2& a) { return std::array<int, 4>{a.x, a.y, a.m, a.b}; },
      +[](const std::array<int, 4>& k, Real mass) { return Atom2{k[0], k[1], k[2], k[3], mass}; });
}

InfoState3 mix(const std::vector<InfoState3>& states, const Vec& weights) {
  return mix_impl<InfoState3, Atom3, 5>(
      states, weights,
      +[](const Atom3& a) { return std::array<int, 5>{a.x, a.y, a.yt, a.m, a.b}; },
      +[](const std::array<int, 5>& k, Real mass) {
        return Atom3{k[0], k[1], k[2], k[3], k[4], mass};
      });
}

namespace {

// Shared skeleton: group atoms by belief id, accumulate the conditional law of
// the receiver-side coordinates, and compare with the registered belief.
Real calibration_from_cells(const std::map<BeliefId, Real>& group_mass,
                            const std::map<std::pair<BeliefId, int>, Real>& cells,
                            const BeliefRegistry& registry) {
  Real err = 0;
  for (const auto& [b, gm] : group_mass) {
    if (gm <= kReachableMassTol) continue;
    const Vec& belief = registry.value(b);
    for (int i = 0; i < static_cast<int>(belief.size()); ++i) {
      auto it = cells.find({b, i});
      const Real cond = (it == cells.end()) ? 0.0 : it->second / gm;
      err = std::max(err, std::abs(cond - belief(i)));
    }
  }
  return err;
}

}  // namespace

Real calibration_error(const InfoState1& s, const BeliefSpace& space) {
  std::map<BeliefId, Real> group;
  std::map<std::pair<BeliefId, int>, Real> cells;
  for (const Atom1& a : s.atoms) {
    group[a.b] += a.mass;
    cells[{a.b, a.m}] += a.mass;
  }
  return calibration_from_cells(group, cells, space.on_m);
}

Real calibration_error(const InfoState2& s, const BeliefSpace& space, int nm) {
  std::map<BeliefId, Real> group;
  std::map<std::pair<BeliefId, int>, Real> cells;
  for (const Atom2& a : s.atoms) {
    group[a.b] += a.mass;
    cells[{a.b, ym_index(a.y, a.m, nm)}] += a.mass;
  }
  return calibration_from_cells(group, cells, space.on_ym);
}

Real calibration_error(const InfoState3& s, const BeliefSpace& space, int nm) {
  std::map<BeliefId, Real> group;
  std::map<std::pair<BeliefId, int>, Real> cells;
  for (const Atom3& a : s.atoms) {
    group[a.b] += a.mass;
    cells[{a.b, ym_index(a.y, a.m, nm)}] += a.mass;
  }
  return calibration_from_cells(group, cells, space.on_ym);
}

}  // namespace rtc
