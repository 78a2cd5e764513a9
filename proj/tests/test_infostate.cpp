#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "rtc/beliefs.hpp"
#include "rtc/evaluator.hpp"  // SplitMix64
#include "rtc/infostate.hpp"

using namespace rtc;
using namespace rtc::testutil;

namespace {

EncoderRule send_x_rule(BeliefId support_id) {
  EncoderRule c;
  c.support = {support_id};
  c.table = {0, 1};  // z = x
  return c;
}

EncoderRule constant_rule(BeliefId support_id, int z) {
  EncoderRule c;
  c.support = {support_id};
  c.table = {z, z};
  return c;
}

MemoryRule store_y_rule() {
  MemoryRule l;
  l.table = {0, 0, 1, 1};  // m' = y
  return l;
}

// The shared fixture behind the worked transform examples: uniform binary
// source, encoder sends the source symbol, forward flip mass 0.1, feedback
// flip mass 0.2.
struct ChainFixture {
  BeliefSpace space;
  Instance inst = bsc_flip();
  InfoState1 pi1;
  InfoState2 pi2;
  InfoState3 pi3;

  ChainFixture() {
    pi1 = initial_info_state(inst, space);
    pi2 = apply_1Q(pi1, send_x_rule(0), inst.forward, space);
    pi3 = apply_2Q(pi2, inst.backward, space);
  }
};

Real x_marginal(const InfoState1& s, int x) {
  Real total = 0;
  for (const auto& a : s.atoms) {
    if (a.x == x) total += a.mass;
  }
  return total;
}

// Compare sorted atom lists coordinate-for-coordinate.
void check_same_state(const InfoState2& a, const InfoState2& b, Real tol) {
  REQUIRE(a.atoms.size() == b.atoms.size());
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    CHECK(a.atoms[i].x == b.atoms[i].x);
    CHECK(a.atoms[i].y == b.atoms[i].y);
    CHECK(a.atoms[i].m == b.atoms[i].m);
    CHECK(a.atoms[i].b == b.atoms[i].b);
    CHECK(std::abs(a.atoms[i].mass - b.atoms[i].mass) <= tol);
  }
}

void check_same_state(const InfoState1& a, const InfoState1& b, Real tol) {
  REQUIRE(a.atoms.size() == b.atoms.size());
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    CHECK(a.atoms[i].x == b.atoms[i].x);
    CHECK(a.atoms[i].m == b.atoms[i].m);
    CHECK(a.atoms[i].b == b.atoms[i].b);
    CHECK(std::abs(a.atoms[i].mass - b.atoms[i].mass) <= tol);
  }
}

// Random encoder-stage state over the given belief ids (not calibrated;
// linearity holds regardless).
InfoState1 random_state1(SplitMix64& rng, const std::vector<BeliefId>& ids, int nx, int nm) {
  InfoState1 s;
  Real total = 0;
  for (int x = 0; x < nx; ++x) {
    for (int m = 0; m < nm; ++m) {
      for (BeliefId b : ids) {
        const Real w = rng.next_unit() + 1e-3;
        s.atoms.push_back({x, m, b, w});
        total += w;
      }
    }
  }
  for (auto& a : s.atoms) a.mass /= total;
  return s;
}

}  // namespace

TEST_CASE("BeliefRegistry dedupes within the merge tolerance") {
  BeliefRegistry reg;
  const BeliefId a = reg.get_or_insert(vec({0.3, 0.7}));
  CHECK(a == 0);
  CHECK(reg.get_or_insert(vec({0.3, 0.7})) == a);
  CHECK(reg.get_or_insert(vec({0.3 + 1e-10, 0.7 - 1e-10})) == a);  // inside 1e-9
  const BeliefId b = reg.get_or_insert(vec({0.301, 0.699}));       // clearly distinct
  CHECK(b == 1);
  CHECK(reg.size() == 2);
  // the first registration is kept as the representative
  CHECK(reg.value(a)(0) == 0.3);
  CHECK(reg.value(b)(0) == 0.301);
}

TEST_CASE("quantized_key distinguishes at 1e-3 and merges at 1e-13") {
  CHECK(quantized_key(vec({0.5, 0.5})) == quantized_key(vec({0.5 + 1e-13, 0.5})));
  CHECK(quantized_key(vec({0.5, 0.5})) != quantized_key(vec({0.501, 0.499})));
}

TEST_CASE("initial_info_state") {
  SUBCASE("uniform binary source") {
    BeliefSpace space;
    Instance inst = bsc_flip();
    InfoState1 pi1 = initial_info_state(inst, space);
    REQUIRE(pi1.atoms.size() == 2);
    CHECK(space.on_m.size() == 1);
    const Vec delta0 = vec({1.0, 0.0});
    const Atom1* a0 = find_atom1(pi1, space, 0, 0, delta0);
    const Atom1* a1 = find_atom1(pi1, space, 1, 0, delta0);
    REQUIRE(a0 != nullptr);
    REQUIRE(a1 != nullptr);
    CHECK(a0->mass == 0.5);
    CHECK(a1->mass == 0.5);
    CHECK(std::abs(pi1.total_mass() - 1.0) <= 1e-12);
    CHECK(calibration_error(pi1, space) <= 1e-12);
  }
  SUBCASE("degenerate source keeps a single atom") {
    BeliefSpace space;
    Instance inst = make_instance(vec({1.0, 0.0}), bsc(0.3), bsc(0.1), bsc(0.2), hamming2());
    InfoState1 pi1 = initial_info_state(inst, space);
    REQUIRE(pi1.atoms.size() == 1);
    CHECK(pi1.atoms[0].x == 0);
    CHECK(pi1.atoms[0].mass == 1.0);
  }
  SUBCASE("ternary source") {
    BeliefSpace space;
    Instance inst = make_instance(vec({0.2, 0.3, 0.5}),
                                  mat({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}),
                                  bsc(0.1), bsc(0.2), mat({{0.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}}),
                                  /*horizon=*/1);
    InfoState1 pi1 = initial_info_state(inst, space);
    REQUIRE(pi1.atoms.size() == 3);
    CHECK(pi1.atoms[0].mass == 0.2);
    CHECK(pi1.atoms[1].mass == 0.3);
    CHECK(pi1.atoms[2].mass == 0.5);
  }
}

TEST_CASE("apply_1Q") {
  SUBCASE("worked example: send-x through flip mass 0.1") {
    ChainFixture f;
    REQUIRE(f.pi2.atoms.size() == 4);
    const Vec ba = vec({0.9, 0.0, 0.1, 0.0});  // after sending z = 0
    const Vec bb = vec({0.1, 0.0, 0.9, 0.0});  // after sending z = 1
    const Atom2* a00 = find_atom2(f.pi2, f.space, 0, 0, 0, ba);
    const Atom2* a01 = find_atom2(f.pi2, f.space, 0, 1, 0, ba);
    const Atom2* a10 = find_atom2(f.pi2, f.space, 1, 0, 0, bb);
    const Atom2* a11 = find_atom2(f.pi2, f.space, 1, 1, 0, bb);
    REQUIRE(a00 != nullptr);
    REQUIRE(a01 != nullptr);
    REQUIRE(a10 != nullptr);
    REQUIRE(a11 != nullptr);
    CHECK(a00->mass == 0.45);
    CHECK(a01->mass == 0.05);
    CHECK(a10->mass == 0.05);
    CHECK(a11->mass == 0.45);
    CHECK(std::abs(f.pi2.total_mass() - 1.0) <= 1e-12);
    CHECK(calibration_error(f.pi2, f.space, f.inst.nm) <= 1e-9);
  }
  SUBCASE("constant rule through an uninformative channel") {
    BeliefSpace space;
    Instance inst = uninformative();
    InfoState1 pi1 = initial_info_state(inst, space);
    InfoState2 pi2 = apply_1Q(pi1, constant_rule(0, 0), inst.forward, space);
    // y carries nothing: every (x, y) cell has mass 0.25
    REQUIRE(pi2.atoms.size() == 4);
    for (const auto& a : pi2.atoms) CHECK(a.mass == 0.25);
  }
  SUBCASE("noiseless identity channel leaves no cross atoms") {
    BeliefSpace space;
    Instance inst = noiseless();
    InfoState1 pi1 = initial_info_state(inst, space);
    InfoState2 pi2 = apply_1Q(pi1, send_x_rule(0), inst.forward, space);
    REQUIRE(pi2.atoms.size() == 2);
    for (const auto& a : pi2.atoms) {
      CHECK(a.y == a.x);
      CHECK(a.mass == 0.5);
    }
  }
  SUBCASE("missing rule entry raises MissingRuleError") {
    BeliefSpace space;
    Instance inst = bsc_flip();
    InfoState1 pi1 = initial_info_state(inst, space);
    EncoderRule wrong;
    wrong.support = {42};  // no such belief id in pi1's support
    wrong.table = {0, 0};
    CHECK_THROWS_AS(apply_1Q(pi1, wrong, inst.forward, space), MissingRuleError);
  }
}

TEST_CASE("apply_2Q") {
  SUBCASE("worked example: feedback flip mass 0.2 splits each atom in two") {
    ChainFixture f;
    REQUIRE(f.pi3.atoms.size() == 8);
    // beliefs after the feedback update, derived independently
    const Vec b_a0 = vec({0.97297297297297292, 0.0, 0.027027027027027029, 0.0});
    const Vec b_a1 = vec({0.6923076923076924, 0.0, 0.30769230769230776, 0.0});
    const Vec b_b0 = vec({0.30769230769230776, 0.0, 0.6923076923076924, 0.0});
    const Vec b_b1 = vec({0.027027027027027029, 0.0, 0.97297297297297292, 0.0});
    const Atom3* a = find_atom3(f.pi3, f.space, 0, 0, 0, 0, b_a0);
    REQUIRE(a != nullptr);
    CHECK(a->mass == 0.36000000000000004);  // 0.45 * 0.8
    a = find_atom3(f.pi3, f.space, 0, 0, 1, 0, b_a1);
    REQUIRE(a != nullptr);
    CHECK(std::abs(a->mass - 0.090000000000000011) <= 1e-16);
    a = find_atom3(f.pi3, f.space, 1, 1, 0, 0, b_b0);
    REQUIRE(a != nullptr);
    CHECK(std::abs(a->mass - 0.090000000000000011) <= 1e-16);
    a = find_atom3(f.pi3, f.space, 1, 1, 1, 0, b_b1);
    REQUIRE(a != nullptr);
    CHECK(a->mass == 0.36000000000000004);
    CHECK(std::abs(f.pi3.total_mass() - 1.0) <= 1e-12);
    CHECK(calibration_error(f.pi3, f.space, f.inst.nm) <= 1e-9);
  }
  SUBCASE("noiseless feedback spawns exactly one successor per atom") {
    ChainFixture f;
    InfoState3 pi3 = apply_2Q(f.pi2, identity2(), f.space);
    REQUIRE(pi3.atoms.size() == f.pi2.atoms.size());
    for (const auto& a : pi3.atoms) CHECK(a.yt == a.y);
    CHECK(std::abs(pi3.total_mass() - 1.0) <= 1e-12);
  }
  SUBCASE("uninformative feedback keeps beliefs and splits masses evenly") {
    ChainFixture f;
    InfoState3 pi3 = apply_2Q(f.pi2, uninformative2(), f.space);
    REQUIRE(pi3.atoms.size() == 2 * f.pi2.atoms.size());
    for (const auto& a3 : pi3.atoms) {
      // the post-feedback belief collapses back to the pre-feedback one
      const Atom2* a2 = find_atom2(f.pi2, f.space, a3.x, a3.y, a3.m,
                                   f.space.on_ym.value(a3.b), 1e-12);
      REQUIRE(a2 != nullptr);
      CHECK(std::abs(a3.mass - 0.5 * a2->mass) <= 1e-15);
    }
    Real yt_marginal0 = 0;
    for (const auto& a3 : pi3.atoms) {
      if (a3.yt == 0) yt_marginal0 += a3.mass;
    }
    CHECK(std::abs(yt_marginal0 - 0.5) <= 1e-12);
  }
}

TEST_CASE("apply_3Q") {
  SUBCASE("worked example: store-y rule, frozen source") {
    ChainFixture f;
    const Mat frozen_src = identity2();
    InfoState1 next = apply_3Q(f.pi3, store_y_rule(), frozen_src, f.inst.nm, f.space);
    REQUIRE(next.atoms.size() == 8);
    const Vec b_hi = vec({0.97297297297297292, 0.027027027027027029});
    const Vec b_mid = vec({0.6923076923076924, 0.30769230769230776});
    const Vec b_mid_r = vec({0.30769230769230776, 0.6923076923076924});
    const Vec b_lo = vec({0.027027027027027029, 0.97297297297297292});
    struct Expect {
      int x, m;
      const Vec* b;
      Real mass;
    };
    const Expect table[] = {
        {0, 0, &b_mid, 0.090000000000000011}, {0, 0, &b_hi, 0.36000000000000004},
        {0, 1, &b_mid, 0.040000000000000008}, {0, 1, &b_hi, 0.010000000000000002},
        {1, 0, &b_lo, 0.010000000000000002},  {1, 0, &b_mid_r, 0.040000000000000008},
        {1, 1, &b_lo, 0.36000000000000004},   {1, 1, &b_mid_r, 0.090000000000000011},
    };
    for (const auto& e : table) {
      CAPTURE(e.x);
      CAPTURE(e.m);
      const Atom1* a = find_atom1(next, f.space, e.x, e.m, *e.b);
      REQUIRE(a != nullptr);
      CHECK(std::abs(a->mass - e.mass) <= 1e-16);
      CHECK((f.space.on_m.value(a->b) - *e.b).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK(std::abs(next.total_mass() - 1.0) <= 1e-12);
    CHECK(calibration_error(next, f.space) <= 1e-9);
  }
  SUBCASE("frozen source with a constant memory rule") {
    ChainFixture f;
    MemoryRule to_zero;
    to_zero.table = {0, 0, 0, 0};
    InfoState1 next = apply_3Q(f.pi3, to_zero, identity2(), f.inst.nm, f.space);
    for (const auto& a : next.atoms) CHECK(a.m == 0);
    CHECK(std::abs(x_marginal(next, 0) - 0.5) <= 1e-12);
    CHECK(std::abs(x_marginal(next, 1) - 0.5) <= 1e-12);
  }
  SUBCASE("symmetric source keeps the x-marginal uniform") {
    ChainFixture f;
    InfoState1 next = apply_3Q(f.pi3, store_y_rule(), bsc(0.3), f.inst.nm, f.space);
    CHECK(std::abs(x_marginal(next, 0) - 0.5) <= 1e-12);
    CHECK(std::abs(x_marginal(next, 1) - 0.5) <= 1e-12);
    CHECK(std::abs(next.total_mass() - 1.0) <= 1e-12);
    CHECK(calibration_error(next, f.space) <= 1e-9);
  }
}

TEST_CASE("stage_cost") {
  BeliefSpace space;
  const BeliefId dummy = space.on_ym.get_or_insert(vec({0.25, 0.25, 0.25, 0.25}));

  SUBCASE("constant decoder against a uniform state") {
    InfoState2 pi2;
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        for (int m = 0; m < 2; ++m) pi2.atoms.push_back({x, y, m, dummy, 0.125});
      }
    }
    DecoderRule g;
    g.table = {0, 0, 0, 0};
    CHECK(stage_cost(pi2, g, hamming2(), 2) == 0.5);
  }
  SUBCASE("matched decoder on a noiseless state") {
    InfoState2 pi2;
    pi2.atoms = {{0, 0, 0, dummy, 0.5}, {1, 1, 0, dummy, 0.5}};
    DecoderRule g;
    g.table = {0, 0, 1, 1};  // xhat = y
    CHECK(stage_cost(pi2, g, hamming2(), 2) == 0.0);
  }
  SUBCASE("worked example: decode y under flip mass 0.1") {
    ChainFixture f;
    DecoderRule g;
    g.table = {0, 0, 1, 1};
    CHECK(stage_cost(f.pi2, g, f.inst.distortion, f.inst.nm) == 0.1);
  }
}

TEST_CASE("canonical_key") {
  BeliefSpace space;
  const BeliefId b0 = space.on_m.get_or_insert(vec({1.0, 0.0}));
  const BeliefId b1 = space.on_m.get_or_insert(vec({0.3, 0.7}));

  InfoState1 s1;
  s1.atoms = {{0, 0, b0, 0.25}, {0, 1, b1, 0.25}, {1, 0, b0, 0.5}};
  InfoState1 s2;  // same atoms, different insertion order
  s2.atoms = {{1, 0, b0, 0.5}, {0, 1, b1, 0.25}, {0, 0, b0, 0.25}};

  SUBCASE("insertion order does not matter") {
    CHECK(canonical_key(s1, space) == canonical_key(s2, space));
  }
  SUBCASE("1e-13 mass wiggle maps to the same key") {
    InfoState1 s3 = s1;
    s3.atoms[0].mass += 1e-13;
    CHECK(canonical_key(s1, space) == canonical_key(s3, space));
  }
  SUBCASE("1e-3 mass change maps to a different key") {
    InfoState1 s3 = s1;
    s3.atoms[0].mass += 1e-3;
    CHECK(canonical_key(s1, space) != canonical_key(s3, space));
  }
  SUBCASE("keys see the belief attached to an atom") {
    InfoState1 s3 = s1;
    s3.atoms[1].b = b0;
    CHECK(canonical_key(s1, space) != canonical_key(s3, space));
  }
}

TEST_CASE("mix") {
  BeliefSpace space;
  const BeliefId b0 = space.on_m.get_or_insert(vec({1.0, 0.0}));
  const BeliefId b1 = space.on_m.get_or_insert(vec({0.3, 0.7}));
  InfoState1 sa;
  sa.atoms = {{0, 0, b0, 0.5}, {1, 0, b0, 0.5}};
  InfoState1 sb;
  sb.atoms = {{0, 1, b1, 1.0}};

  SUBCASE("mixing a state with itself is the identity") {
    InfoState1 out = mix({sa, sa}, vec({0.5, 0.5}));
    check_same_state(out, sa, 1e-15);
  }
  SUBCASE("disjoint supports unite with scaled masses") {
    InfoState1 out = mix({sa, sb}, vec({0.3, 0.7}));
    REQUIRE(out.atoms.size() == 3);
    const Atom1* a = find_atom1(out, space, 0, 0, vec({1.0, 0.0}));
    REQUIRE(a != nullptr);
    CHECK(std::abs(a->mass - 0.15) <= 1e-15);
    a = find_atom1(out, space, 0, 1, vec({0.3, 0.7}));
    REQUIRE(a != nullptr);
    CHECK(std::abs(a->mass - 0.7) <= 1e-15);
    CHECK(std::abs(out.total_mass() - 1.0) <= 1e-12);
  }
  SUBCASE("degenerate weights pick one state") {
    InfoState1 out = mix({sa, sb}, vec({1.0, 0.0}));
    check_same_state(out, sa, 0.0);
  }
}

TEST_CASE("transform linearity via mix-commutation") {
  BeliefSpace space;
  Instance inst = bsc_flip();
  const BeliefId id_a = space.on_m.get_or_insert(vec({1.0, 0.0}));
  const BeliefId id_b = space.on_m.get_or_insert(vec({0.3, 0.7}));
  const std::vector<BeliefId> ids = {id_a, id_b};
  EncoderRule c;
  c.support = ids;
  c.table = {0, 1, 1, 0};  // arbitrary total rule on the union support
  SplitMix64 rng(321);

  for (int trial = 0; trial < 10; ++trial) {
    InfoState1 a = random_state1(rng, ids, 2, 2);
    InfoState1 b = random_state1(rng, ids, 2, 2);
    const Real alpha = 0.25 + 0.5 * rng.next_unit();
    const Vec w = vec({alpha, 1 - alpha});

    // 1Q commutes with mixing
    InfoState2 mixed_then_applied = apply_1Q(mix({a, b}, w), c, inst.forward, space);
    InfoState2 applied_then_mixed =
        mix({apply_1Q(a, c, inst.forward, space), apply_1Q(b, c, inst.forward, space)}, w);
    check_same_state(mixed_then_applied, applied_then_mixed, 1e-12);

    // 3Q commutes with mixing (chain both states to the memory stage first)
    InfoState3 a3 = apply_2Q(apply_1Q(a, c, inst.forward, space), inst.backward, space);
    InfoState3 b3 = apply_2Q(apply_1Q(b, c, inst.forward, space), inst.backward, space);
    InfoState1 lhs = apply_3Q(mix({a3, b3}, w), store_y_rule(), inst.transition(1), inst.nm, space);
    InfoState1 rhs = mix({apply_3Q(a3, store_y_rule(), inst.transition(1), inst.nm, space),
                          apply_3Q(b3, store_y_rule(), inst.transition(1), inst.nm, space)},
                         w);
    check_same_state(lhs, rhs, 1e-12);

    // stage costs are linear in the state
    DecoderRule g;
    g.table = {0, 0, 1, 1};
    const Real mixed_cost = stage_cost(mixed_then_applied, g, inst.distortion, inst.nm);
    const Real split_cost =
        alpha * stage_cost(apply_1Q(a, c, inst.forward, space), g, inst.distortion, inst.nm) +
        (1 - alpha) * stage_cost(apply_1Q(b, c, inst.forward, space), g, inst.distortion, inst.nm);
    CHECK(std::abs(mixed_cost - split_cost) <= 1e-12);
  }
}

TEST_CASE("calibration_error flags a mis-calibrated state") {
  BeliefSpace space;
  const BeliefId delta0 = space.on_m.get_or_insert(vec({1.0, 0.0}));
  InfoState1 s;
  // the belief claims memory 0 surely, but half the mass sits at memory 1
  s.atoms = {{0, 0, delta0, 0.5}, {1, 1, delta0, 0.5}};
  CHECK(calibration_error(s, space) >= 0.5 - 1e-12);
}

TEST_CASE("mass conservation through a full stage cycle") {
  ChainFixture f;
  CHECK(std::abs(f.pi1.total_mass() - 1.0) <= 1e-12);
  CHECK(std::abs(f.pi2.total_mass() - 1.0) <= 1e-12);
  CHECK(std::abs(f.pi3.total_mass() - 1.0) <= 1e-12);
  InfoState1 next = apply_3Q(f.pi3, store_y_rule(), f.inst.transition(1), f.inst.nm, f.space);
  CHECK(std::abs(next.total_mass() - 1.0) <= 1e-12);
}
