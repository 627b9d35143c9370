#include "pgfcs/model.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>

using namespace pgfcs;

TEST_CASE("builtin models validate") {
  for (const auto& name : builtin_names()) {
    const PgfcsModel m = builtin_model(name);
    const ValidationReport rep = validate(m);
    INFO(name, "\n", rep.summary());
    CHECK(rep.pass);
  }
}

TEST_CASE("validation failures are reported per check") {
  PgfcsModel m = builtin_model("aklt");
  SUBCASE("rank-deficient sigma") {
    m.sigma = CMat::Zero(2, 2);
    m.sigma(0, 0) = 1.0;
    const ValidationReport rep = validate(m);
    CHECK_FALSE(rep.pass);
    bool full_rank_failed = false;
    for (const auto& i : rep.issues)
      if (i.check.find("full rank") != std::string::npos && !i.pass) full_rank_failed = true;
    CHECK(full_rank_failed);
  }
  SUBCASE("rescaled column breaks the isometry") {
    m.v.col(1) *= 1.01;
    const ValidationReport rep = validate(m);
    CHECK_FALSE(rep.pass);
    CHECK_FALSE(rep.issues.front().pass);  // isometry is the first check
  }
}

TEST_CASE("isometry_power: identity, closure, and channel-composition oracle") {
  const PgfcsModel m = builtin_model("aklt");
  CHECK((isometry_power(m, 1) - m.v).norm() == 0.0);
  for (int n : {2, 3, 4}) {
    const CMat w = isometry_power(m, n);
    CHECK((w.adjoint() * w - CMat::Identity(m.d_M, m.d_M)).norm() < 1e-10);
    CHECK((w - oracle::isometry_product_kron(m, n)).norm() < 1e-12);
    // memory marginal after n spins equals n transfer steps
    const CMat mem = oracle::partial_trace_loops(
        w * m.sigma * w.adjoint(), {static_cast<int>(std::pow(3, n)), 2}, {1});
    CHECK((mem - oracle::channel_power_loops(m, m.sigma, n)).norm() < 1e-12);
  }
  Budget tiny;
  tiny.max_entries = 8;
  CHECK_THROWS_AS(isometry_power(m, 5, tiny), ResourceError);
}

TEST_CASE("reduced_state: full trace, single site, and dense oracle") {
  const PgfcsModel m = builtin_model("aklt");
  const CMat scalar = reduced_state(m, {1, 1, 1}, {});
  REQUIRE(scalar.rows() == 1);
  CHECK(std::abs(scalar(0, 0) - Complex(1, 0)) < 1e-12);

  // single-site marginal diag(1/4, 1/2, 1/4) in the (-1, 0, 1) basis
  const CMat site = reduced_state(m, {1, 1, 1}, {Region::A});
  CHECK(site(0, 0).real() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(site(1, 1).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(site(2, 2).real() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK((site - site.adjoint()).norm() < 1e-12);

  // against the dense reference contraction for a random model
  const PgfcsModel r = random_model(2, 3, 7);
  const Tripartition part{1, 2, 1};
  const CMat dense = oracle::dense_chain_state(r, 4);
  const CMat lib_abc = reduced_state(r, part, {Region::A, Region::B, Region::C});
  CHECK((lib_abc - dense).norm() < 1e-11);
  const CMat lib_ac = reduced_state(r, part, {Region::A, Region::C});
  const CMat ref_ac = oracle::partial_trace_loops(dense, {2, 2, 2, 2}, {0, 3});
  CHECK((lib_ac - ref_ac).norm() < 1e-11);
  CHECK(std::abs(lib_ac.trace() - Complex(1, 0)) < 1e-11);
}

TEST_CASE("two-component model: reduced AC state approaches the block form") {
  const PgfcsModel m = builtin_model("two-component");
  const CMat ac = reduced_state(m, {1, 30, 1}, {Region::A, Region::C});
  CMat d1 = CMat::Zero(3, 3), d2 = CMat::Zero(3, 3);
  d1.diagonal() << 1, 2, 1;
  d2.diagonal() << 1, 1, 2;
  const CMat want = (kron(d1, d1) + kron(d2, d2)) / 32.0;
  CHECK((ac - want).norm() < 1e-5);
}

TEST_CASE("ergodic decomposition of the builtins") {
  SUBCASE("aklt is a single component of period 1") {
    const auto comps = ergodic_decompose(builtin_model("aklt"));
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].weight == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(comps[0].period == 1);
  }
  SUBCASE("two-component splits with equal weights") {
    const auto comps = ergodic_decompose(builtin_model("two-component"));
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].weight == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(comps[1].weight == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(comps[0].period == 1);
    CHECK(comps[1].period == 1);
  }
  SUBCASE("period2 is one component of period 2") {
    const auto comps = ergodic_decompose(builtin_model("period2"));
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].period == 2);
    // the two cyclic projectors have rank 2 each
    CHECK(comps[0].cyclic_projectors[0].trace().real() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(comps[0].cyclic_projectors[1].trace().real() == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("component count equals the multiplicity of eigenvalue one") {
  for (const auto& name : builtin_names()) {
    const PgfcsModel m = builtin_model(name);
    const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
    int mult = 0;
    for (Eigen::Index i = 0; i < t.spectrum.eigenvalues.size(); ++i)
      if (std::abs(t.spectrum.eigenvalues(i) - Complex(1, 0)) < 1e-8) ++mult;
    CHECK(static_cast<int>(ergodic_decompose(m).size()) == mult);
  }
}

TEST_CASE("decomposition reconstructs the state and the cyclic action") {
  const PgfcsModel m = builtin_model("two-component");
  const auto comps = ergodic_decompose(m);
  const Tripartition part{1, 2, 1};
  const CMat whole = reduced_state(m, part, {Region::A, Region::B, Region::C});
  CMat sum = CMat::Zero(whole.rows(), whole.cols());
  for (const auto& c : comps)
    sum += c.weight * reduced_state(c.sub, part, {Region::A, Region::B, Region::C});
  CHECK((sum - whole).norm() < 1e-10);
}

TEST_CASE("period structure: cyclic projectors move sigma blocks forward") {
  const PgfcsModel m = builtin_model("period2");
  const PeriodStructure ps = period_structure(m);
  REQUIRE(ps.period == 2);
  for (int k = 0; k < 2; ++k) {
    const CMat pk = ps.cyclic_projectors[static_cast<std::size_t>(k)];
    const CMat pk1 = ps.cyclic_projectors[static_cast<std::size_t>((k + 1) % 2)];
    CHECK((pk * m.sigma * pk).trace().real() == doctest::Approx(0.5).epsilon(1e-10));
    const CMat img = oracle::channel_power_loops(m, pk * m.sigma * pk, 1);
    CHECK((img - pk1 * m.sigma * pk1).norm() < 1e-10);
  }
  const PeriodStructure p1 = period_structure(builtin_model("aklt"));
  CHECK(p1.period == 1);
  CHECK((p1.cyclic_projectors[0] - CMat::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("block-diagonal identity for the period-2 component") {
  const PgfcsModel m = builtin_model("period2");
  const PeriodStructure ps = period_structure(m);
  const CMat wa = isometry_power(m, 2);
  const CMat x = wa * m.sigma * wa.adjoint();
  const Eigen::Index da = 9;
  CMat projected = CMat::Zero(x.rows(), x.cols());
  for (const CMat& pk : ps.cyclic_projectors) {
    CMat lift = kron(CMat::Identity(da, da), pk);
    projected += lift * x * lift;
  }
  CHECK((projected - x).norm() < 1e-10);
}

TEST_CASE("equivalence check: self, conjugated copy, and the V1/V2 pair") {
  const auto comps2 = ergodic_decompose(builtin_model("two-component"));
  REQUIRE(comps2.size() == 2);
  CHECK(equivalence_check(comps2[0], comps2[0]));
  CHECK_FALSE(equivalence_check(comps2[0], comps2[1]));

  // duplicated component with distinct weights: equivalent blocks detected
  const PgfcsModel aklt = builtin_model("aklt");
  PgfcsModel dup;
  dup.d_s = 3;
  dup.d_M = 4;
  dup.label = "dup";
  dup.v = CMat::Zero(12, 4);
  for (int s = 0; s < 3; ++s)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        dup.v(s * 4 + i, j) = aklt.v(s * 2 + i, j);
        dup.v(s * 4 + 2 + i, 2 + j) = aklt.v(s * 2 + i, j);
      }
  dup.sigma = CMat::Zero(4, 4);
  dup.sigma.diagonal() << 0.3, 0.3, 0.2, 0.2;
  REQUIRE(validate(dup).pass);
  const auto comps = ergodic_decompose(dup);
  REQUIRE(comps.size() == 2);
  CHECK(equivalence_check(comps[0], comps[1]));
}

TEST_CASE("site tensors: explicit AKLT values and round trip") {
  const PgfcsModel m = builtin_model("aklt");
  const auto ts = to_mps_tensor(m);
  REQUIRE(ts.size() == 3);
  const double r = 1.0 / std::sqrt(2.0);
  // s = -1: -r |+><-|
  CHECK(std::abs(ts[0](0, 1) - Complex(-r, 0)) < 1e-15);
  // s = 0: r (|-><-| - |+><+|)
  CHECK(std::abs(ts[1](0, 0) - Complex(-r, 0)) < 1e-15);
  CHECK(std::abs(ts[1](1, 1) - Complex(r, 0)) < 1e-15);
  // s = +1: r |-><+|
  CHECK(std::abs(ts[2](1, 0) - Complex(r, 0)) < 1e-15);

  CMat gauge = CMat::Zero(2, 2);
  for (const auto& t : ts) gauge += t.adjoint() * t;
  CHECK((gauge - CMat::Identity(2, 2)).norm() < 1e-12);

  const PgfcsModel back = from_mps_tensor(ts, m.sigma, m.label);
  CHECK((back.v - m.v).norm() < 1e-14);

  // product generator: tensors proportional to the identity
  const PgfcsModel p = builtin_model("product");
  const auto tp = to_mps_tensor(p);
  CHECK(std::abs(tp[0](0, 0) - Complex(1.0 / std::sqrt(2.0), 0)) < 1e-15);
}

TEST_CASE("model file round trip and field-level parse errors") {
  const PgfcsModel m = builtin_model("two-component");
  const std::string path = "test_model_roundtrip.json";
  save_model(m, path);
  const PgfcsModel r = load_model(path);
  CHECK(r.d_s == m.d_s);
  CHECK(r.d_M == m.d_M);
  CHECK((r.v - m.v).norm() == 0.0);
  CHECK((r.sigma - m.sigma).norm() == 0.0);
  CHECK(r.label == m.label);
  std::remove(path.c_str());

  CHECK_THROWS_WITH_AS(parse_model(R"({"d_s": 2})"), doctest::Contains("d_M"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_model(R"({"d_s": 2, "d_M": 1, "v": [[0,0],[1,0]], "sigma": [3]})"),
                       doctest::Contains("sigma"), ValidationError);
  CHECK_THROWS_WITH_AS(
      parse_model(R"({"d_s": 2, "d_M": 1, "v": [[0,0],"x"], "sigma": [[1,0]]})"),
      doctest::Contains("entry 1"), ValidationError);
}

TEST_CASE("resolve_model handles builtin prefix") {
  const PgfcsModel m = resolve_model("builtin:period2");
  CHECK(m.label == "period2");
  CHECK_THROWS_AS(resolve_model("builtin:nope"), ValidationError);
}

TEST_CASE("random models are valid and ergodic") {
  for (std::uint64_t seed : {10u, 11u, 12u}) {
    const PgfcsModel m = random_model(3, 2, seed);
    CHECK(validate(m).pass);
    CHECK(ergodic_decompose(m).size() == 1);
  }
}
