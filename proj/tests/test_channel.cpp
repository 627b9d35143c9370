#include "pgfcs/channel.hpp"
#include "pgfcs/model.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numeric>

using namespace pgfcs;

TEST_CASE("product generator induces the identity map") {
  CMat v = CMat::Zero(4, 2);  // |phi> (x) 1_2 with phi = (1,1)/sqrt(2), d_s = 2
  const double r = 1.0 / std::sqrt(2.0);
  v(0, 0) = r;  // s=0, m=0
  v(1, 1) = r;
  v(2, 0) = r;  // s=1
  v(3, 1) = r;
  const TransferOperator t = transfer_from_isometry(v, 2, 2);
  CHECK((t.matrix - CMat::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("AKLT transfer operator: spectrum and gap") {
  const PgfcsModel m = builtin_model("aklt");
  const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
  CHECK(t.peripheral_count == 1);
  CHECK(t.nu_gap == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(t.spectrum.eigenvalues(0) - Complex(1, 0)) < 1e-12);
  CHECK(std::abs(std::abs(t.spectrum.eigenvalues(0)) - 1.0) < 1e-9);
}

TEST_CASE("period-2 model has peripheral eigenvalues 1 and -1") {
  const PgfcsModel m = builtin_model("period2");
  const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
  CHECK(t.peripheral_count == 2);
  CHECK(std::abs(t.spectrum.eigenvalues(0) - Complex(1, 0)) < 1e-9);
  CHECK(std::abs(t.spectrum.eigenvalues(1) - Complex(-1, 0)) < 1e-9);
}

TEST_CASE("non-isometry input is rejected") {
  PgfcsModel m = builtin_model("aklt");
  CMat v = m.v;
  v.col(0) *= 1.01;
  CHECK_THROWS_AS(transfer_from_isometry(v, m.d_s, m.d_M), ValidationError);
}

TEST_CASE("apply_channel fixed point, identity power, and composition oracle") {
  const PgfcsModel m = builtin_model("aklt");
  const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
  CHECK((apply_channel(t, m.sigma, 1) - m.sigma).norm() < 1e-12);

  auto g = oracle::rng(21);
  const CMat x = oracle::random_matrix(2, 2, g);
  CHECK((apply_channel(t, x, 0) - x).norm() == 0.0);
  for (int n : {1, 3, 7})
    CHECK((apply_channel(t, x, n) - oracle::channel_power_loops(m, x, n)).norm() < 1e-12);
}

TEST_CASE("tilde channel of an ergodic period-1 model sends X to tr(X) sigma") {
  const PgfcsModel m = builtin_model("aklt");
  const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
  const TransferOperator tt = tilde_channel(t);
  auto g = oracle::rng(22);
  for (int trial = 0; trial < 5; ++trial) {
    const CMat x = oracle::random_matrix(2, 2, g);
    const CMat want = x.trace() * m.sigma;
    CHECK((apply_channel(tt, x, 1) - want).norm() < 1e-10);
  }
}

TEST_CASE("tilde channel of random ergodic aperiodic models projects onto the fixed point") {
  for (std::uint64_t seed : {61u, 62u}) {
    const PgfcsModel m = random_model(2, 3, seed);
    const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
    const TransferOperator tt = tilde_channel(t);
    auto g = oracle::rng(seed);
    const CMat x = oracle::random_matrix(3, 3, g);
    CHECK((apply_channel(tt, x, 1) - x.trace() * m.sigma).norm() < 1e-8);
  }
}

TEST_CASE("tilde channel of the period-2 model matches the cyclic closed form") {
  const PgfcsModel m = builtin_model("period2");
  const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
  const TransferOperator tt = tilde_channel(t);
  const PeriodStructure ps = period_structure(m);
  REQUIRE(ps.period == 2);
  auto g = oracle::rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const CMat x = oracle::random_matrix(4, 4, g);
    CMat want = CMat::Zero(4, 4);
    for (int k = 0; k < 2; ++k) {
      const CMat pk = ps.cyclic_projectors[static_cast<std::size_t>(k)];
      const CMat pk1 = ps.cyclic_projectors[static_cast<std::size_t>((k + 1) % 2)];
      want += 2.0 * (pk * x * pk).trace() * (pk1 * m.sigma * pk1);
    }
    CHECK((apply_channel(tt, x, 1) - want).norm() < 1e-9);
  }
}

TEST_CASE("tilde channel is CPTP and idempotent up to the period") {
  for (const auto& name : builtin_names()) {
    const PgfcsModel m = builtin_model(name);
    const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
    const TransferOperator tt = tilde_channel(t);
    CHECK(is_trace_preserving(tt.matrix, m.d_M, 1e-9));
    CHECK(choi_min_eigenvalue(tt.matrix, m.d_M) > -1e-9);
    int lcm = 1;
    for (const auto& c : ergodic_decompose(m)) lcm = std::lcm(lcm, c.period);
    CMat pw = tt.matrix;
    for (int k = 0; k < lcm; ++k) pw = tt.matrix * pw;  // Etilde^{lcm+1}
    CHECK((pw - tt.matrix).norm() < 1e-9);
  }
}

TEST_CASE("defective peripheral structure is rejected") {
  // not a channel matrix: nilpotent block at modulus 1 is impossible for CPTP,
  // so feed the raw constructor a near-defective matrix and expect a failure
  CMat e = CMat::Zero(4, 4);
  e(0, 0) = 1.0;
  e(1, 1) = 1.0;
  e(1, 2) = 1.0;
  e(2, 2) = 1.0;
  e(3, 3) = 0.1;
  TransferOperator t;
  t.dim_memory = 2;
  t.matrix = e;
  t.spectrum = eig_general(e);
  t.tol_peripheral = 1e-7;
  CHECK_THROWS_AS(tilde_channel(t), UnsupportedModelError);
}

TEST_CASE("isometry overload of apply_channel matches the matrix path") {
  const PgfcsModel m = builtin_model("two-component");
  const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
  auto g = oracle::rng(25);
  const CMat x = oracle::random_matrix(4, 4, g);
  CHECK((apply_channel(m.v, m.d_s, m.d_M, x, 5) - apply_channel(t, x, 5)).norm() < 1e-12);
}

TEST_CASE("fitted constants dominate the measured norms on the sampled range") {
  std::vector<long> ns;
  for (long n = 4; n <= 16; ++n) ns.push_back(n);
  for (const auto& name : builtin_names()) {
    const PgfcsModel m = builtin_model(name);
    const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
    for (const auto& r : channel_distance(t, ns)) {
      if (r.fitted_c == 0.0) continue;
      INFO(name, " n=", r.n);
      CHECK(r.norm22 <= r.fitted_c * std::pow(r.fitted_nu, static_cast<double>(r.n)) + 1e-12);
    }
  }
}

TEST_CASE("channel distance: AKLT decays at nu_gap = 1/2") {
  const PgfcsModel m = builtin_model("aklt");
  const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
  std::vector<long> ns;
  for (long n = 2; n <= 12; ++n) ns.push_back(n);
  const auto reports = channel_distance(t, ns);
  REQUIRE(reports.size() == ns.size());
  CHECK(reports.front().fitted_nu == doctest::Approx(0.5).epsilon(0.02));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    CHECK(reports[i].diamond_upper == doctest::Approx(2.0 * reports[i].norm22).epsilon(1e-12));
    if (i > 0) CHECK(reports[i].norm22 <= reports[i - 1].norm22 + 1e-14);
  }
}

TEST_CASE("period-2 model: E^n - Etilde^n decays while E^n itself does not converge") {
  const PgfcsModel m = builtin_model("period2");
  const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
  const TransferOperator tt = tilde_channel(t);
  CMat en = CMat::Identity(16, 16), tn = en;
  for (int k = 0; k < 16; ++k) {
    en = t.matrix * en;
    tn = tt.matrix * tn;
  }
  CHECK(op_norm(en - tn) < 1e-2);
  CHECK(op_norm(en - t.matrix * en) > 0.5);  // period-2 oscillation persists
}

TEST_CASE("mixed transfer map: identical isometries reach modulus one") {
  const PgfcsModel m = builtin_model("aklt");
  const MixedPeripheral mp = mixed_transfer_peripheral(m.v, m.v, m.d_s, m.d_M);
  CHECK(mp.max_abs_eigenvalue == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixed transfer map: V1 vs V2 regression fixture 2^(-2/3)") {
  // derived by hand from the mixed map's characteristic polynomial z(4z^3-1)
  const PgfcsModel a = builtin_model("aklt");
  const PgfcsModel b = builtin_model("aklt-v2");
  const MixedPeripheral mp = mixed_transfer_peripheral(a.v, b.v, 3, 2);
  CHECK(mp.max_abs_eigenvalue == doctest::Approx(std::pow(2.0, -2.0 / 3.0)).epsilon(1e-9));
}

TEST_CASE("mixed transfer map detects gauge-equivalent isometries") {
  const PgfcsModel m = builtin_model("aklt");
  auto g = oracle::rng(24);
  const CMat w = oracle::random_unitary(2, g);
  const Complex phase = std::polar(1.0, 0.7);
  CMat v2(6, 2);
  for (int s = 0; s < 3; ++s)
    v2.block(2 * s, 0, 2, 2) = phase * w.adjoint() * m.v.block(2 * s, 0, 2, 2) * w;
  const MixedPeripheral mp = mixed_transfer_peripheral(m.v, v2, 3, 2);
  CHECK(mp.max_abs_eigenvalue == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("spectral radius is one for random valid models") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const PgfcsModel m = random_model(2, 3, seed);
    const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
    CHECK(std::abs(std::abs(t.spectrum.eigenvalues(0)) - 1.0) < 1e-9);
  }
}

TEST_CASE("fit is skipped when all norms sit at the numerical floor") {
  const PgfcsModel m = builtin_model("product");
  const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
  std::vector<long> ns{2, 3, 4};
  const DecayFit fit = convergence_fit(t, ns);
  CHECK(fit.skipped);
  CHECK(fit.c == 0.0);
}
