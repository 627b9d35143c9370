// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.

#include "pgfcs/info.hpp"
#include "pgfcs/markov.hpp"
#include "pgfcs/recovery.hpp"
#include "pgfcs/sweep.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace pgfcs;

namespace {

int g_failures = 0;

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

void run_criterion(int number, const std::string& title,
                   const std::function<void(Check&)>& body) {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail += std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("[%s] criterion %2d: %s (%.2f s)%s%s\n", c.ok ? "PASS" : "FAIL", number,
              title.c_str(), secs, c.detail.empty() ? "" : " -- ", c.detail.c_str());
  std::fflush(stdout);
  if (!c.ok) ++g_failures;
}

double plateau_exact() {
  return 17.0 * std::log(2.0) / 16.0 - 9.0 * std::log(3.0) / 8.0 + 5.0 * std::log(5.0) / 16.0;
}

TildeIsometry gram_with_fallback(const BufferContext& ctx, std::string* note) {
  try {
    return tilde_isometry_gram(ctx);
  } catch (const CutoffError&) {
    if (note) *note += " [gram cutoff fell back to rank targeting]";
    return tilde_isometry_gram(ctx, {GramCutoffPolicy::Kind::rank_target, 0.0});
  }
}

struct SweepPoint {
  double qcmi = 0.0;
  double eps = 0.0;  // measured recovery error, or 4*iso_error when not dense
  int n_a = 1;
  int d_s = 3;
};
std::vector<SweepPoint> g_af_points;

}  // namespace

int main() {
  run_criterion(1, "QMI plateau of the two-component model at |B| = 30", [](Check& c) {
    const PgfcsModel m = builtin_model("two-component");
    const double val = qmi(m, {1, 30, 1}, Engine::transfer);
    c.require(std::abs(val - plateau_exact()) < 1e-5,
              "qmi " + format_number(val) + " vs " + format_number(plateau_exact()));
    c.require(std::abs(val - 0.0034794) < 1e-5, "value off the quoted 0.0034794");
  });

  run_criterion(2, "period-2 oscillation: QMI plateau at both parities, QCMI decays", [](Check& c) {
    const PgfcsModel m = builtin_model("period2");
    const double q29 = qmi(m, {1, 29, 1}, Engine::transfer);
    const double q30 = qmi(m, {1, 30, 1}, Engine::transfer);
    c.require(std::abs(q29 - 0.0034794) < 1e-5, "qmi(29) = " + format_number(q29));
    c.require(std::abs(q30 - 0.0034794) < 1e-5, "qmi(30) = " + format_number(q30));
    const double i29 = qcmi(m, {1, 29, 1}, Engine::transfer).qcmi;
    const double i30 = qcmi(m, {1, 30, 1}, Engine::transfer).qcmi;
    c.require(i29 <= 1e-4, "qcmi(29) = " + format_number(i29));
    c.require(i30 <= 1e-4, "qcmi(30) = " + format_number(i30));
    c.require(i30 < i29, "qcmi not decreasing");
  });

  run_criterion(3, "exact Markov property of every builtin, variant, |B| in 2..5", [](Check& c) {
    for (const auto& name : builtin_names()) {
      const PgfcsModel m = builtin_model(name);
      for (int nb = 2; nb <= 5; ++nb) {
        const Tripartition part{1, nb, 1};
        if (!part.buffer_feasible(m.d_s, m.d_M)) continue;
        BufferContext ctx = make_buffer_context(m, nb, {}, true);
        for (const char* variant : {"canonical", "gram", "aligned"}) {
          TildeIsometry t;
          std::string note;
          if (variant == std::string("canonical")) t = tilde_isometry_general(ctx);
          if (variant == std::string("gram")) t = gram_with_fallback(ctx, &note);
          if (variant == std::string("aligned")) t = align_isometry(ctx, tilde_isometry_general(ctx));
          const std::string tag = name + std::string("/") + variant + "/b=" + std::to_string(nb);
          const QmcApproximation qmc = build_qmc(m, part, ctx, t);
          c.require(std::abs(qmc.qmc_qcmi) <= 1e-8,
                    tag + " qcmi(rho~) = " + format_number(qmc.qmc_qcmi));
          const StateFactor fab = partial_trace_factored(qmc.tilde_factor, {0, 1});
          const CMat rec_p =
              recover_factored(petz_from_qmc(qmc), fab.f, qmc.tilde_factor.dims[0]);
          const double ep = trace_norm_diff_factored(qmc.tilde_factor.f, rec_p);
          c.require(ep <= 1e-9, tag + " petz self-recovery " + format_number(ep));
          const CMat rec_s = recover_factored(make_structural(ctx, t, part), fab.f,
                                              qmc.tilde_factor.dims[0]);
          const double es = trace_norm_diff_factored(qmc.tilde_factor.f, rec_s);
          c.require(es <= 1e-9, tag + " structural self-recovery " + format_number(es));
        }
      }
    }
  });

  run_criterion(4, "bound chain: trace error <= 2 iso, recovery error <= 4 iso", [](Check& c) {
    for (const auto& name : {"aklt", "two-component"}) {
      const PgfcsModel m = builtin_model(name);
      for (int nb = 2; nb <= 5; ++nb) {
        const Tripartition part{1, nb, 1};
        if (!part.buffer_feasible(m.d_s, m.d_M)) continue;
        BufferContext ctx = make_buffer_context(m, nb, {}, true);
        const TildeIsometry t = align_isometry(ctx, tilde_isometry_general(ctx));
        const QmcApproximation qmc = build_qmc(m, part, ctx, t);
        const std::string tag = std::string(name) + "/b=" + std::to_string(nb);
        c.require(qmc.trace_error <= 2.0 * qmc.iso_error + 1e-8,
                  tag + " trace " + format_number(qmc.trace_error) + " vs 2*" +
                      format_number(qmc.iso_error));
        const StateFactor fab = partial_trace_factored(qmc.rho_factor, {0, 1});
        const CMat rec = recover_factored(petz_from_qmc(qmc), fab.f, qmc.rho_factor.dims[0]);
        const double err = trace_norm_diff_factored(qmc.rho_factor.f, rec);
        c.require(err <= 4.0 * qmc.iso_error + 1e-8,
                  tag + " recovery " + format_number(err) + " vs 4*" +
                      format_number(qmc.iso_error));
        // QCMI for the AF-dominance criterion; the transfer engine matches the
        // dense oracle to 1e-9 (criterion 6) and stays inside the budget here
        const double q = qcmi(m, part, Engine::transfer).qcmi;
        g_af_points.push_back({q, err, part.n_a, m.d_s});
      }
    }
  });

  run_criterion(5, "exponential decay rates on the aklt chain, |B| = 6..20", [](Check& c) {
    const PgfcsModel m = builtin_model("aklt");
    // pin nu_gap with an independent characteristic-polynomial oracle:
    // p(z) = z^4 - (3/4) z^2 - (1/4) z has roots {1, -1/2, -1/2, 0}
    CMat e = CMat::Zero(4, 4);
    for (int s = 0; s < 3; ++s) {
      const CMat ms = m.v.block(2 * s, 0, 2, 2);
      e += kron(ms, ms.conjugate());
    }
    const auto poly = oracle::char_poly(e);
    c.require(std::abs(poly[1]) < 1e-12 && std::abs(poly[2] - Complex(-0.75, 0)) < 1e-12 &&
                  std::abs(poly[3] - Complex(-0.25, 0)) < 1e-12 && std::abs(poly[4]) < 1e-12,
              "characteristic polynomial oracle failed");
    const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
    c.require(std::abs(t.nu_gap - 0.5) < 1e-9, "nu_gap != 1/2");

    std::vector<long> ns;
    std::vector<double> qcmis, isos;
    for (int nb = 6; nb <= 20; ++nb) {
      const Tripartition part{1, nb, 1};
      qcmis.push_back(qcmi(m, part, Engine::transfer).qcmi);
      BufferContext ctx = make_buffer_context(m, nb, {}, false);
      const TildeIsometry al = align_isometry(ctx, tilde_isometry_general(ctx));
      isos.push_back(iso_op_error(ctx, al));
      ns.push_back(nb);
      g_af_points.push_back({qcmis.back(), 4.0 * isos.back(), 1, 3});
    }
    const DecayFit fq = fit_decay(ns, qcmis);
    const DecayFit fi = fit_decay(ns, isos);
    const double slope_q = std::log(fq.nu);
    const double slope_i = std::log(fi.nu);
    c.require(slope_q <= -0.34 + 0.01, "qcmi slope " + format_number(slope_q));
    c.require(slope_i <= -0.34 + 0.01, "iso slope " + format_number(slope_i));
  });

  run_criterion(6, "dense and transfer entropy engines agree on 100 random models", [](Check& c) {
    int worst_reported = 0;
    for (int k = 0; k < 100; ++k) {
      const int d_s = 2 + (k % 2);
      const int d_m = 2 + ((k / 2) % 2);
      const int nb = 1 + (k % 4);
      const PgfcsModel m = random_model(d_s, d_m, 1000 + static_cast<std::uint64_t>(k));
      const Tripartition part{1, nb, 1};
      const InfoReport dense = qcmi(m, part, Engine::dense);
      const InfoReport transfer = qcmi(m, part, Engine::transfer);
      const double d1 = std::abs(dense.qcmi - transfer.qcmi);
      const double d2 = std::abs(dense.S_AB - transfer.S_AB);
      const double d3 = std::abs(dense.S_B - transfer.S_B);
      const double d4 = std::abs(dense.S_ABC - transfer.S_ABC);
      const double worst = std::max(std::max(d1, d2), std::max(d3, d4));
      if (worst > 1e-9 && worst_reported < 3) {
        ++worst_reported;
        c.require(false, "model " + std::to_string(k) + " disagrees by " + format_number(worst));
      }
    }
  });

  run_criterion(7, "channel convergence: fitted nu tracks nu_gap, Etilde is CPTP", [](Check& c) {
    std::vector<long> ns;
    for (long n = 4; n <= 16; ++n) ns.push_back(n);
    for (const auto& name : builtin_names()) {
      const PgfcsModel m = builtin_model(name);
      const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
      const TransferOperator tt = tilde_channel(t);
      c.require(choi_min_eigenvalue(tt.matrix, m.d_M) >= -1e-9,
                std::string(name) + ": Etilde Choi not PSD");
      c.require(is_trace_preserving(tt.matrix, m.d_M, 1e-9),
                std::string(name) + ": Etilde not trace-preserving");
      const DecayFit fit = convergence_fit(t, ns);
      if (fit.skipped) {
        c.require(t.nu_gap <= 0.02, std::string(name) + ": fit skipped with nonzero gap");
        continue;
      }
      c.require(std::abs(fit.nu - t.nu_gap) <= 0.02,
                std::string(name) + ": fitted nu " + format_number(fit.nu) + " vs nu_gap " +
                    format_number(t.nu_gap));
    }
  });

  run_criterion(8, "gram construction: orthonormality, closed form, decay", [](Check& c) {
    // xi orthonormality at dense-checkable sizes
    {
      const PgfcsModel m = builtin_model("aklt");
      BufferContext ctx = make_buffer_context(m, 8, {}, true);
      const TildeIsometry t = tilde_isometry_gram(ctx);
      const CMat xi = materialize_xi(ctx, t);
      const double res = (xi.adjoint() * xi - CMat::Identity(t.k(), t.k())).norm();
      c.require(res <= 1e-9, "aklt xi residual " + format_number(res));
    }
    {
      const PgfcsModel m = builtin_model("period2");
      BufferContext ctx = make_buffer_context(m, 4, {}, true);
      std::string note;
      const TildeIsometry t = gram_with_fallback(ctx, &note);
      const CMat xi = materialize_xi(ctx, t);
      const double res = (xi.adjoint() * xi - CMat::Identity(t.k(), t.k())).norm();
      c.require(res <= 1e-9, "period2 xi residual " + format_number(res) + note);
      // Qtilde closed form p sigma_i delta delta chi: diagonal 2 * 1/4 on the
      // label set, zero elsewhere, from the materialized tilde isometry
      const CMat vt = tilde_dense(ctx, t);
      CMat qt = CMat::Zero(16, 16);
      for (int ip = 0; ip < 4; ++ip)
        for (int jp = 0; jp < 4; ++jp)
          for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
              Complex acc = 0;
              for (long long a = 0; a < ctx.dim_b; ++a) {
                const CMat blk = ctx.modes.basis.adjoint() * vt.block(a * 4, 0, 4, 4) *
                                 ctx.modes.basis;
                acc += std::conj(blk(ip, jp)) * blk(i, j);
              }
              qt(ip * 4 + jp, i * 4 + j) = acc;
            }
      CMat want = CMat::Zero(16, 16);
      for (int k = 0; k < t.k(); ++k) {
        const XiLabel& l = t.labels[static_cast<std::size_t>(k)];
        want(l.i * 4 + l.j, l.i * 4 + l.j) = 0.5;
      }
      c.require((qt - want).norm() <= 1e-10,
                "period2 Qtilde closed-form residual " + format_number((qt - want).norm()));
    }
    // recovery-error proxy 4 ||V_B - V~_B|| of the gram variant, |B| = 6..14
    {
      const PgfcsModel m = builtin_model("aklt");
      std::vector<long> ns;
      std::vector<double> errs;
      for (int nb = 6; nb <= 14; ++nb) {
        BufferContext ctx = make_buffer_context(m, nb, {}, false);
        const TildeIsometry t = tilde_isometry_gram(ctx);
        ns.push_back(nb);
        errs.push_back(4.0 * iso_op_error(ctx, t));
      }
      const DecayFit fit = fit_decay(ns, errs);
      c.require(std::log(fit.nu) <= -0.34, "gram decay slope " + format_number(std::log(fit.nu)));
    }
  });

  run_criterion(9, "disconnected buffers: error within the two-buffer bound", [](Check& c) {
    const PgfcsModel m = builtin_model("aklt");
    for (int b1 = 2; b1 <= 3; ++b1)
      for (int b2 = 2; b2 <= 3; ++b2) {
        const DisconnectedParts parts{1, b1, 1, b2, 1};
        BufferContext ctx1 = make_buffer_context(m, b1, {}, true);
        BufferContext ctx2 = make_buffer_context(m, b2, {}, true);
        const TildeIsometry t1 = align_isometry(ctx1, tilde_isometry_general(ctx1));
        const TildeIsometry t2 = align_isometry(ctx2, tilde_isometry_general(ctx2));
        const DisconnectedQmc d = build_qmc_disconnected(m, parts, ctx1, t1, ctx2, t2);
        const std::string tag = "b1=" + std::to_string(b1) + ",b2=" + std::to_string(b2);
        c.require(d.trace_error <= 2.0 * (d.iso_error_1 + d.iso_error_2) + 1e-8,
                  tag + " trace " + format_number(d.trace_error));
        c.require(std::abs(d.qmc_qcmi) <= 1e-8, tag + " qcmi(rho~) " + format_number(d.qmc_qcmi));
      }
  });

  run_criterion(10, "AF bound dominates the measured QCMI on every sweep point", [](Check& c) {
    c.require(!g_af_points.empty(), "no sweep points recorded");
    for (const auto& p : g_af_points) {
      const double eps = std::min(2.0, std::max(0.0, p.eps));
      const AfBound b = af_bound(eps, p.n_a, p.d_s);
      c.require(p.qcmi <= b.full + 1e-12,
                "qcmi " + format_number(p.qcmi) + " above AF bound " + format_number(b.full));
      c.require(p.qcmi <= b.simplified + 1e-12, "qcmi above the simplified AF form");
    }
  });

  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return 1;
}
