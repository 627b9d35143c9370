#include "pgfcs/sweep.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

namespace pgfcs {

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

namespace {

bool has_variant(const SweepConfig& cfg, TildeVariant v) {
  for (auto x : cfg.variants)
    if (x == v) return true;
  return false;
}

void compute_row(const SweepConfig& cfg, const PgfcsModel& m, SweepRow& row) {
  Tripartition part{cfg.n_a, row.n_b, cfg.n_c};
  row.qcmi = qcmi(m, part, cfg.engine, cfg.budget).qcmi;
  row.qmi = qmi(m, part, cfg.engine, cfg.budget);
  row.feasible = part.buffer_feasible(m.d_s, m.d_M);
  if (!row.feasible) {
    row.warning = "infeasible: d_s^|B| < d_M^2, tilde columns skipped";
    return;
  }

  // dense buffers only pay off when the full chain factor is also in budget
  const double total_entries = std::pow(static_cast<double>(m.d_s), part.total()) *
                               static_cast<double>(m.d_M) * m.d_M * (1.0 + m.d_s);
  const bool want_dense = total_entries <= static_cast<double>(cfg.budget.max_entries);
  BufferContext ctx = make_buffer_context(m, row.n_b, cfg.budget, want_dense);
  TildeIsometry canonical = tilde_isometry_general(ctx);
  if (has_variant(cfg, TildeVariant::canonical)) row.iso_canonical = iso_op_error(ctx, canonical);

  TildeIsometry preferred = canonical;
  if (has_variant(cfg, TildeVariant::gram)) {
    try {
      TildeIsometry gram = tilde_isometry_gram(ctx);
      row.iso_gram = iso_op_error(ctx, gram);
      for (const auto& w : gram.warnings) row.warning += (row.warning.empty() ? "" : "; ") + w;
    } catch (const CutoffError& e) {
      row.warning += (row.warning.empty() ? "" : "; ") + std::string(e.what());
    }
  }
  if (has_variant(cfg, TildeVariant::aligned)) {
    TildeIsometry aligned = align_isometry(ctx, canonical);
    row.iso_aligned = iso_op_error(ctx, aligned);
    preferred = aligned;
  }

  row.qcmi_tilde = qmc_qcmi_compressed(m, part, ctx, preferred, cfg.budget);

  const BoundEstimate bound = bound_estimate(ctx.fit, m.d_M, m.d_s, part.n_a, part.n_b);
  row.meaningful = bound.meaningful;
  if (bound.meaningful || !ctx.fit.skipped) {
    row.bound_trace = bound.predicted_trace_error;
    row.bound_recovery = bound.predicted_recovery_error;
    row.bound_qcmi = bound.predicted_qcmi;
  }

  // dense-budget columns
  try {
    QmcApproximation qmc = build_qmc(m, part, ctx, preferred, cfg.budget);
    row.trace_error = qmc.trace_error;
    const StateFactor f_ab = partial_trace_factored(qmc.rho_factor, {0, 1}, cfg.budget);
    const int dim_a = qmc.rho_factor.dims[0];
    RecoveryChannel petz = petz_from_qmc(qmc, cfg.budget);
    const CMat rec_p = recover_factored(petz, f_ab.f, dim_a, cfg.budget);
    row.recovery_petz = trace_norm_diff_factored(qmc.rho_factor.f, rec_p);
    RecoveryChannel structural = make_structural(ctx, preferred, part, cfg.budget);
    const CMat rec_s = recover_factored(structural, f_ab.f, dim_a, cfg.budget);
    row.recovery_structural = trace_norm_diff_factored(qmc.rho_factor.f, rec_s);
  } catch (const ResourceError&) {
    // beyond the dense budget: leave the dense columns empty
  }

  const double iso_best = std::isnan(row.iso_aligned) ? row.iso_canonical : row.iso_aligned;
  double eps = row.recovery_petz;
  if (std::isnan(eps)) eps = 4.0 * iso_best;
  if (!std::isnan(eps)) {
    const double eps_c = std::min(2.0, std::max(0.0, eps));
    row.af_bound_full = af_bound(eps_c, cfg.n_a, m.d_s).full;
    row.lower_bound_note = eps * eps / (4.0 * std::log(2.0));
  }
}

void collect_violations(SweepResult& r) {
  auto check = [&](const SweepRow& row, const char* what, double measured, double bound) {
    if (!row.meaningful || std::isnan(measured) || std::isnan(bound)) return;
    if (measured > bound + 1e-8) {
      std::ostringstream os;
      os << "b=" << row.n_b << " " << what << " measured " << format_number(measured)
         << " exceeds bound " << format_number(bound);
      r.violations.push_back(os.str());
    }
  };
  for (const auto& row : r.rows) {
    check(row, "trace_error", row.trace_error, row.bound_trace);
    check(row, "recovery_petz", row.recovery_petz, row.bound_recovery);
    check(row, "recovery_structural", row.recovery_structural, row.bound_recovery);
    check(row, "qcmi", row.qcmi, row.bound_qcmi);
    if (!std::isnan(row.af_bound_full) && row.qcmi > row.af_bound_full + 1e-8) {
      std::ostringstream os;
      os << "b=" << row.n_b << " qcmi exceeds the AF bound";
      r.violations.push_back(os.str());
    }
  }
}

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg) {
  if (cfg.b_start < 1 || cfg.b_end < cfg.b_start || cfg.b_stride < 1)
    throw DimensionError("run_sweep: empty or invalid b range");
  SweepResult r;
  r.config = cfg;
  r.model = resolve_model(cfg.model_source);
  validate_or_throw(r.model);

  TransferOperator t = transfer_from_isometry(r.model.v, r.model.d_s, r.model.d_M);
  r.nu_gap = t.nu_gap;
  std::vector<long> ns;
  for (long n = 4; n <= 16; ++n) ns.push_back(n);
  r.convergence = convergence_fit(t, ns);
  r.q = (!r.convergence.skipped && r.convergence.nu > 0 && r.convergence.nu < 1)
            ? 0.5 * std::log(1.0 / r.convergence.nu)
            : 0.0;

  for (int b = cfg.b_start; b <= cfg.b_end; b += cfg.b_stride) {
    SweepRow row;
    row.n_b = b;
    r.rows.push_back(row);
  }

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers =
      std::min<unsigned>(cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : hw,
                         static_cast<unsigned>(r.rows.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(r.rows.size());
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= r.rows.size()) return;
      try {
        compute_row(cfg, r.model, r.rows[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) {
      r.rows[i].warning = "error: " + errors[i];
      r.rows[i].feasible = false;
    }

  auto add_fit = [&](const std::string& name, auto getter) {
    std::vector<long> xs;
    std::vector<double> ys;
    for (const auto& row : r.rows) {
      const double v = getter(row);
      if (!std::isnan(v) && v > 0) {
        xs.push_back(row.n_b);
        ys.push_back(v);
      }
    }
    NamedFit nf;
    nf.name = name;
    nf.fit = fit_decay(xs, ys);
    r.fits.push_back(nf);
  };
  add_fit("qcmi", [](const SweepRow& x) { return x.qcmi; });
  add_fit("iso_aligned", [](const SweepRow& x) { return x.iso_aligned; });
  add_fit("iso_gram", [](const SweepRow& x) { return x.iso_gram; });
  add_fit("trace_error", [](const SweepRow& x) { return x.trace_error; });
  add_fit("recovery_petz", [](const SweepRow& x) { return x.recovery_petz; });
  add_fit("recovery_structural", [](const SweepRow& x) { return x.recovery_structural; });

  collect_violations(r);
  return r;
}

std::string sweep_csv(const SweepResult& r) {
  std::ostringstream os;
  os << "# pgfcs-sweep/1\n";
  os << "# model=" << (r.model.label.empty() ? r.config.model_source : r.model.label)
     << " d_s=" << r.model.d_s << " d_M=" << r.model.d_M << " n_a=" << r.config.n_a
     << " n_c=" << r.config.n_c << " engine=" << (r.config.engine == Engine::dense ? "dense" : "transfer")
     << " seed=" << r.config.seed << "\n";
  os << "b,feasible,qcmi,qmi,qcmi_tilde,iso_canonical,iso_gram,iso_aligned,trace_error,"
        "recovery_petz,recovery_structural,bound_trace,bound_recovery,bound_qcmi,af_bound,"
        "lower_bound_note,meaningful,warning\n";
  for (const auto& row : r.rows) {
    os << row.n_b << "," << (row.feasible ? 1 : 0) << "," << format_number(row.qcmi) << ","
       << format_number(row.qmi) << "," << format_number(row.qcmi_tilde) << ","
       << format_number(row.iso_canonical) << "," << format_number(row.iso_gram) << ","
       << format_number(row.iso_aligned) << "," << format_number(row.trace_error) << ","
       << format_number(row.recovery_petz) << "," << format_number(row.recovery_structural) << ","
       << format_number(row.bound_trace) << "," << format_number(row.bound_recovery) << ","
       << format_number(row.bound_qcmi) << "," << format_number(row.af_bound_full) << ","
       << format_number(row.lower_bound_note) << "," << (row.meaningful ? 1 : 0) << ",\""
       << row.warning << "\"\n";
  }
  os << "# nu_gap=" << format_number(r.nu_gap) << " fitted_c=" << format_number(r.convergence.c)
     << " fitted_nu=" << format_number(r.convergence.nu) << " q=" << format_number(r.q) << "\n";
  for (const auto& f : r.fits) {
    if (f.fit.skipped) continue;
    os << "# fit " << f.name << ": rate=" << format_number(-std::log(f.fit.nu))
       << " (q=" << format_number(r.q) << ", points=" << f.fit.points << ")\n";
  }
  os << "# violations=" << r.violations.size() << "\n";
  for (const auto& v : r.violations) os << "# violation " << v << "\n";
  return os.str();
}

std::string sweep_json(const SweepResult& r) {
  nlohmann::json j;
  j["schema"] = "pgfcs-sweep/1";
  j["model"] = r.model.label.empty() ? r.config.model_source : r.model.label;
  j["d_s"] = r.model.d_s;
  j["d_M"] = r.model.d_M;
  j["n_a"] = r.config.n_a;
  j["n_c"] = r.config.n_c;
  j["engine"] = r.config.engine == Engine::dense ? "dense" : "transfer";
  j["seed"] = r.config.seed;
  j["nu_gap"] = r.nu_gap;
  j["fitted_c"] = r.convergence.c;
  j["fitted_nu"] = r.convergence.nu;
  j["q"] = r.q;
  auto put = [](nlohmann::json& obj, const char* key, double v) {
    if (std::isnan(v))
      obj[key] = nullptr;
    else
      obj[key] = v;
  };
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json o;
    o["b"] = row.n_b;
    o["feasible"] = row.feasible;
    put(o, "qcmi", row.qcmi);
    put(o, "qmi", row.qmi);
    put(o, "qcmi_tilde", row.qcmi_tilde);
    put(o, "iso_canonical", row.iso_canonical);
    put(o, "iso_gram", row.iso_gram);
    put(o, "iso_aligned", row.iso_aligned);
    put(o, "trace_error", row.trace_error);
    put(o, "recovery_petz", row.recovery_petz);
    put(o, "recovery_structural", row.recovery_structural);
    put(o, "bound_trace", row.bound_trace);
    put(o, "bound_recovery", row.bound_recovery);
    put(o, "bound_qcmi", row.bound_qcmi);
    put(o, "af_bound", row.af_bound_full);
    put(o, "lower_bound_note", row.lower_bound_note);
    o["meaningful"] = row.meaningful;
    o["warning"] = row.warning;
    j["rows"].push_back(o);
  }
  j["fits"] = nlohmann::json::array();
  for (const auto& f : r.fits) {
    if (f.fit.skipped) continue;
    nlohmann::json o;
    o["name"] = f.name;
    o["nu"] = f.fit.nu;
    o["rate"] = -std::log(f.fit.nu);
    o["points"] = f.fit.points;
    j["fits"].push_back(o);
  }
  j["violations"] = r.violations;
  return j.dump(2);
}

std::string spectrum_report(const PgfcsModel& m) {
  std::ostringstream os;
  ValidationReport rep = validate(m);
  os << "model: " << (m.label.empty() ? "<unnamed>" : m.label) << " (d_s=" << m.d_s
     << ", d_M=" << m.d_M << ")\n";
  os << rep.summary();
  if (!rep.pass) return os.str();
  TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
  os << "transfer eigenvalues (|.| descending):\n";
  for (Eigen::Index i = 0; i < t.spectrum.eigenvalues.size(); ++i) {
    const Complex nu = t.spectrum.eigenvalues(i);
    os << "  " << format_number(nu.real()) << (nu.imag() < 0 ? " - " : " + ")
       << format_number(std::abs(nu.imag())) << "i  |nu|=" << format_number(std::abs(nu)) << "\n";
  }
  os << "nu_gap=" << format_number(t.nu_gap) << " peripheral_count=" << t.peripheral_count << "\n";
  std::vector<long> ns;
  for (long n = 4; n <= 16; ++n) ns.push_back(n);
  DecayFit fit = convergence_fit(t, ns);
  if (!fit.skipped)
    os << "convergence fit: c=" << format_number(fit.c) << " nu=" << format_number(fit.nu)
       << " q=" << format_number(0.5 * std::log(1.0 / fit.nu)) << "\n";
  else
    os << "convergence fit: skipped (norms at numerical floor), c=0\n";
  auto comps = ergodic_decompose(m);
  os << "ergodic components: " << comps.size() << "\n";
  for (std::size_t a = 0; a < comps.size(); ++a)
    os << "  component " << a << ": weight=" << format_number(comps[a].weight)
       << " dim=" << comps[a].sub.d_M << " period=" << comps[a].period << "\n";
  return os.str();
}

std::string decompose_report(const PgfcsModel& m, bool merge_equivalent) {
  std::ostringstream os;
  auto comps = ergodic_decompose(m);
  os << "components: " << comps.size() << "\n";
  for (std::size_t a = 0; a < comps.size(); ++a) {
    os << "component " << a << ": weight=" << format_number(comps[a].weight)
       << " dim=" << comps[a].sub.d_M << " period=" << comps[a].period << "\n";
    for (int k = 0; k < comps[a].period; ++k)
      os << "  cyclic projector " << k << " rank="
         << format_number(comps[a].cyclic_projectors[static_cast<std::size_t>(k)].trace().real())
         << "\n";
  }
  // group equivalent components; default only warns
  std::vector<int> group(comps.size());
  for (std::size_t a = 0; a < comps.size(); ++a) group[a] = static_cast<int>(a);
  for (std::size_t a = 0; a < comps.size(); ++a)
    for (std::size_t b = a + 1; b < comps.size(); ++b)
      if (group[b] == static_cast<int>(b) && equivalence_check(comps[a], comps[b])) {
        group[b] = group[a];
        os << (merge_equivalent ? "note: merging equivalent components "
                                : "warning: equivalent components ")
           << group[a] << " and " << b << "\n";
      }
  if (merge_equivalent) {
    std::map<int, double> merged;
    for (std::size_t a = 0; a < comps.size(); ++a) merged[group[a]] += comps[a].weight;
    os << "merged components: " << merged.size() << "\n";
    for (const auto& [idx, w] : merged)
      os << "merged component " << idx << ": weight=" << format_number(w)
         << " dim=" << comps[static_cast<std::size_t>(idx)].sub.d_M
         << " period=" << comps[static_cast<std::size_t>(idx)].period << "\n";
  }
  return os.str();
}

namespace {

std::string recover_block(const PgfcsModel& m, const Tripartition& part, const Budget& budget) {
  std::ostringstream os;
  BufferContext ctx = make_buffer_context(m, part.n_b, budget, true);
  TildeIsometry tilde = align_isometry(ctx, tilde_isometry_general(ctx));
  QmcApproximation qmc = build_qmc(m, part, ctx, tilde, budget);
  const StateFactor f_ab = partial_trace_factored(qmc.rho_factor, {0, 1}, budget);
  RecoveryChannel petz = petz_from_qmc(qmc, budget);
  const CMat rec_p = recover_factored(petz, f_ab.f, qmc.rho_factor.dims[0], budget);
  const double err_p = trace_norm_diff_factored(qmc.rho_factor.f, rec_p);
  RecoveryChannel structural = make_structural(ctx, tilde, part, budget);
  const CMat rec_s = recover_factored(structural, f_ab.f, qmc.rho_factor.dims[0], budget);
  const double err_s = trace_norm_diff_factored(qmc.rho_factor.f, rec_s);
  os << "b=" << part.n_b << " iso_error=" << format_number(qmc.iso_error)
     << " trace_error=" << format_number(qmc.trace_error)
     << " recovery_petz=" << format_number(err_p)
     << " recovery_structural=" << format_number(err_s)
     << " bound_recovery=" << format_number(qmc.bound.predicted_recovery_error)
     << " qcmi_tilde=" << format_number(qmc.qmc_qcmi) << "\n";
  return os.str();
}

}  // namespace

std::string recover_report(const PgfcsModel& m, const Tripartition& part, const Budget& budget) {
  return recover_block(m, part, budget);
}

std::string recover_report_disconnected(const PgfcsModel& m, const DisconnectedParts& parts,
                                        const Budget& budget) {
  std::ostringstream os;
  BufferContext ctx1 = make_buffer_context(m, parts.n_b1, budget, true);
  BufferContext ctx2 = make_buffer_context(m, parts.n_b2, budget, true);
  TildeIsometry t1 = align_isometry(ctx1, tilde_isometry_general(ctx1));
  TildeIsometry t2 = align_isometry(ctx2, tilde_isometry_general(ctx2));
  DisconnectedQmc d = build_qmc_disconnected(m, parts, ctx1, t1, ctx2, t2, budget);
  os << "b1=" << parts.n_b1 << " b2=" << parts.n_b2
     << " iso_error_1=" << format_number(d.iso_error_1)
     << " iso_error_2=" << format_number(d.iso_error_2)
     << " trace_error=" << format_number(d.trace_error)
     << " predicted=" << format_number(d.predicted_error)
     << " qcmi_tilde=" << format_number(d.qmc_qcmi) << "\n";
  return os.str();
}

std::string export_mps_json(const PgfcsModel& m) {
  nlohmann::json j;
  j["schema"] = "pgfcs-mps/1";
  j["label"] = m.label;
  j["d_s"] = m.d_s;
  j["d_M"] = m.d_M;
  j["tensors"] = nlohmann::json::array();
  for (const CMat& t : to_mps_tensor(m)) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index k = 0; k < t.cols(); ++k) arr.push_back({t(i, k).real(), t(i, k).imag()});
    j["tensors"].push_back(arr);
  }
  return j.dump(2);
}

}  // namespace pgfcs
