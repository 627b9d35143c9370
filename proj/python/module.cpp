#include "pgfcs/info.hpp"
#include "pgfcs/markov.hpp"
#include "pgfcs/recovery.hpp"
#include "pgfcs/sweep.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace pgfcs;

namespace {

using InArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

// matrices are accepted through the plain numpy caster and copied by hand
CMat to_cmat(const InArray& a) {
  const py::buffer_info info = a.request();
  if (info.ndim != 2) throw DimensionError("expected a 2d complex array");
  CMat m(info.shape[0], info.shape[1]);
  const auto* data = static_cast<const std::complex<double>*>(info.ptr);
  for (py::ssize_t i = 0; i < info.shape[0]; ++i)
    for (py::ssize_t j = 0; j < info.shape[1]; ++j) m(i, j) = data[i * info.shape[1] + j];
  return m;
}

Engine parse_engine(const std::string& name) {
  if (name == "dense") return Engine::dense;
  if (name == "transfer") return Engine::transfer;
  throw ValidationError("unknown engine '" + name + "'");
}

std::set<Region> parse_keep(const std::string& keep) {
  std::set<Region> out;
  for (char ch : keep) {
    if (ch == 'A' || ch == 'a') out.insert(Region::A);
    if (ch == 'B' || ch == 'b') out.insert(Region::B);
    if (ch == 'C' || ch == 'c') out.insert(Region::C);
  }
  return out;
}

py::dict info_dict(const InfoReport& rep) {
  py::dict d;
  d["qcmi"] = rep.qcmi;
  d["qmi"] = rep.qmi;
  d["S_ABC"] = rep.S_ABC;
  d["S_AB"] = rep.S_AB;
  d["S_BC"] = rep.S_BC;
  d["S_B"] = rep.S_B;
  return d;
}

py::dict markov_report(const PgfcsModel& m, int n_a, int n_b, int n_c,
                       const std::string& variant) {
  const Tripartition part{n_a, n_b, n_c};
  BufferContext ctx = make_buffer_context(m, n_b, {}, true);
  TildeIsometry t = tilde_isometry_general(ctx);
  if (variant == "gram") {
    try {
      t = tilde_isometry_gram(ctx);
    } catch (const CutoffError&) {
      t = tilde_isometry_gram(ctx, {GramCutoffPolicy::Kind::rank_target, 0.0});
    }
  } else if (variant == "aligned") {
    t = align_isometry(ctx, t);
  } else if (variant != "canonical") {
    throw ValidationError("unknown variant '" + variant + "'");
  }
  const QmcApproximation qmc = build_qmc(m, part, ctx, t);
  const StateFactor fab = partial_trace_factored(qmc.rho_factor, {0, 1});
  const CMat rec_p = recover_factored(petz_from_qmc(qmc), fab.f, qmc.rho_factor.dims[0]);
  const CMat rec_s =
      recover_factored(make_structural(ctx, t, part), fab.f, qmc.rho_factor.dims[0]);
  py::dict d;
  d["iso_error"] = qmc.iso_error;
  d["trace_error"] = qmc.trace_error;
  d["qcmi_tilde"] = qmc.qmc_qcmi;
  d["recovery_petz"] = trace_norm_diff_factored(qmc.rho_factor.f, rec_p);
  d["recovery_structural"] = trace_norm_diff_factored(qmc.rho_factor.f, rec_s);
  d["bound_trace"] = qmc.bound.predicted_trace_error;
  d["bound_recovery"] = qmc.bound.predicted_recovery_error;
  d["bound_qcmi"] = qmc.bound.predicted_qcmi;
  d["meaningful"] = qmc.bound.meaningful;
  d["fitted_c"] = ctx.fit.c;
  d["fitted_nu"] = ctx.fit.nu;
  return d;
}

}  // namespace

PYBIND11_MODULE(pgfcs, mod) {
  mod.doc() = "purely generated finitely correlated states: transfer spectra, quantum Markov "
              "approximations, recovery channels, and conditional mutual information decay";

  py::class_<PgfcsModel>(mod, "Model")
      .def(py::init([](int d_s, int d_M, const InArray& v, const InArray& sigma,
                       const std::string& label) {
             PgfcsModel m{d_s, d_M, to_cmat(v), to_cmat(sigma), label};
             validate_or_throw(m);
             return m;
           }),
           py::arg("d_s"), py::arg("d_M"), py::arg("v"), py::arg("sigma"), py::arg("label") = "")
      .def_readonly("d_s", &PgfcsModel::d_s)
      .def_readonly("d_M", &PgfcsModel::d_M)
      .def_property_readonly("v", [](const PgfcsModel& m) { return CMat(m.v); })
      .def_property_readonly("sigma", [](const PgfcsModel& m) { return CMat(m.sigma); })
      .def_readonly("label", &PgfcsModel::label)
      .def("to_json", &model_to_json)
      .def("save", &save_model, py::arg("path"))
      .def("__repr__", [](const PgfcsModel& m) {
        return "<pgfcs.Model '" + m.label + "' d_s=" + std::to_string(m.d_s) +
               " d_M=" + std::to_string(m.d_M) + ">";
      });

  mod.def("builtin_names", &builtin_names);
  mod.def("builtin", &builtin_model, py::arg("name"));
  mod.def("load", &load_model, py::arg("path"));
  mod.def("random_model", &random_model, py::arg("d_s"), py::arg("d_M"), py::arg("seed"));

  mod.def(
      "validate",
      [](const PgfcsModel& m) {
        const ValidationReport rep = validate(m);
        py::list issues;
        for (const auto& i : rep.issues) {
          py::dict d;
          d["check"] = i.check;
          d["residual"] = i.residual;
          d["pass"] = i.pass;
          issues.append(d);
        }
        py::dict d;
        d["pass"] = rep.pass;
        d["issues"] = issues;
        return d;
      },
      py::arg("model"));

  mod.def(
      "spectrum",
      [](const PgfcsModel& m) {
        const TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
        py::dict d;
        d["eigenvalues"] = CVec(t.spectrum.eigenvalues);
        d["nu_gap"] = t.nu_gap;
        d["peripheral_count"] = t.peripheral_count;
        py::list comps;
        for (const auto& c : ergodic_decompose(m)) {
          py::dict cd;
          cd["weight"] = c.weight;
          cd["dim"] = c.sub.d_M;
          cd["period"] = c.period;
          comps.append(cd);
        }
        d["components"] = comps;
        return d;
      },
      py::arg("model"));

  mod.def(
      "qcmi",
      [](const PgfcsModel& m, int n_a, int n_b, int n_c, const std::string& engine) {
        return info_dict(qcmi(m, {n_a, n_b, n_c}, parse_engine(engine)));
      },
      py::arg("model"), py::arg("n_a"), py::arg("n_b"), py::arg("n_c"),
      py::arg("engine") = "transfer");

  mod.def(
      "qmi",
      [](const PgfcsModel& m, int n_a, int n_b, int n_c, const std::string& engine) {
        return qmi(m, {n_a, n_b, n_c}, parse_engine(engine));
      },
      py::arg("model"), py::arg("n_a"), py::arg("n_b"), py::arg("n_c"),
      py::arg("engine") = "transfer");

  mod.def(
      "reduced_state",
      [](const PgfcsModel& m, int n_a, int n_b, int n_c, const std::string& keep) {
        return reduced_state(m, {n_a, n_b, n_c}, parse_keep(keep));
      },
      py::arg("model"), py::arg("n_a"), py::arg("n_b"), py::arg("n_c"), py::arg("keep") = "ABC");

  mod.def(
      "af_bound",
      [](double eps, int n_a, int d_s) {
        const AfBound b = af_bound(eps, n_a, d_s);
        return py::make_tuple(b.full, b.simplified);
      },
      py::arg("epsilon"), py::arg("n_a"), py::arg("d_s"));

  mod.def(
      "von_neumann", [](const InArray& rho, double tol) { return von_neumann(to_cmat(rho), tol); },
      py::arg("rho"), py::arg("tol") = 1e-8);
  mod.def(
      "relative_entropy",
      [](const InArray& rho, const InArray& sigma, double tol) {
        return relative_entropy(to_cmat(rho), to_cmat(sigma), tol);
      },
      py::arg("rho"), py::arg("sigma"), py::arg("tol") = 1e-9);

  mod.def("mps_tensors", &to_mps_tensor, py::arg("model"));

  mod.def("markov_report", &markov_report, py::arg("model"), py::arg("n_a"), py::arg("n_b"),
          py::arg("n_c"), py::arg("variant") = "aligned",
          "Build the Markov approximation and both recovery channels for one tripartition");

  mod.def(
      "sweep_json",
      [](const std::string& model_source, int n_a, int n_c, int b_start, int b_end, int stride,
         const std::string& engine, int threads) {
        SweepConfig cfg;
        cfg.model_source = model_source;
        cfg.n_a = n_a;
        cfg.n_c = n_c;
        cfg.b_start = b_start;
        cfg.b_end = b_end;
        cfg.b_stride = stride;
        cfg.engine = parse_engine(engine);
        cfg.threads = threads;
        return sweep_json(run_sweep(cfg));
      },
      py::arg("model_source"), py::arg("n_a"), py::arg("n_c"), py::arg("b_start"),
      py::arg("b_end"), py::arg("stride") = 1, py::arg("engine") = "transfer",
      py::arg("threads") = 0);
}
