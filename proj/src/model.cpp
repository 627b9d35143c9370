#include "pgfcs/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace pgfcs {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& i : issues)
    os << (i.pass ? "[ok]   " : "[FAIL] ") << i.check << " residual=" << i.residual
       << (i.detail.empty() ? "" : " (" + i.detail + ")") << "\n";
  return os.str();
}

ValidationReport validate(const PgfcsModel& m, double tol) {
  ValidationReport rep;
  rep.pass = true;
  auto add = [&](const std::string& check, double residual, bool pass, std::string detail = "") {
    rep.issues.push_back({check, residual, pass, std::move(detail)});
    rep.pass = rep.pass && pass;
  };
  if (m.d_s <= 0 || m.d_M <= 0 || m.v.rows() != static_cast<Eigen::Index>(m.d_s) * m.d_M ||
      m.v.cols() != m.d_M || m.sigma.rows() != m.d_M || m.sigma.cols() != m.d_M) {
    add("shape", 0.0, false, "v must be (d_s*d_M) x d_M and sigma d_M x d_M");
    return rep;
  }
  const double iso_res = (m.v.adjoint() * m.v - CMat::Identity(m.d_M, m.d_M)).norm();
  add("isometry V^+V = 1", iso_res, iso_res <= tol * std::sqrt(static_cast<double>(m.d_M)));

  const double herm_res = (m.sigma - m.sigma.adjoint()).norm();
  add("sigma Hermitian", herm_res, herm_res <= tol * std::max(1.0, m.sigma.norm()));

  Eigen::SelfAdjointEigenSolver<CMat> es((m.sigma + m.sigma.adjoint()) / 2.0);
  const double min_eig = es.eigenvalues().minCoeff();
  add("sigma PSD", std::max(0.0, -min_eig), min_eig >= -tol);

  const double trace_res = std::abs(m.sigma.trace() - Complex(1, 0));
  add("sigma unit trace", trace_res, trace_res <= tol * m.d_M);

  add("sigma full rank", std::max(0.0, tol - min_eig), min_eig > tol,
      "min eigenvalue " + std::to_string(min_eig));

  CMat img = CMat::Zero(m.d_M, m.d_M);
  for (int s = 0; s < m.d_s; ++s) {
    const CMat ms = m.v.block(static_cast<Eigen::Index>(s) * m.d_M, 0, m.d_M, m.d_M);
    img += ms * m.sigma * ms.adjoint();
  }
  const double compat_res = (img - m.sigma).norm();
  add("compatibility tr_s(V sigma V^+) = sigma", compat_res, compat_res <= tol * m.d_M);
  return rep;
}

void validate_or_throw(const PgfcsModel& m, double tol) {
  ValidationReport rep = validate(m, tol);
  if (!rep.pass) throw ValidationError("model validation failed:\n" + rep.summary());
}

bool Tripartition::buffer_feasible(int d_s, int d_M) const {
  double dim_b = std::pow(static_cast<double>(d_s), n_b);
  return n_a >= 1 && n_b >= 1 && n_c >= 1 && dim_b >= static_cast<double>(d_M) * d_M;
}

CMat isometry_power(const PgfcsModel& m, int n, const Budget& budget) {
  if (n < 0) throw DimensionError("isometry_power: n must be >= 0");
  if (n == 0) return CMat::Identity(m.d_M, m.d_M);
  CMat w = m.v;
  for (int k = 1; k < n; ++k) {
    const Eigen::Index blocks = w.rows() / m.d_M;
    budget.check(static_cast<std::size_t>(blocks) * m.d_s * m.d_M * m.d_M, "isometry_power");
    CMat next(blocks * m.d_s * m.d_M, m.d_M);
    for (Eigen::Index b = 0; b < blocks; ++b)
      next.block(b * m.d_s * m.d_M, 0, static_cast<Eigen::Index>(m.d_s) * m.d_M, m.d_M) =
          m.v * w.block(b * m.d_M, 0, m.d_M, m.d_M);
    w = std::move(next);
  }
  return w;
}

CMat grow_spin(const CMat& x, const CMat& v, int d_s, int d_M) {
  const Eigen::Index blocks = x.rows() / d_M;
  if (blocks * d_M != x.rows() || x.rows() != x.cols())
    throw DimensionError("grow_spin: dimension mismatch");
  CMat out(blocks * d_s * d_M, blocks * d_s * d_M);
  const Eigen::Index bd = static_cast<Eigen::Index>(d_s) * d_M;
  for (Eigen::Index p = 0; p < blocks; ++p)
    for (Eigen::Index q = 0; q < blocks; ++q)
      out.block(p * bd, q * bd, bd, bd) =
          v * x.block(p * d_M, q * d_M, d_M, d_M) * v.adjoint();
  return out;
}

CMat transfer_step(const CMat& x, const CMat& e, int d_M) {
  const Eigen::Index blocks = x.rows() / d_M;
  if (blocks * d_M != x.rows() || x.rows() != x.cols())
    throw DimensionError("transfer_step: dimension mismatch");
  CMat out(x.rows(), x.cols());
  for (Eigen::Index p = 0; p < blocks; ++p)
    for (Eigen::Index q = 0; q < blocks; ++q)
      out.block(p * d_M, q * d_M, d_M, d_M) =
          unvec(e * vec(x.block(p * d_M, q * d_M, d_M, d_M)), d_M);
  return out;
}

CMat reduced_state(const PgfcsModel& m, const Tripartition& part, const std::set<Region>& keep,
                   const Budget& budget) {
  const CMat e = transfer_matrix(m.v, m.d_s, m.d_M);
  CMat cur = m.sigma;
  auto section = [&](Region r, int n) {
    if (keep.count(r)) {
      for (int k = 0; k < n; ++k) {
        budget.check(static_cast<std::size_t>(cur.rows()) * m.d_s * cur.rows() * m.d_s,
                     "reduced_state");
        cur = grow_spin(cur, m.v, m.d_s, m.d_M);
      }
    } else {
      for (int k = 0; k < n; ++k) cur = transfer_step(cur, e, m.d_M);
    }
  };
  section(Region::A, part.n_a);
  section(Region::B, part.n_b);
  section(Region::C, part.n_c);
  // trace out the trailing memory factor
  const Eigen::Index dk = cur.rows() / m.d_M;
  CMat out = CMat::Zero(dk, dk);
  for (Eigen::Index p = 0; p < dk; ++p)
    for (Eigen::Index q = 0; q < dk; ++q) {
      Complex acc = 0;
      for (int t = 0; t < m.d_M; ++t) acc += cur(p * m.d_M + t, q * m.d_M + t);
      out(p, q) = acc;
    }
  return out;
}

PeriodStructure period_structure(const PgfcsModel& ergodic, double tol_peripheral) {
  TransferOperator t = transfer_from_isometry(ergodic.v, ergodic.d_s, ergodic.d_M);
  std::vector<Eigen::Index> per;
  for (Eigen::Index i = 0; i < t.spectrum.eigenvalues.size(); ++i)
    if (std::abs(t.spectrum.eigenvalues(i)) >= 1.0 - tol_peripheral) per.push_back(i);
  const int p = static_cast<int>(per.size());
  PeriodStructure out;
  out.period = p;
  if (p == 1) {
    out.cyclic_projectors = {CMat::Identity(ergodic.d_M, ergodic.d_M)};
    return out;
  }
  // peripheral eigenvalues must be the p-th roots of unity
  for (Eigen::Index i : per) {
    const Complex nu = t.spectrum.eigenvalues(i);
    double best = 2.0;
    for (int k = 0; k < p; ++k) {
      const Complex root = std::polar(1.0, 2.0 * kPi * k / p);
      best = std::min(best, std::abs(nu - root));
    }
    if (best > 1e-6)
      throw StructureError("period_structure: peripheral eigenvalue off the root-of-unity pattern");
  }
  // eigenvector of e^{2 pi i / p}: a scalar multiple of the cyclic unitary
  Eigen::Index idx = -1;
  const Complex omega = std::polar(1.0, 2.0 * kPi / p);
  double best = 2.0;
  for (Eigen::Index i : per) {
    const double d = std::abs(t.spectrum.eigenvalues(i) - omega);
    if (d < best) {
      best = d;
      idx = i;
    }
  }
  CMat u = unvec(t.spectrum.right_eigvecs.col(idx), ergodic.d_M);
  Spectrum su = eig_general(u);
  // cluster eigenvalue phases into p groups
  double delta = 0.0;
  {
    Complex acc = 0;
    for (Eigen::Index i = 0; i < su.eigenvalues.size(); ++i) {
      Complex z = su.eigenvalues(i);
      if (std::abs(z) < 1e-10) throw StructureError("period_structure: cyclic eigenvector nearly singular");
      acc += std::pow(z / std::abs(z), p);
    }
    delta = std::arg(acc) / p;
  }
  std::vector<std::vector<Eigen::Index>> groups(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < su.eigenvalues.size(); ++i) {
    const double th = std::arg(su.eigenvalues(i));
    int k = static_cast<int>(std::lround((th - delta) * p / (2.0 * kPi)));
    k = ((k % p) + p) % p;
    groups[static_cast<std::size_t>(k)].push_back(i);
  }
  std::vector<CMat> proj;
  for (auto& g : groups) {
    if (g.empty()) throw StructureError("period_structure: empty cyclic block");
    CMat cols(ergodic.d_M, static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) cols.col(static_cast<Eigen::Index>(k)) = su.right_eigvecs.col(g[k]);
    // orthonormalize (the eigenvectors of a unitary are orthogonal up to numerics)
    Eigen::HouseholderQR<CMat> qr(cols);
    CMat q = qr.householderQ() * CMat::Identity(ergodic.d_M, static_cast<Eigen::Index>(g.size()));
    proj.push_back(q * q.adjoint());
  }
  // order the blocks along the E-orbit: E(Pi_k sigma Pi_k) = Pi_{k+1} sigma Pi_{k+1}
  const CMat e = t.matrix;
  std::vector<int> succ(static_cast<std::size_t>(p), -1);
  for (int k = 0; k < p; ++k) {
    CMat img = apply_channel_matrix(e, proj[static_cast<std::size_t>(k)] * ergodic.sigma * proj[static_cast<std::size_t>(k)], 1);
    double bestr = 1e300;
    int bestj = -1;
    for (int j = 0; j < p; ++j) {
      const CMat cand = proj[static_cast<std::size_t>(j)] * ergodic.sigma * proj[static_cast<std::size_t>(j)];
      const double r = (img - cand).norm();
      if (r < bestr) {
        bestr = r;
        bestj = j;
      }
    }
    if (bestj < 0 || bestr > 1e-8 * std::max(1.0, ergodic.sigma.norm()))
      throw StructureError("period_structure: cyclic action of E on sigma blocks not matched");
    succ[static_cast<std::size_t>(k)] = bestj;
  }
  // k = 0 convention: block with the largest weight on the lowest basis index
  int k0 = 0;
  for (int j = 0; j < ergodic.d_M; ++j) {
    double mx = -1.0;
    int arg = -1;
    bool tie = false;
    for (int k = 0; k < p; ++k) {
      const double o = proj[static_cast<std::size_t>(k)](j, j).real();
      if (o > mx + 1e-12) {
        mx = o;
        arg = k;
        tie = false;
      } else if (std::abs(o - mx) <= 1e-12) {
        tie = true;
      }
    }
    if (!tie && arg >= 0 && mx > 1e-9) {
      k0 = arg;
      break;
    }
  }
  out.cyclic_projectors.resize(static_cast<std::size_t>(p));
  int cur = k0;
  for (int k = 0; k < p; ++k) {
    out.cyclic_projectors[static_cast<std::size_t>(k)] = proj[static_cast<std::size_t>(cur)];
    cur = succ[static_cast<std::size_t>(cur)];
  }
  // verify the cycle closes and visits every block
  if (cur != k0) throw StructureError("period_structure: cyclic successor map is not a p-cycle");
  return out;
}

std::vector<ErgodicComponent> ergodic_decompose(const PgfcsModel& m, double tol) {
  validate_or_throw(m);
  TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);

  // Hermitian fixed points of the adjoint channel, restricted to the
  // commutant of sigma, span the component identities.
  Spectrum adj = eig_general(t.matrix.adjoint());
  std::vector<CMat> herm;
  for (Eigen::Index i = 0; i < adj.eigenvalues.size(); ++i) {
    if (std::abs(adj.eigenvalues(i) - Complex(1, 0)) > tol) continue;
    CMat y = unvec(adj.right_eigvecs.col(i), m.d_M);
    herm.push_back((y + y.adjoint()) / 2.0);
    herm.push_back((y - y.adjoint()) / Complex(0, 2));
  }
  // orthonormalize the Hermitian family (HS inner product), drop null members
  std::vector<CMat> basis;
  for (CMat h : herm) {
    for (const CMat& b : basis) h -= b * (b.cwiseProduct(h.conjugate()).sum()).real();
    const double n = h.norm();
    if (n > 1e-8) basis.push_back(h / n);
  }
  if (basis.empty()) throw DecompositionError("ergodic_decompose: no fixed point found");

  // solve for combinations commuting with sigma
  const Eigen::Index f = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd a(2 * m.d_M * m.d_M, f);
  for (Eigen::Index r = 0; r < f; ++r) {
    CMat comm = basis[static_cast<std::size_t>(r)] * m.sigma - m.sigma * basis[static_cast<std::size_t>(r)];
    CVec v = vec(comm);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      a(2 * k, r) = v(k).real();
      a(2 * k + 1, r) = v(k).imag();
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> asvd(a, Eigen::ComputeFullV);
  std::vector<Eigen::VectorXd> null;
  for (Eigen::Index i = 0; i < f; ++i) {
    const double s = i < asvd.singularValues().size() ? asvd.singularValues()(i) : 0.0;
    if (s <= 1e-8) null.push_back(asvd.matrixV().col(i));
  }
  if (null.empty()) throw DecompositionError("ergodic_decompose: commutant intersection empty");

  std::mt19937_64 rng(0xFC5u);
  std::normal_distribution<double> gauss;
  CMat h = CMat::Zero(m.d_M, m.d_M);
  for (const auto& c : null) {
    const double g = gauss(rng);
    for (Eigen::Index r = 0; r < f; ++r) h += g * c(r) * basis[static_cast<std::size_t>(r)];
  }

  Eigen::SelfAdjointEigenSolver<CMat> es((h + h.adjoint()) / 2.0);
  const double span = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<std::pair<double, std::vector<Eigen::Index>>> clusters;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (!clusters.empty() && std::abs(es.eigenvalues()(i) - clusters.back().first) <= 1e-7 * span)
      clusters.back().second.push_back(i);
    else
      clusters.push_back({es.eigenvalues()(i), {i}});
  }

  std::vector<ErgodicComponent> comps;
  for (auto& cl : clusters) {
    ErgodicComponent c;
    CMat b(m.d_M, static_cast<Eigen::Index>(cl.second.size()));
    for (std::size_t k = 0; k < cl.second.size(); ++k) {
      CVec v = es.eigenvectors().col(cl.second[k]);
      Eigen::Index imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      v /= (v(imax) / std::abs(v(imax)));
      b.col(static_cast<Eigen::Index>(k)) = v;
    }
    c.block_basis = b;
    c.projector = b * b.adjoint();
    comps.push_back(std::move(c));
  }

  // verify invariance of each projector under the channel superoperator
  for (const auto& c : comps) {
    const CMat sup = kron(c.projector, c.projector.conjugate());
    const CMat resid = t.matrix * sup - sup * (t.matrix * sup);
    if (resid.norm() > 1e-7 * std::max(1.0, t.matrix.norm()))
      throw DecompositionError("ergodic_decompose: candidate block is not invariant");
  }

  for (auto& c : comps) {
    const CMat ps = c.projector * m.sigma * c.projector;
    c.weight = ps.trace().real();
    if (!(c.weight > tol))
      throw DecompositionError("ergodic_decompose: component weight vanishes");
    const double offblock = (c.projector * m.sigma - m.sigma * c.projector).norm();
    if (offblock > 1e-8 * std::max(1.0, m.sigma.norm()))
      throw DecompositionError("ergodic_decompose: sigma is not block-diagonal");
    c.sub.d_s = m.d_s;
    c.sub.d_M = static_cast<int>(c.block_basis.cols());
    c.sub.label = m.label + ":component";
    c.sub.sigma = c.block_basis.adjoint() * m.sigma * c.block_basis / c.weight;
    CMat vb(static_cast<Eigen::Index>(m.d_s) * c.sub.d_M, c.sub.d_M);
    for (int s = 0; s < m.d_s; ++s) {
      const CMat ms = m.v.block(static_cast<Eigen::Index>(s) * m.d_M, 0, m.d_M, m.d_M);
      vb.block(static_cast<Eigen::Index>(s) * c.sub.d_M, 0, c.sub.d_M, c.sub.d_M) =
          c.block_basis.adjoint() * ms * c.block_basis;
    }
    c.sub.v = vb;
    ValidationReport rep = validate(c.sub, 1e-8);
    if (!rep.pass)
      throw DecompositionError("ergodic_decompose: component fails validation:\n" + rep.summary());
    TransferOperator ts = transfer_from_isometry(c.sub.v, c.sub.d_s, c.sub.d_M);
    int ones = 0;
    for (Eigen::Index i = 0; i < ts.spectrum.eigenvalues.size(); ++i)
      if (std::abs(ts.spectrum.eigenvalues(i) - Complex(1, 0)) <= 1e-8) ++ones;
    if (ones != 1)
      throw DecompositionError("ergodic_decompose: component is not ergodic (eigenvalue-1 multiplicity " +
                               std::to_string(ones) + ")");
    PeriodStructure ps2 = period_structure(c.sub);
    c.period = ps2.period;
    c.cyclic_projectors = ps2.cyclic_projectors;
  }

  std::stable_sort(comps.begin(), comps.end(), [](const ErgodicComponent& x, const ErgodicComponent& y) {
    return x.weight > y.weight + 1e-12;
  });
  return comps;
}

bool equivalence_check(const ErgodicComponent& a, const ErgodicComponent& b, double tol) {
  if (a.sub.d_s != b.sub.d_s || a.sub.d_M != b.sub.d_M) return false;
  MixedPeripheral mp = mixed_transfer_peripheral(a.sub.v, b.sub.v, a.sub.d_s, a.sub.d_M);
  return mp.max_abs_eigenvalue >= 1.0 - tol;
}

std::vector<CMat> to_mps_tensor(const PgfcsModel& m) {
  std::vector<CMat> out;
  out.reserve(static_cast<std::size_t>(m.d_s));
  for (int s = 0; s < m.d_s; ++s)
    out.push_back(m.v.block(static_cast<Eigen::Index>(s) * m.d_M, 0, m.d_M, m.d_M));
  return out;
}

PgfcsModel from_mps_tensor(const std::vector<CMat>& tensors, const CMat& sigma,
                           const std::string& label) {
  if (tensors.empty()) throw DimensionError("from_mps_tensor: empty tensor list");
  const int d_M = static_cast<int>(tensors[0].rows());
  PgfcsModel m;
  m.d_s = static_cast<int>(tensors.size());
  m.d_M = d_M;
  m.sigma = sigma;
  m.label = label;
  m.v = CMat(static_cast<Eigen::Index>(m.d_s) * d_M, d_M);
  for (int s = 0; s < m.d_s; ++s) {
    if (tensors[static_cast<std::size_t>(s)].rows() != d_M || tensors[static_cast<std::size_t>(s)].cols() != d_M)
      throw DimensionError("from_mps_tensor: tensor " + std::to_string(s) + " has wrong shape");
    m.v.block(static_cast<Eigen::Index>(s) * d_M, 0, d_M, d_M) = tensors[static_cast<std::size_t>(s)];
  }
  return m;
}

namespace {

CMat parse_complex_array(const nlohmann::json& j, const std::string& field, Eigen::Index rows,
                         Eigen::Index cols) {
  if (!j.contains(field)) throw ValidationError("model file: missing field '" + field + "'");
  const auto& arr = j.at(field);
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(rows * cols))
    throw ValidationError("model file: field '" + field + "' must be an array of " +
                          std::to_string(rows * cols) + " [re, im] pairs");
  CMat m(rows, cols);
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const auto& e = arr[k];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      throw ValidationError("model file: field '" + field + "' entry " + std::to_string(k) +
                            " is not an [re, im] pair");
    m(static_cast<Eigen::Index>(k) / cols, static_cast<Eigen::Index>(k) % cols) =
        Complex(e[0].get<double>(), e[1].get<double>());
  }
  return m;
}

}  // namespace

PgfcsModel parse_model(const std::string& text, const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("model file " + origin + ": " + e.what());
  }
  PgfcsModel m;
  if (!j.contains("d_s") || !j.at("d_s").is_number_integer())
    throw ValidationError("model file " + origin + ": missing integer field 'd_s'");
  if (!j.contains("d_M") || !j.at("d_M").is_number_integer())
    throw ValidationError("model file " + origin + ": missing integer field 'd_M'");
  m.d_s = j.at("d_s").get<int>();
  m.d_M = j.at("d_M").get<int>();
  if (m.d_s <= 0 || m.d_M <= 0)
    throw ValidationError("model file " + origin + ": d_s and d_M must be positive");
  m.v = parse_complex_array(j, "v", static_cast<Eigen::Index>(m.d_s) * m.d_M, m.d_M);
  m.sigma = parse_complex_array(j, "sigma", m.d_M, m.d_M);
  m.label = j.value("label", "");
  return m;
}

PgfcsModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("model file: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str(), path);
}

std::string model_to_json(const PgfcsModel& m) {
  nlohmann::json j;
  j["schema"] = "pgfcs-model/1";
  j["label"] = m.label;
  j["d_s"] = m.d_s;
  j["d_M"] = m.d_M;
  auto dump = [](const CMat& x) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index k = 0; k < x.cols(); ++k)
        arr.push_back({x(i, k).real(), x(i, k).imag()});
    return arr;
  };
  j["v"] = dump(m.v);
  j["sigma"] = dump(m.sigma);
  return j.dump(2);
}

void save_model(const PgfcsModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("model file: cannot write '" + path + "'");
  out << model_to_json(m) << "\n";
}

namespace {

// Spin basis order (-1, 0, 1); memory basis order (+, -).
CMat aklt_v1() {
  CMat v = CMat::Zero(6, 2);
  const double r = 1.0 / std::sqrt(2.0);
  v(0, 1) = -r;  // -|-1> (x) |+><-|
  v(2, 0) = -r;  // -|0>  (x) |+><+|
  v(3, 1) = r;   //  |0>  (x) |-><-|
  v(5, 0) = r;   //  |1>  (x) |-><+|
  return v;
}

CMat aklt_v2() {
  CMat v = CMat::Zero(6, 2);
  const double r = 1.0 / std::sqrt(2.0);
  v(1, 0) = r;   //  |-1> (x) |-><+|
  v(2, 1) = -r;  // -|0>  (x) |+><-|
  v(4, 0) = -r;  // -|1>  (x) |+><+|
  v(5, 1) = r;   //  |1>  (x) |-><-|
  return v;
}

}  // namespace

PgfcsModel builtin_model(const std::string& name) {
  PgfcsModel m;
  m.label = name;
  if (name == "aklt" || name == "aklt-v2") {
    m.d_s = 3;
    m.d_M = 2;
    m.v = (name == "aklt") ? aklt_v1() : aklt_v2();
    m.sigma = CMat::Identity(2, 2) / 2.0;
    return m;
  }
  if (name == "two-component" || name == "period2") {
    m.d_s = 3;
    m.d_M = 4;
    m.sigma = CMat::Identity(4, 4) / 4.0;
    const CMat v1 = aklt_v1();
    const CMat v2 = aklt_v2();
    m.v = CMat::Zero(12, 4);
    for (int s = 0; s < 3; ++s)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          if (name == "two-component") {
            m.v(s * 4 + i, j) = v1(s * 2 + i, j);
            m.v(s * 4 + 2 + i, 2 + j) = v2(s * 2 + i, j);
          } else {
            // block 0 -> block 1 via V2, block 1 -> block 0 via V1
            m.v(s * 4 + 2 + i, j) = v2(s * 2 + i, j);
            m.v(s * 4 + i, 2 + j) = v1(s * 2 + i, j);
          }
        }
    return m;
  }
  if (name == "product") {
    m.d_s = 2;
    m.d_M = 1;
    m.v = CMat(2, 1);
    m.v(0, 0) = 1.0 / std::sqrt(2.0);
    m.v(1, 0) = 1.0 / std::sqrt(2.0);
    m.sigma = CMat::Identity(1, 1);
    return m;
  }
  throw ValidationError("unknown builtin model '" + name + "'");
}

std::vector<std::string> builtin_names() {
  return {"aklt", "aklt-v2", "two-component", "period2", "product"};
}

PgfcsModel resolve_model(const std::string& source) {
  const std::string prefix = "builtin:";
  if (source.rfind(prefix, 0) == 0) return builtin_model(source.substr(prefix.size()));
  return load_model(source);
}

PgfcsModel random_model(int d_s, int d_M, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  for (int attempt = 0; attempt < 64; ++attempt) {
    CMat g(static_cast<Eigen::Index>(d_s) * d_M, d_M);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
    Eigen::HouseholderQR<CMat> qr(g);
    CMat v = qr.householderQ() * CMat::Identity(g.rows(), d_M);
    // fix phases so the factorization is deterministic
    CMat r = qr.matrixQR().topRows(d_M).triangularView<Eigen::Upper>();
    for (int j = 0; j < d_M; ++j) {
      const Complex d = r(j, j);
      if (std::abs(d) > 0) v.col(j) *= d / std::abs(d);
    }
    TransferOperator t;
    try {
      t = transfer_from_isometry(v, d_s, d_M);
    } catch (const ValidationError&) {
      continue;
    }
    if (t.peripheral_count != 1) continue;
    // fixed point as sigma
    Eigen::Index fp = 0;
    double best = 1e300;
    for (Eigen::Index i = 0; i < t.spectrum.eigenvalues.size(); ++i) {
      const double d = std::abs(t.spectrum.eigenvalues(i) - Complex(1, 0));
      if (d < best) {
        best = d;
        fp = i;
      }
    }
    CMat sigma = unvec(t.spectrum.right_eigvecs.col(fp), d_M);
    sigma = CMat((sigma + CMat(sigma.adjoint())) / 2.0);
    const double tr = sigma.trace().real();
    if (std::abs(tr) < 1e-12) continue;
    sigma /= tr;
    Eigen::SelfAdjointEigenSolver<CMat> es(sigma);
    if (es.eigenvalues().minCoeff() < 1e-6) continue;
    PgfcsModel m{d_s, d_M, v, sigma, "random-" + std::to_string(seed)};
    if (validate(m, 1e-8).pass) return m;
  }
  throw NumericalError("random_model: failed to draw a valid ergodic model");
}

}  // namespace pgfcs
