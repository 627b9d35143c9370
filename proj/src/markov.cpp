#include "pgfcs/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pgfcs {

namespace {

long long pow_ll(int base, int exp) {
  long long r = 1;
  for (int k = 0; k < exp; ++k) {
    if (r > (1LL << 62) / base) return -1;
    r *= base;
  }
  return r;
}

std::vector<CMat> mps_tensors(const PgfcsModel& m) { return to_mps_tensor(m); }

}  // namespace

ModeBasis mode_basis(const PgfcsModel& m, const std::vector<ErgodicComponent>& comps) {
  ModeBasis out;
  out.basis = CMat(m.d_M, m.d_M);
  int col = 0;
  for (std::size_t a = 0; a < comps.size(); ++a) {
    const ErgodicComponent& c = comps[a];
    out.comp_period.push_back(c.period);
    out.comp_weight.push_back(c.weight);
    for (int k = 0; k < c.period; ++k) {
      const CMat& pk = c.cyclic_projectors[static_cast<std::size_t>(k)];
      CMat blk = pk * c.sub.sigma * pk;
      Eigen::SelfAdjointEigenSolver<CMat> es((blk + blk.adjoint()) / 2.0);
      // keep eigenvectors inside the cyclic block, largest eigenvalue first
      std::vector<std::pair<double, Eigen::Index>> picks;
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const CVec v = es.eigenvectors().col(i);
        const double inside = (pk * v).norm();
        if (inside > 0.5) picks.push_back({es.eigenvalues()(i), i});
      }
      std::stable_sort(picks.begin(), picks.end(),
                       [](const auto& x, const auto& y) { return x.first > y.first; });
      for (auto& [val, idx] : picks) {
        if (val <= 1e-12) throw StructureError("mode_basis: cyclic block of sigma not full rank");
        CVec v = es.eigenvectors().col(idx);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        v /= (v(imax) / std::abs(v(imax)));
        out.basis.col(col) = c.block_basis * v;
        MemoryMode mode;
        mode.comp = static_cast<int>(a);
        mode.cyc = k;
        mode.sigma_hat = val;
        mode.sigma_global = c.weight * val;
        out.modes.push_back(mode);
        ++col;
      }
    }
  }
  if (col != m.d_M) throw StructureError("mode_basis: mode count mismatch");
  return out;
}

BufferContext make_buffer_context(const PgfcsModel& m, int n_b, const Budget& budget,
                                  bool materialize_dense) {
  validate_or_throw(m);
  if (n_b < 1) throw DimensionError("make_buffer_context: n_b must be >= 1");
  BufferContext ctx;
  ctx.d_s = m.d_s;
  ctx.d_M = m.d_M;
  ctx.n_b = n_b;
  ctx.dim_b = pow_ll(m.d_s, n_b);
  ctx.model = m;
  ctx.modes = mode_basis(m, ergodic_decompose(m));

  const int P = m.d_M * m.d_M;
  const std::vector<CMat> ms = mps_tensors(m);

  // Q[(i',j'),(i,j)] = <mode_j'| (E^+)^{n_b}(|mode_i'><mode_i|) |mode_j>
  ctx.q = CMat(P, P);
  for (int ip = 0; ip < m.d_M; ++ip)
    for (int i = 0; i < m.d_M; ++i) {
      CMat y = ctx.modes.basis.col(ip) * ctx.modes.basis.col(i).adjoint();
      for (int step = 0; step < n_b; ++step) {
        CMat z = CMat::Zero(m.d_M, m.d_M);
        for (int s = 0; s < m.d_s; ++s) z += ms[static_cast<std::size_t>(s)].adjoint() * y * ms[static_cast<std::size_t>(s)];
        y = std::move(z);
      }
      for (int jp = 0; jp < m.d_M; ++jp)
        for (int j = 0; j < m.d_M; ++j)
          ctx.q(ip * m.d_M + jp, i * m.d_M + j) =
              (ctx.modes.basis.col(jp).adjoint() * y * ctx.modes.basis.col(j))(0, 0);
    }
  ctx.q = CMat((ctx.q + CMat(ctx.q.adjoint())) / 2.0);

  // components of w_ij on the first n_head computational basis vectors of H_B
  ctx.n_head = (ctx.dim_b < 0 || ctx.dim_b > P) ? P : static_cast<int>(ctx.dim_b);
  ctx.w_head = CMat(ctx.n_head, P);
  for (int a = 0; a < ctx.n_head; ++a) {
    // decode a into spins s_1..s_nb, factor 0 most significant
    CMat prod = CMat::Identity(m.d_M, m.d_M);
    long long rem = a;
    std::vector<int> digits(static_cast<std::size_t>(n_b), 0);
    for (int t = n_b - 1; t >= 0; --t) {
      digits[static_cast<std::size_t>(t)] = static_cast<int>(rem % m.d_s);
      rem /= m.d_s;
    }
    for (int t = 0; t < n_b; ++t) prod = ms[static_cast<std::size_t>(digits[static_cast<std::size_t>(t)])] * prod;
    const CMat w = ctx.modes.basis.adjoint() * prod * ctx.modes.basis;
    for (int i = 0; i < m.d_M; ++i)
      for (int j = 0; j < m.d_M; ++j) ctx.w_head(a, i * m.d_M + j) = w(i, j);
  }

  // channel-convergence decay fit, reused for cutoffs and bound estimates
  TransferOperator t = transfer_from_isometry(m.v, m.d_s, m.d_M);
  std::vector<long> ns;
  for (long n = 4; n <= 16; ++n) ns.push_back(n);
  ctx.fit = convergence_fit(t, ns);

  if (materialize_dense) {
    if (ctx.dim_b < 0) throw ResourceError("make_buffer_context: buffer dimension overflow");
    budget.check(static_cast<std::size_t>(ctx.dim_b) * P, "make_buffer_context dense buffer");
    const CMat vb = isometry_power(m, n_b, budget);
    CMat w(ctx.dim_b, P);
    for (int j = 0; j < m.d_M; ++j) {
      const CVec col = vb * ctx.modes.basis.col(j);
      for (int i = 0; i < m.d_M; ++i) {
        for (long long a = 0; a < ctx.dim_b; ++a) {
          Complex acc = 0;
          for (int mm = 0; mm < m.d_M; ++mm)
            acc += std::conj(ctx.modes.basis(mm, i)) * col(a * m.d_M + mm);
          w(a, i * m.d_M + j) = acc;
        }
      }
    }
    ctx.w_dense = std::move(w);
  }
  return ctx;
}

namespace {

std::vector<XiLabel> make_labels(const BufferContext& ctx) {
  std::vector<XiLabel> labels;
  const auto& modes = ctx.modes.modes;
  for (std::size_t a = 0; a < ctx.modes.comp_period.size(); ++a) {
    const int p = ctx.modes.comp_period[a];
    for (int k = 0; k < p; ++k) {
      const int k_out = (k + ctx.n_b) % p;
      for (std::size_t i = 0; i < modes.size(); ++i) {
        if (modes[i].comp != static_cast<int>(a) || modes[i].cyc != k_out) continue;
        for (std::size_t j = 0; j < modes.size(); ++j) {
          if (modes[j].comp != static_cast<int>(a) || modes[j].cyc != k) continue;
          labels.push_back({static_cast<int>(a), k, static_cast<int>(i), static_cast<int>(j)});
        }
      }
    }
  }
  return labels;
}

RVec label_coefficients(const BufferContext& ctx, const std::vector<XiLabel>& labels) {
  RVec c(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const MemoryMode& mi = ctx.modes.modes[static_cast<std::size_t>(labels[t].i)];
    c(static_cast<Eigen::Index>(t)) =
        std::sqrt(ctx.modes.comp_period[static_cast<std::size_t>(labels[t].comp)] * mi.sigma_hat);
  }
  return c;
}

void require_feasible(const BufferContext& ctx) {
  const double dim_b = ctx.dim_b < 0 ? std::numeric_limits<double>::infinity()
                                     : static_cast<double>(ctx.dim_b);
  if (dim_b < static_cast<double>(ctx.d_M) * ctx.d_M)
    throw FeasibilityError("buffer too small: d_s^|B| = " + std::to_string(ctx.dim_b) +
                           " < d_M^2 = " + std::to_string(ctx.d_M * ctx.d_M));
}

CMat generator_gram(const BufferContext& ctx) {
  const int P = ctx.d_M * ctx.d_M;
  const int G = ctx.n_head + P;
  CMat g(G, G);
  g.topLeftCorner(ctx.n_head, ctx.n_head) = CMat::Identity(ctx.n_head, ctx.n_head);
  g.topRightCorner(ctx.n_head, P) = ctx.w_head;
  g.bottomLeftCorner(P, ctx.n_head) = ctx.w_head.adjoint();
  g.bottomRightCorner(P, P) = ctx.q;
  return g;
}

TildeIsometry base_tilde(const BufferContext& ctx) {
  TildeIsometry t;
  t.d_s = ctx.d_s;
  t.d_M = ctx.d_M;
  t.n_b = ctx.n_b;
  t.labels = make_labels(ctx);
  t.coeff = label_coefficients(ctx, t.labels);
  t.n_head = ctx.n_head;
  return t;
}

}  // namespace

TildeIsometry tilde_isometry_general(const BufferContext& ctx, const XiEmbedding& xi) {
  require_feasible(ctx);
  TildeIsometry t = base_tilde(ctx);
  t.variant = TildeVariant::canonical;
  const int P = ctx.d_M * ctx.d_M;
  const int K = t.k();
  if (xi.explicit_xi) {
    const CMat& x = *xi.explicit_xi;
    if (x.cols() != K || (ctx.dim_b >= 0 && x.rows() != ctx.dim_b))
      throw DimensionError("tilde_isometry_general: explicit xi has wrong shape");
    const double res = (x.adjoint() * x - CMat::Identity(K, K)).norm();
    if (res > 1e-9 * std::sqrt(static_cast<double>(K)))
      throw ValidationError("tilde_isometry_general: explicit xi not orthonormal, residual " +
                            std::to_string(res));
    t.xi_dense = x;
    t.xi_coeff = CMat::Zero(ctx.n_head + P, K);
    return t;
  }
  if (K > ctx.n_head)
    throw FeasibilityError("tilde_isometry_general: not enough basis slots for xi");
  t.xi_coeff = CMat::Zero(ctx.n_head + P, K);
  for (int k = 0; k < K; ++k) t.xi_coeff(k, k) = 1.0;
  return t;
}

TildeIsometry tilde_isometry_period1(const BufferContext& ctx, const XiEmbedding& xi) {
  if (ctx.modes.comp_period.size() != 1 || ctx.modes.comp_period[0] != 1)
    throw StructureError("tilde_isometry_period1: model is not ergodic with period 1");
  return tilde_isometry_general(ctx, xi);
}

TildeIsometry tilde_isometry_gram(const BufferContext& ctx, const GramCutoffPolicy& policy) {
  require_feasible(ctx);
  TildeIsometry t = base_tilde(ctx);
  t.variant = TildeVariant::gram;
  const int P = ctx.d_M * ctx.d_M;
  const int K = t.k();

  // Qtilde is diagonal with entries p_alpha sigma_hat_i on the label pairs
  double lam_min_tilde = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k)
    lam_min_tilde = std::min(lam_min_tilde, t.coeff(k) * t.coeff(k));

  Eigen::SelfAdjointEigenSolver<CMat> es(ctx.q);
  const RVec lam = es.eigenvalues();  // ascending

  double eps = 0.0;
  switch (policy.kind) {
    case GramCutoffPolicy::Kind::fitted: {
      const double fitted = ctx.fit.skipped
                                ? 0.0
                                : ctx.fit.c * ctx.d_M * std::pow(ctx.fit.nu, ctx.n_b);
      eps = std::max(fitted, 1e-12);
      if (!(lam_min_tilde > 2.0 * fitted)) {
        t.warnings.push_back("gram construction outside its regime: sigma_min <= 2 c d_M nu^|B|");
      }
      if (eps >= lam_min_tilde / 2.0) {
        eps = lam_min_tilde / 2.0;
        t.warnings.push_back("gram cutoff clamped to half the smallest Qtilde eigenvalue");
      }
      break;
    }
    case GramCutoffPolicy::Kind::rank_target: {
      const double floor = std::max(1e-14, 1e-12 * std::max(0.0, lam(P - 1)));
      if (K <= P && lam(P - K) > floor) {
        const double hi = lam(P - K);
        const double lo = (P - K - 1 >= 0) ? std::max(0.0, lam(P - K - 1)) : 0.0;
        eps = std::max((hi + lo) / 2.0, floor);
      } else {
        // Q is rank-deficient below the target (possible outside the
        // construction's regime); keep its whole positive spectrum and let
        // the orthonormalization complete the missing directions
        eps = floor;
        t.warnings.push_back("gram buffer vectors span fewer than K directions; completing");
      }
      break;
    }
    case GramCutoffPolicy::Kind::value:
      eps = policy.value;
      break;
  }
  t.gram_cutoff = eps;

  int kept = 0;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > eps) ++kept;
  if (kept != K && policy.kind != GramCutoffPolicy::Kind::rank_target) {
    std::ostringstream os;
    os << "tilde_isometry_gram: cutoff " << eps << " keeps " << kept << " eigenvalues, expected "
       << K << " (rank of Qtilde); spectrum near cutoff:";
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (std::abs(lam(i) - eps) < 10 * eps + 1e-9) os << " " << lam(i);
    throw CutoffError(os.str());
  }

  RVec inv_sqrt = lam;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    inv_sqrt(i) = lam(i) > eps ? 1.0 / std::sqrt(lam(i)) : 0.0;
  const CMat q_inv_sqrt = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();

  CMat cw = CMat::Zero(P, K);
  for (int k = 0; k < K; ++k)
    cw.col(k) = q_inv_sqrt.col(t.labels[static_cast<std::size_t>(k)].i * ctx.d_M +
                               t.labels[static_cast<std::size_t>(k)].j);

  // symmetric re-orthonormalization of the used xi set
  CMat s = cw.adjoint() * ctx.q * cw;
  s = CMat((s + CMat(s.adjoint())) / 2.0);
  Eigen::SelfAdjointEigenSolver<CMat> ses(s);
  const bool degenerate =
      ses.eigenvalues().minCoeff() < 1e-10 * std::max(1.0, ses.eigenvalues().maxCoeff());
  if (degenerate && policy.kind != GramCutoffPolicy::Kind::rank_target)
    throw CutoffError("tilde_isometry_gram: xi set degenerate after cutoff");

  t.xi_coeff = CMat::Zero(ctx.n_head + P, K);
  if (!degenerate) {
    RVec si = ses.eigenvalues();
    for (Eigen::Index i = 0; i < si.size(); ++i) si(i) = 1.0 / std::sqrt(si(i));
    t.xi_coeff.bottomRows(P) = cw * (ses.eigenvectors() * si.asDiagonal() * ses.eigenvectors().adjoint());
  } else {
    // Gram-Schmidt over the candidates, completing dropped directions with
    // computational basis vectors of the buffer; deterministic order
    const CMat ggen = generator_gram(ctx);
    const int G = ctx.n_head + P;
    std::vector<CVec> accepted;
    auto project_out = [&](CVec& v) {
      for (int pass = 0; pass < 2; ++pass)
        for (const CVec& u : accepted) v -= u * (u.adjoint() * ggen * v)(0, 0);
    };
    int completed = 0;
    for (int k = 0; k < K; ++k) {
      CVec v = CVec::Zero(G);
      v.tail(P) = cw.col(k);
      project_out(v);
      double n2 = (v.adjoint() * ggen * v)(0, 0).real();
      if (n2 > 1e-12) {
        accepted.push_back(v / std::sqrt(n2));
        continue;
      }
      bool done = false;
      for (int a = 0; a < ctx.n_head && !done; ++a) {
        CVec w = CVec::Zero(G);
        w(a) = 1.0;
        project_out(w);
        n2 = (w.adjoint() * ggen * w)(0, 0).real();
        if (n2 > 0.25) {
          accepted.push_back(w / std::sqrt(n2));
          ++completed;
          done = true;
        }
      }
      if (!done)
        throw CutoffError("tilde_isometry_gram: cannot complete an orthonormal xi set");
    }
    for (int k = 0; k < K; ++k) t.xi_coeff.col(k) = accepted[static_cast<std::size_t>(k)];
    t.warnings.push_back("completed " + std::to_string(completed) +
                         " xi directions outside the buffer-vector span");
  }

  const CMat final_gram =
      t.xi_coeff.adjoint() * generator_gram(ctx) * t.xi_coeff - CMat::Identity(K, K);
  const double ortho = final_gram.norm();
  if (ortho > 1e-8)
    throw NumericalError("tilde_isometry_gram: xi orthonormality residual " + std::to_string(ortho));
  return t;
}

CMat xi_gram(const BufferContext& ctx, const TildeIsometry& t) {
  if (t.xi_dense) return t.xi_dense->adjoint() * (*t.xi_dense);
  const CMat g = generator_gram(ctx);
  return t.xi_coeff.adjoint() * g * t.xi_coeff;
}

namespace {

// <w_ij, xi_t> for all pairs: P x K
CMat w_xi_overlap(const BufferContext& ctx, const TildeIsometry& t) {
  const int P = ctx.d_M * ctx.d_M;
  if (t.xi_dense) {
    if (!ctx.w_dense) throw ResourceError("w_xi_overlap: dense buffer required for explicit xi");
    return ctx.w_dense->adjoint() * (*t.xi_dense);
  }
  const CMat g = generator_gram(ctx);
  return g.bottomRows(P) * t.xi_coeff;
}

// V_B^+ Vtilde_B and Vtilde_B^+ Vtilde_B in the mode column basis
void tilde_grams(const BufferContext& ctx, const TildeIsometry& t, CMat& cross, CMat& self) {
  const CMat wx = w_xi_overlap(ctx, t);
  const CMat xg = xi_gram(ctx, t);
  cross = CMat::Zero(ctx.d_M, ctx.d_M);
  for (int tt = 0; tt < t.k(); ++tt) {
    const XiLabel& l = t.labels[static_cast<std::size_t>(tt)];
    for (int jp = 0; jp < ctx.d_M; ++jp)
      cross(jp, l.j) += t.coeff(tt) * wx(l.i * ctx.d_M + jp, tt);
  }
  self = CMat::Zero(ctx.d_M, ctx.d_M);
  for (int a = 0; a < t.k(); ++a)
    for (int b = 0; b < t.k(); ++b) {
      const XiLabel& la = t.labels[static_cast<std::size_t>(a)];
      const XiLabel& lb = t.labels[static_cast<std::size_t>(b)];
      if (la.i != lb.i) continue;
      self(la.j, lb.j) += t.coeff(a) * t.coeff(b) * xg(a, b);
    }
}

}  // namespace

double iso_op_error(const BufferContext& ctx, const TildeIsometry& t) {
  CMat cross, self;
  tilde_grams(ctx, t, cross, self);
  CMat dd = CMat::Identity(ctx.d_M, ctx.d_M) + self - cross - cross.adjoint();
  Eigen::SelfAdjointEigenSolver<CMat> es((dd + dd.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double iso_hs_error(const BufferContext& ctx, const TildeIsometry& t) {
  CMat cross, self;
  tilde_grams(ctx, t, cross, self);
  const double tr = (CMat::Identity(ctx.d_M, ctx.d_M) + self - cross - cross.adjoint()).trace().real();
  return std::sqrt(std::max(0.0, tr));
}

TildeIsometry align_isometry(const BufferContext& ctx, const TildeIsometry& base,
                             AlignReport* report) {
  const int P = ctx.d_M * ctx.d_M;
  const int K = base.k();
  AlignReport rep;
  rep.hs_before = iso_hs_error(ctx, base);
  rep.op_before = iso_op_error(ctx, base);

  CMat ggen, c;
  std::optional<CMat> gen_dense;
  if (base.xi_dense) {
    if (!ctx.w_dense) throw ResourceError("align_isometry: dense buffer required for explicit xi");
    CMat gen(ctx.w_dense->rows(), K + P);
    gen.leftCols(K) = *base.xi_dense;
    gen.rightCols(P) = *ctx.w_dense;
    ggen = gen.adjoint() * gen;
    c = CMat::Zero(K + P, K);
    c.topRows(K) = CMat::Identity(K, K);
    gen_dense = std::move(gen);
  } else {
    ggen = generator_gram(ctx);
    c = base.xi_coeff;
  }
  ggen = CMat((ggen + CMat(ggen.adjoint())) / 2.0);
  const int G = static_cast<int>(ggen.rows());
  const int w_base = G - P;  // w generators sit in the trailing block

  Eigen::SelfAdjointEigenSolver<CMat> es(ggen);
  const double gmax = std::max(1e-300, es.eigenvalues().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 1e-12 * gmax) keep.push_back(i);
  const int R = static_cast<int>(keep.size());
  CMat p(G, R);
  for (int r = 0; r < R; ++r)
    p.col(r) = es.eigenvectors().col(keep[static_cast<std::size_t>(r)]) /
               std::sqrt(es.eigenvalues()(keep[static_cast<std::size_t>(r)]));

  const CMat coords = p.adjoint() * ggen;  // R x G: coords of generator g
  const CMat xcoords = coords * c;         // R x K: coords of xi_t

  CMat tb = CMat::Zero(R, R);
  for (int tt = 0; tt < K; ++tt) {
    const XiLabel& l = base.labels[static_cast<std::size_t>(tt)];
    tb += base.coeff(tt) * coords.col(w_base + l.i * ctx.d_M + l.j) * xcoords.col(tt).adjoint();
  }
  Eigen::JacobiSVD<CMat> svd(tb, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const CMat u_opt = svd.matrixU() * svd.matrixV().adjoint();

  const CMat c_new = p * (u_opt * xcoords);

  TildeIsometry out = base;
  out.variant = TildeVariant::aligned;
  if (base.xi_dense) {
    out.xi_dense = (*gen_dense) * c_new;
    out.xi_coeff = CMat::Zero(ctx.n_head + P, K);
  } else {
    out.xi_dense.reset();
    out.xi_coeff = c_new;
  }
  rep.hs_after = iso_hs_error(ctx, out);
  rep.op_after = iso_op_error(ctx, out);
  if (report) *report = rep;
  return out;
}

CMat materialize_xi(const BufferContext& ctx, const TildeIsometry& t, const Budget& budget) {
  if (t.xi_dense) return *t.xi_dense;
  if (ctx.dim_b < 0) throw ResourceError("materialize_xi: buffer dimension overflow");
  budget.check(static_cast<std::size_t>(ctx.dim_b) * static_cast<std::size_t>(t.k()),
               "materialize_xi");
  if (!ctx.w_dense)
    throw ResourceError("materialize_xi: buffer context built without dense buffers");
  const int P = ctx.d_M * ctx.d_M;
  CMat xi = CMat::Zero(ctx.dim_b, t.k());
  for (int k = 0; k < t.k(); ++k) {
    for (int a = 0; a < t.n_head; ++a)
      if (t.xi_coeff(a, k) != Complex(0, 0)) xi(a, k) += t.xi_coeff(a, k);
    xi.col(k) += (*ctx.w_dense) * t.xi_coeff.bottomRows(P).col(k);
  }
  return xi;
}

CMat tilde_dense(const BufferContext& ctx, const TildeIsometry& t, const Budget& budget) {
  const CMat xi = materialize_xi(ctx, t, budget);
  budget.check(static_cast<std::size_t>(ctx.dim_b) * ctx.d_M * ctx.d_M, "tilde_dense");
  CMat v = CMat::Zero(ctx.dim_b * ctx.d_M, ctx.d_M);
  for (int k = 0; k < t.k(); ++k) {
    const XiLabel& l = t.labels[static_cast<std::size_t>(k)];
    const CVec ui = ctx.modes.basis.col(l.i);
    const CVec uj = ctx.modes.basis.col(l.j);
    for (long long a = 0; a < ctx.dim_b; ++a) {
      if (xi(a, k) == Complex(0, 0)) continue;
      for (int mm = 0; mm < ctx.d_M; ++mm)
        v.row(a * ctx.d_M + mm) += t.coeff(k) * xi(a, k) * ui(mm) * uj.adjoint();
    }
  }
  return v;
}

CMat compressed_tilde_map(const BufferContext& ctx, const TildeIsometry& t) {
  CMat w = CMat::Zero(static_cast<Eigen::Index>(t.k()) * ctx.d_M, ctx.d_M);
  for (int k = 0; k < t.k(); ++k) {
    const XiLabel& l = t.labels[static_cast<std::size_t>(k)];
    w.block(static_cast<Eigen::Index>(k) * ctx.d_M, 0, ctx.d_M, ctx.d_M) +=
        t.coeff(k) * ctx.modes.basis.col(l.i) * ctx.modes.basis.col(l.j).adjoint();
  }
  return w;
}

BoundEstimate bound_estimate(const DecayFit& fit, int d_M, int d_s, int n_a, int n_b) {
  BoundEstimate b;
  b.c = fit.c;
  b.nu = fit.nu;
  if (fit.skipped || !(fit.nu > 0.0) || fit.nu >= 1.0) {
    b.meaningful = false;
    return b;
  }
  b.q = 0.5 * std::log(1.0 / fit.nu);
  const double root = std::sqrt(d_M * fit.c);
  const double decay = std::pow(fit.nu, 0.5 * n_b);
  b.K = 4.0 * root;
  b.predicted_trace_error = 2.0 * root * decay;
  b.predicted_recovery_error = 4.0 * root * decay;
  b.K_tilde = root * (2.0 * n_a * std::log(static_cast<double>(d_s)) + 2.0 -
                      2.0 * std::log(2.0 * root * decay));
  b.predicted_qcmi = b.K_tilde * decay;
  b.meaningful = b.predicted_recovery_error <= 2.0;
  return b;
}

StateFactor chain_factor(const PgfcsModel& m, const std::vector<Segment>& segments,
                         const BufferContext* ctx, const Budget& budget) {
  CMat t = psd_sqrt(m.sigma);
  std::vector<int> dims;
  auto apply_block = [&](const CMat& w) {
    const Eigen::Index grow = w.rows() / m.d_M;
    const Eigen::Index blocks = t.rows() / m.d_M;
    budget.check(static_cast<std::size_t>(blocks) * static_cast<std::size_t>(w.rows()) *
                     static_cast<std::size_t>(t.cols()),
                 "chain_factor");
    CMat next(blocks * w.rows(), t.cols());
    for (Eigen::Index b = 0; b < blocks; ++b)
      next.block(b * w.rows(), 0, w.rows(), t.cols()) = w * t.block(b * m.d_M, 0, m.d_M, t.cols());
    t = std::move(next);
    return grow;
  };
  for (const Segment& seg : segments) {
    if (seg.tilde) {
      if (!ctx) throw ResourceError("chain_factor: tilde segment requires context");
      const CMat w = seg.compressed ? compressed_tilde_map(*ctx, *seg.tilde)
                                    : tilde_dense(*ctx, *seg.tilde, budget);
      dims.push_back(static_cast<int>(apply_block(w)));
    } else {
      long long d = 1;
      for (int k = 0; k < seg.n_spins; ++k) {
        apply_block(m.v);
        d *= m.d_s;
      }
      dims.push_back(static_cast<int>(d));
    }
  }
  // fold the memory factor into the columns
  const Eigen::Index dsp = t.rows() / m.d_M;
  StateFactor f;
  f.dims = dims;
  f.f = CMat(dsp, t.cols() * m.d_M);
  for (Eigen::Index a = 0; a < dsp; ++a)
    for (Eigen::Index c = 0; c < t.cols(); ++c)
      for (int mm = 0; mm < m.d_M; ++mm) f.f(a, c * m.d_M + mm) = t(a * m.d_M + mm, c);
  return f;
}

double qcmi_of_partition(const CMat& rho, const std::vector<int>& dims,
                         const std::vector<int>& set_a, const std::vector<int>& set_b,
                         const std::vector<int>& set_c) {
  auto entropy_of = [&](std::vector<int> keep) {
    std::sort(keep.begin(), keep.end());
    const CMat r = partial_trace(rho, dims, keep);
    Eigen::SelfAdjointEigenSolver<CMat> es((r + r.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double l = es.eigenvalues()(i);
      if (l > 0.0) s -= l * std::log(l);
    }
    return s;
  };
  std::vector<int> ab(set_a), bc(set_b), abc(set_a);
  ab.insert(ab.end(), set_b.begin(), set_b.end());
  bc.insert(bc.end(), set_c.begin(), set_c.end());
  abc.insert(abc.end(), set_b.begin(), set_b.end());
  abc.insert(abc.end(), set_c.begin(), set_c.end());
  return entropy_of(ab) + entropy_of(bc) - entropy_of(abc) - entropy_of(set_b);
}

QmcApproximation build_qmc(const PgfcsModel& m, const Tripartition& part,
                           const BufferContext& ctx, const TildeIsometry& tilde,
                           const Budget& budget) {
  if (ctx.n_b != part.n_b) throw DimensionError("build_qmc: context buffer size mismatch");
  QmcApproximation out;
  out.part = part;
  out.tilde = tilde;
  out.iso_error = iso_op_error(ctx, tilde);
  out.bound = bound_estimate(ctx.fit, m.d_M, m.d_s, part.n_a, part.n_b);

  out.rho_factor = chain_factor(m, {{part.n_a}, {part.n_b}, {part.n_c}}, nullptr, budget);
  Segment sb;
  sb.tilde = &tilde;
  out.tilde_factor = chain_factor(m, {{part.n_a}, sb, {part.n_c}}, &ctx, budget);
  out.trace_error = trace_norm_diff_factored(out.rho_factor.f, out.tilde_factor.f);

  const std::size_t dsp = static_cast<std::size_t>(out.tilde_factor.f.rows());
  if (dsp * dsp <= budget.max_entries)
    out.tilde_rho = out.tilde_factor.f * out.tilde_factor.f.adjoint();

  Segment sc;
  sc.tilde = &tilde;
  sc.compressed = true;
  const StateFactor fc = chain_factor(m, {{part.n_a}, sc, {part.n_c}}, &ctx, budget);
  const CMat rho_c = fc.f * fc.f.adjoint();
  out.qmc_qcmi = qcmi_of_partition(rho_c, fc.dims, {0}, {1}, {2});
  return out;
}

double qmc_qcmi_compressed(const PgfcsModel& m, const Tripartition& part,
                           const BufferContext& ctx, const TildeIsometry& tilde,
                           const Budget& budget) {
  Segment sc;
  sc.tilde = &tilde;
  sc.compressed = true;
  const StateFactor fc = chain_factor(m, {{part.n_a}, sc, {part.n_c}}, &ctx, budget);
  const CMat rho_c = fc.f * fc.f.adjoint();
  return qcmi_of_partition(rho_c, fc.dims, {0}, {1}, {2});
}

DisconnectedQmc build_qmc_disconnected(const PgfcsModel& m, const DisconnectedParts& parts,
                                       const BufferContext& ctx1, const TildeIsometry& t1,
                                       const BufferContext& ctx2, const TildeIsometry& t2,
                                       const Budget& budget) {
  if (ctx1.n_b != parts.n_b1 || ctx2.n_b != parts.n_b2)
    throw DimensionError("build_qmc_disconnected: context buffer size mismatch");
  DisconnectedQmc out;
  out.parts = parts;
  out.iso_error_1 = iso_op_error(ctx1, t1);
  out.iso_error_2 = iso_op_error(ctx2, t2);

  const StateFactor ftrue = chain_factor(
      m, {{parts.n_a1}, {parts.n_b1}, {parts.n_c}, {parts.n_b2}, {parts.n_a2}}, nullptr, budget);
  const CMat w1 = tilde_dense(ctx1, t1, budget);
  const CMat w2 = tilde_dense(ctx2, t2, budget);
  // chain_factor only takes one context; build the five-segment factor manually
  CMat t = psd_sqrt(m.sigma);
  std::vector<int> dims;
  auto apply_block = [&](const CMat& w) {
    const Eigen::Index blocks = t.rows() / m.d_M;
    budget.check(static_cast<std::size_t>(blocks) * static_cast<std::size_t>(w.rows()) *
                     static_cast<std::size_t>(t.cols()),
                 "build_qmc_disconnected");
    CMat next(blocks * w.rows(), t.cols());
    for (Eigen::Index b = 0; b < blocks; ++b)
      next.block(b * w.rows(), 0, w.rows(), t.cols()) = w * t.block(b * m.d_M, 0, m.d_M, t.cols());
    t = std::move(next);
  };
  auto plain = [&](int n) {
    long long d = 1;
    for (int k = 0; k < n; ++k) {
      apply_block(m.v);
      d *= m.d_s;
    }
    dims.push_back(static_cast<int>(d));
  };
  plain(parts.n_a1);
  apply_block(w1);
  dims.push_back(static_cast<int>(w1.rows() / m.d_M));
  plain(parts.n_c);
  apply_block(w2);
  dims.push_back(static_cast<int>(w2.rows() / m.d_M));
  plain(parts.n_a2);
  const Eigen::Index dsp = t.rows() / m.d_M;
  CMat ft(dsp, t.cols() * m.d_M);
  for (Eigen::Index a = 0; a < dsp; ++a)
    for (Eigen::Index c = 0; c < t.cols(); ++c)
      for (int mm = 0; mm < m.d_M; ++mm) ft(a, c * m.d_M + mm) = t(a * m.d_M + mm, c);
  out.trace_error = trace_norm_diff_factored(ftrue.f, ft);

  // compressed check of the Markov property with A = (A1, A2), B = (b1, b2), C = C
  CMat tc = psd_sqrt(m.sigma);
  std::vector<int> cdims;
  auto apply_block_c = [&](const CMat& w) {
    const Eigen::Index blocks = tc.rows() / m.d_M;
    CMat next(blocks * w.rows(), tc.cols());
    for (Eigen::Index b = 0; b < blocks; ++b)
      next.block(b * w.rows(), 0, w.rows(), tc.cols()) = w * tc.block(b * m.d_M, 0, m.d_M, tc.cols());
    tc = std::move(next);
  };
  auto plain_c = [&](int n) {
    long long d = 1;
    for (int k = 0; k < n; ++k) {
      apply_block_c(m.v);
      d *= m.d_s;
    }
    cdims.push_back(static_cast<int>(d));
  };
  plain_c(parts.n_a1);
  apply_block_c(compressed_tilde_map(ctx1, t1));
  cdims.push_back(t1.k());
  plain_c(parts.n_c);
  apply_block_c(compressed_tilde_map(ctx2, t2));
  cdims.push_back(t2.k());
  plain_c(parts.n_a2);
  const Eigen::Index dcp = tc.rows() / m.d_M;
  CMat fc(dcp, tc.cols() * m.d_M);
  for (Eigen::Index a = 0; a < dcp; ++a)
    for (Eigen::Index c = 0; c < tc.cols(); ++c)
      for (int mm = 0; mm < m.d_M; ++mm) fc(a, c * m.d_M + mm) = tc(a * m.d_M + mm, c);
  const CMat rho_c = fc * fc.adjoint();
  out.qmc_qcmi = qcmi_of_partition(rho_c, cdims, {0, 4}, {1, 3}, {2});

  const DecayFit& fit = ctx1.fit;
  if (!fit.skipped && fit.nu > 0.0 && fit.nu < 1.0) {
    const int dac = std::min(parts.n_b1, parts.n_b2);
    out.predicted_error = 8.0 * std::sqrt(m.d_M * fit.c) * std::pow(fit.nu, 0.5 * dac);
  }
  return out;
}

}  // namespace pgfcs
