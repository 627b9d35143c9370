#include "pgfcs/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace pgfcs {

namespace {

// factor of a PSD matrix: rho = L L^+, columns spanning the support
CMat psd_factor(const CMat& rho, double tol = 1e-12) {
  HermEig e = eig_hermitian(rho, 1e-8);
  const double scale = std::max(1e-300, e.eigenvalues.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i)
    if (e.eigenvalues(i) > tol * scale) keep.push_back(i);
  CMat l(rho.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    l.col(static_cast<Eigen::Index>(k)) =
        e.eigenvectors.col(keep[k]) * std::sqrt(e.eigenvalues(keep[k]));
  return l;
}

// support basis and eigenvalues of F F^+ from a thin factor
void factor_spectral(const CMat& f, double cutoff_rel, CMat& basis, RVec& eigs) {
  Eigen::JacobiSVD<CMat> svd(f, Eigen::ComputeThinU);
  const RVec s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) * s(i) > cutoff_rel * smax * smax) keep.push_back(i);
  basis = CMat(f.rows(), static_cast<Eigen::Index>(keep.size()));
  eigs = RVec(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    basis.col(static_cast<Eigen::Index>(k)) = svd.matrixU().col(keep[k]);
    eigs(static_cast<Eigen::Index>(k)) = s(keep[k]) * s(keep[k]);
  }
}

}  // namespace

RecoveryChannel make_petz_factored(const CMat& f_b, const CMat& f_bc, int dim_b, int dim_c,
                                   double cutoff_rel, const CMat* tau_c) {
  if (f_b.rows() != dim_b || f_bc.rows() != static_cast<Eigen::Index>(dim_b) * dim_c)
    throw DimensionError("make_petz_factored: factor dimensions mismatch");
  RecoveryChannel rc;
  rc.kind = RecoveryKind::petz;
  rc.dim_b = dim_b;
  rc.dim_c = dim_c;
  RVec eb;
  factor_spectral(f_b, cutoff_rel, rc.b_basis, eb);
  rc.cutoff = cutoff_rel * (eb.size() ? eb.maxCoeff() : 0.0);
  rc.b_inv_sqrt = eb;
  for (Eigen::Index i = 0; i < eb.size(); ++i) rc.b_inv_sqrt(i) = 1.0 / std::sqrt(eb(i));
  RVec ebc;
  factor_spectral(f_bc, cutoff_rel, rc.bc_basis, ebc);
  rc.bc_sqrt = ebc;
  for (Eigen::Index i = 0; i < ebc.size(); ++i) rc.bc_sqrt(i) = std::sqrt(ebc(i));
  rc.tau_c_factor = tau_c ? psd_factor(*tau_c)
                          : CMat::Identity(dim_c, dim_c) / std::sqrt(static_cast<double>(dim_c));
  return rc;
}

RecoveryChannel make_petz(const CMat& rho_b, const CMat& rho_bc, int dim_b, int dim_c,
                          double cutoff_rel, const CMat* tau_c) {
  return make_petz_factored(psd_factor(rho_b, 1e-15), psd_factor(rho_bc, 1e-15), dim_b, dim_c,
                            cutoff_rel, tau_c);
}

RecoveryChannel petz_from_qmc(const QmcApproximation& qmc, const Budget& budget,
                              const CMat* tau_c) {
  const StateFactor& f = qmc.tilde_factor;
  if (f.dims.size() != 3) throw DimensionError("petz_from_qmc: expected a tripartite factor");
  StateFactor fb = partial_trace_factored(f, {1}, budget);
  StateFactor fbc = partial_trace_factored(f, {1, 2}, budget);
  return make_petz_factored(fb.f, fbc.f, f.dims[1], f.dims[2], 1e-12, tau_c);
}

RecoveryChannel make_structural(const BufferContext& ctx, const TildeIsometry& t,
                                const Tripartition& part, const Budget& budget,
                                const CMat* tau_c) {
  RecoveryChannel rc;
  rc.kind = RecoveryKind::structural;
  if (ctx.dim_b < 0) throw ResourceError("make_structural: buffer dimension overflow");
  rc.dim_b = static_cast<int>(ctx.dim_b);
  const long long dim_c = static_cast<long long>(std::llround(std::pow(ctx.d_s, part.n_c)));
  rc.dim_c = static_cast<int>(dim_c);

  const CMat xi = materialize_xi(ctx, t, budget);
  rc.iso = xi.adjoint();  // rows <xi_t|

  // compressed rho_tilde to read off block weights and b^r C marginals
  Segment sc;
  sc.tilde = &t;
  sc.compressed = true;
  const StateFactor fc = chain_factor(ctx.model, {{part.n_a}, sc, {part.n_c}}, &ctx, budget);
  const CMat rho_c = fc.f * fc.f.adjoint();
  const int da = fc.dims[0], K = fc.dims[1], dc = fc.dims[2];

  std::map<std::pair<int, int>, std::vector<int>> groups;
  for (int k = 0; k < t.k(); ++k)
    groups[{t.labels[static_cast<std::size_t>(k)].comp, t.labels[static_cast<std::size_t>(k)].cyc}]
        .push_back(k);
  for (auto& [key, ts] : groups) {
    RecoveryChannel::Block blk;
    for (int k : ts) {
      const XiLabel& l = t.labels[static_cast<std::size_t>(k)];
      if (std::find(blk.j_modes.begin(), blk.j_modes.end(), l.j) == blk.j_modes.end())
        blk.j_modes.push_back(l.j);
      if (std::find(blk.i_modes.begin(), blk.i_modes.end(), l.i) == blk.i_modes.end())
        blk.i_modes.push_back(l.i);
    }
    std::sort(blk.j_modes.begin(), blk.j_modes.end());
    std::sort(blk.i_modes.begin(), blk.i_modes.end());
    const int nj = static_cast<int>(blk.j_modes.size());
    const int ni = static_cast<int>(blk.i_modes.size());
    blk.t_grid.assign(static_cast<std::size_t>(nj), std::vector<int>(static_cast<std::size_t>(ni), -1));
    for (int k : ts) {
      const XiLabel& l = t.labels[static_cast<std::size_t>(k)];
      const int jp = static_cast<int>(std::find(blk.j_modes.begin(), blk.j_modes.end(), l.j) -
                                      blk.j_modes.begin());
      const int ipos = static_cast<int>(std::find(blk.i_modes.begin(), blk.i_modes.end(), l.i) -
                                        blk.i_modes.begin());
      blk.t_grid[static_cast<std::size_t>(jp)][static_cast<std::size_t>(ipos)] = k;
    }
    for (const auto& row : blk.t_grid)
      for (int v : row)
        if (v < 0) throw StructureError("make_structural: xi labels do not fill a product grid");

    // marginal on b^r (x) C: trace A and b^l out of the block
    CMat marg = CMat::Zero(static_cast<Eigen::Index>(ni) * dc, static_cast<Eigen::Index>(ni) * dc);
    for (int ip = 0; ip < ni; ++ip)
      for (int ipp = 0; ipp < ni; ++ipp)
        for (int c = 0; c < dc; ++c)
          for (int cp = 0; cp < dc; ++cp) {
            Complex acc = 0;
            for (int a = 0; a < da; ++a)
              for (int jp = 0; jp < nj; ++jp) {
                const int trow = blk.t_grid[static_cast<std::size_t>(jp)][static_cast<std::size_t>(ip)];
                const int tcol = blk.t_grid[static_cast<std::size_t>(jp)][static_cast<std::size_t>(ipp)];
                acc += rho_c((static_cast<Eigen::Index>(a) * K + trow) * dc + c,
                             (static_cast<Eigen::Index>(a) * K + tcol) * dc + cp);
              }
            marg(static_cast<Eigen::Index>(ip) * dc + c, static_cast<Eigen::Index>(ipp) * dc + cp) = acc;
          }
    blk.weight = marg.trace().real();
    if (blk.weight <= 1e-14) throw StructureError("make_structural: block weight vanishes");
    marg /= blk.weight;
    blk.marg_factor = psd_factor(marg);
    rc.blocks.push_back(std::move(blk));
  }
  rc.tau_c_factor = tau_c ? psd_factor(*tau_c)
                          : CMat::Identity(rc.dim_c, rc.dim_c) /
                                std::sqrt(static_cast<double>(rc.dim_c));
  return rc;
}

namespace {

// (1_A (x) M) F with M acting on the trailing B factor of row index (a, b)
CMat apply_on_b(const CMat& f, Eigen::Index da, Eigen::Index db,
                const std::function<CMat(const CMat&)>& op) {
  CMat out;
  for (Eigen::Index a = 0; a < da; ++a) {
    const CMat blk = op(f.block(a * db, 0, db, f.cols()));
    if (out.size() == 0) out = CMat::Zero(da * blk.rows(), f.cols());
    out.block(a * blk.rows(), 0, blk.rows(), f.cols()) = blk;
  }
  return out;
}

}  // namespace

CMat recover_factored(const RecoveryChannel& rc, const CMat& f_ab, int dim_a,
                      const Budget& budget) {
  const Eigen::Index da = dim_a;
  const Eigen::Index db = rc.dim_b, dc = rc.dim_c;
  if (f_ab.rows() != da * db) throw DimensionError("recover_factored: row mismatch");
  const Eigen::Index r = f_ab.cols();

  if (rc.kind == RecoveryKind::petz) {
    // support part: (1_A (x) rho_B^{-1/2}) F
    const CMat fs = apply_on_b(f_ab, da, db, [&](const CMat& blk) {
      return CMat(rc.b_basis * (rc.b_inv_sqrt.asDiagonal() * (rc.b_basis.adjoint() * blk)));
    });
    // embed (x) 1_C, then rho_BC^{1/2} on the BC part
    budget.check(static_cast<std::size_t>(da * db * dc) * static_cast<std::size_t>(r * dc),
                 "recover_factored");
    CMat t = CMat::Zero(da * db * dc, r * dc);
    for (Eigen::Index a = 0; a < da; ++a) {
      CMat blk = CMat::Zero(db * dc, r * dc);
      for (Eigen::Index b = 0; b < db; ++b)
        for (Eigen::Index col = 0; col < r; ++col) {
          const Complex w = fs(a * db + b, col);
          if (w == Complex(0, 0)) continue;
          for (Eigen::Index c = 0; c < dc; ++c) blk(b * dc + c, col * dc + c) = w;
        }
      t.block(a * db * dc, 0, db * dc, r * dc) =
          rc.bc_basis * (rc.bc_sqrt.asDiagonal() * (rc.bc_basis.adjoint() * blk));
    }
    // complement part
    const CMat fp = apply_on_b(f_ab, da, db, [&](const CMat& blk) {
      return CMat(blk - rc.b_basis * (rc.b_basis.adjoint() * blk));
    });
    const Eigen::Index rt = rc.tau_c_factor.cols();
    CMat t2 = CMat::Zero(da * db * dc, r * rt);
    for (Eigen::Index a = 0; a < da; ++a)
      for (Eigen::Index b = 0; b < db; ++b)
        for (Eigen::Index col = 0; col < r; ++col) {
          const Complex w = fp(a * db + b, col);
          if (w == Complex(0, 0)) continue;
          for (Eigen::Index c = 0; c < dc; ++c)
            for (Eigen::Index l = 0; l < rt; ++l)
              t2((a * db + b) * dc + c, col * rt + l) = w * rc.tau_c_factor(c, l);
        }
    CMat out(da * db * dc, t.cols() + t2.cols());
    out.leftCols(t.cols()) = t;
    out.rightCols(t2.cols()) = t2;
    return out;
  }

  // structural
  const Eigen::Index K = rc.iso.rows();
  const CMat g = apply_on_b(f_ab, da, db, [&](const CMat& blk) { return CMat(rc.iso * blk); });
  std::vector<CMat> parts;
  for (const auto& blk : rc.blocks) {
    const int nj = static_cast<int>(blk.j_modes.size());
    const int ni = static_cast<int>(blk.i_modes.size());
    const Eigen::Index rm = blk.marg_factor.cols();
    // z factor on A (x) b^l with the b^r index folded into columns
    CMat zf(da * nj, r * ni);
    for (Eigen::Index a = 0; a < da; ++a)
      for (int jp = 0; jp < nj; ++jp)
        for (Eigen::Index col = 0; col < r; ++col)
          for (int ip = 0; ip < ni; ++ip)
            zf(a * nj + jp, col * ni + ip) =
                g(a * K + blk.t_grid[static_cast<std::size_t>(jp)][static_cast<std::size_t>(ip)], col);
    // tensor with the marginal factor in compressed coordinates (a, t, c)
    CMat pc = CMat::Zero(da * K * dc, zf.cols() * rm);
    for (Eigen::Index a = 0; a < da; ++a)
      for (int jp = 0; jp < nj; ++jp)
        for (int ip = 0; ip < ni; ++ip) {
          const int trow = blk.t_grid[static_cast<std::size_t>(jp)][static_cast<std::size_t>(ip)];
          for (Eigen::Index zc = 0; zc < zf.cols(); ++zc) {
            const Complex zv = zf(a * nj + jp, zc);
            if (zv == Complex(0, 0)) continue;
            for (Eigen::Index c = 0; c < dc; ++c)
              for (Eigen::Index l = 0; l < rm; ++l)
                pc((a * K + trow) * dc + c, zc * rm + l) +=
                    zv * blk.marg_factor(static_cast<Eigen::Index>(ip) * dc + c, l);
          }
        }
    // lift the compressed B index back through iso^+
    CMat part = CMat::Zero(da * db * dc, pc.cols());
    const CMat lift = rc.iso.adjoint();  // db x K
    for (Eigen::Index a = 0; a < da; ++a) {
      // rows (t, c) -> (b, c): multiply by lift on the t index
      CMat sub = pc.block(a * K * dc, 0, K * dc, pc.cols());
      CMat res = CMat::Zero(db * dc, pc.cols());
      for (Eigen::Index tt = 0; tt < K; ++tt)
        for (Eigen::Index b = 0; b < db; ++b) {
          const Complex lw = lift(b, tt);
          if (lw == Complex(0, 0)) continue;
          res.block(b * dc, 0, dc, pc.cols()) += lw * sub.block(tt * dc, 0, dc, pc.cols());
        }
      part.block(a * db * dc, 0, db * dc, pc.cols()) = res;
    }
    parts.push_back(std::move(part));
  }
  // complement embedding
  const CMat fp = apply_on_b(f_ab, da, db, [&](const CMat& blk) {
    return CMat(blk - rc.iso.adjoint() * (rc.iso * blk));
  });
  const Eigen::Index rt = rc.tau_c_factor.cols();
  CMat t2 = CMat::Zero(da * db * dc, r * rt);
  for (Eigen::Index a = 0; a < da; ++a)
    for (Eigen::Index b = 0; b < db; ++b)
      for (Eigen::Index col = 0; col < r; ++col) {
        const Complex w = fp(a * db + b, col);
        if (w == Complex(0, 0)) continue;
        for (Eigen::Index c = 0; c < dc; ++c)
          for (Eigen::Index l = 0; l < rt; ++l)
            t2((a * db + b) * dc + c, col * rt + l) = w * rc.tau_c_factor(c, l);
      }
  parts.push_back(std::move(t2));
  Eigen::Index cols = 0;
  for (const auto& p : parts) cols += p.cols();
  CMat out(da * db * dc, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p;
    at += p.cols();
  }
  return out;
}

namespace {

void require_psd_input(const CMat& x, const char* who) {
  const double scale = std::max(1.0, x.norm());
  if ((x - x.adjoint()).norm() > 1e-8 * scale)
    throw NotPsdError(std::string(who) + ": input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMat> es((x + x.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8 * scale)
    throw NotPsdError(std::string(who) + ": input is not positive semidefinite");
}

}  // namespace

CMat petz_apply(const RecoveryChannel& rc, const CMat& x_ab, bool validate_input) {
  if (rc.kind != RecoveryKind::petz) throw ValidationError("petz_apply: channel is not a Petz map");
  const Eigen::Index dab = x_ab.rows();
  if (x_ab.cols() != dab || dab % rc.dim_b != 0)
    throw DimensionError("petz_apply: input must act on A (x) B");
  if (validate_input) require_psd_input(x_ab, "petz_apply");
  const Eigen::Index da = dab / rc.dim_b;
  const Eigen::Index db = rc.dim_b, dc = rc.dim_c;

  const CMat p_supp = rc.b_basis * rc.b_basis.adjoint();
  const CMat m12 = rc.b_basis * rc.b_inv_sqrt.asDiagonal() * rc.b_basis.adjoint();
  const CMat bc12 = rc.bc_basis * rc.bc_sqrt.asDiagonal() * rc.bc_basis.adjoint();

  CMat psl = CMat::Zero(dab, dab), ppl = CMat::Zero(dab, dab), m12l = CMat::Zero(dab, dab);
  for (Eigen::Index a = 0; a < da; ++a) {
    psl.block(a * db, a * db, db, db) = p_supp;
    ppl.block(a * db, a * db, db, db) = CMat::Identity(db, db) - p_supp;
    m12l.block(a * db, a * db, db, db) = m12;
  }
  const CMat y = m12l * (psl * x_ab * psl) * m12l;
  const CMat xp = ppl * x_ab * ppl;

  CMat out = CMat::Zero(dab * dc, dab * dc);
  for (Eigen::Index a = 0; a < da; ++a)
    for (Eigen::Index ap = 0; ap < da; ++ap) {
      CMat blk = CMat::Zero(db * dc, db * dc);
      for (Eigen::Index b = 0; b < db; ++b)
        for (Eigen::Index bp = 0; bp < db; ++bp)
          for (Eigen::Index c = 0; c < dc; ++c)
            blk(b * dc + c, bp * dc + c) = y(a * db + b, ap * db + bp);
      out.block(a * db * dc, ap * db * dc, db * dc, db * dc) = bc12 * blk * bc12;
    }

  const CMat tau = rc.tau_c_factor * rc.tau_c_factor.adjoint();
  for (Eigen::Index a = 0; a < da; ++a)
    for (Eigen::Index ap = 0; ap < da; ++ap)
      for (Eigen::Index b = 0; b < db; ++b)
        for (Eigen::Index bp = 0; bp < db; ++bp) {
          const Complex w = xp(a * db + b, ap * db + bp);
          if (w == Complex(0, 0)) continue;
          for (Eigen::Index c = 0; c < dc; ++c)
            for (Eigen::Index cp = 0; cp < dc; ++cp)
              out((a * db + b) * dc + c, (ap * db + bp) * dc + cp) += w * tau(c, cp);
        }
  return out;
}

CMat structural_apply(const RecoveryChannel& rc, const CMat& x_ab, bool validate_input) {
  if (rc.kind != RecoveryKind::structural)
    throw ValidationError("structural_apply: channel is not structural");
  const Eigen::Index dab = x_ab.rows();
  if (x_ab.cols() != dab || dab % rc.dim_b != 0)
    throw DimensionError("structural_apply: input must act on A (x) B");
  if (validate_input) require_psd_input(x_ab, "structural_apply");
  const Eigen::Index da = dab / rc.dim_b;
  const Eigen::Index db = rc.dim_b, dc = rc.dim_c;
  const Eigen::Index K = rc.iso.rows();

  CMat lift = CMat::Zero(da * K, dab);
  for (Eigen::Index a = 0; a < da; ++a) lift.block(a * K, a * db, K, db) = rc.iso;
  const CMat y = lift * x_ab * lift.adjoint();

  CMat out = CMat::Zero(dab * dc, dab * dc);
  const CMat iso_dag = rc.iso.adjoint();
  for (const auto& blk : rc.blocks) {
    const int nj = static_cast<int>(blk.j_modes.size());
    const int ni = static_cast<int>(blk.i_modes.size());
    CMat z = CMat::Zero(da * nj, da * nj);
    for (Eigen::Index a = 0; a < da; ++a)
      for (Eigen::Index ap = 0; ap < da; ++ap)
        for (int jp = 0; jp < nj; ++jp)
          for (int jpp = 0; jpp < nj; ++jpp) {
            Complex acc = 0;
            for (int ip = 0; ip < ni; ++ip)
              acc += y(a * K + blk.t_grid[static_cast<std::size_t>(jp)][static_cast<std::size_t>(ip)],
                       ap * K + blk.t_grid[static_cast<std::size_t>(jpp)][static_cast<std::size_t>(ip)]);
            z(a * nj + jp, ap * nj + jpp) = acc;
          }
    const CMat marg = blk.marg_factor * blk.marg_factor.adjoint();
    for (Eigen::Index a = 0; a < da; ++a)
      for (Eigen::Index ap = 0; ap < da; ++ap)
        for (int jp = 0; jp < nj; ++jp)
          for (int jpp = 0; jpp < nj; ++jpp) {
            const Complex zt = z(a * nj + jp, ap * nj + jpp);
            if (zt == Complex(0, 0)) continue;
            for (int ip = 0; ip < ni; ++ip)
              for (int ipp = 0; ipp < ni; ++ipp) {
                const int trow = blk.t_grid[static_cast<std::size_t>(jp)][static_cast<std::size_t>(ip)];
                const int tcol = blk.t_grid[static_cast<std::size_t>(jpp)][static_cast<std::size_t>(ipp)];
                for (Eigen::Index c = 0; c < dc; ++c)
                  for (Eigen::Index cp = 0; cp < dc; ++cp) {
                    const Complex w = zt * marg(static_cast<Eigen::Index>(ip) * dc + c,
                                                static_cast<Eigen::Index>(ipp) * dc + cp);
                    if (w == Complex(0, 0)) continue;
                    for (Eigen::Index b = 0; b < db; ++b) {
                      const Complex lb = iso_dag(b, trow);
                      if (lb == Complex(0, 0)) continue;
                      for (Eigen::Index bp = 0; bp < db; ++bp)
                        out((a * db + b) * dc + c, (ap * db + bp) * dc + cp) +=
                            w * lb * std::conj(iso_dag(bp, tcol));
                    }
                  }
              }
          }
  }

  const CMat p_supp = rc.iso.adjoint() * rc.iso;
  CMat pp = CMat::Zero(dab, dab);
  for (Eigen::Index a = 0; a < da; ++a)
    pp.block(a * db, a * db, db, db) = CMat::Identity(db, db) - p_supp;
  const CMat xp = pp * x_ab * pp;
  const CMat tau = rc.tau_c_factor * rc.tau_c_factor.adjoint();
  for (Eigen::Index rr = 0; rr < dab; ++rr)
    for (Eigen::Index cc = 0; cc < dab; ++cc) {
      const Complex w = xp(rr, cc);
      if (w == Complex(0, 0)) continue;
      for (Eigen::Index c = 0; c < dc; ++c)
        for (Eigen::Index cp = 0; cp < dc; ++cp) out(rr * dc + c, cc * dc + cp) += w * tau(c, cp);
    }
  return out;
}

CMat recover(const RecoveryChannel& rc, const CMat& x_ab, bool validate_input) {
  return rc.kind == RecoveryKind::petz ? petz_apply(rc, x_ab, validate_input)
                                       : structural_apply(rc, x_ab, validate_input);
}

double recovery_error(const CMat& rho_abc, const CMat& recovered) {
  if (rho_abc.rows() != recovered.rows() || rho_abc.cols() != recovered.cols())
    throw DimensionError("recovery_error: dimension mismatch");
  return trace_norm_hermitian(rho_abc - recovered);
}

CMat recovery_choi(const RecoveryChannel& rc, const Budget& budget) {
  const Eigen::Index db = rc.dim_b, dc = rc.dim_c;
  const Eigen::Index dout = db * dc;
  budget.check(static_cast<std::size_t>(db * dout) * static_cast<std::size_t>(db * dout),
               "recovery_choi");
  CMat choi = CMat::Zero(db * dout, db * dout);
  for (Eigen::Index b = 0; b < db; ++b)
    for (Eigen::Index bp = 0; bp < db; ++bp) {
      CMat unit = CMat::Zero(db, db);
      unit(b, bp) = 1.0;
      const CMat img = recover(rc, unit, false);  // linear action on units
      for (Eigen::Index o = 0; o < dout; ++o)
        for (Eigen::Index op = 0; op < dout; ++op)
          choi(b * dout + o, bp * dout + op) = img(o, op);
    }
  return choi;
}

}  // namespace pgfcs
