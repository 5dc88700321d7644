#include "stable_opinf/conic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "stable_opinf/error.h"

namespace stable_opinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2 = std::sqrt(2.0);

// Symmetric Kronecker matrix of Y -> Q Y Q in svec coordinates.
MatrixXd SymKron(const MatrixXd& Q) {
  const int n = static_cast<int>(Q.rows());
  const int len = n * (n + 1) / 2;
  MatrixXd out(len, len);
  int col = 0;
  for (int l = 0; l < n; ++l) {
    for (int k = l; k < n; ++k, ++col) {
      int row = 0;
      for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i, ++row) {
          double v;
          if (k == l) {
            v = Q(i, k) * Q(j, k);
          } else {
            v = (Q(i, k) * Q(j, l) + Q(i, l) * Q(j, k)) / kSqrt2;
          }
          if (i != j) v *= kSqrt2;
          out(row, col) = v;
        }
      }
    }
  }
  return out;
}

MatrixXd Jordan(const MatrixXd& U, const MatrixXd& V) {
  return 0.5 * (U * V + V * U);
}

// Smallest positive alpha with q(alpha) = c + 2 b alpha + a alpha^2 = 0,
// given c > 0; infinity when q stays positive.
double SocBoundary(double a, double b, double c) {
  if (a == 0.0) return b < 0.0 ? -c / (2.0 * b) : kInf;
  const double disc = b * b - a * c;
  if (disc < 0.0) return kInf;  // a > 0 and no real roots
  const double sq = std::sqrt(disc);
  // Roots: (-b -+ sq) / a, written to avoid cancellation.
  double r1, r2;
  if (b >= 0.0) {
    const double q = -(b + sq);
    r1 = q / a;
    r2 = c / q;
  } else {
    const double q = -b + sq;
    r1 = q / a;
    r2 = c / q;
  }
  double best = kInf;
  for (double r : {r1, r2}) {
    if (r > 0.0 && std::isfinite(r)) best = std::min(best, r);
  }
  return best;
}

// Per-cone data for one interior-point iteration.
struct Block {
  ConeType type;
  int off = 0;
  int len = 0;
  int dim = 0;
  std::vector<int> rows;  // rows of A touching this block
  MatrixXd a_sub;         // A(rows, off:off+len), dense

  // Scaling state.
  VectorXd lambda;
  VectorXd lp_d;  // LP: W = diag(lp_d)
  VectorXd soc_w;
  double soc_eta = 1.0;
  MatrixXd R, Rinv;  // PSD
  MatrixXd Hinv, H;

  int Degree() const {
    switch (type) {
      case ConeType::kFree:
        return 0;
      case ConeType::kNonneg:
        return len;
      case ConeType::kSoc:
        return 1;
      case ConeType::kPsd:
        return dim;
    }
    return 0;
  }

  VectorXd Identity() const {
    VectorXd e = VectorXd::Zero(len);
    if (type == ConeType::kNonneg) e.setOnes();
    if (type == ConeType::kSoc) e[0] = 1.0;
    if (type == ConeType::kPsd) {
      for (int i = 0; i < dim; ++i) e[svec_index(i, i, dim)] = 1.0;
    }
    return e;
  }

  VectorXd Product(const VectorXd& u, const VectorXd& v) const {
    switch (type) {
      case ConeType::kNonneg:
        return u.cwiseProduct(v);
      case ConeType::kSoc: {
        VectorXd out(len);
        out[0] = u.dot(v);
        out.tail(len - 1) = u[0] * v.tail(len - 1) + v[0] * u.tail(len - 1);
        return out;
      }
      case ConeType::kPsd:
        return svec(Jordan(smat(u, dim), smat(v, dim)));
      default:
        return VectorXd::Zero(len);
    }
  }

  // w with lambda o w = d.
  VectorXd Divide(const VectorXd& d) const {
    switch (type) {
      case ConeType::kNonneg:
        return d.cwiseQuotient(lambda);
      case ConeType::kSoc: {
        const double l0 = lambda[0];
        const auto l1 = lambda.tail(len - 1);
        const double rho = l0 * l0 - l1.squaredNorm();
        VectorXd w(len);
        w[0] = (l0 * d[0] - l1.dot(d.tail(len - 1))) / rho;
        w.tail(len - 1) = (d.tail(len - 1) - w[0] * l1) / l0;
        return w;
      }
      case ConeType::kPsd: {
        MatrixXd D = smat(d, dim);
        VectorXd ev(dim);
        for (int i = 0; i < dim; ++i) ev[i] = lambda[svec_index(i, i, dim)];
        for (int j = 0; j < dim; ++j) {
          for (int i = 0; i < dim; ++i) D(i, j) *= 2.0 / (ev[i] + ev[j]);
        }
        return svec(D);
      }
      default:
        return VectorXd::Zero(len);
    }
  }

  // W v.
  VectorXd ApplyW(const VectorXd& v) const {
    switch (type) {
      case ConeType::kNonneg:
        return lp_d.cwiseProduct(v);
      case ConeType::kSoc:
        return soc_eta * SocArrow(v);
      case ConeType::kPsd:
        return svec(Rinv * smat(v, dim) * Rinv.transpose());
      default:
        return v;
    }
  }
  // W' v.
  VectorXd ApplyWt(const VectorXd& v) const {
    if (type == ConeType::kPsd) {
      return svec(Rinv.transpose() * smat(v, dim) * Rinv);
    }
    return ApplyW(v);
  }
  // W^{-T} v.
  VectorXd ApplyWinvT(const VectorXd& v) const {
    switch (type) {
      case ConeType::kNonneg:
        return v.cwiseQuotient(lp_d);
      case ConeType::kSoc:
        return JApply(SocArrow(JApply(v))) / soc_eta;
      case ConeType::kPsd:
        return svec(R.transpose() * smat(v, dim) * R);
      default:
        return v;
    }
  }

  // [w0 w1'; w1 I + w1 w1' / (1 + w0)] v, whose square is 2ww' - J.
  VectorXd SocArrow(const VectorXd& v) const {
    const double w0 = soc_w[0];
    const auto w1 = soc_w.tail(len - 1);
    const double t = w1.dot(v.tail(len - 1));
    VectorXd out(len);
    out[0] = w0 * v[0] + t;
    out.tail(len - 1) = v.tail(len - 1) + (v[0] + t / (1.0 + w0)) * w1;
    return out;
  }

  VectorXd JApply(const VectorXd& v) const {
    VectorXd out = -v;
    out[0] = v[0];
    return out;
  }

  // Computes the NT scaling point of (x, s) and the dense H, H^{-1}.
  bool Scale(const VectorXd& x, const VectorXd& s) {
    switch (type) {
      case ConeType::kNonneg: {
        lp_d = (s.array() / x.array()).sqrt();
        lambda = (s.array() * x.array()).sqrt();
        H = lp_d.cwiseAbs2().asDiagonal();
        Hinv = lp_d.cwiseAbs2().cwiseInverse().asDiagonal();
        return lambda.allFinite();
      }
      case ConeType::kSoc: {
        const double xj = x[0] * x[0] - x.tail(len - 1).squaredNorm();
        const double sj = s[0] * s[0] - s.tail(len - 1).squaredNorm();
        if (!(xj > 0.0) || !(sj > 0.0)) return false;
        const VectorXd xb = x / std::sqrt(xj);
        const VectorXd sb = s / std::sqrt(sj);
        const double gamma = std::sqrt((1.0 + xb.dot(sb)) / 2.0);
        soc_w = (sb + JApply(xb)) / (2.0 * gamma);
        soc_eta = std::pow(sj / xj, 0.25);
        H = 2.0 * soc_w * soc_w.transpose();
        H.diagonal().array() += 1.0;
        H(0, 0) -= 2.0;
        H *= soc_eta * soc_eta;
        const VectorXd jw = JApply(soc_w);
        Hinv = 2.0 * jw * jw.transpose();
        Hinv.diagonal().array() += 1.0;
        Hinv(0, 0) -= 2.0;
        Hinv /= soc_eta * soc_eta;
        lambda = ApplyW(x);
        return lambda.allFinite();
      }
      case ConeType::kPsd: {
        Eigen::LLT<MatrixXd> lx(smat(x, dim));
        Eigen::LLT<MatrixXd> ls(smat(s, dim));
        if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) {
          return false;
        }
        const MatrixXd Lx = lx.matrixL();
        const MatrixXd Ls = ls.matrixL();
        Eigen::JacobiSVD<MatrixXd> svd(Ls.transpose() * Lx,
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
        const VectorXd sv = svd.singularValues();
        if (!(sv.minCoeff() > 0.0)) return false;
        const VectorXd isq = sv.cwiseSqrt().cwiseInverse();
        R = Lx * svd.matrixV() * isq.asDiagonal();
        Rinv = isq.asDiagonal() * svd.matrixU().transpose() * Ls.transpose();
        lambda = VectorXd::Zero(len);
        for (int i = 0; i < dim; ++i) lambda[svec_index(i, i, dim)] = sv[i];
        const MatrixXd Q = R * R.transpose();
        const MatrixXd P = Rinv.transpose() * Rinv;
        Hinv = SymKron(Q);
        H = SymKron(P);
        return R.allFinite() && Rinv.allFinite();
      }
      default:
        return true;
    }
  }

  // Largest step with v + alpha dv in the cone (v interior).
  double MaxStep(const VectorXd& v, const VectorXd& dv) const {
    switch (type) {
      case ConeType::kNonneg: {
        double a = kInf;
        for (int i = 0; i < len; ++i) {
          if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
        }
        return a;
      }
      case ConeType::kSoc: {
        const double a = dv[0] * dv[0] - dv.tail(len - 1).squaredNorm();
        const double b = v[0] * dv[0] - v.tail(len - 1).dot(dv.tail(len - 1));
        const double c = v[0] * v[0] - v.tail(len - 1).squaredNorm();
        return SocBoundary(a, b, c);
      }
      case ConeType::kPsd: {
        Eigen::LLT<MatrixXd> llt(smat(v, dim));
        if (llt.info() != Eigen::Success) return 0.0;
        MatrixXd T = llt.matrixL().solve(smat(dv, dim));
        T = llt.matrixL().solve(T.transpose()).transpose();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(T, Eigen::EigenvaluesOnly);
        const double mn = es.eigenvalues()[0];
        return mn >= 0.0 ? kInf : -1.0 / mn;
      }
      default:
        return kInf;
    }
  }
};

// Interior-point method on a problem without free variables, homogeneous
// self-dual embedding with Nesterov-Todd scaling and Mehrotra correction.
class Solver {
 public:
  Solver(const ConicProblem& p, const SolverSettings& settings)
      : settings_(settings) {
    m_ = p.num_rows();
    n_ = p.num_vars();
    row_scale_ = VectorXd::Zero(m_);
    for (int k = 0; k < p.A.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it) {
        row_scale_[it.row()] =
            std::max(row_scale_[it.row()], std::abs(it.value()));
      }
    }
    for (int i = 0; i < m_; ++i) {
      row_scale_[i] = row_scale_[i] > 0.0 ? 1.0 / row_scale_[i] : 1.0;
    }
    A_ = row_scale_.asDiagonal() * p.A;
    A_.makeCompressed();
    At_ = A_.transpose();
    b_ = row_scale_.cwiseProduct(p.b);
    c_ = p.c;

    const std::vector<int> offs = p.Offsets();
    for (std::size_t i = 0; i < p.cones.size(); ++i) {
      const ConeBlock& cb = p.cones[i];
      Block blk;
      blk.type = cb.type;
      blk.off = offs[i];
      blk.len = cb.length();
      blk.dim = cb.dim;
      const Eigen::SparseMatrix<double> cols = A_.middleCols(blk.off, blk.len);
      std::vector<int> touched;
      for (int k = 0; k < cols.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(cols, k); it; ++it) {
          touched.push_back(static_cast<int>(it.row()));
        }
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      blk.rows = touched;
      std::vector<int> local(m_, -1);
      for (std::size_t r = 0; r < touched.size(); ++r) local[touched[r]] = r;
      blk.a_sub = MatrixXd::Zero(touched.size(), blk.len);
      for (int k = 0; k < cols.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(cols, k); it; ++it) {
          blk.a_sub(local[it.row()], k) = it.value();
        }
      }
      nu_ += blk.Degree();
      blocks_.push_back(std::move(blk));
    }
  }

  ConicSolution Run();

 private:
  bool BuildKkt();
  // Solves [H A'; A 0] (dx, dy) = (r_x, r_y) with iterative refinement.
  void SolveKkt(const VectorXd& r_x, const VectorXd& r_y, VectorXd* dx,
                VectorXd* dy) const;
  void SolveOnce(const VectorXd& r_x, const VectorXd& r_y, VectorXd* dx,
                 VectorXd* dy) const;
  VectorXd ApplyHinv(const VectorXd& v) const;
  VectorXd ApplyH(const VectorXd& v) const;
  double MaxStep(const VectorXd& x, const VectorXd& dx, const VectorXd& s,
                 const VectorXd& ds) const;

  SolverSettings settings_;
  int m_ = 0, n_ = 0, nu_ = 0;
  VectorXd row_scale_;
  Eigen::SparseMatrix<double> A_, At_;
  VectorXd b_, c_;
  std::vector<Block> blocks_;
  Eigen::LLT<MatrixXd> schur_;
};

VectorXd Solver::ApplyHinv(const VectorXd& v) const {
  VectorXd out(n_);
  for (const auto& blk : blocks_) {
    out.segment(blk.off, blk.len) = blk.Hinv * v.segment(blk.off, blk.len);
  }
  return out;
}

VectorXd Solver::ApplyH(const VectorXd& v) const {
  VectorXd out(n_);
  for (const auto& blk : blocks_) {
    out.segment(blk.off, blk.len) = blk.H * v.segment(blk.off, blk.len);
  }
  return out;
}

// Schur complement A H^{-1} A' plus a small diagonal shift, which
// refinement removes again.
bool Solver::BuildKkt() {
  MatrixXd S = MatrixXd::Zero(m_, m_);
  for (const auto& blk : blocks_) {
    if (blk.rows.empty()) continue;
    const MatrixXd T = blk.a_sub * blk.Hinv;
    const MatrixXd Sb = T * blk.a_sub.transpose();
    for (std::size_t j = 0; j < blk.rows.size(); ++j) {
      for (std::size_t i = 0; i < blk.rows.size(); ++i) {
        S(blk.rows[i], blk.rows[j]) += Sb(i, j);
      }
    }
  }
  if (m_ == 0) return true;
  const double scale = std::max(S.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  double reg = 1e-14 * scale;
  for (int attempt = 0; attempt < 6; ++attempt, reg *= 100.0) {
    MatrixXd K = S;
    K.diagonal().array() += reg;
    schur_.compute(K);
    if (schur_.info() == Eigen::Success) return true;
  }
  return false;
}

void Solver::SolveOnce(const VectorXd& r_x, const VectorXd& r_y, VectorXd* dx,
                       VectorXd* dy) const {
  const VectorXd hr = ApplyHinv(r_x);
  if (m_ > 0) {
    *dy = schur_.solve(A_ * hr - r_y);
  } else {
    *dy = VectorXd::Zero(0);
  }
  *dx = ApplyHinv(r_x - At_ * (*dy));
}

void Solver::SolveKkt(const VectorXd& r_x, const VectorXd& r_y, VectorXd* dx,
                      VectorXd* dy) const {
  SolveOnce(r_x, r_y, dx, dy);
  const double rnorm = std::max(r_x.lpNorm<Eigen::Infinity>(),
                                r_y.lpNorm<Eigen::Infinity>());
  double prev = kInf;
  for (int iter = 0; iter < 10; ++iter) {
    const VectorXd ex = r_x - ApplyH(*dx) - At_ * (*dy);
    const VectorXd ey = r_y - A_ * (*dx);
    const double err = std::max(ex.lpNorm<Eigen::Infinity>(),
                                ey.lpNorm<Eigen::Infinity>());
    if (err <= 1e-15 * std::max(1.0, rnorm) || err > 0.5 * prev) break;
    prev = err;
    VectorXd cx, cy;
    SolveOnce(ex, ey, &cx, &cy);
    *dx += cx;
    *dy += cy;
  }
}

double Solver::MaxStep(const VectorXd& x, const VectorXd& dx,
                       const VectorXd& s, const VectorXd& ds) const {
  double a = kInf;
  for (const auto& blk : blocks_) {
    a = std::min(a, blk.MaxStep(x.segment(blk.off, blk.len),
                                dx.segment(blk.off, blk.len)));
    a = std::min(a, blk.MaxStep(s.segment(blk.off, blk.len),
                                ds.segment(blk.off, blk.len)));
  }
  return a;
}

ConicSolution Solver::Run() {
  ConicSolution sol;
  VectorXd x = VectorXd::Zero(n_), s = VectorXd::Zero(n_),
           y = VectorXd::Zero(m_);
  for (const auto& blk : blocks_) {
    x.segment(blk.off, blk.len) = blk.Identity();
    s.segment(blk.off, blk.len) = blk.Identity();
  }
  double tau = 1.0, kappa = 1.0;
  const double bnorm = std::max(1.0, b_.norm());
  const double cnorm = std::max(1.0, c_.norm());

  sol.status = SolveStatus::kMaxIter;
  struct Iterate {
    VectorXd x, s, y;
    double tau = 1.0, kappa = 1.0, merit = kInf, pres = kInf, dres = kInf,
           gap = kInf;
  } best;
  int since_best = 0;
  int iter = 0;
  for (;; ++iter) {
    const VectorXd rp = A_ * x - b_ * tau;
    const VectorXd aty = At_ * y;
    const VectorXd rd = -aty + c_ * tau - s;
    const double cx = c_.dot(x), by = b_.dot(y);
    const double rg = by - cx - kappa;
    const double gap = x.dot(s);
    const double mu = (gap + tau * kappa) / (nu_ + 1);

    const double pres = rp.norm() / tau / bnorm;
    const double dres = rd.norm() / tau / cnorm;
    const double pcost = cx / tau, dcost = by / tau;
    const double abs_gap = gap / (tau * tau);
    const double rel_gap =
        abs_gap / std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
    if (settings_.verbose) {
      std::fprintf(stderr,
                   "%3d pcost % .6e dcost % .6e gap %.2e pres %.2e dres %.2e "
                   "tau %.2e kappa %.2e\n",
                   iter, pcost, dcost, abs_gap, pres, dres, tau, kappa);
    }
    if (!x.allFinite() || !s.allFinite() || !y.allFinite()) {
      sol.status = SolveStatus::kNumericalError;
      break;
    }
    if (pres <= settings_.feas_tol && dres <= settings_.feas_tol &&
        rel_gap <= settings_.gap_tol) {
      sol.status = SolveStatus::kOptimal;
      break;
    }
    if (by > 0.0 && (aty + s).norm() / by <= settings_.feas_tol) {
      sol.status = SolveStatus::kPrimalInfeasible;
      break;
    }
    if (cx < 0.0 && (A_ * x).norm() / -cx <= settings_.feas_tol) {
      sol.status = SolveStatus::kDualInfeasible;
      break;
    }
    const double merit = std::max({pres, dres, rel_gap});
    if (merit < best.merit) {
      since_best = merit < 0.9 * best.merit ? 0 : since_best + 1;
      best = {x, s, y, tau, kappa, merit, pres, dres, rel_gap};
    } else {
      ++since_best;
    }
    // tau < kappa signals an infeasibility certificate forming; let it finish.
    if (tau >= kappa && (since_best >= 8 || merit > 1e3 * best.merit)) {
      sol.status = SolveStatus::kNumericalError;
      break;
    }
    if (iter >= settings_.max_iter) break;

    bool ok = true;
    for (auto& blk : blocks_) {
      ok = ok && blk.Scale(x.segment(blk.off, blk.len),
                           s.segment(blk.off, blk.len));
    }
    if (!ok || !BuildKkt()) {
      sol.status = SolveStatus::kNumericalError;
      break;
    }

    VectorXd x1, y1;
    SolveKkt(-c_, b_, &x1, &y1);
    const double denom_base = -b_.dot(y1) - c_.dot(x1);

    // (dx, dy, ds, dtau, dkappa) for a complementarity target.
    struct Dir {
      VectorXd dx, dy, ds;
      double dtau, dkappa;
    };
    auto direction = [&](double eta, const VectorXd& dc, double dk) {
      VectorXd rx = -eta * rd;
      VectorXd wt(n_);
      for (const auto& blk : blocks_) {
        const VectorXd w = blk.Divide(dc.segment(blk.off, blk.len));
        wt.segment(blk.off, blk.len) = w;
        rx.segment(blk.off, blk.len) += blk.ApplyWt(w);
      }
      VectorXd x2, y2;
      SolveKkt(rx, -eta * rp, &x2, &y2);
      Dir d;
      d.dtau = (-eta * rg + b_.dot(y2) + c_.dot(x2) + dk / tau) /
               (kappa / tau + denom_base);
      d.dx = x2 + d.dtau * x1;
      d.dy = -(y2 + d.dtau * y1);
      // From the linearized dual residual, which keeps it exact.
      d.ds = -(At_ * d.dy) + c_ * d.dtau + eta * rd;
      d.dkappa = (dk - kappa * d.dtau) / tau;
      return d;
    };
    auto step_to_boundary = [&](const Dir& d) {
      double a = MaxStep(x, d.dx, s, d.ds);
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    VectorXd lam_sq(n_), e(n_);
    for (const auto& blk : blocks_) {
      lam_sq.segment(blk.off, blk.len) = blk.Product(blk.lambda, blk.lambda);
      e.segment(blk.off, blk.len) = blk.Identity();
    }
    const Dir aff = direction(1.0, -lam_sq, -tau * kappa);
    const double alpha_aff = std::min(1.0, step_to_boundary(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);

    VectorXd dc = -lam_sq + sigma * mu * e;
    for (const auto& blk : blocks_) {
      const VectorXd wdx = blk.ApplyW(aff.dx.segment(blk.off, blk.len));
      const VectorXd wds = blk.ApplyWinvT(aff.ds.segment(blk.off, blk.len));
      dc.segment(blk.off, blk.len) -= blk.Product(wds, wdx);
    }
    const double dk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
    const Dir d = direction(1.0 - sigma, dc, dk);
    const double alpha = std::min(1.0, 0.99 * step_to_boundary(d));
    if (!(alpha > 0.0) || !d.dx.allFinite()) {
      sol.status = SolveStatus::kNumericalError;
      break;
    }
    x += alpha * d.dx;
    s += alpha * d.ds;
    y += alpha * d.dy;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
  }

  sol.iterations = iter;
  if (sol.status == SolveStatus::kNumericalError ||
      sol.status == SolveStatus::kMaxIter) {
    // Stalled, blew up or ran out of iterations: report the best iterate.
    if (best.merit < kInf) {
      x = best.x;
      s = best.s;
      y = best.y;
      tau = best.tau;
      kappa = best.kappa;
      if (best.pres <= settings_.reduced_feas_tol &&
          best.dres <= settings_.reduced_feas_tol &&
          best.gap <= settings_.reduced_gap_tol) {
        sol.status = SolveStatus::kAlmostOptimal;
      }
    }
  }
  if (sol.status == SolveStatus::kPrimalInfeasible) {
    sol.x = VectorXd::Zero(n_);
    sol.y = row_scale_.cwiseProduct(y) / b_.dot(y);
    sol.s = s / b_.dot(y);
  } else if (sol.status == SolveStatus::kDualInfeasible) {
    sol.x = x / -c_.dot(x);
    sol.y = VectorXd::Zero(m_);
    sol.s = VectorXd::Zero(n_);
  } else {
    sol.x = x / tau;
    sol.y = row_scale_.cwiseProduct(y) / tau;
    sol.s = s / tau;
  }
  return sol;
}

// Free variables are eliminated before the interior-point iterations.
// With A_f P = Q [R11 R12; 0 0] (column-pivoted QR, rank k), the rows
// Q1' A v = Q1' b fix the leading free variables in terms of the cone
// variables and the trailing ones are set to zero; the rows Q2' A v = Q2' b
// and the folded objective form a problem over cone variables only.
struct Presolve {
  std::vector<int> free_idx, cone_idx;
  MatrixXd Q1, Q2;   // m x k, m x (m - k)
  MatrixXd A_c;      // m x n_c, dense
  MatrixXd R11;      // k x k upper triangular
  Eigen::VectorXi perm;
  int rank = 0;
  VectorXd c1;       // permuted leading free costs
  VectorXd reduced_cost;  // cost along the free null directions
  ConicProblem reduced;
  VectorXd y_shift;  // Q1 R11^{-T} c1

  Presolve(const ConicProblem& p) {
    const std::vector<int> offs = p.Offsets();
    for (std::size_t i = 0; i < p.cones.size(); ++i) {
      const ConeBlock& cb = p.cones[i];
      for (int j = 0; j < cb.length(); ++j) {
        (cb.type == ConeType::kFree ? free_idx : cone_idx).push_back(offs[i] + j);
      }
      if (cb.type != ConeType::kFree) reduced.cones.push_back(cb);
    }
    const int m = p.num_rows();
    const int nf = static_cast<int>(free_idx.size());
    const int nc = static_cast<int>(cone_idx.size());
    const MatrixXd A = MatrixXd(p.A);
    MatrixXd A_f(m, nf);
    A_c.resize(m, nc);
    VectorXd c_f(nf), c_c(nc);
    for (int j = 0; j < nf; ++j) {
      A_f.col(j) = A.col(free_idx[j]);
      c_f[j] = p.c[free_idx[j]];
    }
    for (int j = 0; j < nc; ++j) {
      A_c.col(j) = A.col(cone_idx[j]);
      c_c[j] = p.c[cone_idx[j]];
    }
    MatrixXd Q = MatrixXd::Identity(m, m);
    MatrixXd Rfull(0, nf);
    perm = Eigen::VectorXi::LinSpaced(nf, 0, nf - 1);
    if (nf > 0 && m > 0) {
      Eigen::ColPivHouseholderQR<MatrixXd> qr(A_f);
      qr.setThreshold(1e-12);
      rank = static_cast<int>(qr.rank());
      Q = qr.householderQ();
      perm = qr.colsPermutation().indices();
      Rfull = qr.matrixR().topRows(rank).template triangularView<Eigen::Upper>();
    }
    Q1 = Q.leftCols(rank);
    Q2 = Q.rightCols(m - rank);
    R11 = Rfull.leftCols(rank);
    const MatrixXd R12 = Rfull.rightCols(nf - rank);
    VectorXd cp(nf);
    for (int j = 0; j < nf; ++j) cp[j] = c_f[perm[j]];
    c1 = cp.head(rank);
    // Dual multipliers forced by the free columns.
    const VectorXd u =
        R11.transpose().triangularView<Eigen::Lower>().solve(c1);
    y_shift = Q1 * u;
    reduced_cost = cp.tail(nf - rank) - R12.transpose() * u;

    reduced.A = (Q2.transpose() * A_c).sparseView(0.0, 0.0);
    reduced.b = Q2.transpose() * p.b;
    reduced.c = c_c - A_c.transpose() * y_shift;
  }

  VectorXd ReducedToFull(const VectorXd& y) const { return Q2 * y; }

  // Free values for given cone values.
  VectorXd FreeValues(const VectorXd& b, const VectorXd& v_c) const {
    const int nf = static_cast<int>(free_idx.size());
    VectorXd out = VectorXd::Zero(nf);
    if (rank == 0) return out;
    const VectorXd rhs = Q1.transpose() * (b - A_c * v_c);
    const VectorXd lead = R11.triangularView<Eigen::Upper>().solve(rhs);
    for (int j = 0; j < rank; ++j) out[perm[j]] = lead[j];
    return out;
  }
};

}  // namespace

std::vector<int> ConicProblem::Offsets() const {
  std::vector<int> offs;
  offs.reserve(cones.size() + 1);
  int off = 0;
  for (const auto& cb : cones) {
    offs.push_back(off);
    off += cb.length();
  }
  offs.push_back(off);
  return offs;
}

void ConicProblem::Validate() const {
  int total = 0;
  for (const auto& cb : cones) {
    if (cb.dim < 1) {
      throw Error(ErrorCode::kInvalidProblem, "cone block with dimension < 1");
    }
    if (cb.type == ConeType::kSoc && cb.dim < 2) {
      throw Error(ErrorCode::kInvalidProblem,
                  "second-order cone needs dimension >= 2");
    }
    total += cb.length();
  }
  if (total != num_vars()) {
    throw Error(ErrorCode::kInvalidProblem,
                "cone blocks cover " + std::to_string(total) + " of " +
                    std::to_string(num_vars()) + " variables");
  }
  if (A.cols() != num_vars() || A.rows() != num_rows()) {
    throw Error(ErrorCode::kInvalidProblem, "constraint matrix shape mismatch");
  }
  if (!c.allFinite() || !b.allFinite()) {
    throw Error(ErrorCode::kInvalidProblem, "non-finite problem data");
  }
  for (int k = 0; k < A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
      if (!std::isfinite(it.value())) {
        throw Error(ErrorCode::kInvalidProblem, "non-finite entry in A");
      }
    }
  }
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kAlmostOptimal:
      return "almost_optimal";
    case SolveStatus::kPrimalInfeasible:
      return "primal_infeasible";
    case SolveStatus::kDualInfeasible:
      return "dual_infeasible";
    case SolveStatus::kMaxIter:
      return "max_iter";
    case SolveStatus::kNumericalError:
      return "numerical_error";
  }
  return "unknown";
}

ConicSolution solve(const ConicProblem& problem,
                    const SolverSettings& settings) {
  problem.Validate();
  const Presolve pre(problem);
  const int n = problem.num_vars();
  const int nf = static_cast<int>(pre.free_idx.size());
  ConicSolution sol;
  const double cscale = std::max(1.0, problem.c.lpNorm<Eigen::Infinity>());
  if (nf > pre.rank &&
      pre.reduced_cost.lpNorm<Eigen::Infinity>() > 1e-9 * cscale) {
    // Cost decreases along a direction in the null space of A_f.
    sol.status = SolveStatus::kDualInfeasible;
    sol.x = VectorXd::Zero(n);
    VectorXd dir = VectorXd::Zero(nf);
    for (int j = pre.rank; j < nf; ++j) {
      dir[pre.perm[j]] = -pre.reduced_cost[j - pre.rank];
    }
    MatrixXd Af(problem.num_rows(), nf);
    const MatrixXd A = MatrixXd(problem.A);
    for (int j = 0; j < nf; ++j) Af.col(j) = A.col(pre.free_idx[j]);
    // Make A_f dir = 0 by correcting the leading (pivot) variables.
    VectorXd lead = pre.R11.triangularView<Eigen::Upper>().solve(
        pre.Q1.transpose() * (-(Af * dir)));
    for (int j = 0; j < pre.rank; ++j) dir[pre.perm[j]] += lead[j];
    for (int j = 0; j < nf; ++j) sol.x[pre.free_idx[j]] = dir[j];
    sol.x /= -problem.c.dot(sol.x);
    sol.y = VectorXd::Zero(problem.num_rows());
    sol.s = VectorXd::Zero(n);
    return sol;
  }

  ConicSolution inner;
  if (pre.cone_idx.empty()) {
    const VectorXd& bb = pre.reduced.b;
    const double bscale = std::max(1.0, problem.b.lpNorm<Eigen::Infinity>());
    if (bb.size() == 0 || bb.lpNorm<Eigen::Infinity>() <= settings.feas_tol * bscale) {
      inner.status = SolveStatus::kOptimal;
      inner.y = VectorXd::Zero(bb.size());
    } else {
      inner.status = SolveStatus::kPrimalInfeasible;
      inner.y = bb / bb.squaredNorm();
    }
    inner.x = VectorXd::Zero(0);
    inner.s = VectorXd::Zero(0);
  } else {
    Solver solver(pre.reduced, settings);
    inner = solver.Run();
  }
  sol.status = inner.status;
  sol.iterations = inner.iterations;
  sol.x = VectorXd::Zero(n);
  sol.s = VectorXd::Zero(n);
  for (std::size_t j = 0; j < pre.cone_idx.size(); ++j) {
    sol.s[pre.cone_idx[j]] = inner.s[j];
  }
  if (sol.status == SolveStatus::kPrimalInfeasible) {
    sol.y = pre.ReducedToFull(inner.y);
    return sol;
  }
  for (std::size_t j = 0; j < pre.cone_idx.size(); ++j) {
    sol.x[pre.cone_idx[j]] = inner.x[j];
  }
  if (sol.status == SolveStatus::kDualInfeasible) {
    const VectorXd vf = pre.FreeValues(VectorXd::Zero(problem.num_rows()), inner.x);
    for (int j = 0; j < nf; ++j) sol.x[pre.free_idx[j]] = vf[j];
    sol.y = VectorXd::Zero(problem.num_rows());
    return sol;
  }
  const VectorXd vf = pre.FreeValues(problem.b, inner.x);
  for (int j = 0; j < nf; ++j) sol.x[pre.free_idx[j]] = vf[j];
  sol.y = pre.y_shift + pre.ReducedToFull(inner.y);
  sol.objective = problem.c.dot(sol.x);
  sol.equality_residual =
      problem.num_rows() > 0
          ? (problem.A * sol.x - problem.b).lpNorm<Eigen::Infinity>()
          : 0.0;
  sol.min_cone_margin = cone_margin(problem, sol.x);
  return sol;
}

VectorXd least_squares(const MatrixXd& A, const VectorXd& b) {
  if (A.rows() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "least squares: row count differs from rhs length");
  }
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
  return cod.solve(b);
}

VectorXd svec(const MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  VectorXd v(n * (n + 1) / 2);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i, ++k) {
      v[k] = i == j ? X(i, j) : kSqrt2 * 0.5 * (X(i, j) + X(j, i));
    }
  }
  return v;
}

MatrixXd smat(const Eigen::Ref<const VectorXd>& v, int n) {
  MatrixXd X(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i, ++k) {
      if (i == j) {
        X(i, i) = v[k];
      } else {
        X(i, j) = X(j, i) = v[k] / kSqrt2;
      }
    }
  }
  return X;
}

double cone_margin(const ConicProblem& problem,
                   const Eigen::Ref<const VectorXd>& v) {
  const std::vector<int> offs = problem.Offsets();
  double margin = kInf;
  for (std::size_t i = 0; i < problem.cones.size(); ++i) {
    const ConeBlock& cb = problem.cones[i];
    const auto seg = v.segment(offs[i], cb.length());
    switch (cb.type) {
      case ConeType::kFree:
        break;
      case ConeType::kNonneg:
        margin = std::min(margin, seg.minCoeff());
        break;
      case ConeType::kSoc:
        margin = std::min(margin, seg[0] - seg.tail(cb.dim - 1).norm());
        break;
      case ConeType::kPsd: {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(seg, cb.dim),
                                                   Eigen::EigenvaluesOnly);
        margin = std::min(margin, es.eigenvalues()[0]);
        break;
      }
    }
  }
  return margin;
}

void write_problem(std::ostream& out, const ConicProblem& problem) {
  out.precision(17);
  out << "conic " << problem.num_vars() << ' ' << problem.num_rows() << ' '
      << problem.A.nonZeros() << '\n';
  for (const auto& cb : problem.cones) {
    switch (cb.type) {
      case ConeType::kFree:
        out << "free ";
        break;
      case ConeType::kNonneg:
        out << "nonneg ";
        break;
      case ConeType::kSoc:
        out << "soc ";
        break;
      case ConeType::kPsd:
        out << "psd ";
        break;
    }
    out << cb.dim << '\n';
  }
  out << 'c';
  for (int i = 0; i < problem.num_vars(); ++i) out << ' ' << problem.c[i];
  out << "\nb";
  for (int i = 0; i < problem.num_rows(); ++i) out << ' ' << problem.b[i];
  out << '\n';
  for (int k = 0; k < problem.A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(problem.A, k); it;
         ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
}

}  // namespace stable_opinf
