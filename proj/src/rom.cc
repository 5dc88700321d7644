#include "stable_opinf/rom.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "stable_opinf/error.h"

namespace stable_opinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Hessian of k' phi at x.
MatrixXd PotentialHessian(const MonomialBasis& phi, const VectorXd& k,
                          const VectorXd& x) {
  const int r = phi.num_vars();
  MatrixXd hess = MatrixXd::Zero(r, r);
  std::vector<int> e;
  for (int a = 0; a < phi.size(); ++a) {
    if (k[a] == 0.0) continue;
    e = phi[a].exponents();
    for (int i = 0; i < r; ++i) {
      if (e[i] == 0) continue;
      for (int j = i; j < r; ++j) {
        double coef;
        if (i == j) {
          if (e[i] < 2) continue;
          coef = e[i] * (e[i] - 1.0);
          e[i] -= 2;
        } else {
          if (e[j] == 0) continue;
          coef = static_cast<double>(e[i]) * e[j];
          --e[i];
          --e[j];
        }
        double v = coef * k[a];
        for (int l = 0; l < r; ++l) {
          for (int p = 0; p < e[l]; ++p) v *= x[l];
        }
        e = phi[a].exponents();
        hess(i, j) += v;
        if (i != j) hess(j, i) += v;
      }
    }
  }
  return hess;
}

}  // namespace

std::string_view to_string(Integrator integrator) {
  return integrator == Integrator::kRk4 ? "rk4" : "implicit_midpoint";
}

Integrator parse_integrator(std::string_view name) {
  if (name == "rk4") return Integrator::kRk4;
  if (name == "implicit_midpoint") return Integrator::kImplicitMidpoint;
  throw Error(ErrorCode::kParse,
              "unknown integrator '" + std::string(name) + "'");
}

VectorXd InputSeries::operator()(double t) const {
  const Eigen::Index n = times.size();
  if (n == 0) return VectorXd::Zero(values.rows());
  if (t <= times[0]) return values.col(0);
  if (t >= times[n - 1]) return values.col(n - 1);
  const auto* begin = times.data();
  const auto* it = std::upper_bound(begin, begin + n, t);
  const Eigen::Index hi = it - begin;
  const Eigen::Index lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return (1.0 - w) * values.col(lo) + w * values.col(hi);
}

Trajectory simulate(const RomModel& model, const InputFunction& input,
                    const VectorXd& x0, const VectorXd& v0, double t0,
                    double dt, int num_steps, const SimulationOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const int r = model.r;
  if (x0.size() != r || v0.size() != r) {
    throw Error(ErrorCode::kDimensionMismatch, "initial state has wrong size");
  }
  if (!(dt > 0.0) || num_steps < 0 || options.record_every < 1) {
    throw Error(ErrorCode::kInvalidDimension,
                "need dt > 0, num_steps >= 0, record_every >= 1");
  }
  Eigen::FullPivLU<MatrixXd> lu(model.M);
  if (!lu.isInvertible() || !model.M.allFinite()) {
    throw Error(ErrorCode::kSingularMass, "mass matrix is singular");
  }
  const MatrixXd Minv = lu.inverse();
  const MatrixXd MinvC = Minv * model.C;
  const MatrixXd MinvB = Minv * model.B;

  auto forcing = [&](double t) -> VectorXd {
    if (model.n_u == 0) return VectorXd::Zero(r);
    return MinvB * input(t);
  };
  auto accel = [&](const VectorXd& x, const VectorXd& v, const VectorXd& f) {
    return VectorXd(f - MinvC * v - Minv * model.Gradient(x));
  };

  const int num_records = num_steps / options.record_every + 1;
  Trajectory traj;
  traj.times.resize(num_records);
  traj.X.resize(r, num_records);
  traj.Xdot.resize(r, num_records);
  traj.times[0] = t0;
  traj.X.col(0) = x0;
  traj.Xdot.col(0) = v0;
  traj.last_valid = 0;

  VectorXd x = x0, v = v0;
  int rec = 1;
  for (int step = 1; step <= num_steps; ++step) {
    const double t = t0 + (step - 1) * dt;
    if (options.integrator == Integrator::kRk4) {
      const VectorXd f0 = forcing(t), fh = forcing(t + 0.5 * dt),
                     f1 = forcing(t + dt);
      const VectorXd k1x = v, k1v = accel(x, v, f0);
      const VectorXd k2x = v + 0.5 * dt * k1v;
      const VectorXd k2v = accel(x + 0.5 * dt * k1x, k2x, fh);
      const VectorXd k3x = v + 0.5 * dt * k2v;
      const VectorXd k3v = accel(x + 0.5 * dt * k2x, k3x, fh);
      const VectorXd k4x = v + dt * k3v;
      const VectorXd k4v = accel(x + dt * k3x, k4x, f1);
      x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
      v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    } else {
      // Solve for the midpoint state (xm, vm):
      //   xm = x + dt/2 vm,  vm = v + dt/2 a(xm, vm).
      const VectorXd fm = forcing(t + 0.5 * dt);
      VectorXd xm = x, vm = v;
      auto residual = [&](const VectorXd& xa, const VectorXd& va) {
        VectorXd res(2 * r);
        res.head(r) = xa - x - 0.5 * dt * va;
        res.tail(r) = va - v - 0.5 * dt * accel(xa, va, fm);
        return res;
      };
      VectorXd res = residual(xm, vm);
      const double scale = 1.0 + x.norm() + v.norm();
      for (int it = 0; it < options.newton_max_iter &&
                       res.norm() > options.newton_tol * scale;
           ++it) {
        MatrixXd J = MatrixXd::Identity(2 * r, 2 * r);
        J.topRightCorner(r, r) = -0.5 * dt * MatrixXd::Identity(r, r);
        J.bottomLeftCorner(r, r) =
            0.5 * dt * Minv * PotentialHessian(model.selection.phi, model.k, xm);
        J.bottomRightCorner(r, r) += 0.5 * dt * MinvC;
        const VectorXd delta = J.partialPivLu().solve(-res);
        double lambda = 1.0;
        const double norm0 = res.norm();
        for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
          const VectorXd trial =
              residual(xm + lambda * delta.head(r), vm + lambda * delta.tail(r));
          if (trial.norm() < (1.0 - 1e-4 * lambda) * norm0 || ls == 29) {
            xm += lambda * delta.head(r);
            vm += lambda * delta.tail(r);
            res = trial;
            break;
          }
        }
      }
      x = 2.0 * xm - x;
      v = 2.0 * vm - v;
    }
    const double znorm = std::sqrt(x.squaredNorm() + v.squaredNorm());
    if (!std::isfinite(znorm) || znorm > options.divergence_threshold) {
      traj.diverged = true;
      break;
    }
    if (step % options.record_every == 0) {
      traj.times[rec] = t0 + step * dt;
      traj.X.col(rec) = x;
      traj.Xdot.col(rec) = v;
      traj.last_valid = rec;
      ++rec;
    }
  }
  traj.times.conservativeResize(rec);
  traj.X.conservativeResize(Eigen::NoChange, rec);
  traj.Xdot.conservativeResize(Eigen::NoChange, rec);
  traj.t_sim = std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - start)
                   .count();
  return traj;
}

double lyapunov_v(const RomModel& model, const VectorXd& x, const VectorXd& v) {
  return 0.5 * v.dot(model.M * v) + model.Potential(x);
}

double lyapunov_vdot(const RomModel& model, const VectorXd& v) {
  return -v.dot(model.C * v);
}

MatrixXd sample_at(const Trajectory& trajectory, const VectorXd& times) {
  const int n = trajectory.size();
  if (n == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "empty trajectory");
  }
  MatrixXd out(trajectory.X.rows(), times.size());
  const auto* begin = trajectory.times.data();
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    const auto* it = std::lower_bound(begin, begin + n, times[i]);
    Eigen::Index j = it - begin;
    if (j == n) {
      j = n - 1;
    } else if (j > 0 && times[i] - begin[j - 1] <= begin[j] - times[i]) {
      --j;
    }
    out.col(i) = trajectory.X.col(j);
  }
  return out;
}

ErrorReport error_metric(const MatrixXd& Y_ref, const MatrixXd& V,
                         const MatrixXd& X, const VectorXd& mean) {
  if (Y_ref.cols() != X.cols() || V.cols() != X.rows() ||
      V.rows() != Y_ref.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "reference, basis and trajectory shapes disagree");
  }
  MatrixXd recon = V * X;
  if (mean.size() == Y_ref.rows()) recon.colwise() += mean;
  ErrorReport rep;
  rep.error_norms = (Y_ref - recon).colwise().norm().transpose();
  rep.reference_norms = Y_ref.colwise().norm().transpose();
  const double denom = rep.reference_norms.sum();
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::kUndefinedMetric, "reference snapshots are all zero");
  }
  rep.err = rep.error_norms.sum() / denom;
  return rep;
}

}  // namespace stable_opinf
