#include "stable_opinf/fom.h"

#include <cmath>
#include <numbers>
#include <string>

#include "stable_opinf/error.h"

namespace stable_opinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(SpringLaw law) {
  return law == SpringLaw::kDuffing ? "duffing" : "sinh";
}

SpringLaw parse_spring_law(std::string_view name) {
  if (name == "duffing") return SpringLaw::kDuffing;
  if (name == "sinh") return SpringLaw::kSinh;
  throw Error(ErrorCode::kParse, "unknown spring law '" + std::string(name) + "'");
}

void ChainModel::Validate() const {
  if (nodes < 2) {
    throw Error(ErrorCode::kInvalidDimension, "chain needs at least 2 nodes");
  }
  if (!(mass > 0.0) || !(k1 > 0.0)) {
    throw Error(ErrorCode::kInvalidDimension, "mass and k1 must be positive");
  }
  if (alpha < 0.0 || beta < 0.0 || k3 < 0.0) {
    throw Error(ErrorCode::kInvalidDimension,
                "damping and cubic stiffness must be nonnegative");
  }
  if (law == SpringLaw::kSinh && !(a > 0.0)) {
    throw Error(ErrorCode::kInvalidDimension, "sinh law needs a > 0");
  }
  if (InputDof() < 0 || InputDof() >= dofs()) {
    throw Error(ErrorCode::kInvalidDimension, "input DoF out of range");
  }
}

double ChainModel::SpringForce(double d) const {
  if (law == SpringLaw::kDuffing) return k1 * d + k3 * d * d * d;
  return k1 / a * std::sinh(a * d);
}

double ChainModel::SpringEnergy(double d) const {
  if (law == SpringLaw::kDuffing) {
    return 0.5 * k1 * d * d + 0.25 * k3 * d * d * d * d;
  }
  return k1 / (a * a) * (std::cosh(a * d) - 1.0);
}

VectorXd ChainModel::Force(const VectorXd& y) const {
  const int n = dofs();
  VectorXd f(n);
  double prev = 0.0;
  for (int j = 0; j < n; ++j) {
    const double fj = SpringForce(y[j] - prev);
    f[j] = fj;
    if (j > 0) f[j - 1] -= fj;
    prev = y[j];
  }
  return f;
}

double ChainModel::Potential(const VectorXd& y) const {
  double e = 0.0, prev = 0.0;
  for (int j = 0; j < dofs(); ++j) {
    e += SpringEnergy(y[j] - prev);
    prev = y[j];
  }
  return e;
}

ChainOperators assemble_chain_operators(const ChainModel& chain) {
  chain.Validate();
  const int n = chain.dofs();
  ChainOperators ops;
  ops.D = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    ops.D(i, i) = 1.0;
    if (i > 0) ops.D(i, i - 1) = -1.0;
  }
  ops.M = chain.mass * MatrixXd::Identity(n, n);
  ops.K1 = chain.k1 * ops.D.transpose() * ops.D;
  ops.C = chain.alpha * ops.M + chain.beta * ops.K1;
  ops.b = VectorXd::Zero(n);
  ops.b[chain.InputDof()] = 1.0;
  ops.has_cubic = chain.law == SpringLaw::kDuffing;
  if (ops.has_cubic) ops.cubic = VectorXd::Constant(n, chain.k3);
  return ops;
}

double InputProfile::operator()(double t) const {
  constexpr double pi = std::numbers::pi;
  switch (kind) {
    case ProfileKind::kInference:
      return 4.0 * std::sin(0.2 * pi * t);
    case ProfileKind::kValidation:
      return 2.5 * std::sin((0.1 + 0.1 * std::cos(t)) * t);
    case ProfileKind::kCustom:
      return amplitude * std::sin(2.0 * pi * frequency * t + phase);
    case ProfileKind::kStep:
      return amplitude;
    case ProfileKind::kPulse:
      return t < duration ? amplitude : 0.0;
  }
  return 0.0;
}

std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::kInference:
      return "inference";
    case ProfileKind::kValidation:
      return "validation";
    case ProfileKind::kCustom:
      return "custom";
    case ProfileKind::kStep:
      return "step";
    case ProfileKind::kPulse:
      return "pulse";
  }
  return "unknown";
}

ProfileKind parse_profile_kind(std::string_view name) {
  if (name == "inference") return ProfileKind::kInference;
  if (name == "validation") return ProfileKind::kValidation;
  if (name == "custom") return ProfileKind::kCustom;
  if (name == "step") return ProfileKind::kStep;
  if (name == "pulse") return ProfileKind::kPulse;
  throw Error(ErrorCode::kParse, "unknown input profile '" + std::string(name) + "'");
}

SnapshotSet simulate_fom(const ChainModel& chain, const InputProfile& profile,
                         const FomOptions& options) {
  chain.Validate();
  if (!(options.t_end > 0.0) || options.num_snapshots < 1 || !(options.dt > 0.0)) {
    throw Error(ErrorCode::kInvalidDimension,
                "need t_end > 0, num_snapshots >= 1 and dt > 0");
  }
  const double interval = options.t_end / options.num_snapshots;
  const double ratio = interval / options.dt;
  const long per = std::lround(ratio);
  if (per < 1 || std::abs(ratio - per) > 1e-9 * ratio) {
    throw Error(ErrorCode::kInvalidDimension,
                "integration step must divide the snapshot interval");
  }
  const int n = chain.dofs();
  const int in = chain.InputDof();
  const double inv_m = 1.0 / chain.mass;
  const ChainOperators ops = assemble_chain_operators(chain);
  const MatrixXd& C = ops.C;
  // C is tridiagonal; keep the three diagonals for speed.
  VectorXd c0 = C.diagonal(), c1 = C.diagonal(-1);
  auto damping = [&](const VectorXd& v) {
    VectorXd out = c0.cwiseProduct(v);
    out.head(n - 1) += c1.cwiseProduct(v.tail(n - 1));
    out.tail(n - 1) += c1.cwiseProduct(v.head(n - 1));
    return out;
  };
  auto accel = [&](double t, const VectorXd& y, const VectorXd& v) {
    VectorXd a = -chain.Force(y) - damping(v);
    a[in] += profile(t);
    return VectorXd(a * inv_m);
  };

  const int ns = options.num_snapshots;
  SnapshotSet snaps;
  snaps.times.resize(ns);
  snaps.displacements.resize(n, ns);
  snaps.inputs.resize(1, ns);
  MatrixXd vel, acc;
  if (options.record_derivatives) {
    vel.resize(n, ns);
    acc.resize(n, ns);
  }

  VectorXd y = VectorXd::Zero(n), v = VectorXd::Zero(n);
  const double dt = options.dt;
  long step = 0;
  for (int s = 0; s < ns; ++s) {
    const long target = per * s;
    for (; step < target; ++step) {
      const double t = step * dt;
      const VectorXd k1y = v, k1v = accel(t, y, v);
      const VectorXd k2y = v + 0.5 * dt * k1v;
      const VectorXd k2v = accel(t + 0.5 * dt, y + 0.5 * dt * k1y, k2y);
      const VectorXd k3y = v + 0.5 * dt * k2v;
      const VectorXd k3v = accel(t + 0.5 * dt, y + 0.5 * dt * k2y, k3y);
      const VectorXd k4y = v + dt * k3v;
      const VectorXd k4v = accel(t + dt, y + dt * k3y, k4y);
      y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
      v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      const double norm = std::sqrt(y.squaredNorm() + v.squaredNorm());
      if (!std::isfinite(norm) || norm > options.divergence_threshold) {
        throw Error(ErrorCode::kFomDiverged,
                    "chain state blew up at t = " + std::to_string(t + dt));
      }
    }
    const double t = target * dt;
    snaps.times[s] = t;
    snaps.displacements.col(s) = y;
    snaps.inputs(0, s) = profile(t);
    if (options.record_derivatives) {
      vel.col(s) = v;
      acc.col(s) = accel(t, y, v);
    }
  }
  if (options.record_derivatives) {
    snaps.velocities = std::move(vel);
    snaps.accelerations = std::move(acc);
  }
  return snaps;
}

double chain_energy(const ChainModel& chain, const VectorXd& y,
                    const VectorXd& v) {
  return 0.5 * chain.mass * v.squaredNorm() + chain.Potential(y);
}

}  // namespace stable_opinf
