#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "stable_opinf/pod.h"

namespace stable_opinf {

enum class SpringLaw { kDuffing, kSinh };

std::string_view to_string(SpringLaw law);
SpringLaw parse_spring_law(std::string_view name);

/// Mass-spring chain with node 0 clamped. Spring i joins nodes i and i + 1,
/// so DoF j (node j + 1) has elongation d_j = y_j - y_{j-1}, y_{-1} = 0.
/// Force law: k1 d + k3 d^3 (duffing) or (k1 / a) sinh(a d) (sinh).
/// Rayleigh damping C = alpha M + beta K1.
struct ChainModel {
  int nodes = 30;
  double mass = 3e-3;
  SpringLaw law = SpringLaw::kDuffing;
  double k1 = 1.0;
  double k3 = 0.5;
  double a = 1.0;
  double alpha = 0.01;
  double beta = 0.001;
  int input_dof = -1;  // zero-based DoF index; -1 selects the last node

  int dofs() const { return nodes - 1; }
  int InputDof() const { return input_dof < 0 ? dofs() - 1 : input_dof; }
  /// Throws kInvalidDimension for nodes < 2, nonpositive mass or k1,
  /// negative damping, or an input DoF out of range.
  void Validate() const;

  double SpringForce(double d) const;
  double SpringEnergy(double d) const;
  /// Internal force f_y(y) = D' f(D y).
  Eigen::VectorXd Force(const Eigen::VectorXd& y) const;
  double Potential(const Eigen::VectorXd& y) const;
};

struct ChainOperators {
  Eigen::MatrixXd M, C, K1;
  Eigen::MatrixXd D;         // springs x DoFs, elongations d = D y
  Eigen::VectorXd cubic;     // per-spring k3; empty for the sinh law
  Eigen::VectorXd b;         // input direction
  bool has_cubic = false;
};

/// Explicit semi-discrete operators. For the duffing law
/// f_y(y) = K1 y + D' (cubic .* (D y)^3).
ChainOperators assemble_chain_operators(const ChainModel& chain);

enum class ProfileKind { kInference, kValidation, kCustom, kStep, kPulse };

/// inference: 4 sin(0.2 pi t); validation: 2.5 sin((0.1 + 0.1 cos t) t);
/// custom: amplitude sin(2 pi frequency t + phase); step: amplitude;
/// pulse: amplitude for t < duration, zero afterwards.
struct InputProfile {
  ProfileKind kind = ProfileKind::kInference;
  double amplitude = 1.0;
  double frequency = 0.1;
  double phase = 0.0;
  double duration = 1.0;

  double operator()(double t) const;
};

std::string_view to_string(ProfileKind kind);
ProfileKind parse_profile_kind(std::string_view name);

struct FomOptions {
  double t_end = 20.0;
  int num_snapshots = 200;
  double dt = 1e-3;
  bool record_derivatives = false;
  double divergence_threshold = 1e12;
};

/// RK4 from rest. Snapshots are taken at t_i = i * t_end / num_snapshots,
/// i = 0..num_snapshots-1, so the first column is the rest state. Throws
/// kInvalidDimension when dt does not divide the snapshot interval and
/// kFomDiverged on blow-up.
SnapshotSet simulate_fom(const ChainModel& chain, const InputProfile& profile,
                         const FomOptions& options = {});

/// 1/2 v' M v + potential(y).
double chain_energy(const ChainModel& chain, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& v);

}  // namespace stable_opinf
