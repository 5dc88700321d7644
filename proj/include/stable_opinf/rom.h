#pragma once

#include <functional>
#include <string_view>

#include <Eigen/Dense>

#include "stable_opinf/inference.h"

namespace stable_opinf {

enum class Integrator { kRk4, kImplicitMidpoint };

std::string_view to_string(Integrator integrator);
Integrator parse_integrator(std::string_view name);

using InputFunction = std::function<Eigen::VectorXd(double)>;

/// Piecewise-linear interpolation of sampled inputs; constant beyond the
/// first and last sample.
struct InputSeries {
  Eigen::VectorXd times;
  Eigen::MatrixXd values;  // n_u x K

  Eigen::VectorXd operator()(double t) const;
};

struct SimulationOptions {
  Integrator integrator = Integrator::kRk4;
  double divergence_threshold = 1e12;
  int record_every = 1;  // keep every k-th step (the initial state always)
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
};

struct Trajectory {
  Eigen::VectorXd times;
  Eigen::MatrixXd X;     // r x K displacements
  Eigen::MatrixXd Xdot;  // r x K velocities
  bool diverged = false;
  int last_valid = -1;   // last recorded column with finite, bounded state
  double t_sim = 0.0;    // seconds

  int size() const { return static_cast<int>(times.size()); }
};

/// Integrates x'' = M^{-1} (B u - C x' - grad(k' phi(x))) from (x0, v0) at
/// t0 for `num_steps` fixed steps. Throws kSingularMass for a singular M;
/// divergence (||(x, v)|| > threshold or non-finite) stops the run and is
/// flagged in the result.
Trajectory simulate(const RomModel& model, const InputFunction& input,
                    const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                    double t0, double dt, int num_steps,
                    const SimulationOptions& options = {});

/// 1/2 v' M v + k' phi(x).
double lyapunov_v(const RomModel& model, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& v);
/// -v' C v, the rate of change of lyapunov_v when u = 0.
double lyapunov_vdot(const RomModel& model, const Eigen::VectorXd& v);

/// Columns of the trajectory nearest to each requested time.
Eigen::MatrixXd sample_at(const Trajectory& trajectory,
                          const Eigen::VectorXd& times);

struct ErrorReport {
  double err = 0.0;
  Eigen::VectorXd error_norms;      // ||y_i - (mean + V x_i)||
  Eigen::VectorXd reference_norms;  // ||y_i||
  double t_sim = 0.0;
};

/// sum_i ||y_i - V x_i|| / sum_i ||y_i||. Throws kUndefinedMetric for an
/// all-zero reference and kDimensionMismatch for unequal snapshot counts.
ErrorReport error_metric(const Eigen::MatrixXd& Y_ref, const Eigen::MatrixXd& V,
                         const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& mean = Eigen::VectorXd());

}  // namespace stable_opinf
