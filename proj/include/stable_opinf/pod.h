#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace stable_opinf {

/// Displacement and input snapshots on a uniform time grid. Columns are
/// time instants.
struct SnapshotSet {
  Eigen::VectorXd times;
  Eigen::MatrixXd displacements;  // n x N
  Eigen::MatrixXd inputs;         // n_u x N
  // Optional simulator-provided derivatives; finite differences are used
  // when absent.
  std::optional<Eigen::MatrixXd> velocities;
  std::optional<Eigen::MatrixXd> accelerations;

  int num_snapshots() const { return static_cast<int>(times.size()); }
  int num_dofs() const { return static_cast<int>(displacements.rows()); }
  int num_inputs() const { return static_cast<int>(inputs.rows()); }

  /// Uniform step; throws kNonUniformGrid when the grid is not uniform to
  /// 1e-9 relative.
  double time_step() const;

  /// Checks shapes, finiteness, N >= 5 and grid uniformity.
  void Validate() const;

  /// First `count` snapshots.
  SnapshotSet Head(int count) const;
};

struct PodBasis {
  Eigen::MatrixXd basis;            // n x r, orthonormal columns
  Eigen::VectorXd singular_values;  // all min(n, N) values, nonincreasing
  Eigen::VectorXd mean;             // n; zero unless centering was requested
};

/// Leading r left singular vectors of Y. Each column's largest-magnitude
/// entry is made positive so the basis is reproducible.
PodBasis compute_basis(const Eigen::MatrixXd& Y, int r, bool center = false);

/// Reduced coordinates and their time derivatives.
struct ReducedDataset {
  Eigen::MatrixXd V;             // n x r
  Eigen::VectorXd sigma;         // leading r singular values
  Eigen::VectorXd sigma_full;    // full spectrum, used by the importance index
  Eigen::VectorXd mean;          // n
  Eigen::MatrixXd X, Xdot, Xddot;  // r x N
  Eigen::MatrixXd U;             // n_u x N
  double dt = 0.0;

  int r() const { return static_cast<int>(X.rows()); }
  int num_snapshots() const { return static_cast<int>(X.cols()); }
  int num_inputs() const { return static_cast<int>(U.rows()); }
};

/// Second-order finite differences: central in the interior, one-sided
/// three/four-point stencils at the two ends. Requires N >= 5.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> finite_diff(
    const Eigen::MatrixXd& X, double dt);

/// Projects one snapshot set onto the basis.
ReducedDataset reduce(const SnapshotSet& snapshots, const PodBasis& pod);

/// Projects several snapshot sets (same grid step) onto a shared basis and
/// concatenates them column-wise. Derivatives are estimated per set so no
/// stencil straddles a set boundary.
ReducedDataset reduce(const std::vector<SnapshotSet>& sets,
                      const PodBasis& pod);

/// Horizontal concatenation of the displacement matrices of several sets.
Eigen::MatrixXd stack_displacements(const std::vector<SnapshotSet>& sets);

}  // namespace stable_opinf
