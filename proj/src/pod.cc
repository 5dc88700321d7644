#include "stable_opinf/pod.h"

#include <cmath>
#include <string>

#include "stable_opinf/error.h"

namespace stable_opinf {

double SnapshotSet::time_step() const {
  if (times.size() < 2) {
    throw Error(ErrorCode::kTooFewSnapshots, "need at least two time instants");
  }
  const Eigen::Index n = times.size();
  const double dt = (times[n - 1] - times[0]) / static_cast<double>(n - 1);
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kNonUniformGrid, "times must be increasing");
  }
  for (Eigen::Index i = 1; i < n; ++i) {
    const double step = times[i] - times[i - 1];
    if (std::abs(step - dt) > 1e-9 * std::max(dt, std::abs(times[i]))) {
      throw Error(ErrorCode::kNonUniformGrid,
                  "time step at index " + std::to_string(i) + " is " +
                      std::to_string(step) + ", expected " +
                      std::to_string(dt));
    }
  }
  return dt;
}

void SnapshotSet::Validate() const {
  const Eigen::Index n_snap = times.size();
  if (n_snap < 5) {
    throw Error(ErrorCode::kTooFewSnapshots,
                "need at least 5 snapshots, got " + std::to_string(n_snap));
  }
  if (displacements.cols() != n_snap || inputs.cols() != n_snap) {
    throw Error(ErrorCode::kDimensionMismatch,
                "snapshot matrices must have one column per time instant");
  }
  for (const auto* m : {&velocities, &accelerations}) {
    if (m->has_value() && ((*m)->cols() != n_snap ||
                           (*m)->rows() != displacements.rows())) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "derivative snapshots must match displacement shape");
    }
  }
  if (!displacements.allFinite() || !inputs.allFinite() || !times.allFinite()) {
    throw Error(ErrorCode::kNonFiniteData, "snapshot data contains NaN/Inf");
  }
  time_step();
}

SnapshotSet SnapshotSet::Head(int count) const {
  SnapshotSet out;
  out.times = times.head(count);
  out.displacements = displacements.leftCols(count);
  out.inputs = inputs.leftCols(count);
  if (velocities) out.velocities = velocities->leftCols(count);
  if (accelerations) out.accelerations = accelerations->leftCols(count);
  return out;
}

PodBasis compute_basis(const Eigen::MatrixXd& Y, int r, bool center) {
  const Eigen::Index max_rank = std::min(Y.rows(), Y.cols());
  if (r < 1 || r > max_rank) {
    throw Error(ErrorCode::kInvalidDimension,
                "r must lie in [1, " + std::to_string(max_rank) + "], got " +
                    std::to_string(r));
  }
  if (!Y.allFinite()) {
    throw Error(ErrorCode::kNonFiniteData, "snapshot matrix has NaN/Inf");
  }
  PodBasis pod;
  pod.mean = Eigen::VectorXd::Zero(Y.rows());
  Eigen::MatrixXd data = Y;
  if (center) {
    pod.mean = Y.rowwise().mean();
    data.colwise() -= pod.mean;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinU);
  pod.singular_values = svd.singularValues();
  pod.basis = svd.matrixU().leftCols(r);
  for (int j = 0; j < r; ++j) {
    Eigen::Index arg = 0;
    pod.basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (pod.basis(arg, j) < 0.0) pod.basis.col(j) *= -1.0;
  }
  return pod;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> finite_diff(
    const Eigen::MatrixXd& X, double dt) {
  const Eigen::Index n = X.cols();
  if (n < 5) {
    throw Error(ErrorCode::kTooFewSnapshots,
                "finite differences need at least 5 snapshots");
  }
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kInvalidDimension, "time step must be positive");
  }
  Eigen::MatrixXd d1(X.rows(), n), d2(X.rows(), n);
  const double h1 = 1.0 / (2.0 * dt);
  const double h2 = 1.0 / (dt * dt);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    d1.col(i) = (X.col(i + 1) - X.col(i - 1)) * h1;
    d2.col(i) = (X.col(i + 1) - 2.0 * X.col(i) + X.col(i - 1)) * h2;
  }
  d1.col(0) = (-3.0 * X.col(0) + 4.0 * X.col(1) - X.col(2)) * h1;
  d1.col(n - 1) = (3.0 * X.col(n - 1) - 4.0 * X.col(n - 2) + X.col(n - 3)) * h1;
  d2.col(0) =
      (2.0 * X.col(0) - 5.0 * X.col(1) + 4.0 * X.col(2) - X.col(3)) * h2;
  d2.col(n - 1) = (2.0 * X.col(n - 1) - 5.0 * X.col(n - 2) +
                   4.0 * X.col(n - 3) - X.col(n - 4)) *
                  h2;
  return {d1, d2};
}

ReducedDataset reduce(const SnapshotSet& snapshots, const PodBasis& pod) {
  return reduce(std::vector<SnapshotSet>{snapshots}, pod);
}

ReducedDataset reduce(const std::vector<SnapshotSet>& sets,
                      const PodBasis& pod) {
  if (sets.empty()) {
    throw Error(ErrorCode::kTooFewSnapshots, "no snapshot sets given");
  }
  const Eigen::Index r = pod.basis.cols();
  const Eigen::Index n = pod.basis.rows();
  ReducedDataset data;
  data.V = pod.basis;
  data.sigma_full = pod.singular_values;
  data.sigma = pod.singular_values.head(r);
  data.mean = pod.mean.size() == n ? pod.mean : Eigen::VectorXd::Zero(n);

  Eigen::Index total = 0;
  const Eigen::Index n_u = sets.front().inputs.rows();
  for (const auto& s : sets) {
    s.Validate();
    if (s.num_dofs() != n || s.inputs.rows() != n_u) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "snapshot set shape does not match the basis");
    }
    total += s.num_snapshots();
  }
  data.dt = sets.front().time_step();
  data.X.resize(r, total);
  data.Xdot.resize(r, total);
  data.Xddot.resize(r, total);
  data.U.resize(n_u, total);

  Eigen::Index col = 0;
  for (const auto& s : sets) {
    const double dt = s.time_step();
    if (std::abs(dt - data.dt) > 1e-9 * data.dt) {
      throw Error(ErrorCode::kNonUniformGrid,
                  "snapshot sets use different time steps");
    }
    const Eigen::Index m = s.num_snapshots();
    Eigen::MatrixXd centered = s.displacements;
    centered.colwise() -= data.mean;
    const Eigen::MatrixXd X = pod.basis.transpose() * centered;
    auto [d1, d2] = finite_diff(X, dt);
    if (s.velocities) d1 = pod.basis.transpose() * (*s.velocities);
    if (s.accelerations) d2 = pod.basis.transpose() * (*s.accelerations);
    data.X.middleCols(col, m) = X;
    data.Xdot.middleCols(col, m) = d1;
    data.Xddot.middleCols(col, m) = d2;
    data.U.middleCols(col, m) = s.inputs;
    col += m;
  }
  return data;
}

Eigen::MatrixXd stack_displacements(const std::vector<SnapshotSet>& sets) {
  Eigen::Index total = 0;
  for (const auto& s : sets) total += s.num_snapshots();
  const Eigen::Index n = sets.empty() ? 0 : sets.front().num_dofs();
  Eigen::MatrixXd Y(n, total);
  Eigen::Index col = 0;
  for (const auto& s : sets) {
    if (s.num_dofs() != n) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "snapshot sets have different DoF counts");
    }
    Y.middleCols(col, s.num_snapshots()) = s.displacements;
    col += s.num_snapshots();
  }
  return Y;
}

}  // namespace stable_opinf
