#include "stable_opinf/rom.h"

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "stable_opinf/fom.h"
#include "test_util.h"

namespace stable_opinf {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::RandomNormal;

const InputFunction kNoInput = [](double) { return VectorXd::Zero(0); };

// M x'' + C x' + d/dx (a x^2 / 2 + b x^4 / 4) = 0.
RomModel Oscillator(double c, double a, double b) {
  RomModel m;
  m.r = 1;
  m.n_u = 0;
  m.M = MatrixXd::Identity(1, 1);
  m.C = MatrixXd::Constant(1, 1, c);
  m.B = MatrixXd::Zero(1, 0);
  m.selection = dense_selection(1, 4);
  m.k = (VectorXd(3) << 0.5 * a, 0.0, 0.25 * b).finished();
  m.V = MatrixXd::Identity(1, 1);
  return m;
}

const RomModel& DuffingModel(InferenceMode mode) {
  static std::map<InferenceMode, RomModel> cache;
  auto it = cache.find(mode);
  if (it == cache.end()) {
    const SnapshotSet s = simulate_fom(ChainModel{}, InputProfile{ProfileKind::kInference});
    const ReducedDataset data = reduce(s, compute_basis(s.displacements, 3));
    it = cache.emplace(mode, infer(data, dense_selection(3, 4), mode).first).first;
  }
  return it->second;
}

TEST(Rom, HarmonicOscillatorMatchesCosine) {
  const RomModel m = Oscillator(0.0, 1.0, 0.0);
  const int steps = static_cast<int>(std::ceil(2 * std::numbers::pi / 1e-3));
  const Trajectory tr = simulate(m, kNoInput, VectorXd::Ones(1), VectorXd::Zero(1), 0.0,
                                 1e-3, steps);
  ASSERT_EQ(tr.size(), steps + 1);
  double err = 0.0;
  for (int i = 0; i < tr.size(); ++i) err = std::max(err, std::abs(tr.X(0, i) - std::cos(tr.times[i])));
  EXPECT_LT(err, 1e-6);
}

TEST(Rom, ImplicitMidpointOscillator) {
  const RomModel m = Oscillator(0.0, 1.0, 0.0);
  SimulationOptions opts;
  opts.integrator = Integrator::kImplicitMidpoint;
  const Trajectory tr = simulate(m, kNoInput, VectorXd::Ones(1), VectorXd::Zero(1), 0.0,
                                 1e-3, 6284, opts);
  double err = 0.0, energy = 0.0;
  for (int i = 0; i < tr.size(); ++i) {
    err = std::max(err, std::abs(tr.X(0, i) - std::cos(tr.times[i])));
    energy = std::max(energy, std::abs(lyapunov_v(m, tr.X.col(i), tr.Xdot.col(i)) - 0.5));
  }
  EXPECT_LT(err, 1e-5);
  EXPECT_LT(energy, 1e-10);
}

TEST(Rom, ZeroStateStaysZero) {
  const RomModel& m = DuffingModel(InferenceMode::kBounded);
  const Trajectory tr = simulate(m, [](double) { return VectorXd::Zero(1); },
                                 VectorXd::Zero(3), VectorXd::Zero(3), 0.0, 1e-3, 500);
  EXPECT_TRUE(tr.X.isZero(0.0));
  EXPECT_TRUE(tr.Xdot.isZero(0.0));
}

TEST(Rom, EnergyConservedWithoutDamping) {
  const RomModel m = Oscillator(0.0, 1.0, 0.5);
  const VectorXd x0 = VectorXd::Constant(1, 1.5), v0 = VectorXd::Zero(1);
  const double v_start = lyapunov_v(m, x0, v0);
  // The hardening spring has a period below 2 pi.
  const Trajectory tr = simulate(m, kNoInput, x0, v0, 0.0, 1e-3, 6284);
  double drift = 0.0;
  for (int i = 0; i < tr.size(); ++i) {
    drift = std::max(drift, std::abs(lyapunov_v(m, tr.X.col(i), tr.Xdot.col(i)) - v_start));
  }
  EXPECT_LT(drift / v_start, 1e-6);
}

TEST(Rom, LyapunovValues) {
  const RomModel m = Oscillator(0.3, 1.0, 0.0);
  EXPECT_EQ(lyapunov_v(m, VectorXd::Zero(1), VectorXd::Zero(1)), 0.0);
  RomModel free = m;
  free.k.setZero();
  EXPECT_DOUBLE_EQ(lyapunov_v(free, VectorXd::Zero(1), VectorXd::Ones(1)), 0.5);
  EXPECT_EQ(lyapunov_vdot(m, VectorXd::Zero(1)), 0.0);
  std::mt19937_64 rng(41);
  const RomModel& dm = DuffingModel(InferenceMode::kBounded);
  for (int i = 0; i < 20; ++i) EXPECT_LE(lyapunov_vdot(dm, RandomNormal(rng, 3, 1)), 0.0);
}

TEST(Rom, LyapunovLowerBoundFromCertificate) {
  std::mt19937_64 rng(42);
  const RomModel& m = DuffingModel(InferenceMode::kBounded);
  const double lam = min_eigenvalue(m.M);
  for (int i = 0; i < 200; ++i) {
    const VectorXd x = RandomNormal(rng, 3, 1), v = RandomNormal(rng, 3, 1);
    EXPECT_GE(lyapunov_v(m, x, v),
              m.eps * x.squaredNorm() + 0.5 * lam * v.squaredNorm() - 1e-7);
  }
}

TEST(Rom, NumericalLyapunovRateMatchesDamping) {
  const RomModel& m = DuffingModel(InferenceMode::kBounded);
  const double dt = 1e-3;
  const Trajectory tr = simulate(m, [](double) { return VectorXd::Zero(1); },
                                 VectorXd::Constant(3, 0.5), VectorXd::Zero(3), 0.0, dt, 3000);
  std::vector<double> V(tr.size());
  double vmax = 0.0;
  for (int i = 0; i < tr.size(); ++i) {
    V[i] = lyapunov_v(m, tr.X.col(i), tr.Xdot.col(i));
    vmax = std::max(vmax, std::abs(V[i]));
  }
  for (int i = 1; i + 1 < tr.size(); ++i) {
    const double fd = (V[i + 1] - V[i - 1]) / (2 * dt);
    EXPECT_NEAR(fd, lyapunov_vdot(m, tr.Xdot.col(i)), 1e-4 * vmax);
  }
}

TEST(Rom, ScaleInvariance) {
  const RomModel& m = DuffingModel(InferenceMode::kBounded);
  RomModel g = m;
  g.M *= 10;
  g.C *= 10;
  g.B *= 10;
  g.k *= 10;
  const InputFunction u = [](double t) { return VectorXd::Constant(1, 4 * std::sin(0.2 * std::numbers::pi * t)); };
  const VectorXd x0 = VectorXd::Constant(3, 0.1);
  const Trajectory a = simulate(m, u, x0, VectorXd::Zero(3), 0.0, 1e-3, 20000);
  const Trajectory b = simulate(g, u, x0, VectorXd::Zero(3), 0.0, 1e-3, 20000);
  EXPECT_LT((a.X - b.X).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Rom, HomogeneousDecreaseFromRandomStarts) {
  const RomModel& m = DuffingModel(InferenceMode::kBounded);
  std::mt19937_64 rng(43);
  const InputFunction zero = [](double) { return VectorXd::Zero(1); };
  for (int trial = 0; trial < 5; ++trial) {
    const VectorXd x0 = RandomNormal(rng, 3, 1), v0 = RandomNormal(rng, 3, 1);
    const Trajectory tr = simulate(m, zero, x0, v0, 0.0, 1e-3, 10000);
    ASSERT_FALSE(tr.diverged);
    const double v_start = lyapunov_v(m, x0, v0);
    double prev = v_start;
    for (int i = 1; i < tr.size(); ++i) {
      const double v = lyapunov_v(m, tr.X.col(i), tr.Xdot.col(i));
      EXPECT_LE(v, prev + 1e-8 * v_start);
      prev = v;
    }
  }
}

TEST(Rom, IssModelReturnsToRestAfterInput) {
  const RomModel& m = DuffingModel(InferenceMode::kIss);
  const double dt = 5e-3;
  const InputFunction pulse = [](double t) {
    return VectorXd::Constant(1, t < 20.0 ? 4 * std::sin(0.2 * std::numbers::pi * t) : 0.0);
  };
  const Trajectory tr = simulate(m, pulse, VectorXd::Zero(3), VectorXd::Zero(3), 0.0, dt,
                                 static_cast<int>(1500 / dt), SimulationOptions{.record_every = 100});
  ASSERT_FALSE(tr.diverged);
  double peak = 0.0;
  for (int i = 0; i < tr.size(); ++i) {
    peak = std::max(peak, std::hypot(tr.X.col(i).norm(), tr.Xdot.col(i).norm()));
  }
  const int last = tr.size() - 1;
  EXPECT_LT(std::hypot(tr.X.col(last).norm(), tr.Xdot.col(last).norm()), 1e-3 * peak);
}

TEST(Rom, DivergenceIsFlagged) {
  // Negative stiffness grows exponentially.
  const RomModel m = Oscillator(0.0, -4.0, 0.0);
  SimulationOptions opts;
  opts.divergence_threshold = 1e6;
  const Trajectory tr = simulate(m, kNoInput, VectorXd::Ones(1), VectorXd::Zero(1), 0.0,
                                 1e-2, 10000, opts);
  EXPECT_TRUE(tr.diverged);
  EXPECT_LT(tr.size(), 10001);
  EXPECT_EQ(tr.last_valid, tr.size() - 1);
}

TEST(Rom, SimulationErrors) {
  RomModel m = Oscillator(0.0, 1.0, 0.0);
  EXPECT_ERROR_CODE(simulate(m, kNoInput, VectorXd::Ones(2), VectorXd::Zero(2), 0.0, 1e-3, 10),
                    ErrorCode::kDimensionMismatch);
  EXPECT_ERROR_CODE(simulate(m, kNoInput, VectorXd::Ones(1), VectorXd::Zero(1), 0.0, 0.0, 10),
                    ErrorCode::kInvalidDimension);
  m.M.setZero();
  EXPECT_ERROR_CODE(simulate(m, kNoInput, VectorXd::Ones(1), VectorXd::Zero(1), 0.0, 1e-3, 10),
                    ErrorCode::kSingularMass);
  EXPECT_EQ(parse_integrator("rk4"), Integrator::kRk4);
  EXPECT_ERROR_CODE(parse_integrator("euler"), ErrorCode::kParse);
}

TEST(Rom, InputSeriesInterpolates) {
  InputSeries u{(VectorXd(3) << 0, 1, 2).finished(), (MatrixXd(1, 3) << 0, 2, 6).finished()};
  EXPECT_DOUBLE_EQ(u(0.5)[0], 1.0);
  EXPECT_DOUBLE_EQ(u(1.5)[0], 4.0);
  EXPECT_DOUBLE_EQ(u(-1.0)[0], 0.0);
  EXPECT_DOUBLE_EQ(u(5.0)[0], 6.0);
}

TEST(Rom, ErrorMetricExamples) {
  std::mt19937_64 rng(44);
  const MatrixXd V = compute_basis(RandomNormal(rng, 6, 6), 3).basis;
  const MatrixXd X = RandomNormal(rng, 3, 10);
  const MatrixXd Y = V * X;
  EXPECT_LT(error_metric(Y, V, V.transpose() * Y).err, 1e-14);
  EXPECT_DOUBLE_EQ(error_metric(Y, V, MatrixXd::Zero(3, 10)).err, 1.0);
  EXPECT_NEAR(error_metric(Y, V, 1.1 * X).err, 0.1, 1e-12);
  EXPECT_ERROR_CODE(error_metric(MatrixXd::Zero(6, 10), V, X), ErrorCode::kUndefinedMetric);
  EXPECT_ERROR_CODE(error_metric(Y, V, X.leftCols(9)), ErrorCode::kDimensionMismatch);
}

TEST(Rom, SampleAtPicksNearestRecord) {
  Trajectory tr;
  tr.times = (VectorXd(3) << 0.0, 1.0, 2.0).finished();
  tr.X = (MatrixXd(1, 3) << 10, 11, 12).finished();
  tr.Xdot = MatrixXd::Zero(1, 3);
  const MatrixXd s = sample_at(tr, (VectorXd(4) << 0.4, 0.6, 1.9, 3.0).finished());
  EXPECT_EQ(s, (MatrixXd(1, 4) << 10, 11, 12, 12).finished());
}

}  // namespace
}  // namespace stable_opinf
