// Acceptance gate: one PASS/FAIL line per primary criterion. Exits non-zero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "stable_opinf/clustering.h"
#include "stable_opinf/conic.h"
#include "stable_opinf/fom.h"
#include "stable_opinf/inference.h"
#include "stable_opinf/monomials.h"
#include "stable_opinf/pod.h"
#include "stable_opinf/rom.h"

using namespace stable_opinf;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

MatrixXd RandomNormal(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n;
  MatrixXd A(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) A(i, j) = n(rng);
  }
  return A;
}

struct Data {
  SnapshotSet train, val, train95;
  ReducedDataset red3, red95;
};

const Data& Chain() {
  static const Data data = [] {
    Data d;
    d.train = simulate_fom(ChainModel{}, InputProfile{ProfileKind::kInference});
    d.val = simulate_fom(ChainModel{}, InputProfile{ProfileKind::kValidation});
    d.train95 = d.train.Head(95);
    d.red3 = reduce(d.train, compute_basis(d.train.displacements, 3));
    d.red95 = reduce(d.train95, compute_basis(d.train95.displacements, 3));
    return d;
  }();
  return data;
}

// Relative ROM error on a reference set; infinity after divergence.
double RomError(const RomModel& model, const SnapshotSet& ref) {
  const double dt = 1e-3;
  const InputSeries input{ref.times, ref.inputs};
  const int n = ref.num_snapshots();
  const int steps = static_cast<int>(std::lround((ref.times[n - 1] - ref.times[0]) / dt));
  SimulationOptions opts;
  opts.record_every = static_cast<int>(std::lround(ref.time_step() / dt));
  VectorXd y0 = ref.displacements.col(0);
  if (model.mean.size() == y0.size()) y0 -= model.mean;
  const Trajectory tr = simulate(model, [&](double t) { return input(t); },
                                 model.V.transpose() * y0, VectorXd::Zero(model.r),
                                 ref.times[0], dt, steps, opts);
  if (tr.diverged) return std::numeric_limits<double>::infinity();
  return error_metric(ref.displacements, model.V, sample_at(tr, ref.times), model.mean).err;
}

struct Fit {
  RomModel model;
  InferenceReport report;
};

// Inferred models shared between criteria, keyed by a short label.
std::map<std::string, Fit>& Fits() {
  static std::map<std::string, Fit> fits;
  return fits;
}

const Fit& FitModel(const std::string& key, const ReducedDataset& data,
                    const ClusterSelection& sel, InferenceMode mode) {
  auto it = Fits().find(key);
  if (it == Fits().end()) {
    auto [model, rep] = infer(data, sel, mode);
    it = Fits().emplace(key, Fit{std::move(model), rep}).first;
  }
  return it->second;
}

ClusterSelection Sparse(const ReducedDataset& data, int theta, int d) {
  return select_clusters(data.sigma_full, data.r(), theta, d);
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome BasisCounts() {
  const auto start = Clock::now();
  const std::vector<std::tuple<int, int, int>> dense = {
      {2, 2, 3},  {3, 2, 6},  {7, 2, 28}, {4, 2, 10},  {5, 2, 15},
      {2, 4, 12}, {3, 4, 31}, {4, 4, 65}, {5, 4, 120}, {7, 4, 322}};
  const std::vector<std::tuple<int, int, int, int>> sparse = {
      {3, 2, 4, 21}, {7, 2, 4, 57}, {4, 2, 4, 30},
      {5, 2, 4, 39}, {4, 3, 4, 50}, {5, 3, 4, 69}};
  int wrong = 0;
  for (const auto& [r, d, want] : dense) {
    if (count_full(r, d) != want) ++wrong;
  }
  for (const auto& [r, theta, d, want] : sparse) {
    const VectorXd sigma = VectorXd::LinSpaced(r, r, 1);
    if (static_cast<int>(select_clusters(sigma, r, theta, d).phi.size()) != want) ++wrong;
  }
  const double t = Seconds(start);
  return {wrong == 0 && t < 1.0,
          std::to_string(16 - wrong) + "/16 counts exact, " + Fmt("%.3g s", t)};
}

Outcome QuarticBeatsQuadratic() {
  const auto start = Clock::now();
  const Data& c = Chain();
  const double e4 = RomError(
      FitModel("r3d4", c.red3, dense_selection(3, 4), InferenceMode::kBounded).model, c.val);
  const double e2 = RomError(
      FitModel("r3d2", c.red3, dense_selection(3, 2), InferenceMode::kBounded).model, c.val);
  const double t = Seconds(start);
  return {e4 < 0.5 * e2 && t < 300.0,
          "err_val d4 " + Fmt("%.4g", e4) + ", d2 " + Fmt("%.4g", e2) + ", " +
              Fmt("%.3g s", t)};
}

Outcome ShortTrainingSet() {
  const Data& c = Chain();
  const auto& u = FitModel("u95", c.red95, dense_selection(3, 4), InferenceMode::kUnconstrained);
  const auto& b = FitModel("b95", c.red95, dense_selection(3, 4), InferenceMode::kBounded);
  const auto& s = FitModel("s95", c.red95, Sparse(c.red95, 2, 4), InferenceMode::kBounded);
  FitModel("i95", c.red95, dense_selection(3, 4), InferenceMode::kIss);
  const double eu = RomError(u.model, c.val);
  const double eb = RomError(b.model, c.val);
  const double es = RomError(s.model, c.val);
  const bool ok = !(eu <= 1.0) && eb < 0.5 && es <= 1.2 * eb;
  return {ok, "err_val unconstrained " + Fmt("%.4g", eu) + ", bounded " + Fmt("%.4g", eb) +
                  ", sparse bounded " + Fmt("%.4g", es)};
}

Outcome CertificateSuite() {
  const Data& c = Chain();
  FitModel("r3t2", c.red3, Sparse(c.red3, 2, 4), InferenceMode::kBounded);
  FitModel("iss_r3d4", c.red3, dense_selection(3, 4), InferenceMode::kIss);
  FitModel("iss_r3t2", c.red3, Sparse(c.red3, 2, 4), InferenceMode::kIss);
  int checked = 0, failed = 0;
  double worst_eig = std::numeric_limits<double>::infinity(), worst_match = 0.0,
         worst_pos = std::numeric_limits<double>::infinity();
  for (const auto& [key, fit] : Fits()) {
    const RomModel& m = fit.model;
    if (m.mode == InferenceMode::kUnconstrained) continue;
    VerifyOptions opts;
    opts.num_samples = 10000;
    const auto check = verify_model(m, opts);
    ++checked;
    if (!check) {
      ++failed;
      continue;
    }
    const CertificateReport& cr = check->certificate;
    const double delta_c = m.mode == InferenceMode::kIss ? m.delta_c : 0.0;
    const double min_gram = cr.has_h ? std::min(cr.min_eig_g, cr.min_eig_h) : cr.min_eig_g;
    const double match = std::max(cr.match_residual_g, cr.has_h ? cr.match_residual_h : 0.0);
    const double pos = cr.has_h ? std::min(cr.min_positivity, cr.min_euler) : cr.min_positivity;
    const bool ok = check->min_eig_m >= m.delta_m - 1e-7 &&
                    check->min_eig_c >= delta_c - 1e-7 && min_gram >= -1e-7 &&
                    match < 1e-7 && pos >= -1e-7 && cr.num_samples >= 10000;
    if (!ok) {
      ++failed;
      std::printf("  certificate failure in %s\n", key.c_str());
    }
    worst_eig = std::min(worst_eig, min_gram);
    worst_match = std::max(worst_match, match);
    worst_pos = std::min(worst_pos, pos);
  }
  return {checked > 0 && failed == 0,
          std::to_string(checked - failed) + "/" + std::to_string(checked) +
              " models, worst Gram eig " + Fmt("%.2e", worst_eig) + ", match " +
              Fmt("%.2e", worst_match) + ", positivity " + Fmt("%.2e", worst_pos)};
}

Outcome LyapunovDecrease() {
  const Data& c = Chain();
  std::mt19937_64 rng(2024);
  const InputFunction zero = [](double) { return VectorXd::Zero(1); };
  int violations = 0, diverged = 0, runs = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const char* key : {"r3d4", "r3t2"}) {
    const RomModel& m = Fits().at(key).model;
    for (int trial = 0; trial < 100; ++trial) {
      const VectorXd x0 = RandomNormal(rng, 3, 1), v0 = RandomNormal(rng, 3, 1);
      const Trajectory tr = simulate(m, zero, x0, v0, 0.0, 1e-3, 100000);
      ++runs;
      if (tr.diverged) {
        ++diverged;
        continue;
      }
      const double v_start = lyapunov_v(m, x0, v0);
      double prev = v_start;
      for (int i = 1; i < tr.size(); ++i) {
        const double v = lyapunov_v(m, tr.X.col(i), tr.Xdot.col(i));
        const double rise = (v - prev) / std::abs(v_start);
        worst = std::max(worst, rise);
        if (rise > 1e-8) ++violations;
        prev = v;
      }
    }
  }
  return {violations == 0 && diverged == 0,
          std::to_string(runs) + " runs of 1e5 steps, " + std::to_string(violations) +
              " increases, " + std::to_string(diverged) + " diverged, max relative rise " +
              Fmt("%.2e", worst)};
}

double RelErr(const VectorXd& a, const VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), std::numeric_limits<double>::min());
}

Outcome OracleEquivalences() {
  const Data& c = Chain();
  std::vector<std::string> notes;
  bool ok = true;

  // (a) Unconstrained fit against the KKT system of min ||F v|| s.t.
  // trace(M) = r, with equilibrated columns in extended precision.
  {
    using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const ClusterSelection sel = dense_selection(3, 4);
    const ResidualBlocks rb = build_residual_blocks(c.red3, sel);
    const int p = rb.num_cols;
    const VectorXd norms = rb.F.colwise().norm().transpose();
    const MatrixXld Fs = (rb.F * norms.cwiseInverse().asDiagonal()).cast<long double>();
    VectorXld t = VectorXld::Zero(p);
    for (int j = 0; j < 3; ++j) t[svec_index(j, j, 3)] = 1.0L / norms[svec_index(j, j, 3)];
    MatrixXld K = MatrixXld::Zero(p + 1, p + 1);
    K.topLeftCorner(p, p) = 2.0L * Fs.transpose() * Fs;
    K.block(0, p, p, 1) = t;
    K.block(p, 0, 1, p) = t.transpose();
    VectorXld rhs = VectorXld::Zero(p + 1);
    rhs[p] = 3.0L;
    const VectorXd w = K.fullPivLu().solve(rhs).head(p).cast<double>();
    const VectorXd oracle = w.cwiseQuotient(norms);
    const RomModel& m =
        FitModel("u_r3d4", c.red3, sel, InferenceMode::kUnconstrained).model;
    const double e = RelErr(rb.Pack(m.M, m.C, m.B, m.k), oracle);
    ok &= e < 1e-6;
    notes.push_back("(a) " + Fmt("%.1e", e));
  }

  std::mt19937_64 rng(7);
  const MonomialBasis phi = full_basis(3, 4);
  // (b) Gradient against central differences.
  {
    double worst = 0.0;
    const VectorXd k = RandomNormal(rng, static_cast<int>(phi.size()), 1);
    for (int trial = 0; trial < 100; ++trial) {
      const VectorXd x = RandomNormal(rng, 3, 1);
      VectorXd fd(3);
      const double h = 1e-5;
      for (int j = 0; j < 3; ++j) {
        VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        fd[j] = (eval_polynomial(phi, k, xp) - eval_polynomial(phi, k, xm)) / (2 * h);
      }
      worst = std::max(worst, RelErr(eval_gradient(phi, k, x), fd));
    }
    ok &= worst < 1e-6;
    notes.push_back("(b) " + Fmt("%.1e", worst));
  }
  // (c) x' grad(k' phi) = sum |alpha| k_alpha x^alpha.
  {
    double worst = 0.0;
    const VectorXd k = RandomNormal(rng, static_cast<int>(phi.size()), 1);
    const VectorXd w = euler_weights(phi).cast<double>();
    for (int trial = 0; trial < 100; ++trial) {
      const VectorXd x = RandomNormal(rng, 3, 1);
      const double lhs = x.dot(eval_gradient(phi, k, x));
      const double rhs = eval_polynomial(phi, k.cwiseProduct(w), x);
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    ok &= worst < 1e-12;
    notes.push_back("(c) " + Fmt("%.1e", worst));
  }
  // (d) (M, C, B, k) and 10 (M, C, B, k) give the same trajectory.
  {
    const RomModel& m = Fits().at("r3d4").model;
    RomModel g = m;
    g.M *= 10;
    g.C *= 10;
    g.B *= 10;
    g.k *= 10;
    const InputFunction u = [](double t) {
      return VectorXd::Constant(1, 4 * std::sin(0.2 * std::numbers::pi * t));
    };
    const VectorXd x0 = m.V.transpose() * c.train.displacements.col(10);
    const Trajectory a = simulate(m, u, x0, VectorXd::Zero(3), 0.0, 1e-3, 20000);
    const Trajectory b = simulate(g, u, x0, VectorXd::Zero(3), 0.0, 1e-3, 20000);
    const double e = (a.X - b.X).cwiseAbs().maxCoeff();
    ok &= e < 1e-8 && !a.diverged;
    notes.push_back("(d) " + Fmt("%.1e", e));
  }
  // (e) Damped linear chain under a step against its modal solution.
  {
    ChainModel chain;
    chain.nodes = 6;
    chain.k3 = 0.0;
    InputProfile step{ProfileKind::kStep};
    step.amplitude = 0.7;
    FomOptions opts;
    opts.t_end = 5.0;
    opts.num_snapshots = 100;
    const SnapshotSet s = simulate_fom(chain, step, opts);
    const int n = chain.dofs();
    MatrixXd K = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      K(i, i) = i + 1 < n ? 2 * chain.k1 : chain.k1;
      if (i + 1 < n) K(i, i + 1) = K(i + 1, i) = -chain.k1;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(K / chain.mass);
    const MatrixXd Phi = es.eigenvectors() / std::sqrt(chain.mass);
    VectorXd b = VectorXd::Zero(n);
    b[n - 1] = step.amplitude;
    const VectorXd gm = Phi.transpose() * b;
    MatrixXd exact(n, s.num_snapshots());
    for (int i = 0; i < s.num_snapshots(); ++i) {
      const double t = s.times[i];
      VectorXd q(n);
      for (int j = 0; j < n; ++j) {
        const double w2 = es.eigenvalues()[j], w = std::sqrt(w2);
        const double zeta = (chain.alpha + chain.beta * w2) / (2 * w);
        const double wd = w * std::sqrt(1 - zeta * zeta);
        q[j] = gm[j] / w2 *
               (1 - std::exp(-zeta * w * t) *
                        (std::cos(wd * t) + zeta * w / wd * std::sin(wd * t)));
      }
      exact.col(i) = Phi * q;
    }
    const double e = (s.displacements - exact).norm() / exact.norm();
    ok &= e < 1e-6;
    notes.push_back("(e) " + Fmt("%.1e", e));
  }
  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : ", ") + n;
  return {ok, detail};
}

Outcome Nesting() {
  const Data& c = Chain();
  struct Pair {
    std::string name;
    const ReducedDataset* data;
    ClusterSelection sel;
  };
  const std::vector<Pair> pairs = {
      {"r3d4", &c.red3, dense_selection(3, 4)},
      {"r3d2", &c.red3, dense_selection(3, 2)},
      {"r3t2", &c.red3, Sparse(c.red3, 2, 4)},
      {"95d4", &c.red95, dense_selection(3, 4)},
  };
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& p : pairs) {
    double obj[3];
    int i = 0;
    for (auto mode : {InferenceMode::kUnconstrained, InferenceMode::kBounded,
                      InferenceMode::kIss}) {
      obj[i++] = FitModel("nest_" + p.name + "_" + std::string(to_string(mode)), *p.data,
                          p.sel, mode)
                     .report.objective;
    }
    const double scale = std::max({obj[0], obj[1], obj[2], 1e-300});
    worst = std::min({worst, (obj[1] - obj[0]) / scale, (obj[2] - obj[1]) / scale});
  }
  return {worst >= -1e-7, std::to_string(pairs.size()) +
                              " pairs, smallest relative margin " + Fmt("%.2e", worst)};
}

Outcome LargestProblem() {
  SnapshotSet train = simulate_fom(ChainModel{}, InputProfile{ProfileKind::kInference});
  const ReducedDataset data = reduce(train, compute_basis(train.displacements, 7));
  const auto start = Clock::now();
  const auto [model, rep] = infer(data, dense_selection(7, 4), InferenceMode::kBounded);
  const double t = Seconds(start);
  Fits().emplace("r7d4", Fit{model, rep});
  const bool ok = t < 60.0 && rep.n_phi == 322 && rep.check && rep.check->passed();
  return {ok, "n_phi " + std::to_string(rep.n_phi) + ", " + Fmt("%.3g s", t) +
                  (rep.check && rep.check->passed() ? ", certified" : ", not certified")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"basis counts", BasisCounts},
      {"quartic vs quadratic ROM", QuarticBeatsQuadratic},
      {"short training set", ShortTrainingSet},
      {"largest problem", LargestProblem},
      {"certificates", CertificateSuite},
      {"lyapunov decrease", LyapunovDecrease},
      {"oracle equivalences", OracleEquivalences},
      {"nesting", Nesting},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s  %-26s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
