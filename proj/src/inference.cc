#include "stable_opinf/inference.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "stable_opinf/error.h"

namespace stable_opinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const double kSqrt2 = std::sqrt(2.0);
constexpr double kGramMargin = 1e-7;

int SymSize(int r) { return r * (r + 1) / 2; }

// Residual map for data whose residual rows are weighted by `weight`.
MatrixXd BuildResidualMatrix(const MatrixXd& X, const MatrixXd& Xdot,
                             const MatrixXd& Xddot, const MatrixXd& U,
                             const MonomialBasis& phi, const VectorXd& weight) {
  const int r = static_cast<int>(X.rows());
  const int n = static_cast<int>(X.cols());
  const int nu = static_cast<int>(U.rows());
  const int nm = SymSize(r);
  const int off_c = nm, off_b = 2 * nm, off_k = 2 * nm + r * nu;
  MatrixXd F = MatrixXd::Zero(r * n, off_k + phi.size());
  for (int i = 0; i < n; ++i) {
    const int row = i * r;
    int col = 0;
    for (int b = 0; b < r; ++b) {
      for (int a = b; a < r; ++a, ++col) {
        if (a == b) {
          F(row + a, col) = Xddot(a, i);
          F(row + a, off_c + col) = Xdot(a, i);
        } else {
          F(row + a, col) = Xddot(b, i) / kSqrt2;
          F(row + b, col) = Xddot(a, i) / kSqrt2;
          F(row + a, off_c + col) = Xdot(b, i) / kSqrt2;
          F(row + b, off_c + col) = Xdot(a, i) / kSqrt2;
        }
      }
    }
    for (int l = 0; l < nu; ++l) {
      for (int j = 0; j < r; ++j) F(row + j, off_b + l * r + j) = -U(l, i);
    }
    F.block(row, off_k, r, phi.size()) = basis_jacobian(phi, X.col(i));
    F.middleRows(row, r) = weight.asDiagonal() * F.middleRows(row, r);
  }
  return F;
}

void CheckShapes(const ReducedDataset& data, const ClusterSelection& sel) {
  const auto r = data.X.rows();
  const auto n = data.X.cols();
  if (sel.r != r || data.Xdot.rows() != r || data.Xddot.rows() != r ||
      data.Xdot.cols() != n || data.Xddot.cols() != n || data.U.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "reduced data and selection shapes disagree");
  }
  if (!data.X.allFinite() || !data.Xdot.allFinite() ||
      !data.Xddot.allFinite() || !data.U.allFinite()) {
    throw Error(ErrorCode::kNonFiniteData, "reduced data contains NaN/Inf");
  }
}

VectorXd RmsScale(const MatrixXd& X) {
  VectorXd s(X.rows());
  for (int j = 0; j < X.rows(); ++j) {
    const double rms = X.cols() > 0 ? X.row(j).norm() / std::sqrt(X.cols()) : 0.0;
    s[j] = rms > 0.0 && std::isfinite(rms) ? rms : 1.0;
  }
  return s;
}

// prod_j s_j^{a_j} for every monomial.
VectorXd MonomialScale(const MonomialBasis& basis, const VectorXd& s) {
  VectorXd out(basis.size());
  for (int a = 0; a < basis.size(); ++a) out[a] = basis[a].Evaluate(s);
  return out;
}

double ResolveEps(const ReducedDataset& data, const Hyperparams& hp) {
  if (hp.eps) {
    if (!std::isfinite(*hp.eps) || *hp.eps < 0.0) {
      throw Error(ErrorCode::kInvalidEpsilon, "epsilon must be nonnegative");
    }
    return *hp.eps;
  }
  std::vector<double> sq(data.X.cols());
  for (int i = 0; i < data.X.cols(); ++i) sq[i] = data.X.col(i).squaredNorm();
  if (sq.empty()) return hp.eps_rel;
  std::sort(sq.begin(), sq.end());
  const std::size_t m = sq.size();
  const double median =
      m % 2 == 1 ? sq[m / 2] : 0.5 * (sq[m / 2 - 1] + sq[m / 2]);
  return hp.eps_rel * (median > 0.0 ? median : 1.0);
}

MatrixXd SymFromSvec(const VectorXd& v, int r) { return smat(v, r); }

}  // namespace

std::string_view to_string(InferenceMode mode) {
  switch (mode) {
    case InferenceMode::kIss:
      return "iss";
    case InferenceMode::kBounded:
      return "bounded";
    case InferenceMode::kUnconstrained:
      return "unconstrained";
  }
  return "unknown";
}

InferenceMode parse_mode(std::string_view name) {
  if (name == "iss") return InferenceMode::kIss;
  if (name == "bounded") return InferenceMode::kBounded;
  if (name == "unconstrained") return InferenceMode::kUnconstrained;
  throw Error(ErrorCode::kInvalidMode,
              "unknown mode '" + std::string(name) + "'");
}

VectorXd RomModel::Gradient(const Eigen::Ref<const VectorXd>& x) const {
  return eval_gradient(selection.phi, k, x);
}

double RomModel::Potential(const Eigen::Ref<const VectorXd>& x) const {
  return eval_polynomial(selection.phi, k, x);
}

VectorXd ResidualBlocks::Pack(const MatrixXd& M, const MatrixXd& C,
                              const MatrixXd& B, const VectorXd& k) const {
  VectorXd v(num_cols);
  v.segment(off_m, off_c - off_m) = svec(M);
  v.segment(off_c, off_b - off_c) = svec(C);
  v.segment(off_b, off_k - off_b) = B.reshaped();
  v.tail(num_cols - off_k) = k;
  return v;
}

ResidualBlocks build_residual_blocks(const ReducedDataset& data,
                                     const ClusterSelection& selection) {
  CheckShapes(data, selection);
  const int r = data.r();
  ResidualBlocks rb;
  rb.F = BuildResidualMatrix(data.X, data.Xdot, data.Xddot, data.U,
                             selection.phi, VectorXd::Ones(r));
  rb.off_m = 0;
  rb.off_c = SymSize(r);
  rb.off_b = 2 * SymSize(r);
  rb.off_k = rb.off_b + r * data.num_inputs();
  rb.num_cols = static_cast<int>(rb.F.cols());
  return rb;
}

double residual_norm(const ReducedDataset& data, const RomModel& model) {
  const MatrixXd base =
      model.M * data.Xddot + model.C * data.Xdot - model.B * data.U;
  double total = 0.0;
  for (int i = 0; i < data.num_snapshots(); ++i) {
    total += (base.col(i) + model.Gradient(data.X.col(i))).squaredNorm();
  }
  return std::sqrt(total);
}

AssembledProblem assemble_problem(const ReducedDataset& data,
                                  const ClusterSelection& selection,
                                  InferenceMode mode,
                                  const Hyperparams& hyperparams) {
  CheckShapes(data, selection);
  const bool constrained = mode != InferenceMode::kUnconstrained;
  const int r = data.r();
  const int nu = data.num_inputs();
  const int nm = SymSize(r);
  const int nb = r * nu;
  const int nk = selection.phi.size();
  const int p = 2 * nm + nb + nk;

  AssembledProblem ap;
  ap.mode = mode;
  ap.r = r;
  ap.n_u = nu;
  ap.scale = RmsScale(data.X);
  ap.eps = ResolveEps(data, hyperparams);
  ap.delta_m = constrained ? hyperparams.delta_m : 0.0;
  ap.delta_c = mode == InferenceMode::kIss ? hyperparams.delta_c : 0.0;
  if (ap.delta_m < 0.0 || ap.delta_c < 0.0) {
    throw Error(ErrorCode::kInvalidProblem, "delta floors must be nonnegative");
  }

  const VectorXd& s = ap.scale;
  const VectorXd inv_s = s.cwiseInverse();
  const MatrixXd F = BuildResidualMatrix(
      inv_s.asDiagonal() * data.X, inv_s.asDiagonal() * data.Xdot,
      inv_s.asDiagonal() * data.Xddot, data.U, selection.phi, inv_s);

  // Constant term from the delta shifts M = M~ + delta_m D^2 (same for C).
  const VectorXd d2 = svec(MatrixXd(s.cwiseAbs2().asDiagonal()));
  VectorXd h = ap.delta_m * F.middleCols(0, nm) * d2 +
               ap.delta_c * F.middleCols(nm, nm) * d2;

  MatrixXd Fh(F.rows(), p + 1);
  Fh << F, h;
  Eigen::HouseholderQR<MatrixXd> qr(Fh);
  const int nr = static_cast<int>(std::min<Eigen::Index>(Fh.rows(), p + 1));
  const MatrixXd Rbar = qr.matrixQR()
                            .topRows(nr)
                            .triangularView<Eigen::Upper>()
                            .toDenseMatrix();

  PositivityConstraints pc;
  if (constrained) {
    pc = assemble_positivity_constraints(
        selection, ap.eps * s.cwiseAbs2(),
        mode == InferenceMode::kIss ? PositivityMode::kIss
                                    : PositivityMode::kBounded);
  }

  ConicProblem& prob = ap.problem;
  const ConeType sym_cone = constrained ? ConeType::kPsd : ConeType::kFree;
  prob.cones.push_back({sym_cone, constrained ? r : nm});
  prob.cones.push_back({sym_cone, constrained ? r : nm});
  if (nb + nk > 0) prob.cones.push_back({ConeType::kFree, nb + nk});
  for (int n : pc.block_sizes) prob.cones.push_back({ConeType::kPsd, n});
  prob.cones.push_back({ConeType::kSoc, nr + 1});

  ap.off_m = 0;
  ap.off_c = nm;
  ap.off_b = 2 * nm;
  ap.off_k = 2 * nm + nb;
  ap.off_gram = p;
  ap.off_t = p + pc.num_gram_vars();
  const int nvars = ap.off_t + 1 + nr;
  ap.num_decision_vars = p + pc.num_gram_vars() + 1;

  const int row_pos = 1;
  const int row_soc = row_pos + pc.num_rows();
  const int nrows = row_soc + nr;
  std::vector<Eigen::Triplet<double>> trip;
  prob.b = VectorXd::Zero(nrows);

  // trace(M) = r in original coordinates.
  for (int j = 0; j < r; ++j) {
    trip.emplace_back(0, ap.off_m + svec_index(j, j, r), 1.0 / (s[j] * s[j]));
  }
  prob.b[0] = r * (1.0 - ap.delta_m);

  // Gram blocks are solved as G = G~ + eta I with G~ PSD, leaving room to
  // absorb the solver's equality residual without losing definiteness.
  ap.gram_margin = kGramMargin * s.cwiseAbs2().maxCoeff();
  std::vector<char> is_diag(pc.num_gram_vars(), 0);
  for (int off = 0; int n : pc.block_sizes) {
    for (int j = 0; j < n; ++j) is_diag[off + svec_index(j, j, n)] = 1;
    off += n * (n + 1) / 2;
  }
  for (const auto& t : pc.gram_terms) {
    trip.emplace_back(row_pos + t.row(), ap.off_gram + t.col(), t.value());
    if (is_diag[t.col()]) prob.b[row_pos + t.row()] -= ap.gram_margin * t.value();
  }
  for (int f = 0; f < pc.num_families; ++f) {
    for (int a = 0; a < nk; ++a) {
      const int row = f * nk + a;
      trip.emplace_back(row_pos + row, ap.off_k + a, pc.k_weights[row]);
      prob.b[row_pos + row] += pc.rhs[row];
    }
  }

  // z = Rbar(:, 0:p) v + Rbar(:, p).
  for (int i = 0; i < nr; ++i) {
    trip.emplace_back(row_soc + i, ap.off_t + 1 + i, 1.0);
    for (int j = i; j < p; ++j) {
      if (Rbar(i, j) != 0.0) trip.emplace_back(row_soc + i, j, -Rbar(i, j));
    }
    prob.b[row_soc + i] = Rbar(i, p);
  }
  prob.A.resize(nrows, nvars);
  prob.A.setFromTriplets(trip.begin(), trip.end());
  prob.c = VectorXd::Zero(nvars);
  prob.c[ap.off_t] = 1.0;
  // Scaled diagonal entries of M are about s_j^2; dividing the right-hand
  // side keeps the solution near unit size.
  const double s2max = s.cwiseAbs2().maxCoeff();
  ap.rhs_scale = s2max > 0.0 ? s2max : 1.0;
  prob.b /= ap.rhs_scale;
  return ap;
}

namespace {

// Unconstrained optimum with trace(M) = r, by eliminating one diagonal
// entry of M and solving the reduced least-squares problem.
VectorXd SolveUnconstrained(const ReducedDataset& data,
                            const ClusterSelection& selection,
                            const VectorXd& s) {
  const int r = data.r();
  const VectorXd inv_s = s.cwiseInverse();
  const MatrixXd F = BuildResidualMatrix(
      inv_s.asDiagonal() * data.X, inv_s.asDiagonal() * data.Xdot,
      inv_s.asDiagonal() * data.Xddot, data.U, selection.phi, inv_s);
  const int p = static_cast<int>(F.cols());
  VectorXd a = VectorXd::Zero(p);
  for (int j = 0; j < r; ++j) a[svec_index(j, j, r)] = 1.0 / (s[j] * s[j]);
  Eigen::Index piv = 0;
  a.cwiseAbs().maxCoeff(&piv);

  MatrixXd Fr(F.rows(), p - 1);
  VectorXd ar(p - 1);
  for (int j = 0, c = 0; j < p; ++j) {
    if (j == piv) continue;
    Fr.col(c) = F.col(j) - F.col(piv) * (a[j] / a[piv]);
    ar[c++] = a[j];
  }
  const VectorXd z = least_squares(Fr, -F.col(piv) * (r / a[piv]));
  VectorXd v(p);
  for (int j = 0, c = 0; j < p; ++j) {
    if (j == piv) continue;
    v[j] = z[c++];
  }
  v[piv] = (r - ar.dot(z)) / a[piv];
  return v;
}

}  // namespace

std::pair<RomModel, InferenceReport> infer(const ReducedDataset& data,
                                           const ClusterSelection& selection,
                                           InferenceMode mode,
                                           const Hyperparams& hyperparams,
                                           const InferOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  CheckShapes(data, selection);
  const bool constrained = mode != InferenceMode::kUnconstrained;
  const int r = data.r();
  const int nu = data.num_inputs();
  const int nm = SymSize(r);
  const int nk = selection.phi.size();

  RomModel model;
  model.r = r;
  model.n_u = nu;
  model.mode = mode;
  model.selection = selection;
  model.V = data.V;
  model.sigma = data.sigma_full;
  model.mean = data.mean;
  model.data_hash = data_digest(data);

  InferenceReport report;
  report.n_phi = nk;

  MatrixXd Mh, Ch, Bh;
  VectorXd kh;
  std::vector<MatrixXd> gh, hh;
  VectorXd s;
  if (!constrained && !options.conic_unconstrained) {
    s = RmsScale(data.X);
    model.eps = ResolveEps(data, hyperparams);
    const VectorXd v = SolveUnconstrained(data, selection, s);
    Mh = SymFromSvec(v.segment(0, nm), r);
    Ch = SymFromSvec(v.segment(nm, nm), r);
    Bh = v.segment(2 * nm, r * nu).reshaped(r, nu);
    kh = v.tail(nk);
    report.num_decision_vars = 2 * nm + r * nu + nk + 1;
  } else {
    const AssembledProblem ap =
        assemble_problem(data, selection, mode, hyperparams);
    s = ap.scale;
    model.eps = ap.eps;
    model.delta_m = ap.delta_m;
    model.delta_c = ap.delta_c;
    report.num_decision_vars = ap.num_decision_vars;
    report.conic_vars = ap.problem.num_vars();
    report.conic_rows = ap.problem.num_rows();
    const ConicSolution sol = solve(ap.problem, options.solver);
    report.status = sol.status;
    report.iterations = sol.iterations;
    if (sol.status != SolveStatus::kOptimal &&
        sol.status != SolveStatus::kAlmostOptimal) {
      throw Error(ErrorCode::kInferenceFailed,
                  "conic solver returned " + std::string(to_string(sol.status)));
    }
    const VectorXd x = sol.x * ap.rhs_scale;
    const MatrixXd s2 = s.cwiseAbs2().asDiagonal();
    Mh = SymFromSvec(x.segment(ap.off_m, nm), r);
    Ch = SymFromSvec(x.segment(ap.off_c, nm), r);
    if (constrained) {
      Mh = project_psd(Mh) + ap.delta_m * s2;
      Ch = project_psd(Ch) + ap.delta_c * s2;
    }
    Bh = x.segment(ap.off_b, r * nu).reshaped(r, nu);
    kh = x.segment(ap.off_k, nk);
    int off = ap.off_gram;
    const int ncl = selection.num_clusters();
    for (int f = 0; f < (mode == InferenceMode::kIss ? 2 : constrained ? 1 : 0);
         ++f) {
      for (int i = 0; i < ncl; ++i) {
        const int n = selection.psi_bases[i].size();
        MatrixXd Gm = project_psd(smat(x.segment(off, n * (n + 1) / 2), n));
        Gm.diagonal().array() += ap.gram_margin;
        off += n * (n + 1) / 2;
        (f == 0 ? gh : hh).push_back(std::move(Gm));
      }
    }
  }

  // Back to original coordinates.
  const VectorXd inv_s = s.cwiseInverse();
  model.M = inv_s.asDiagonal() * Mh * inv_s.asDiagonal();
  model.C = inv_s.asDiagonal() * Ch * inv_s.asDiagonal();
  model.M = 0.5 * (model.M + model.M.transpose());
  model.C = 0.5 * (model.C + model.C.transpose());
  model.B = inv_s.asDiagonal() * Bh;
  model.k = kh.cwiseQuotient(MonomialScale(selection.phi, s));
  for (int f = 0; f < 2; ++f) {
    auto& src = f == 0 ? gh : hh;
    auto& dst = f == 0 ? model.certificate.G : model.certificate.H;
    for (std::size_t i = 0; i < src.size(); ++i) {
      const VectorXd ps =
          MonomialScale(selection.psi_bases[i], s).cwiseInverse();
      const MatrixXd G = ps.asDiagonal() * src[i] * ps.asDiagonal();
      dst.push_back(0.5 * (G + G.transpose()));
    }
  }

  const double gamma = r / model.M.trace();
  model.M *= gamma;
  model.C *= gamma;
  model.B *= gamma;
  model.k *= gamma;
  for (auto& G : model.certificate.G) G *= gamma;
  for (auto& H : model.certificate.H) H *= gamma;

  if (constrained) {
    const CoefficientMap map(selection);
    const VectorXd quad =
        PositivityOffsets(selection, model.eps).Target(selection.phi);
    model.k = map.Apply(model.certificate.G) + quad;
    if (mode == InferenceMode::kIss) {
      const VectorXd wk =
          euler_weights(selection.phi).cast<double>().cwiseProduct(model.k);
      absorb_mismatch(map, wk - quad, &model.certificate.H);
    }
  }

  report.objective = residual_norm(data, model);
  if (constrained) {
    report.check = verify_model(model, options.verify);
    if (!report.check->passed()) {
      const auto& c = *report.check;
      char buf[256];
      std::snprintf(buf, sizeof buf,
                    "min eig M %.3g, C %.3g, G %.3g, H %.3g; match %.3g/%.3g; "
                    "positivity %.3g/%.3g",
                    c.min_eig_m, c.min_eig_c, c.certificate.min_eig_g,
                    c.certificate.min_eig_h, c.certificate.match_residual_g,
                    c.certificate.match_residual_h, c.certificate.min_positivity,
                    c.certificate.min_euler);
      throw Error(ErrorCode::kCertificateInvalid, buf);
    }
  }
  report.t_inf = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return {std::move(model), report};
}

double min_eigenvalue(const MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (A + A.transpose()),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

std::optional<ModelCheck> verify_model(const RomModel& model,
                                       const VerifyOptions& options) {
  if (model.mode == InferenceMode::kUnconstrained) return std::nullopt;
  ModelCheck check;
  check.min_eig_m = min_eigenvalue(model.M);
  check.min_eig_c = min_eigenvalue(model.C);
  const double c_floor =
      model.mode == InferenceMode::kIss ? model.delta_c : 0.0;
  check.operators_ok = check.min_eig_m >= model.delta_m - options.tol_eig &&
                       check.min_eig_c >= c_floor - options.tol_eig &&
                       (model.M - model.M.transpose()).cwiseAbs().maxCoeff() <=
                           options.tol_eig &&
                       (model.C - model.C.transpose()).cwiseAbs().maxCoeff() <=
                           options.tol_eig;
  check.certificate = verify_certificate(model.selection, model.k,
                                         model.certificate, model.eps, options);
  if (model.mode == InferenceMode::kIss && model.certificate.H.empty()) {
    check.certificate.eig_ok = false;
  }
  return check;
}

std::string data_digest(const ReducedDataset& data) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto feed = [&](const MatrixXd& m) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    for (std::size_t i = 0; i < sizeof(double) * m.size(); ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ULL;
    }
  };
  feed(data.X);
  feed(data.Xdot);
  feed(data.Xddot);
  feed(data.U);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace stable_opinf
