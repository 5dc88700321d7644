#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "stable_opinf/clustering.h"
#include "stable_opinf/conic.h"
#include "stable_opinf/pod.h"
#include "stable_opinf/sos.h"

namespace stable_opinf {

enum class InferenceMode { kIss, kBounded, kUnconstrained };

std::string_view to_string(InferenceMode mode);
/// Accepts "iss", "bounded", "unconstrained"; throws kInvalidMode otherwise.
InferenceMode parse_mode(std::string_view name);

/// Strictness parameters. The mass matrix is normalized to trace(M) = r, so
/// delta_m and delta_c are relative to the mean eigenvalue of M. When `eps`
/// is unset it resolves to eps_rel times the median squared norm of the
/// reduced snapshots.
struct Hyperparams {
  std::optional<double> eps;
  double eps_rel = 1e-6;
  double delta_m = 1e-6;
  double delta_c = 1e-6;
};

/// M x'' + C x' + grad(k' phi(x)) = B u in reduced coordinates.
struct RomModel {
  int r = 0;
  int n_u = 0;
  InferenceMode mode = InferenceMode::kBounded;
  Eigen::MatrixXd M, C, B;
  Eigen::VectorXd k;
  ClusterSelection selection;
  GramCertificate certificate;
  double eps = 0.0;
  double delta_m = 0.0;
  double delta_c = 0.0;
  // Provenance.
  Eigen::MatrixXd V;
  Eigen::VectorXd sigma;
  Eigen::VectorXd mean;
  std::string data_hash;

  Eigen::VectorXd Gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double Potential(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Certificate checks plus the mass and damping floors.
struct ModelCheck {
  CertificateReport certificate;
  double min_eig_m = 0.0;
  double min_eig_c = 0.0;
  bool operators_ok = false;

  bool passed() const { return operators_ok && certificate.passed(); }
};

struct InferenceReport {
  double objective = 0.0;  // Frobenius norm of the residual on the data
  SolveStatus status = SolveStatus::kOptimal;
  double t_inf = 0.0;      // seconds
  std::optional<ModelCheck> check;
  int n_phi = 0;
  int num_decision_vars = 0;  // operators, Gram blocks and epigraph t
  int conic_vars = 0;         // including the compressed residual vector
  int conic_rows = 0;
  int iterations = 0;
};

/// Stacked residual map. Row i * r + j is component j of the residual at
/// snapshot i; columns are svec(M), svec(C), vec(B) (column-major) and k.
struct ResidualBlocks {
  Eigen::MatrixXd F;
  int off_m = 0, off_c = 0, off_b = 0, off_k = 0, num_cols = 0;

  /// Parameter vector in the column layout above.
  Eigen::VectorXd Pack(const Eigen::MatrixXd& M, const Eigen::MatrixXd& C,
                       const Eigen::MatrixXd& B,
                       const Eigen::VectorXd& k) const;
};

ResidualBlocks build_residual_blocks(const ReducedDataset& data,
                                     const ClusterSelection& selection);

/// Frobenius norm of M X'' + C X' + grad(k' phi(X)) - B U.
double residual_norm(const ReducedDataset& data, const RomModel& model);

/// A conic program plus what is needed to read operators back from its
/// solution. Internally each reduced variable x_j is rescaled by its RMS
/// value; `scale` holds those factors. The right-hand side is divided by
/// `rhs_scale`, so the solver returns the scaled operators divided by it.
struct AssembledProblem {
  ConicProblem problem;
  InferenceMode mode = InferenceMode::kBounded;
  Eigen::VectorXd scale;
  double eps = 0.0;
  double delta_m = 0.0;
  double delta_c = 0.0;
  double rhs_scale = 1.0;
  double gram_margin = 0.0;  // Gram blocks are bounded below by this times I
  int r = 0, n_u = 0;
  int off_m = 0, off_c = 0, off_b = 0, off_k = 0, off_gram = 0, off_t = 0;
  int num_decision_vars = 0;
};

AssembledProblem assemble_problem(const ReducedDataset& data,
                                  const ClusterSelection& selection,
                                  InferenceMode mode,
                                  const Hyperparams& hyperparams = {});

struct InferOptions {
  SolverSettings solver{.feas_tol = 1e-9, .gap_tol = 1e-10, .max_iter = 200};
  VerifyOptions verify;
  // Route the unconstrained mode through the conic solver instead of the
  // direct least-squares backend.
  bool conic_unconstrained = false;
};

/// Throws kInferenceFailed (non-optimal solver status) or
/// kCertificateInvalid (constrained model failing verification).
std::pair<RomModel, InferenceReport> infer(const ReducedDataset& data,
                                           const ClusterSelection& selection,
                                           InferenceMode mode,
                                           const Hyperparams& hyperparams = {},
                                           const InferOptions& options = {});

/// Re-runs the certificate checks stored in a model, including the mass and
/// damping floors (tolerance options.tol_eig). Returns std::nullopt for
/// unconstrained models.
std::optional<ModelCheck> verify_model(const RomModel& model,
                                       const VerifyOptions& options = {});

/// Minimum eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& A);

/// Stable 64-bit FNV-1a digest of the reduced data, as 16 hex digits.
std::string data_digest(const ReducedDataset& data);

}  // namespace stable_opinf
