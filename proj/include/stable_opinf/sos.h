#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "stable_opinf/clustering.h"

namespace stable_opinf {

/// Per-cluster Gram matrices. `G[i]` certifies k'phi - eps ||x||^2 and, in
/// iss mode, `H[i]` certifies x' grad(k'phi) - eps ||x||^2.
struct GramCertificate {
  std::vector<Eigen::MatrixXd> G;
  std::vector<Eigen::MatrixXd> H;
};

/// Maps Gram entries onto phi coefficients: cluster i contributes
/// G_i(p, q) to the monomial psi_{i,p} * psi_{i,q}, for both (p, q) and
/// (q, p).
class CoefficientMap {
 public:
  /// Throws kProductOutsideBasis if some product is missing from phi.
  explicit CoefficientMap(const ClusterSelection& selection);

  int num_monomials() const { return num_monomials_; }
  int num_clusters() const { return static_cast<int>(target_.size()); }
  int block_size(int cluster) const { return sizes_[cluster]; }

  /// Index into phi of psi_{i,p} * psi_{i,q}.
  int Target(int cluster, int p, int q) const {
    return target_[cluster][p * sizes_[cluster] + q];
  }

  /// sum_i sum_{p,q} G_i(p, q) e_{Target(i, p, q)}.
  Eigen::VectorXd Apply(const std::vector<Eigen::MatrixXd>& grams) const;

 private:
  int num_monomials_ = 0;
  std::vector<int> sizes_;
  std::vector<std::vector<int>> target_;
};

/// Splits eps_j over the c_j clusters containing variable j, so that the
/// shift matrices D_i = diag(eps_j / c_j on the linear entries of psi_i)
/// add up to eps_j x_j^2.
struct PositivityOffsets {
  Eigen::VectorXd eps;        // per variable
  Eigen::VectorXi cover;      // c_j

  PositivityOffsets(const ClusterSelection& selection, double eps);
  PositivityOffsets(const ClusterSelection& selection,
                    const Eigen::VectorXd& eps_per_var);

  /// eps_j at the position of x_j^2 in phi, zero elsewhere.
  Eigen::VectorXd Target(const MonomialBasis& phi) const;
  /// D_i for cluster i.
  Eigen::MatrixXd Shift(const ClusterSelection& selection, int cluster) const;
};

enum class PositivityMode { kBounded, kIss };

/// Equality rows  w_a k_a - sum(svec Gram terms) = rhs_a  for every family
/// (G, and H in iss mode) and every monomial a of phi. Row f * |phi| + a
/// belongs to family f. Gram columns index the concatenated svec slices of
/// the blocks listed in `block_sizes` (all G blocks first, then all H).
struct PositivityConstraints {
  int num_monomials = 0;
  int num_families = 0;
  std::vector<int> block_sizes;
  std::vector<Eigen::Triplet<double>> gram_terms;
  Eigen::VectorXd k_weights;
  Eigen::VectorXd rhs;

  int num_rows() const { return num_families * num_monomials; }
  int num_gram_vars() const;
};

/// Throws kInvalidEpsilon for negative or non-finite eps (eps = 0 gives plain
/// SOS membership) and kMissingQuadratic when some x_j^2 is absent from phi.
PositivityConstraints assemble_positivity_constraints(
    const ClusterSelection& selection, const Eigen::VectorXd& eps_per_var,
    PositivityMode mode);
PositivityConstraints assemble_positivity_constraints(
    const ClusterSelection& selection, double eps, PositivityMode mode);

struct VerifyOptions {
  double tol_eig = 1e-7;
  double tol_match = 1e-7;
  double tol_positivity = 1e-7;
  int num_samples = 10000;
  std::uint64_t seed = 42;
};

struct CertificateReport {
  double min_eig_g = 0.0;
  double min_eig_h = 0.0;  // meaningful only with H blocks
  double match_residual_g = 0.0;
  double match_residual_h = 0.0;
  double min_positivity = 0.0;  // min over samples of k'phi - eps ||x||^2
  double min_euler = 0.0;       // same for x' grad(k'phi)
  int num_samples = 0;
  bool has_h = false;

  bool eig_ok = false;
  bool match_ok = false;
  bool positivity_ok = false;
  bool passed() const { return eig_ok && match_ok && positivity_ok; }
};

/// A-posteriori checks of a certificate against coefficients k over phi.
/// The Euler inequality is sampled only when H blocks are present.
CertificateReport verify_certificate(const ClusterSelection& selection,
                                     const Eigen::VectorXd& k,
                                     const GramCertificate& certificate,
                                     double eps,
                                     const VerifyOptions& options = {});

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& X);

/// Adds target - map(grams) onto one Gram entry per monomial so the
/// coefficient match holds exactly.
void absorb_mismatch(const CoefficientMap& map, const Eigen::VectorXd& target,
                     std::vector<Eigen::MatrixXd>* grams);

}  // namespace stable_opinf
