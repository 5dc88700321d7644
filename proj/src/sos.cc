#include "stable_opinf/sos.h"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "stable_opinf/conic.h"
#include "stable_opinf/error.h"

namespace stable_opinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

CoefficientMap::CoefficientMap(const ClusterSelection& selection)
    : num_monomials_(selection.phi.size()) {
  for (const auto& psi : selection.psi_bases) {
    const int n = psi.size();
    sizes_.push_back(n);
    std::vector<int> t(n * n);
    for (int p = 0; p < n; ++p) {
      for (int q = 0; q <= p; ++q) {
        const auto idx = selection.phi.IndexOf(psi[p] * psi[q]);
        if (!idx) {
          throw Error(ErrorCode::kProductOutsideBasis,
                      "Gram product monomial missing from phi");
        }
        t[p * n + q] = t[q * n + p] = *idx;
      }
    }
    target_.push_back(std::move(t));
  }
}

VectorXd CoefficientMap::Apply(const std::vector<MatrixXd>& grams) const {
  if (static_cast<int>(grams.size()) != num_clusters()) {
    throw Error(ErrorCode::kDimensionMismatch, "one Gram matrix per cluster");
  }
  VectorXd out = VectorXd::Zero(num_monomials_);
  for (int i = 0; i < num_clusters(); ++i) {
    const int n = sizes_[i];
    if (grams[i].rows() != n || grams[i].cols() != n) {
      throw Error(ErrorCode::kDimensionMismatch, "Gram block has wrong size");
    }
    for (int q = 0; q < n; ++q) {
      for (int p = 0; p < n; ++p) out[Target(i, p, q)] += grams[i](p, q);
    }
  }
  return out;
}

PositivityOffsets::PositivityOffsets(const ClusterSelection& selection,
                                     double eps)
    : PositivityOffsets(selection, VectorXd::Constant(selection.r, eps)) {}

PositivityOffsets::PositivityOffsets(const ClusterSelection& selection,
                                     const VectorXd& eps_per_var)
    : eps(eps_per_var), cover(selection.r) {
  if (eps.size() != selection.r) {
    throw Error(ErrorCode::kDimensionMismatch, "one epsilon per variable");
  }
  for (int j = 0; j < selection.r; ++j) cover[j] = selection.CoverCount(j);
}

VectorXd PositivityOffsets::Target(const MonomialBasis& phi) const {
  VectorXd t = VectorXd::Zero(phi.size());
  for (int j = 0; j < eps.size(); ++j) {
    const auto idx =
        phi.IndexOf(MultiIndex::Power(phi.num_vars(), j, 2));
    if (!idx) {
      throw Error(ErrorCode::kMissingQuadratic,
                  "x_" + std::to_string(j) + "^2 missing from phi");
    }
    t[*idx] = eps[j];
  }
  return t;
}

MatrixXd PositivityOffsets::Shift(const ClusterSelection& selection,
                                  int cluster) const {
  const MonomialBasis& psi = selection.psi_bases[cluster];
  MatrixXd D = MatrixXd::Zero(psi.size(), psi.size());
  for (int j : selection.clusters[cluster].vars) {
    const auto idx = psi.IndexOf(MultiIndex::Power(selection.r, j, 1));
    D((*idx), (*idx)) = eps[j] / cover[j];
  }
  return D;
}

int PositivityConstraints::num_gram_vars() const {
  int total = 0;
  for (int n : block_sizes) total += n * (n + 1) / 2;
  return total;
}

PositivityConstraints assemble_positivity_constraints(
    const ClusterSelection& selection, const VectorXd& eps_per_var,
    PositivityMode mode) {
  if (!eps_per_var.allFinite() || (eps_per_var.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidEpsilon,
                "epsilon must be finite and nonnegative");
  }
  const CoefficientMap map(selection);
  const PositivityOffsets offsets(selection, eps_per_var);
  const VectorXd quad = offsets.Target(selection.phi);
  const VectorXi degree = euler_weights(selection.phi);
  const int nphi = selection.phi.size();

  PositivityConstraints pc;
  pc.num_monomials = nphi;
  pc.num_families = mode == PositivityMode::kIss ? 2 : 1;
  pc.k_weights.resize(pc.num_rows());
  pc.rhs.resize(pc.num_rows());
  const double r2 = std::sqrt(2.0);
  int col = 0;
  for (int f = 0; f < pc.num_families; ++f) {
    pc.k_weights.segment(f * nphi, nphi) =
        f == 0 ? VectorXd::Ones(nphi) : VectorXd(degree.cast<double>());
    pc.rhs.segment(f * nphi, nphi) = quad;
    for (int i = 0; i < map.num_clusters(); ++i) {
      const int n = map.block_size(i);
      pc.block_sizes.push_back(n);
      for (int q = 0; q < n; ++q) {
        for (int p = q; p < n; ++p, ++col) {
          pc.gram_terms.emplace_back(f * nphi + map.Target(i, p, q), col,
                                     p == q ? -1.0 : -r2);
        }
      }
    }
  }
  return pc;
}

PositivityConstraints assemble_positivity_constraints(
    const ClusterSelection& selection, double eps, PositivityMode mode) {
  if (!std::isfinite(eps) || eps < 0.0) {
    throw Error(ErrorCode::kInvalidEpsilon,
                "epsilon must be finite and nonnegative");
  }
  return assemble_positivity_constraints(
      selection, VectorXd::Constant(selection.r, eps), mode);
}

MatrixXd project_psd(const MatrixXd& X) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (X + X.transpose()));
  const VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const MatrixXd P = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (P + P.transpose());
}

void absorb_mismatch(const CoefficientMap& map, const VectorXd& target,
                     std::vector<MatrixXd>* grams) {
  const VectorXd delta = target - map.Apply(*grams);
  // Spread each correction evenly over every Gram entry mapping to it.
  VectorXd count = VectorXd::Zero(map.num_monomials());
  for (int i = 0; i < map.num_clusters(); ++i) {
    const int n = map.block_size(i);
    for (int q = 0; q < n; ++q) {
      for (int p = 0; p < n; ++p) count[map.Target(i, p, q)] += 1.0;
    }
  }
  for (int i = 0; i < map.num_clusters(); ++i) {
    const int n = map.block_size(i);
    for (int q = 0; q < n; ++q) {
      for (int p = 0; p < n; ++p) {
        const int a = map.Target(i, p, q);
        (*grams)[i](p, q) += delta[a] / count[a];
      }
    }
  }
}

CertificateReport verify_certificate(const ClusterSelection& selection,
                                     const VectorXd& k,
                                     const GramCertificate& certificate,
                                     double eps, const VerifyOptions& options) {
  const MonomialBasis& phi = selection.phi;
  if (k.size() != phi.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "coefficient vector length differs from phi");
  }
  CertificateReport rep;
  rep.has_h = !certificate.H.empty();
  const CoefficientMap map(selection);
  const VectorXd quad = PositivityOffsets(selection, eps).Target(phi);

  auto min_eig = [](const std::vector<MatrixXd>& blocks) {
    double mn = std::numeric_limits<double>::infinity();
    for (const auto& B : blocks) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (B + B.transpose()),
                                                 Eigen::EigenvaluesOnly);
      mn = std::min(mn, es.eigenvalues()[0]);
    }
    return mn;
  };
  rep.min_eig_g = min_eig(certificate.G);
  rep.match_residual_g =
      (map.Apply(certificate.G) - (k - quad)).lpNorm<Eigen::Infinity>();
  rep.eig_ok = rep.min_eig_g >= -options.tol_eig;
  rep.match_ok = rep.match_residual_g <= options.tol_match;
  VectorXd wk;
  if (rep.has_h) {
    wk = euler_weights(phi).cast<double>().cwiseProduct(k);
    rep.min_eig_h = min_eig(certificate.H);
    rep.match_residual_h =
        (map.Apply(certificate.H) - (wk - quad)).lpNorm<Eigen::Infinity>();
    rep.eig_ok = rep.eig_ok && rep.min_eig_h >= -options.tol_eig;
    rep.match_ok = rep.match_ok && rep.match_residual_h <= options.tol_match;
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  rep.min_positivity = std::numeric_limits<double>::infinity();
  rep.min_euler = std::numeric_limits<double>::infinity();
  VectorXd x(selection.r);
  for (int s = 0; s < options.num_samples; ++s) {
    for (int j = 0; j < selection.r; ++j) x[j] = normal(rng);
    const VectorXd values = eval_basis(phi, x);
    const double floor = eps * x.squaredNorm();
    rep.min_positivity = std::min(rep.min_positivity, k.dot(values) - floor);
    if (rep.has_h) {
      rep.min_euler = std::min(rep.min_euler, wk.dot(values) - floor);
    }
  }
  rep.num_samples = options.num_samples;
  rep.positivity_ok = options.num_samples == 0 ||
                      rep.min_positivity >= -options.tol_positivity;
  if (rep.has_h && options.num_samples > 0) {
    rep.positivity_ok =
        rep.positivity_ok && rep.min_euler >= -options.tol_positivity;
  }
  return rep;
}

}  // namespace stable_opinf
