#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "stable_opinf/monomials.h"

namespace stable_opinf {

/// A set of distinct reduced variables (zero-based, strictly increasing)
/// whose joint monomials enter the polynomial potential together.
struct Cluster {
  std::vector<int> vars;

  bool operator==(const Cluster& other) const = default;
  bool operator<(const Cluster& other) const { return vars < other.vars; }
};

/// Result of the greedy cluster selection.
///
/// `psi_bases[i]` holds the Gram factor monomials (degree 1..d/2) of
/// cluster i and `phi` the deduplicated union of all degree 2..d monomials
/// supported on some cluster. Dense models are the special case of a single
/// cluster containing every variable.
struct ClusterSelection {
  int r = 0;
  int degree = 0;
  int cluster_size = 0;
  std::vector<Cluster> clusters;  // in selection order
  std::vector<MonomialBasis> psi_bases;
  MonomialBasis phi;
  int stage1_clusters = 0;
  // Set when a monomial budget was requested that stage 1 already exceeds.
  bool budget_exceeded_by_coverage = false;

  bool dense() const { return cluster_size == r; }
  int num_clusters() const { return static_cast<int>(clusters.size()); }
  /// Number of clusters containing variable j.
  int CoverCount(int j) const;
};

/// Product of I_j = sigma_j^2 / sum_k sigma_k^2 over the cluster's
/// variables. Throws kDegenerateSpectrum when sigma is identically zero.
double importance(const Eigen::Ref<const Eigen::VectorXd>& sigma,
                  const Cluster& cluster);

/// Greedy two-stage selection. Stage 1 repeatedly takes the most important
/// cluster that still contains an uncovered variable until every variable
/// is covered. Stage 2 (only when `budget` is given) keeps adding the most
/// important unused cluster while |phi| < budget. Ties go to the
/// lexicographically smallest index tuple.
ClusterSelection select_clusters(const Eigen::Ref<const Eigen::VectorXd>& sigma,
                                 int r, int cluster_size, int d,
                                 std::optional<int> budget = std::nullopt);

/// The single-cluster selection equivalent to full_basis(r, d).
ClusterSelection dense_selection(int r, int d);

/// Builds psi bases and phi for an explicit cluster list.
ClusterSelection make_selection(int r, int d, std::vector<Cluster> clusters);

/// n_chi * (C(theta + d, d) - theta - 1).
std::int64_t sparse_upper_bound(int num_clusters, int cluster_size, int d);

}  // namespace stable_opinf
