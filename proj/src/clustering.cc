#include "stable_opinf/clustering.h"

#include <algorithm>
#include <string>

#include "stable_opinf/error.h"

namespace stable_opinf {
namespace {

// All size-k subsets of {0..r-1} in lexicographic order.
std::vector<Cluster> AllClusters(int r, int k) {
  std::vector<Cluster> out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    out.push_back(Cluster{idx});
    int i = k - 1;
    while (i >= 0 && idx[i] == r - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

}  // namespace

int ClusterSelection::CoverCount(int j) const {
  int count = 0;
  for (const auto& c : clusters) {
    if (std::binary_search(c.vars.begin(), c.vars.end(), j)) ++count;
  }
  return count;
}

double importance(const Eigen::Ref<const Eigen::VectorXd>& sigma,
                  const Cluster& cluster) {
  if ((sigma.array() < 0.0).any()) {
    throw Error(ErrorCode::kDegenerateSpectrum,
                "singular values must be nonnegative");
  }
  const double total = sigma.squaredNorm();
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kDegenerateSpectrum, "all singular values are zero");
  }
  double s = 1.0;
  for (int j : cluster.vars) {
    if (j < 0 || j >= sigma.size()) {
      throw Error(ErrorCode::kInvalidCluster,
                  "cluster index " + std::to_string(j) + " out of range");
    }
    s *= sigma[j] * sigma[j] / total;
  }
  return s;
}

ClusterSelection make_selection(int r, int d, std::vector<Cluster> clusters) {
  ClusterSelection sel;
  sel.r = r;
  sel.degree = d;
  sel.cluster_size = clusters.empty()
                         ? 0
                         : static_cast<int>(clusters.front().vars.size());
  sel.stage1_clusters = static_cast<int>(clusters.size());
  sel.phi = MonomialBasis(r, {});
  for (auto& c : clusters) {
    sel.psi_bases.push_back(sos_factor_basis(r, c.vars, d));
    sel.phi = sel.phi.Union(monomials_on(r, c.vars, 2, d));
  }
  sel.clusters = std::move(clusters);
  return sel;
}

ClusterSelection select_clusters(const Eigen::Ref<const Eigen::VectorXd>& sigma,
                                 int r, int cluster_size, int d,
                                 std::optional<int> budget) {
  if (r < 1) {
    throw Error(ErrorCode::kInvalidDimension, "r must be positive");
  }
  if (cluster_size < 1 || cluster_size > r) {
    throw Error(ErrorCode::kInvalidCluster,
                "cluster size must lie in [1, r], got " +
                    std::to_string(cluster_size));
  }
  if (d < 2 || d % 2 != 0) {
    throw Error(ErrorCode::kInvalidDegree, "degree must be even and >= 2");
  }
  if (sigma.size() < r) {
    throw Error(ErrorCode::kDimensionMismatch,
                "need at least r singular values");
  }

  const std::vector<Cluster> candidates = AllClusters(r, cluster_size);
  std::vector<double> score(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    score[i] = importance(sigma, candidates[i]);
  }
  std::vector<bool> used(candidates.size(), false);
  std::vector<bool> covered(r, false);
  int num_open = r;

  ClusterSelection sel;
  sel.r = r;
  sel.degree = d;
  sel.cluster_size = cluster_size;
  sel.phi = MonomialBasis(r, {});

  auto take = [&](std::size_t i) {
    used[i] = true;
    const Cluster& c = candidates[i];
    sel.clusters.push_back(c);
    sel.psi_bases.push_back(sos_factor_basis(r, c.vars, d));
    sel.phi = sel.phi.Union(monomials_on(r, c.vars, 2, d));
    for (int j : c.vars) {
      if (!covered[j]) {
        covered[j] = true;
        --num_open;
      }
    }
  };
  // Candidates are scanned in lexicographic order and only a strictly larger
  // score replaces the incumbent, so ties resolve to the smallest tuple.
  auto best = [&](auto&& admissible) -> std::optional<std::size_t> {
    std::optional<std::size_t> arg;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (used[i] || !admissible(candidates[i])) continue;
      if (!arg || score[i] > score[*arg]) arg = i;
    }
    return arg;
  };

  while (num_open > 0) {
    auto arg = best([&](const Cluster& c) {
      return std::any_of(c.vars.begin(), c.vars.end(),
                         [&](int j) { return !covered[j]; });
    });
    take(*arg);
  }
  sel.stage1_clusters = sel.num_clusters();

  if (budget) {
    sel.budget_exceeded_by_coverage = sel.phi.size() > *budget;
    while (sel.phi.size() < *budget) {
      auto arg = best([](const Cluster&) { return true; });
      if (!arg) break;
      take(*arg);
    }
  }
  return sel;
}

ClusterSelection dense_selection(int r, int d) {
  std::vector<int> all(r);
  for (int i = 0; i < r; ++i) all[i] = i;
  if (r < 1) {
    throw Error(ErrorCode::kInvalidDimension, "r must be positive");
  }
  return make_selection(r, d, {Cluster{all}});
}

std::int64_t sparse_upper_bound(int num_clusters, int cluster_size, int d) {
  return num_clusters * (binomial(cluster_size + d, d) - cluster_size - 1);
}

}  // namespace stable_opinf
