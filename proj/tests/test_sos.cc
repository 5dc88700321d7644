#include "stable_opinf/sos.h"

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"

namespace stable_opinf {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::RandomNormal;

MatrixXd RandomPsd(std::mt19937_64& rng, int n) {
  const MatrixXd A = RandomNormal(rng, n, n);
  return A * A.transpose();
}

TEST(Sos, SingleVariableMap) {
  const ClusterSelection sel = dense_selection(1, 4);
  const CoefficientMap map(sel);
  ASSERT_EQ(map.block_size(0), 2);
  EXPECT_EQ(map.Target(0, 0, 0), 0);  // x^2
  EXPECT_EQ(map.Target(0, 0, 1), 1);  // x^3
  EXPECT_EQ(map.Target(0, 1, 0), 1);
  EXPECT_EQ(map.Target(0, 1, 1), 2);  // x^4
  EXPECT_EQ(map.Apply({MatrixXd::Identity(2, 2)}), (VectorXd(3) << 1, 0, 1).finished());
}

TEST(Sos, TwoVariableMapCoversFullBasis) {
  const ClusterSelection sel = dense_selection(2, 4);
  const CoefficientMap map(sel);
  const int n = map.block_size(0);
  ASSERT_EQ(n, 5);
  std::set<int> targets;
  int entries = 0;
  for (int q = 0; q < n; ++q) {
    for (int p = q; p < n; ++p, ++entries) {
      const int a = map.Target(0, p, q);
      EXPECT_EQ(a, map.Target(0, q, p));
      EXPECT_EQ(sel.phi[a], sel.psi_bases[0][p] * sel.psi_bases[0][q]);
      targets.insert(a);
    }
  }
  EXPECT_EQ(entries, 15);
  EXPECT_EQ(static_cast<int>(targets.size()), 12);
  EXPECT_EQ(sel.phi, full_basis(2, 4));
}

TEST(Sos, ReconstructionMatchesGramForm) {
  std::mt19937_64 rng(11);
  const ClusterSelection sel = select_clusters(VectorXd::LinSpaced(4, 4, 1), 4, 2, 4);
  const CoefficientMap map(sel);
  std::vector<MatrixXd> grams;
  for (int i = 0; i < sel.num_clusters(); ++i) grams.push_back(RandomPsd(rng, map.block_size(i)));
  const VectorXd k = map.Apply(grams);
  for (int t = 0; t < 100; ++t) {
    const VectorXd x = RandomNormal(rng, 4, 1);
    double direct = 0.0;
    for (int i = 0; i < sel.num_clusters(); ++i) {
      const VectorXd psi = eval_basis(sel.psi_bases[i], x);
      direct += psi.dot(grams[i] * psi);
    }
    const double via_k = eval_polynomial(sel.phi, k, x);
    EXPECT_LE(std::abs(direct - via_k), 1e-10 * std::max(1.0, std::abs(direct)));
  }
}

TEST(Sos, OffsetsSplitEpsilonAcrossClusters) {
  const ClusterSelection sel = select_clusters(VectorXd::LinSpaced(3, 3, 1), 3, 2, 4);
  const PositivityOffsets off(sel, 0.3);
  EXPECT_EQ(off.cover, (Eigen::VectorXi(3) << 2, 1, 1).finished());
  std::vector<MatrixXd> shifts;
  for (int i = 0; i < sel.num_clusters(); ++i) shifts.push_back(off.Shift(sel, i));
  const CoefficientMap map(sel);
  EXPECT_LT((map.Apply(shifts) - off.Target(sel.phi)).norm(), 1e-15);
  for (int j = 0; j < 3; ++j) {
    const int a = *sel.phi.IndexOf(MultiIndex::Power(3, j, 2));
    EXPECT_DOUBLE_EQ(off.Target(sel.phi)[a], 0.3);
  }
}

TEST(Sos, ConstraintCounts) {
  const ClusterSelection sel = select_clusters(VectorXd::LinSpaced(3, 3, 1), 3, 2, 4);
  const int nphi = sel.phi.size();
  const PositivityConstraints b = assemble_positivity_constraints(sel, 1e-3, PositivityMode::kBounded);
  EXPECT_EQ(b.block_sizes, (std::vector<int>{5, 5}));
  EXPECT_EQ(b.num_rows(), nphi);
  EXPECT_EQ(b.num_gram_vars(), 30);
  const PositivityConstraints h = assemble_positivity_constraints(sel, 1e-3, PositivityMode::kIss);
  EXPECT_EQ(h.block_sizes, (std::vector<int>{5, 5, 5, 5}));
  EXPECT_EQ(h.num_rows(), 2 * nphi);
  EXPECT_EQ(h.k_weights.tail(nphi), euler_weights(sel.phi).cast<double>());
}

TEST(Sos, EpsilonValidation) {
  const ClusterSelection sel = dense_selection(2, 4);
  EXPECT_NO_THROW(assemble_positivity_constraints(sel, 0.0, PositivityMode::kBounded));
  const PositivityConstraints pc = assemble_positivity_constraints(sel, 0.0, PositivityMode::kBounded);
  EXPECT_TRUE(pc.rhs.isZero(0.0));
  EXPECT_ERROR_CODE(assemble_positivity_constraints(sel, -1.0, PositivityMode::kBounded),
                    ErrorCode::kInvalidEpsilon);
  EXPECT_ERROR_CODE(assemble_positivity_constraints(sel, std::nan(""), PositivityMode::kBounded),
                    ErrorCode::kInvalidEpsilon);
}

TEST(Sos, VerifyIdentityCertificate) {
  const ClusterSelection sel = dense_selection(1, 4);
  GramCertificate cert{{MatrixXd::Identity(2, 2)}, {}};
  const CertificateReport rep =
      verify_certificate(sel, (VectorXd(3) << 1, 0, 1).finished(), cert, 0.0);
  EXPECT_TRUE(rep.passed());
  EXPECT_NEAR(rep.min_eig_g, 1.0, 1e-14);
  EXPECT_EQ(rep.num_samples, 10000);
}

TEST(Sos, VerifyEulerFamily) {
  // k'phi = x^2 + x^4, x * d/dx = 2x^2 + 4x^4 = psi' diag(2, 4) psi.
  const ClusterSelection sel = dense_selection(1, 4);
  MatrixXd H = MatrixXd::Zero(2, 2);
  H.diagonal() << 2, 4;
  GramCertificate cert{{MatrixXd::Identity(2, 2)}, {H}};
  const CertificateReport rep =
      verify_certificate(sel, (VectorXd(3) << 1, 0, 1).finished(), cert, 0.0);
  EXPECT_TRUE(rep.has_h);
  EXPECT_TRUE(rep.passed());
  cert.H[0](1, 1) = 3.0;
  EXPECT_FALSE(verify_certificate(sel, (VectorXd(3) << 1, 0, 1).finished(), cert, 0.0).match_ok);
}

TEST(Sos, VerifyRejectsIndefiniteGram) {
  const ClusterSelection sel = dense_selection(1, 4);
  MatrixXd G = MatrixXd::Identity(2, 2);
  G(0, 0) = -0.1;
  GramCertificate cert{{G}, {}};
  const CertificateReport rep =
      verify_certificate(sel, (VectorXd(3) << -0.1, 0, 1).finished(), cert, 0.0);
  EXPECT_FALSE(rep.eig_ok);
  EXPECT_FALSE(rep.passed());
}

TEST(Sos, ShiftedCertificateImpliesPointwisePositivity) {
  std::mt19937_64 rng(12);
  const ClusterSelection sel = select_clusters(VectorXd::LinSpaced(4, 4, 1), 4, 2, 4);
  const double eps = 0.05;
  const PositivityOffsets off(sel, eps);
  const CoefficientMap map(sel);
  std::vector<MatrixXd> grams;
  for (int i = 0; i < sel.num_clusters(); ++i) {
    MatrixXd G = RandomPsd(rng, map.block_size(i));
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
    G -= es.eigenvalues()[0] * MatrixXd::Identity(G.rows(), G.cols());  // singular
    grams.push_back(G);
  }
  const VectorXd k = map.Apply(grams) + off.Target(sel.phi);
  for (int t = 0; t < 10000; ++t) {
    const VectorXd x = RandomNormal(rng, 4, 1);
    const double p = eval_polynomial(sel.phi, k, x);
    EXPECT_GE(p - eps * x.squaredNorm(), -1e-9 * std::max(1.0, std::abs(p)));
  }
  EXPECT_TRUE(verify_certificate(sel, k, {grams, {}}, eps).passed());
}

TEST(Sos, AbsorbMismatchRestoresMatch) {
  std::mt19937_64 rng(13);
  const ClusterSelection sel = dense_selection(3, 4);
  const CoefficientMap map(sel);
  std::vector<MatrixXd> grams{RandomPsd(rng, map.block_size(0))};
  const VectorXd target = map.Apply(grams) + 1e-6 * RandomNormal(rng, sel.phi.size(), 1);
  absorb_mismatch(map, target, &grams);
  EXPECT_LT((map.Apply(grams) - target).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((grams[0] - grams[0].transpose()).norm(), 1e-15);
}

TEST(Sos, ProjectPsdClipsNegativeEigenvalues) {
  MatrixXd X(2, 2);
  X << 1, 2, 2, 1;  // eigenvalues 3, -1
  const MatrixXd P = project_psd(X);
  EXPECT_LT((P - 1.5 * MatrixXd::Ones(2, 2)).norm(), 1e-14);
}

TEST(Sos, MissingQuadraticRejected) {
  const ClusterSelection sel = make_selection(3, 4, {Cluster{{0, 1}}});
  EXPECT_ERROR_CODE(assemble_positivity_constraints(sel, 1e-3, PositivityMode::kBounded),
                    ErrorCode::kMissingQuadratic);
}

}  // namespace
}  // namespace stable_opinf
