#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace stable_opinf {

enum class ConeType { kFree, kNonneg, kSoc, kPsd };

/// One cone over a contiguous slice of the decision vector. Blocks are laid
/// out back to back in the order they are listed.
///
/// For kPsd, `dim` is the matrix order n and the slice holds svec(X), the
/// lower triangle stored column by column with off-diagonal entries scaled
/// by sqrt(2), so that svec(X)'svec(Y) = trace(XY). For kSoc the slice is
/// (t, z) with t >= ||z||; `dim` counts t.
struct ConeBlock {
  ConeType type = ConeType::kFree;
  int dim = 0;

  int length() const { return type == ConeType::kPsd ? dim * (dim + 1) / 2 : dim; }
};

/// minimize c'v  subject to  A v = b,  v in K_1 x ... x K_p.
struct ConicProblem {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<ConeBlock> cones;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_rows() const { return static_cast<int>(b.size()); }
  /// Start offset of every block plus one trailing entry equal to num_vars().
  std::vector<int> Offsets() const;
  /// Throws kInvalidProblem on inconsistent shapes or block layout.
  void Validate() const;
};

enum class SolveStatus {
  kOptimal,
  // Progress stalled before the requested tolerances but within the
  // reduced ones.
  kAlmostOptimal,
  kPrimalInfeasible,
  kDualInfeasible,
  kMaxIter,
  kNumericalError,
};

std::string_view to_string(SolveStatus status);

/// Feasibility is measured as ||residual|| / (tau max(1, ||rhs||)) on the
/// row-equilibrated problem; the gap relative to max(1, |objective|).
struct SolverSettings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  double reduced_feas_tol = 1e-6;
  double reduced_gap_tol = 1e-6;
  int max_iter = 100;
  bool verbose = false;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::kNumericalError;
  Eigen::VectorXd x;  // primal
  Eigen::VectorXd y;  // equality multipliers
  Eigen::VectorXd s;  // dual slack, c - A'y
  double objective = 0.0;
  double equality_residual = 0.0;  // max |A x - b|, unscaled
  double min_cone_margin = 0.0;    // smallest eigenvalue / SOC gap / entry
  int iterations = 0;
};

/// Homogeneous self-dual interior-point method with Nesterov-Todd scaling
/// and Mehrotra predictor-corrector steps. Deterministic.
ConicSolution solve(const ConicProblem& problem,
                    const SolverSettings& settings = {});

/// argmin ||A v - b||_2 by complete orthogonal decomposition; returns the
/// minimum-norm solution when A is rank deficient.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& A,
                              const Eigen::VectorXd& b);

/// svec / smat for the PSD slice convention above.
Eigen::VectorXd svec(const Eigen::MatrixXd& X);
Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n);
/// Position of X(i, j) (i >= j) inside svec(X).
inline int svec_index(int i, int j, int n) {
  return j * n - j * (j - 1) / 2 + (i - j);
}

/// Smallest cone margin of v over all blocks (min entry for nonneg, t - ||z||
/// for SOC, min eigenvalue for PSD; free blocks are ignored).
double cone_margin(const ConicProblem& problem,
                   const Eigen::Ref<const Eigen::VectorXd>& v);

/// Text dump: a header "conic <n_vars> <n_rows> <nnz>", one line per cone
/// ("free n", "nonneg n", "soc n", "psd n"), then "c" and "b" lines and one
/// "i j value" triplet per nonzero of A (zero-based).
void write_problem(std::ostream& out, const ConicProblem& problem);

}  // namespace stable_opinf
