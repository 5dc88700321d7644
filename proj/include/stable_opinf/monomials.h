#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stable_opinf {

/// Largest exponent allowed on a single variable.
inline constexpr int kMaxExponent = 31;

/// Exponent vector of a monomial x_0^{e_0} ... x_{r-1}^{e_{r-1}}.
///
/// Ordering is graded lexicographic: lower total degree first, then the
/// exponent vector compared lexicographically with larger leading exponents
/// first, so that x0^2 < x0*x1 < x1^2.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> exponents);

  /// The monomial x_var^power in `num_vars` variables.
  static MultiIndex Power(int num_vars, int var, int power);

  int num_vars() const { return static_cast<int>(exponents_.size()); }
  int degree() const { return degree_; }
  int operator[](int var) const { return exponents_[var]; }
  const std::vector<int>& exponents() const { return exponents_; }

  /// Exponent-wise sum, i.e. the product of the two monomials.
  MultiIndex operator*(const MultiIndex& other) const;

  /// True when this is x_j^2 for some j; `var` receives j.
  bool IsPureSquare(int* var = nullptr) const;

  double Evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  bool operator==(const MultiIndex& other) const {
    return exponents_ == other.exponents_;
  }
  bool operator<(const MultiIndex& other) const;

 private:
  std::vector<int> exponents_;
  int degree_ = 0;
};

/// Sorted, duplicate-free list of monomials in a fixed number of variables.
class MonomialBasis {
 public:
  MonomialBasis() = default;
  /// Sorts and deduplicates `entries`; all must share `num_vars`.
  MonomialBasis(int num_vars, std::vector<MultiIndex> entries);

  int num_vars() const { return num_vars_; }
  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  const MultiIndex& operator[](int i) const { return entries_[i]; }
  const std::vector<MultiIndex>& entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Position of `m` in the basis, if present. O(log n).
  std::optional<int> IndexOf(const MultiIndex& m) const;

  /// Set union with another basis over the same variables.
  MonomialBasis Union(const MonomialBasis& other) const;

  int MinDegree() const;
  int MaxDegree() const;

  /// One monomial per line, exponents separated by single spaces.
  std::string Serialize() const;
  static MonomialBasis Parse(int num_vars, const std::string& text);

  bool operator==(const MonomialBasis& other) const {
    return num_vars_ == other.num_vars_ && entries_ == other.entries_;
  }

 private:
  int num_vars_ = 0;
  std::vector<MultiIndex> entries_;
};

/// C(n, k) in exact integer arithmetic.
std::int64_t binomial(int n, int k);

/// All monomials of degree 2..d in r variables (no constant, no linear
/// terms). Throws kInvalidDegree for odd or too-small d, kInvalidDimension
/// for r < 1.
MonomialBasis full_basis(int r, int d);

/// |full_basis(r, d)| = C(r + d, d) - r - 1.
std::int64_t count_full(int r, int d);

/// All monomials with degree in [min_degree, max_degree] supported on the
/// listed (zero-based, sorted, distinct) variables of an r-variable space.
MonomialBasis monomials_on(int r, const std::vector<int>& vars, int min_degree,
                           int max_degree);

/// All monomials of degree 1..d/2 in the listed (zero-based) variables of an
/// r-variable space. These are the factor monomials of a Gram matrix whose
/// products span exactly the degree 2..d monomials on those variables.
MonomialBasis sos_factor_basis(int r, const std::vector<int>& vars, int d);

/// Value of every basis monomial at x.
Eigen::VectorXd eval_basis(const MonomialBasis& basis,
                           const Eigen::Ref<const Eigen::VectorXd>& x);

/// r x |basis| matrix whose (j, a) entry is d(x^a)/dx_j.
Eigen::MatrixXd basis_jacobian(const MonomialBasis& basis,
                               const Eigen::Ref<const Eigen::VectorXd>& x);

/// Gradient of the polynomial k' * phi(x).
Eigen::VectorXd eval_gradient(const MonomialBasis& basis,
                              const Eigen::Ref<const Eigen::VectorXd>& k,
                              const Eigen::Ref<const Eigen::VectorXd>& x);

/// k' * phi(x).
double eval_polynomial(const MonomialBasis& basis,
                       const Eigen::Ref<const Eigen::VectorXd>& k,
                       const Eigen::Ref<const Eigen::VectorXd>& x);

/// Degree of each monomial. Since x' * grad(x^a) = |a| x^a, the weighted
/// coefficients w .* k describe the polynomial x' * grad(k' * phi).
Eigen::VectorXi euler_weights(const MonomialBasis& basis);

}  // namespace stable_opinf
