#include "stable_opinf/monomials.h"

#include <algorithm>
#include <sstream>

#include "stable_opinf/error.h"

namespace stable_opinf {
namespace {

void CheckDegree(int d) {
  if (d < 2 || d % 2 != 0) {
    throw Error(ErrorCode::kInvalidDegree,
                "degree must be even and >= 2, got " + std::to_string(d));
  }
}

void CheckDimension(int r) {
  if (r < 1) {
    throw Error(ErrorCode::kInvalidDimension,
                "variable count must be positive, got " + std::to_string(r));
  }
}

// Appends every exponent vector of total degree `degree` supported on `vars`.
void EnumerateDegree(int r, const std::vector<int>& vars, int degree,
                     std::vector<MultiIndex>* out) {
  std::vector<int> exps(r, 0);
  // Distribute `remaining` units over vars[pos..].
  auto recurse = [&](auto&& self, std::size_t pos, int remaining) -> void {
    if (pos + 1 == vars.size()) {
      exps[vars[pos]] = remaining;
      out->emplace_back(exps);
      exps[vars[pos]] = 0;
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      exps[vars[pos]] = e;
      self(self, pos + 1, remaining - e);
    }
    exps[vars[pos]] = 0;
  };
  recurse(recurse, 0, degree);
}

// powers(j, p) = x_j^p for p = 0..max_power.
Eigen::MatrixXd PowerTable(const Eigen::Ref<const Eigen::VectorXd>& x,
                           int max_power) {
  Eigen::MatrixXd powers(x.size(), max_power + 1);
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    powers(j, 0) = 1.0;
    for (int p = 1; p <= max_power; ++p) {
      powers(j, p) = powers(j, p - 1) * x[j];
    }
  }
  return powers;
}

void CheckLength(const MonomialBasis& basis, Eigen::Index n) {
  if (n != basis.num_vars()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "point has " + std::to_string(n) + " entries, basis has " +
                    std::to_string(basis.num_vars()) + " variables");
  }
}

}  // namespace

MultiIndex::MultiIndex(std::vector<int> exponents)
    : exponents_(std::move(exponents)) {
  for (int e : exponents_) {
    if (e < 0 || e > kMaxExponent) {
      throw Error(ErrorCode::kInvalidDegree,
                  "exponent out of range [0, 31]: " + std::to_string(e));
    }
    degree_ += e;
  }
}

MultiIndex MultiIndex::Power(int num_vars, int var, int power) {
  std::vector<int> exps(num_vars, 0);
  exps[var] = power;
  return MultiIndex(std::move(exps));
}

MultiIndex MultiIndex::operator*(const MultiIndex& other) const {
  if (other.num_vars() != num_vars()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "monomials over different variable counts");
  }
  std::vector<int> exps(exponents_);
  for (int i = 0; i < num_vars(); ++i) exps[i] += other.exponents_[i];
  return MultiIndex(std::move(exps));
}

bool MultiIndex::IsPureSquare(int* var) const {
  if (degree_ != 2) return false;
  for (int i = 0; i < num_vars(); ++i) {
    if (exponents_[i] == 2) {
      if (var != nullptr) *var = i;
      return true;
    }
  }
  return false;
}

double MultiIndex::Evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double value = 1.0;
  for (int i = 0; i < num_vars(); ++i) {
    for (int p = 0; p < exponents_[i]; ++p) value *= x[i];
  }
  return value;
}

bool MultiIndex::operator<(const MultiIndex& other) const {
  if (degree_ != other.degree_) return degree_ < other.degree_;
  // Larger leading exponent sorts first.
  return exponents_ > other.exponents_;
}

MonomialBasis::MonomialBasis(int num_vars, std::vector<MultiIndex> entries)
    : num_vars_(num_vars), entries_(std::move(entries)) {
  for (const auto& m : entries_) {
    if (m.num_vars() != num_vars_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "monomial variable count differs from basis");
    }
  }
  std::sort(entries_.begin(), entries_.end());
  entries_.erase(std::unique(entries_.begin(), entries_.end()),
                 entries_.end());
}

std::optional<int> MonomialBasis::IndexOf(const MultiIndex& m) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), m);
  if (it == entries_.end() || !(*it == m)) return std::nullopt;
  return static_cast<int>(it - entries_.begin());
}

MonomialBasis MonomialBasis::Union(const MonomialBasis& other) const {
  if (empty()) return other;
  if (other.empty()) return *this;
  if (other.num_vars_ != num_vars_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "union of bases over different variable counts");
  }
  std::vector<MultiIndex> merged;
  merged.reserve(entries_.size() + other.entries_.size());
  std::set_union(entries_.begin(), entries_.end(), other.entries_.begin(),
                 other.entries_.end(), std::back_inserter(merged));
  MonomialBasis out;
  out.num_vars_ = num_vars_;
  out.entries_ = std::move(merged);
  return out;
}

int MonomialBasis::MinDegree() const {
  return entries_.empty() ? 0 : entries_.front().degree();
}

int MonomialBasis::MaxDegree() const {
  return entries_.empty() ? 0 : entries_.back().degree();
}

std::string MonomialBasis::Serialize() const {
  std::ostringstream out;
  for (const auto& m : entries_) {
    for (int i = 0; i < num_vars_; ++i) {
      if (i > 0) out << ' ';
      out << m[i];
    }
    out << '\n';
  }
  return out.str();
}

MonomialBasis MonomialBasis::Parse(int num_vars, const std::string& text) {
  std::vector<MultiIndex> entries;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::vector<int> exps;
    int e = 0;
    while (fields >> e) exps.push_back(e);
    if (!fields.eof() || static_cast<int>(exps.size()) != num_vars) {
      throw Error(ErrorCode::kParse, "bad monomial line: '" + line + "'");
    }
    entries.emplace_back(std::move(exps));
  }
  return MonomialBasis(num_vars, std::move(entries));
}

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
  }
  return result;
}

MonomialBasis full_basis(int r, int d) {
  CheckDimension(r);
  CheckDegree(d);
  std::vector<int> vars(r);
  for (int i = 0; i < r; ++i) vars[i] = i;
  std::vector<MultiIndex> entries;
  for (int degree = 2; degree <= d; ++degree) {
    EnumerateDegree(r, vars, degree, &entries);
  }
  return MonomialBasis(r, std::move(entries));
}

std::int64_t count_full(int r, int d) {
  CheckDimension(r);
  CheckDegree(d);
  return binomial(r + d, d) - r - 1;
}

MonomialBasis monomials_on(int r, const std::vector<int>& vars, int min_degree,
                           int max_degree) {
  CheckDimension(r);
  if (vars.empty()) {
    throw Error(ErrorCode::kInvalidCluster, "empty variable set");
  }
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i] < 0 || vars[i] >= r || (i > 0 && vars[i] <= vars[i - 1])) {
      throw Error(ErrorCode::kInvalidCluster,
                  "cluster indices must be sorted, distinct and < r");
    }
  }
  std::vector<MultiIndex> entries;
  for (int degree = std::max(min_degree, 1); degree <= max_degree; ++degree) {
    EnumerateDegree(r, vars, degree, &entries);
  }
  return MonomialBasis(r, std::move(entries));
}

MonomialBasis sos_factor_basis(int r, const std::vector<int>& vars, int d) {
  CheckDegree(d);
  return monomials_on(r, vars, 1, d / 2);
}

Eigen::VectorXd eval_basis(const MonomialBasis& basis,
                           const Eigen::Ref<const Eigen::VectorXd>& x) {
  CheckLength(basis, x.size());
  const Eigen::MatrixXd powers = PowerTable(x, basis.MaxDegree());
  Eigen::VectorXd values(basis.size());
  for (int a = 0; a < basis.size(); ++a) {
    double v = 1.0;
    for (int i = 0; i < basis.num_vars(); ++i) v *= powers(i, basis[a][i]);
    values[a] = v;
  }
  return values;
}

Eigen::MatrixXd basis_jacobian(const MonomialBasis& basis,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
  CheckLength(basis, x.size());
  const int r = basis.num_vars();
  const Eigen::MatrixXd powers = PowerTable(x, basis.MaxDegree());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(r, basis.size());
  for (int a = 0; a < basis.size(); ++a) {
    const MultiIndex& m = basis[a];
    for (int j = 0; j < r; ++j) {
      if (m[j] == 0) continue;
      double v = m[j];
      for (int i = 0; i < r; ++i) {
        v *= powers(i, i == j ? m[i] - 1 : m[i]);
      }
      jac(j, a) = v;
    }
  }
  return jac;
}

Eigen::VectorXd eval_gradient(const MonomialBasis& basis,
                              const Eigen::Ref<const Eigen::VectorXd>& k,
                              const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (k.size() != basis.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "coefficient vector length differs from basis size");
  }
  return basis_jacobian(basis, x) * k;
}

double eval_polynomial(const MonomialBasis& basis,
                       const Eigen::Ref<const Eigen::VectorXd>& k,
                       const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (k.size() != basis.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "coefficient vector length differs from basis size");
  }
  return k.dot(eval_basis(basis, x));
}

Eigen::VectorXi euler_weights(const MonomialBasis& basis) {
  Eigen::VectorXi w(basis.size());
  for (int a = 0; a < basis.size(); ++a) w[a] = basis[a].degree();
  return w;
}

}  // namespace stable_opinf
