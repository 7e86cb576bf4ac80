#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace datamkt {

// Jointly Gaussian user types X ~ N(0, Sigma) observed through unit-variance
// noisy signals S_i = X_i + Z_i, Z_i ~ N(0,1) independent. The noise variance
// is fixed at 1 and is not configurable.
//
// Construction validates the covariance matrix:
//   - symmetric within 1e-12 (then symmetrized to (S + S^T)/2),
//   - positive semidefinite: smallest eigenvalue >= -1e-10,
//   - strictly positive diagonal.
// Violations throw std::invalid_argument.
class GaussianMarket {
 public:
  explicit GaussianMarket(Eigen::MatrixXd sigma);

  int size() const { return n_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  double covariance(int i, int j) const { return sigma_(i, j); }
  double variance(int i) const { return sigma_(i, i); }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  int n_;
  Eigen::MatrixXd sigma_;
  double min_eigenvalue_;
};

// Binary sharing profile a in {0,1}^n, stored as a bit mask (bit i = user i).
// Supports up to 63 users; every exhaustive solver caps out far below that.
class ActionProfile {
 public:
  ActionProfile(std::uint64_t mask, int n);

  static ActionProfile all_zeros(int n) { return {0, n}; }
  static ActionProfile all_ones(int n);
  static ActionProfile from_bits(const std::vector<int>& bits);

  int size() const { return n_; }
  std::uint64_t mask() const { return mask_; }
  bool shares(int i) const { return (mask_ >> i) & 1ULL; }
  int sharer_count() const;
  ActionProfile with(int i, bool share) const;

  // Componentwise partial order: this >= other.
  bool dominates(const ActionProfile& other) const;

  // "0110..." with user 0 first.
  std::string to_string() const;

  friend bool operator==(const ActionProfile& a, const ActionProfile& b) {
    return a.n_ == b.n_ && a.mask_ == b.mask_;
  }

 private:
  std::uint64_t mask_;
  int n_;
};

// Lexicographic order on the bit vector (a_1,...,a_n), 0 before 1. Used as
// the deterministic tie order by every argmax over profiles.
bool lex_less(const ActionProfile& a, const ActionProfile& b);

// Breached information I_i(a): the reduction in the MSE of the best estimator
// of user i's type given the signals of the sharing set A = {j : a_j = 1},
//
//   I_i(a) = Sigma_{i,A} (Sigma_{A,A} + Id)^{-1} Sigma_{A,i},
//
// and 0 when A is empty. Sigma_{A,A} + Id has eigenvalues >= 1, so the
// Cholesky factorization cannot fail on a valid market; if it does, that is a
// bug and std::logic_error is thrown.
double breached_information(const GaussianMarket& market, const ActionProfile& a, int i);

// I_i(a) for every i at once (one factorization).
Eigen::VectorXd breached_information_all(const GaussianMarket& market, const ActionProfile& a);

// Cov(X_i, X_j | S_A) = Sigma_ij - Sigma_{i,A} (Sigma_{A,A} + Id)^{-1} Sigma_{A,j}.
// For i == j this equals variance(i) - breached_information(market, a, i),
// exactly (the two share one code path).
double conditional_covariance(const GaussianMarket& market, const ActionProfile& a, int i, int j);

// Full posterior covariance of X given S_A.
Eigen::MatrixXd conditional_covariance_matrix(const GaussianMarket& market,
                                              const ActionProfile& a);

// I_i(a_i=1, a_{-i}) - I_i(a_i=0, a_{-i}); user i's bit in `a_minus_i` is
// ignored. Non-negative by monotonicity.
double marginal_leakage(const GaussianMarket& market, const ActionProfile& a_minus_i, int i);

// Dense table of I_i(a) for every profile; the workhorse behind exhaustive
// enumeration. Memory and build time are 2^n * n, so n is capped at 20.
class LeakageTable {
 public:
  explicit LeakageTable(const GaussianMarket& market);

  int size() const { return n_; }
  const Eigen::VectorXd& leakage(std::uint64_t mask) const { return table_[mask]; }
  double leakage(std::uint64_t mask, int i) const { return table_[mask](i); }
  double marginal(std::uint64_t mask, int i) const {
    return table_[mask | (1ULL << i)](i) - table_[mask & ~(1ULL << i)](i);
  }

  static constexpr int kMaxUsers = 20;

 private:
  int n_;
  std::vector<Eigen::VectorXd> table_;
};

struct StructureWitness {
  int user = -1;
  std::uint64_t profile = 0;        // a
  std::uint64_t profile_prime = 0;  // a' (comparable with a)
  double gap = 0.0;                 // amount by which the property fails
};

struct StructureReport {
  bool holds = false;
  bool exhaustive = false;  // false = randomized sampling ("sampled", not "proved")
  std::int64_t pairs_checked = 0;
  std::optional<StructureWitness> witness;
};

inline constexpr int kExhaustiveCheckMaxUsers = 12;
inline constexpr std::int64_t kSampledCheckPairs = 10000;

// I_i(a) >= I_i(a') for every i and every comparable pair a >= a'.
// Exhaustive for n <= 12, otherwise 10,000 sampled comparable pairs.
// Tolerance 1e-10. A failure witnesses an implementation bug, not a model
// property.
StructureReport check_monotonicity(const GaussianMarket& market, std::uint64_t seed = 2024);

// Marginal leakage of user i is non-increasing in the others' sharing:
// for a_{-i} <= a'_{-i},
//   I_i(1, a_{-i}) - I_i(0, a_{-i}) >= I_i(1, a'_{-i}) - I_i(0, a'_{-i}).
StructureReport check_submodularity(const GaussianMarket& market, std::uint64_t seed = 2024);

// Partition of users into interchangeable blocks: identical variance,
// identical per-user key (value / distribution / report), identical
// within-block correlation, and per block pair a single cross correlation.
// Lets profile enumeration collapse to per-block sharing counts.
struct BlockStructure {
  std::vector<int> sizes;                  // one entry per block
  std::vector<std::vector<int>> members;   // user indices per block, ascending
  std::vector<int> block_of;               // user -> block
};

// Groups users by (variance, key) and verifies the correlation structure
// within 1e-12. Returns nullopt when no valid block structure exists.
std::optional<BlockStructure> detect_blocks(const GaussianMarket& market,
                                            const std::vector<double>& user_key);

// Per-block sharing counts -> representative profile with the sharers placed
// at the end of each block (the lexicographically smallest member of the
// orbit).
ActionProfile representative_profile(const BlockStructure& blocks,
                                     const std::vector<int>& counts, int n);

// Invokes fn for every per-block count combination (product of (size_b + 1)
// choices), in deterministic order.
void for_each_block_count(const BlockStructure& blocks,
                          const std::function<void(const std::vector<int>&)>& fn);

}  // namespace datamkt
