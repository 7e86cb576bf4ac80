#include "datamkt/gaussian.hpp"

#include "datamkt/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <map>
#include <sstream>
#include <stdexcept>

namespace datamkt {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdFloor = -1e-10;
constexpr double kPropertyTol = 1e-10;
constexpr double kBlockTol = 1e-12;

void check_user_index(const GaussianMarket& market, int i) {
  if (i < 0 || i >= market.size()) {
    throw std::invalid_argument("user index " + std::to_string(i) + " out of range for market of size " +
                                std::to_string(market.size()));
  }
}

void check_profile(const GaussianMarket& market, const ActionProfile& a) {
  if (a.size() != market.size()) {
    throw std::invalid_argument("action profile length " + std::to_string(a.size()) +
                                " does not match market size " + std::to_string(market.size()));
  }
}

std::vector<int> sharing_set(const ActionProfile& a) {
  std::vector<int> out;
  for (int i = 0; i < a.size(); ++i) {
    if (a.shares(i)) out.push_back(i);
  }
  return out;
}

// Solves (Sigma_AA + Id) X = Sigma_{A,.} and hands the pieces to fn.
// Both breached information and conditional covariances are quadratic forms
// in the same solve, which keeps their definitional identity exact.
struct ConditioningSolve {
  Eigen::MatrixXd rhs;     // Sigma_{A, 0..n-1}, k x n
  Eigen::MatrixXd solved;  // (Sigma_AA + Id)^{-1} rhs, k x n
  bool empty = true;
};

ConditioningSolve conditioning_solve(const GaussianMarket& market, const ActionProfile& a) {
  ConditioningSolve out;
  const std::vector<int> A = sharing_set(a);
  if (A.empty()) return out;
  const int k = static_cast<int>(A.size());
  const int n = market.size();
  Eigen::MatrixXd saa(k, k);
  out.rhs.resize(k, n);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) saa(r, c) = market.covariance(A[r], A[c]);
    saa(r, r) += 1.0;
    for (int c = 0; c < n; ++c) out.rhs(r, c) = market.covariance(A[r], c);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(saa);
  if (llt.info() != Eigen::Success) {
    // Eigenvalues of Sigma_AA + Id are >= 1 on a valid market; reaching this
    // point means the market invariant was broken.
    throw std::logic_error("Cholesky factorization of Sigma_AA + Id failed");
  }
  out.solved = llt.solve(out.rhs);
  out.empty = false;
  return out;
}

}  // namespace

GaussianMarket::GaussianMarket(Eigen::MatrixXd sigma) : sigma_(std::move(sigma)) {
  if (sigma_.rows() == 0 || sigma_.rows() != sigma_.cols()) {
    throw std::invalid_argument("covariance matrix must be square and non-empty");
  }
  n_ = static_cast<int>(sigma_.rows());
  const double asym = (sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol) {
    throw std::invalid_argument("covariance matrix is not symmetric (max asymmetry " +
                                std::to_string(asym) + ")");
  }
  sigma_ = ((sigma_ + sigma_.transpose()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_, Eigen::EigenvaluesOnly);
  min_eigenvalue_ = es.eigenvalues().minCoeff();
  if (min_eigenvalue_ < kPsdFloor) {
    std::ostringstream msg;
    msg << "covariance matrix is not positive semidefinite (smallest eigenvalue " << min_eigenvalue_
        << ")";
    throw std::invalid_argument(msg.str());
  }
  for (int i = 0; i < n_; ++i) {
    if (!(sigma_(i, i) > 0.0)) {
      throw std::invalid_argument("variance of user " + std::to_string(i) + " must be positive");
    }
  }
}

ActionProfile::ActionProfile(std::uint64_t mask, int n) : mask_(mask), n_(n) {
  if (n < 1 || n > 63) {
    throw std::invalid_argument("action profile supports 1..63 users, got " + std::to_string(n));
  }
  if (n < 64 && (mask >> n) != 0) {
    throw std::invalid_argument("action profile mask has bits beyond user count");
  }
}

ActionProfile ActionProfile::all_ones(int n) {
  if (n < 1 || n > 63) {
    throw std::invalid_argument("action profile supports 1..63 users, got " + std::to_string(n));
  }
  return {(1ULL << n) - 1ULL, n};
}

ActionProfile ActionProfile::from_bits(const std::vector<int>& bits) {
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0 && bits[i] != 1) {
      throw std::invalid_argument("action profile bits must be 0 or 1");
    }
    if (bits[i]) mask |= 1ULL << i;
  }
  return {mask, static_cast<int>(bits.size())};
}

int ActionProfile::sharer_count() const {
  return static_cast<int>(__builtin_popcountll(mask_));
}

ActionProfile ActionProfile::with(int i, bool share) const {
  std::uint64_t m = mask_;
  if (share) {
    m |= 1ULL << i;
  } else {
    m &= ~(1ULL << i);
  }
  return {m, n_};
}

bool ActionProfile::dominates(const ActionProfile& other) const {
  return n_ == other.n_ && (mask_ & other.mask_) == other.mask_;
}

std::string ActionProfile::to_string() const {
  std::string s(static_cast<std::size_t>(n_), '0');
  for (int i = 0; i < n_; ++i) {
    if (shares(i)) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

bool lex_less(const ActionProfile& a, const ActionProfile& b) {
  for (int i = 0; i < a.size() && i < b.size(); ++i) {
    if (a.shares(i) != b.shares(i)) return !a.shares(i);
  }
  return a.size() < b.size();
}

double breached_information(const GaussianMarket& market, const ActionProfile& a, int i) {
  check_profile(market, a);
  check_user_index(market, i);
  const ConditioningSolve s = conditioning_solve(market, a);
  if (s.empty) return 0.0;
  return s.rhs.col(i).dot(s.solved.col(i));
}

Eigen::VectorXd breached_information_all(const GaussianMarket& market, const ActionProfile& a) {
  check_profile(market, a);
  const ConditioningSolve s = conditioning_solve(market, a);
  if (s.empty) return Eigen::VectorXd::Zero(market.size());
  return (s.rhs.array() * s.solved.array()).colwise().sum();
}

double conditional_covariance(const GaussianMarket& market, const ActionProfile& a, int i, int j) {
  check_profile(market, a);
  check_user_index(market, i);
  check_user_index(market, j);
  const ConditioningSolve s = conditioning_solve(market, a);
  if (s.empty) return market.covariance(i, j);
  return market.covariance(i, j) - s.rhs.col(i).dot(s.solved.col(j));
}

Eigen::MatrixXd conditional_covariance_matrix(const GaussianMarket& market,
                                              const ActionProfile& a) {
  check_profile(market, a);
  const ConditioningSolve s = conditioning_solve(market, a);
  if (s.empty) return market.sigma();
  return market.sigma() - s.rhs.transpose() * s.solved;
}

double marginal_leakage(const GaussianMarket& market, const ActionProfile& a_minus_i, int i) {
  check_profile(market, a_minus_i);
  check_user_index(market, i);
  return breached_information(market, a_minus_i.with(i, true), i) -
         breached_information(market, a_minus_i.with(i, false), i);
}

LeakageTable::LeakageTable(const GaussianMarket& market) : n_(market.size()) {
  if (n_ > kMaxUsers) {
    throw std::invalid_argument("leakage table capped at " + std::to_string(kMaxUsers) +
                                " users, got " + std::to_string(n_));
  }
  const std::uint64_t count = 1ULL << n_;
  table_.resize(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    table_[mask] = breached_information_all(market, ActionProfile(mask, n_));
  }
}

namespace {

struct PropertyScan {
  bool holds = true;
  std::int64_t pairs = 0;
  std::optional<StructureWitness> witness;

  // Returns false to stop scanning once a witness is found.
  bool record(bool ok, int user, std::uint64_t a, std::uint64_t a_prime, double gap) {
    ++pairs;
    if (!ok && holds) {
      holds = false;
      witness = StructureWitness{user, a, a_prime, gap};
    }
    return holds;
  }
};

StructureReport run_monotonicity_exhaustive(const GaussianMarket& market) {
  const int n = market.size();
  const LeakageTable table(market);
  PropertyScan scan;
  const std::uint64_t count = 1ULL << n;
  for (std::uint64_t m = 0; m < count && scan.holds; ++m) {
    const Eigen::VectorXd& upper = table.leakage(m);
    // All submasks of m, including m itself and 0.
    std::uint64_t s = m;
    while (true) {
      const Eigen::VectorXd& lower = table.leakage(s);
      for (int i = 0; i < n; ++i) {
        const double gap = lower(i) - upper(i);
        if (!scan.record(gap <= kPropertyTol, i, m, s, gap)) break;
      }
      if (!scan.holds || s == 0) break;
      s = (s - 1) & m;
    }
  }
  return {scan.holds, true, scan.pairs, scan.witness};
}

StructureReport run_submodularity_exhaustive(const GaussianMarket& market) {
  const int n = market.size();
  const LeakageTable table(market);
  PropertyScan scan;
  const std::uint64_t count = 1ULL << n;
  for (int i = 0; i < n && scan.holds; ++i) {
    const std::uint64_t bit = 1ULL << i;
    for (std::uint64_t m = 0; m < count && scan.holds; ++m) {
      if (m & bit) continue;  // enumerate a'_{-i} over profiles without i
      const double marg_upper = table.marginal(m, i);
      std::uint64_t s = m;
      while (true) {
        const double marg_lower = table.marginal(s, i);
        const double gap = marg_upper - marg_lower;
        if (!scan.record(gap <= kPropertyTol, i, s | bit, m | bit, gap)) break;
        if (s == 0) break;
        s = (s - 1) & m;
      }
    }
  }
  return {scan.holds, true, scan.pairs, scan.witness};
}

// Random comparable pair: a full mask and a submask with each bit kept with
// probability 1/2.
std::uint64_t random_submask(SplitMix64& rng, std::uint64_t mask) {
  return mask & rng.next();
}

StructureReport run_monotonicity_sampled(const GaussianMarket& market, std::uint64_t seed) {
  const int n = market.size();
  SplitMix64 rng(substream_seed(seed, 0xA0));
  const std::uint64_t all = (n >= 64) ? ~0ULL : (1ULL << n) - 1ULL;
  PropertyScan scan;
  for (std::int64_t t = 0; t < kSampledCheckPairs && scan.holds; ++t) {
    const std::uint64_t m = rng.next() & all;
    const std::uint64_t s = random_submask(rng, m);
    const int i = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    const double upper = breached_information(market, ActionProfile(m, n), i);
    const double lower = breached_information(market, ActionProfile(s, n), i);
    scan.record(lower - upper <= kPropertyTol, i, m, s, lower - upper);
  }
  return {scan.holds, false, scan.pairs, scan.witness};
}

StructureReport run_submodularity_sampled(const GaussianMarket& market, std::uint64_t seed) {
  const int n = market.size();
  SplitMix64 rng(substream_seed(seed, 0xB0));
  const std::uint64_t all = (n >= 64) ? ~0ULL : (1ULL << n) - 1ULL;
  PropertyScan scan;
  for (std::int64_t t = 0; t < kSampledCheckPairs && scan.holds; ++t) {
    const int i = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
    const std::uint64_t bit = 1ULL << i;
    const std::uint64_t upper_mask = rng.next() & all & ~bit;
    const std::uint64_t lower_mask = random_submask(rng, upper_mask);
    const ActionProfile upper(upper_mask, n);
    const ActionProfile lower(lower_mask, n);
    const double marg_upper = marginal_leakage(market, upper, i);
    const double marg_lower = marginal_leakage(market, lower, i);
    scan.record(marg_upper - marg_lower <= kPropertyTol, i, lower_mask | bit, upper_mask | bit,
                marg_upper - marg_lower);
  }
  return {scan.holds, false, scan.pairs, scan.witness};
}

}  // namespace

StructureReport check_monotonicity(const GaussianMarket& market, std::uint64_t seed) {
  if (market.size() <= kExhaustiveCheckMaxUsers) return run_monotonicity_exhaustive(market);
  return run_monotonicity_sampled(market, seed);
}

StructureReport check_submodularity(const GaussianMarket& market, std::uint64_t seed) {
  if (market.size() <= kExhaustiveCheckMaxUsers) return run_submodularity_exhaustive(market);
  return run_submodularity_sampled(market, seed);
}

std::optional<BlockStructure> detect_blocks(const GaussianMarket& market,
                                            const std::vector<double>& user_key) {
  const int n = market.size();
  if (static_cast<int>(user_key.size()) != n) {
    throw std::invalid_argument("user key length does not match market size");
  }
  // Group by exact (variance, key); scenario expansion produces bit-identical
  // values inside a block, so exact grouping is the right granularity.
  std::map<std::pair<double, double>, int> index;
  BlockStructure blocks;
  blocks.block_of.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto key = std::make_pair(market.variance(i), user_key[i]);
    auto [it, inserted] = index.try_emplace(key, static_cast<int>(blocks.members.size()));
    if (inserted) blocks.members.emplace_back();
    blocks.block_of[i] = it->second;
    blocks.members[it->second].push_back(i);
  }
  for (const auto& m : blocks.members) blocks.sizes.push_back(static_cast<int>(m.size()));

  const int nb = static_cast<int>(blocks.sizes.size());
  // Verify: one within-correlation per block, one cross-correlation per block
  // pair.
  std::vector<std::vector<std::optional<double>>> cross(
      nb, std::vector<std::optional<double>>(nb));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int bi = blocks.block_of[i];
      const int bj = blocks.block_of[j];
      const int lo = std::min(bi, bj);
      const int hi = std::max(bi, bj);
      auto& slot = cross[lo][hi];
      if (!slot.has_value()) {
        slot = market.covariance(i, j);
      } else if (std::abs(*slot - market.covariance(i, j)) > kBlockTol) {
        return std::nullopt;
      }
    }
  }
  return blocks;
}

ActionProfile representative_profile(const BlockStructure& blocks, const std::vector<int>& counts,
                                     int n) {
  std::uint64_t mask = 0;
  for (std::size_t b = 0; b < blocks.members.size(); ++b) {
    const auto& members = blocks.members[b];
    const int k = counts[b];
    // Sharers at the end of the block: lexicographically smallest in the orbit.
    for (int t = 0; t < k; ++t) {
      mask |= 1ULL << members[members.size() - 1 - static_cast<std::size_t>(t)];
    }
  }
  return {mask, n};
}

void for_each_block_count(const BlockStructure& blocks,
                          const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> counts(blocks.sizes.size(), 0);
  while (true) {
    fn(counts);
    std::size_t b = 0;
    while (b < counts.size()) {
      if (counts[b] < blocks.sizes[b]) {
        ++counts[b];
        break;
      }
      counts[b] = 0;
      ++b;
    }
    if (b == counts.size()) return;
  }
}

}  // namespace datamkt
