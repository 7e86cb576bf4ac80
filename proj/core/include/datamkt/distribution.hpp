#pragma once

#include <string>
#include <utility>
#include <vector>

namespace datamkt {

// Privacy-valuation distribution with bounded support [lo, hi], hi finite.
// Three shapes:
//   - uniform(lo, hi),
//   - exponential(rate) truncated at v_max (renormalized),
//   - piecewise-linear cdf through knots (v_k, F_k); a repeated v with a jump
//     in F is an atom (point mass).
//
// Construction validates the cdf (F(lo)=0, F(hi)=1, non-decreasing, positive
// density between knots) and checks numerically on a 1000-point grid that the
// virtual value v + F(v)/f(v) is non-decreasing, rejecting irregular shapes
// with std::invalid_argument. At an atom the virtual value equals v itself
// (a known value carries no information rent) and pdf() returns +infinity.
class ValueDistribution {
 public:
  enum class Kind { Uniform, TruncatedExponential, PiecewiseLinearCdf };

  static ValueDistribution uniform(double lo, double hi);
  static ValueDistribution truncated_exponential(double rate, double v_max);
  static ValueDistribution piecewise_linear_cdf(std::vector<std::pair<double, double>> knots);
  static ValueDistribution point_mass(double v);

  Kind kind() const { return kind_; }
  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }
  bool has_atoms() const;

  double cdf(double v) const;
  // Density; +infinity exactly at an atom. Zero outside the support.
  double pdf(double v) const;
  // Inverse cdf; exact for all three shapes, maps u in [0,1] onto the support.
  double quantile(double u) const;
  // v + F(v)/f(v). Throws std::domain_error outside the support.
  double virtual_value(double v) const;

  std::string describe() const;

  friend bool operator==(const ValueDistribution& a, const ValueDistribution& b);

 private:
  ValueDistribution() = default;

  void validate_virtual_value_monotone() const;

  Kind kind_ = Kind::Uniform;
  double lo_ = 0.0;
  double hi_ = 1.0;
  double rate_ = 1.0;                                // exponential only
  std::vector<std::pair<double, double>> knots_;     // piecewise only
};

}  // namespace datamkt
