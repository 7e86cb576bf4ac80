#include "datamkt/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace datamkt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMonotoneSlack = 1e-9;

}  // namespace

ValueDistribution ValueDistribution::uniform(double lo, double hi) {
  if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("uniform distribution requires 0 <= lo < hi < inf");
  }
  ValueDistribution d;
  d.kind_ = Kind::Uniform;
  d.lo_ = lo;
  d.hi_ = hi;
  d.validate_virtual_value_monotone();
  return d;
}

ValueDistribution ValueDistribution::truncated_exponential(double rate, double v_max) {
  if (!(rate > 0.0) || !(v_max > 0.0) || !std::isfinite(v_max)) {
    throw std::invalid_argument("truncated exponential requires rate > 0 and finite v_max > 0");
  }
  ValueDistribution d;
  d.kind_ = Kind::TruncatedExponential;
  d.lo_ = 0.0;
  d.hi_ = v_max;
  d.rate_ = rate;
  d.validate_virtual_value_monotone();
  return d;
}

ValueDistribution ValueDistribution::piecewise_linear_cdf(
    std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) {
    throw std::invalid_argument("piecewise cdf needs at least two knots");
  }
  if (!(knots.front().first >= 0.0)) {
    throw std::invalid_argument("piecewise cdf support must start at v >= 0");
  }
  if (std::abs(knots.front().second) > 0.0 || std::abs(knots.back().second - 1.0) > 1e-12) {
    throw std::invalid_argument("piecewise cdf must run from F = 0 to F = 1");
  }
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const double dv = knots[k].first - knots[k - 1].first;
    const double dF = knots[k].second - knots[k - 1].second;
    if (dv < 0.0 || dF < 0.0) {
      throw std::invalid_argument("piecewise cdf knots must be non-decreasing in v and F");
    }
    if (dv > 0.0 && dF <= 0.0) {
      throw std::invalid_argument(
          "piecewise cdf has a zero-density stretch inside the support (between v = " +
          std::to_string(knots[k - 1].first) + " and v = " + std::to_string(knots[k].first) + ")");
    }
  }
  ValueDistribution d;
  d.kind_ = Kind::PiecewiseLinearCdf;
  d.lo_ = knots.front().first;
  d.hi_ = knots.back().first;
  d.knots_ = std::move(knots);
  d.validate_virtual_value_monotone();
  return d;
}

ValueDistribution ValueDistribution::point_mass(double v) {
  return piecewise_linear_cdf({{v, 0.0}, {v, 1.0}});
}

bool ValueDistribution::has_atoms() const {
  if (kind_ != Kind::PiecewiseLinearCdf) return false;
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (knots_[k].first == knots_[k - 1].first && knots_[k].second > knots_[k - 1].second) {
      return true;
    }
  }
  return false;
}

double ValueDistribution::cdf(double v) const {
  if (v < lo_) return 0.0;
  if (v >= hi_) return 1.0;
  switch (kind_) {
    case Kind::Uniform:
      return (v - lo_) / (hi_ - lo_);
    case Kind::TruncatedExponential:
      return -std::expm1(-rate_ * v) / -std::expm1(-rate_ * hi_);
    case Kind::PiecewiseLinearCdf: {
      // Right-continuous: at an atom the jump has already happened.
      double F = 0.0;
      for (std::size_t k = 1; k < knots_.size(); ++k) {
        const auto& [v0, F0] = knots_[k - 1];
        const auto& [v1, F1] = knots_[k];
        if (v < v0) break;
        if (v1 == v0) {
          if (v >= v0) F = F1;
          continue;
        }
        if (v >= v1) {
          F = F1;
        } else {
          F = F0 + (F1 - F0) * (v - v0) / (v1 - v0);
          break;
        }
      }
      return F;
    }
  }
  return 0.0;
}

double ValueDistribution::pdf(double v) const {
  if (v < lo_ || v > hi_) return 0.0;
  switch (kind_) {
    case Kind::Uniform:
      return 1.0 / (hi_ - lo_);
    case Kind::TruncatedExponential:
      return rate_ * std::exp(-rate_ * v) / -std::expm1(-rate_ * hi_);
    case Kind::PiecewiseLinearCdf: {
      for (std::size_t k = 1; k < knots_.size(); ++k) {
        const auto& [v0, F0] = knots_[k - 1];
        const auto& [v1, F1] = knots_[k];
        if (v0 == v1 && v == v0 && F1 > F0) return kInf;
        if (v >= v0 && v < v1) return (F1 - F0) / (v1 - v0);
      }
      // v == hi_: density of the last sloped segment, if any.
      for (std::size_t k = knots_.size(); k-- > 1;) {
        const auto& [v0, F0] = knots_[k - 1];
        const auto& [v1, F1] = knots_[k];
        if (v1 > v0) return (F1 - F0) / (v1 - v0);
        if (v1 == v0 && v == v1 && F1 > F0) return kInf;
      }
      return 0.0;
    }
  }
  return 0.0;
}

double ValueDistribution::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw std::domain_error("quantile argument must lie in [0, 1]");
  }
  switch (kind_) {
    case Kind::Uniform:
      return lo_ + u * (hi_ - lo_);
    case Kind::TruncatedExponential: {
      const double z = -std::expm1(-rate_ * hi_);
      return -std::log1p(-u * z) / rate_;
    }
    case Kind::PiecewiseLinearCdf: {
      for (std::size_t k = 1; k < knots_.size(); ++k) {
        const auto& [v0, F0] = knots_[k - 1];
        const auto& [v1, F1] = knots_[k];
        if (u > F1) continue;
        if (F1 == F0) continue;
        if (v1 == v0) return v0;  // atom swallows [F0, F1]
        return v0 + (v1 - v0) * (u - F0) / (F1 - F0);
      }
      return hi_;
    }
  }
  return lo_;
}

double ValueDistribution::virtual_value(double v) const {
  if (v < lo_ - 1e-12 || v > hi_ + 1e-12) {
    throw std::domain_error("virtual value requested outside the support [" +
                            std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
  }
  v = std::clamp(v, lo_, hi_);
  const double f = pdf(v);
  if (f == kInf) return v;  // atom: no information rent
  if (!(f > 0.0)) {
    throw std::domain_error("virtual value undefined where the density vanishes (v = " +
                            std::to_string(v) + ")");
  }
  return v + cdf(v) / f;
}

void ValueDistribution::validate_virtual_value_monotone() const {
  std::vector<double> grid;
  constexpr int kGridPoints = 1000;
  grid.reserve(kGridPoints + 8);
  for (int k = 0; k <= kGridPoints; ++k) {
    grid.push_back(lo_ + (hi_ - lo_) * static_cast<double>(k) / kGridPoints);
  }
  for (const auto& [v, F] : knots_) grid.push_back(v);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double prev = -kInf;
  for (double v : grid) {
    const double phi = virtual_value(v);
    if (phi < prev - kMonotoneSlack) {
      std::ostringstream msg;
      msg << "virtual value v + F(v)/f(v) decreases near v = " << v
          << "; such irregular distributions are not supported";
      throw std::invalid_argument(msg.str());
    }
    prev = phi;
  }
}

std::string ValueDistribution::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::Uniform:
      out << "uniform(" << lo_ << ", " << hi_ << ")";
      break;
    case Kind::TruncatedExponential:
      out << "exponential(rate " << rate_ << ", truncated at " << hi_ << ")";
      break;
    case Kind::PiecewiseLinearCdf:
      out << "piecewise-cdf(";
      for (std::size_t k = 0; k < knots_.size(); ++k) {
        if (k) out << ", ";
        out << "(" << knots_[k].first << ", " << knots_[k].second << ")";
      }
      out << ")";
      break;
  }
  return out.str();
}

bool operator==(const ValueDistribution& a, const ValueDistribution& b) {
  return a.kind_ == b.kind_ && a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.rate_ == b.rate_ &&
         a.knots_ == b.knots_;
}

}  // namespace datamkt
