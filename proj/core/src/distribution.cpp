#include "kere/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kere::loss {
namespace {

constexpr double kQuadTol = 1e-9;

double simpson_slice(const std::function<double(double)>& f, double a, double fa, double b,
                     double fb, double m, double fm, double eps, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
  return simpson_slice(f, a, fa, m, fm, lm, flm, 0.5 * eps, depth - 1) +
         simpson_slice(f, m, fm, b, fb, rm, frm, 0.5 * eps, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double eps = kQuadTol) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  return simpson_slice(f, a, f(a), b, f(b), m, f(m), eps, 48);
}

double t4_cdf(double x) {
  const double s = x / std::sqrt(4.0 + x * x);
  return 0.5 + 0.75 * s - 0.25 * s * s * s;
}

double t4_quantile(double p) {
  // Solves s^3 - 3 s + 4 (p - 1/2) = 0 for the root in (-1, 1), then maps
  // back through s = x / sqrt(4 + x^2).
  const double c = std::clamp(-2.0 * (p - 0.5), -1.0, 1.0);
  const double theta = std::acos(c);
  const double s = 2.0 * std::cos(theta / 3.0 - 2.0943951023931954923);
  const double one_minus = (1.0 - s) * (1.0 + s);
  if (one_minus <= 0.0) return s > 0.0 ? HUGE_VAL : -HUGE_VAL;
  return 2.0 * s / std::sqrt(one_minus);
}

double normal_upper_partial(double mean, double sd, double b) {
  const double z = (b - mean) / sd;
  return (mean - b) * (1.0 - UniformStream::normal_cdf(z)) +
         sd * UniformStream::normal_pdf(z);
}

}  // namespace

ScalarDistribution ScalarDistribution::normal(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("normal sd must be positive");
  ScalarDistribution d;
  d.family_ = Family::normal;
  d.a_ = mean;
  d.b_ = sd;
  d.cached_mean_ = mean;
  d.cached_sd_ = sd;
  return d;
}

ScalarDistribution ScalarDistribution::laplace(double mean, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("laplace scale must be positive");
  ScalarDistribution d;
  d.family_ = Family::laplace;
  d.a_ = mean;
  d.b_ = scale;
  d.cached_mean_ = mean;
  d.cached_sd_ = scale * std::sqrt(2.0);
  return d;
}

ScalarDistribution ScalarDistribution::student_t4() {
  ScalarDistribution d;
  d.family_ = Family::student_t4;
  d.cached_mean_ = 0.0;
  d.cached_sd_ = std::sqrt(2.0);
  return d;
}

ScalarDistribution ScalarDistribution::uniform(double lo, double hi) {
  if (!(hi >= lo)) throw std::invalid_argument("uniform bounds out of order");
  ScalarDistribution d;
  d.family_ = Family::uniform;
  d.a_ = lo;
  d.b_ = hi;
  d.cached_mean_ = 0.5 * (lo + hi);
  d.cached_sd_ = (hi - lo) / std::sqrt(12.0);
  return d;
}

ScalarDistribution ScalarDistribution::normal_mixture(std::vector<MixtureComponent> components) {
  if (components.empty()) throw std::invalid_argument("mixture needs components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0)) throw std::invalid_argument("mixture weight must be nonnegative");
    if (!(c.sd > 0.0)) throw std::invalid_argument("mixture sd must be positive");
    total += c.weight;
  }
  if (!(total > 0.0)) throw std::invalid_argument("mixture weights must not all vanish");
  for (auto& c : components) c.weight /= total;

  ScalarDistribution d;
  d.family_ = Family::mixture;
  double m = 0.0, m2 = 0.0;
  for (const auto& c : components) {
    m += c.weight * c.mean;
    m2 += c.weight * (c.sd * c.sd + c.mean * c.mean);
  }
  d.cached_mean_ = m;
  d.cached_sd_ = std::sqrt(std::max(0.0, m2 - m * m));
  d.components_ = std::move(components);
  return d;
}

ScalarDistribution ScalarDistribution::empirical(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("empirical distribution needs values");
  std::sort(values.begin(), values.end());
  ScalarDistribution d;
  d.family_ = Family::empirical;
  d.prefix_sums_.resize(values.size());
  std::partial_sum(values.begin(), values.end(), d.prefix_sums_.begin());
  const double n = static_cast<double>(values.size());
  const double m = d.prefix_sums_.back() / n;
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  d.cached_mean_ = m;
  d.cached_sd_ = std::sqrt(ss / n);
  d.sorted_values_ = std::move(values);
  return d;
}

ScalarDistribution ScalarDistribution::from_density(std::function<double(double)> pdf,
                                                    double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("density support must have positive length");
  const double mass = integrate(pdf, lo, hi);
  if (std::abs(mass - 1.0) > 1e-6)
    throw std::invalid_argument("density does not integrate to 1 on its support");
  ScalarDistribution d;
  d.family_ = Family::density;
  d.support_lo_ = lo;
  d.support_hi_ = hi;
  const double m = integrate([&pdf](double y) { return y * pdf(y); }, lo, hi);
  const double m2 = integrate([&pdf](double y) { return y * y * pdf(y); }, lo, hi);
  d.cached_mean_ = m;
  d.cached_sd_ = std::sqrt(std::max(0.0, m2 - m * m));
  d.pdf_ = std::move(pdf);
  return d;
}

double ScalarDistribution::sample(UniformStream& stream) const {
  switch (family_) {
    case Family::normal:
      return a_ + b_ * stream.next_normal();
    case Family::laplace: {
      const double u = stream.next_uniform();
      return u < 0.5 ? a_ + b_ * std::log(2.0 * u) : a_ - b_ * std::log(2.0 * (1.0 - u));
    }
    case Family::student_t4:
      return t4_quantile(stream.next_uniform());
    case Family::uniform:
      return a_ + (b_ - a_) * stream.next_uniform();
    case Family::mixture: {
      const double u = stream.next_uniform();
      double acc = 0.0;
      const MixtureComponent* pick = &components_.back();
      for (const auto& c : components_) {
        acc += c.weight;
        if (u <= acc) {
          pick = &c;
          break;
        }
      }
      return pick->mean + pick->sd * stream.next_normal();
    }
    case Family::empirical:
      return sorted_values_[stream.next_below(sorted_values_.size())];
    case Family::density:
      throw std::logic_error("density descriptor carries no sampler");
  }
  return 0.0;
}

Eigen::VectorXd ScalarDistribution::sample_vector(Eigen::Index n, std::uint64_t seed) const {
  UniformStream stream(seed);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = sample(stream);
  return out;
}

double ScalarDistribution::mean() const { return cached_mean_; }
double ScalarDistribution::sd() const { return cached_sd_; }

double ScalarDistribution::upper_partial_mean(double b) const {
  switch (family_) {
    case Family::normal:
      return normal_upper_partial(a_, b_, b);
    case Family::laplace: {
      const double m = b - a_;
      return m >= 0.0 ? 0.5 * b_ * std::exp(-m / b_) : -m + 0.5 * b_ * std::exp(m / b_);
    }
    case Family::student_t4:
      return 0.5 * std::pow(1.0 + 0.25 * b * b, -1.5) - b * (1.0 - t4_cdf(b));
    case Family::uniform: {
      if (b <= a_) return cached_mean_ - b;
      if (b >= b_) return 0.0;
      return (b_ - b) * (b_ - b) / (2.0 * (b_ - a_));
    }
    case Family::mixture: {
      double acc = 0.0;
      for (const auto& c : components_) acc += c.weight * normal_upper_partial(c.mean, c.sd, b);
      return acc;
    }
    case Family::empirical: {
      const auto it = std::upper_bound(sorted_values_.begin(), sorted_values_.end(), b);
      const auto k = static_cast<std::size_t>(it - sorted_values_.begin());
      const double n = static_cast<double>(sorted_values_.size());
      const double total = prefix_sums_.back();
      const double below = k == 0 ? 0.0 : prefix_sums_[k - 1];
      return ((total - below) - b * (n - static_cast<double>(k))) / n;
    }
    case Family::density: {
      if (b >= support_hi_) return 0.0;
      const double lo = std::max(b, support_lo_);
      return integrate([this, b](double y) { return (y - b) * pdf_(y); }, lo, support_hi_);
    }
  }
  return 0.0;
}

double ScalarDistribution::lower_partial_mean(double b) const {
  if (family_ == Family::empirical) {
    const auto it = std::upper_bound(sorted_values_.begin(), sorted_values_.end(), b);
    const auto k = static_cast<std::size_t>(it - sorted_values_.begin());
    const double n = static_cast<double>(sorted_values_.size());
    const double below = k == 0 ? 0.0 : prefix_sums_[k - 1];
    return (b * static_cast<double>(k) - below) / n;
  }
  if (family_ == Family::density) {
    if (b <= support_lo_) return 0.0;
    const double hi = std::min(b, support_hi_);
    return integrate([this, b](double y) { return (b - y) * pdf_(y); }, support_lo_, hi);
  }
  // E (b - Y)_+ = E (Y - b)_+ + b - E Y for any integrable Y
  return upper_partial_mean(b) + b - cached_mean_;
}

double population_expectile(const ScalarDistribution& dist, ExpectileLevel level, double tol) {
  const double mean = dist.mean();
  const double sd = dist.sd();
  if (sd == 0.0) return mean;

  const auto h = [&dist, level](double b) {
    return level.upper_weight() * dist.upper_partial_mean(b) -
           level.lower_weight() * dist.lower_partial_mean(b);
  };

  double width = 10.0 * sd;
  double lo = mean - width, hi = mean + width;
  int expansions = 0;
  while (h(lo) <= 0.0 || h(hi) >= 0.0) {
    width *= 2.0;
    lo = mean - width;
    hi = mean + width;
    if (++expansions > 120)
      throw std::domain_error("expectile bracket not found: degenerate distribution");
  }

  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 400; ++iter) {
    mid = 0.5 * (lo + hi);
    const double hm = h(mid);
    if (std::abs(hm) <= tol) return mid;
    if (hi - lo <= 1e-15 * (1.0 + std::abs(mid))) return mid;
    // h is strictly decreasing in b
    if (hm > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

double empirical_expectile(const Eigen::VectorXd& values, ExpectileLevel level, double tol) {
  return population_expectile(
      ScalarDistribution::empirical(std::vector<double>(values.data(), values.data() + values.size())),
      level, tol);
}

}  // namespace kere::loss
