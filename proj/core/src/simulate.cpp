#include "kere/simulate.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kere::sim {
namespace {

// Stream labels hung off a spec seed, so that e.g. changing the error
// family leaves the covariate draws untouched.
constexpr std::uint64_t kStreamF1 = 1, kStreamF2 = 2, kStreamX = 3, kStreamNoise = 4;

Eigen::MatrixXd haar_orthogonal(int m, UniformStream& stream) {
  Eigen::MatrixXd g(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) g(i, j) = stream.next_normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // sign fix makes the distribution Haar (and the factorization unique)
  for (int j = 0; j < m; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

loss::ScalarDistribution error_distribution(Sim1Error family) {
  switch (family) {
    case Sim1Error::laplace:
      return loss::ScalarDistribution::laplace(0.0, 1.0);
    case Sim1Error::mixed_normal:
      return loss::ScalarDistribution::normal_mixture({{0.5, 0.0, 0.5}, {0.5, 1.0, 0.25}});
  }
  throw std::invalid_argument("unknown error family");
}

loss::ScalarDistribution error_distribution(Sim2Error family) {
  switch (family) {
    case Sim2Error::normal:
      return loss::ScalarDistribution::normal(0.0, 1.0);
    case Sim2Error::student_t4:
      return loss::ScalarDistribution::student_t4();
    case Sim2Error::mixed_normal:
      return loss::ScalarDistribution::normal_mixture({{0.9, 0.0, 1.0}, {0.1, 1.0, 2.0}});
  }
  throw std::invalid_argument("unknown error family");
}

double error_expectile(Sim1Error family, loss::ExpectileLevel level) {
  return loss::population_expectile(error_distribution(family), level);
}

double error_expectile(Sim2Error family, loss::ExpectileLevel level) {
  return loss::population_expectile(error_distribution(family), level);
}

double sim1_mean(double x) { return std::sin(0.7 * x) + x * x / 20.0; }
double sim1_noise_scale(double x) { return (std::abs(x) + 1.0) / 5.0; }

SimData sim1_generate(const Sim1Spec& spec) {
  if (spec.n < 1) throw std::invalid_argument("sim1_generate: n must be at least 1");
  UniformStream xs(UniformStream::derive_seed(spec.seed, kStreamX));
  UniformStream es(UniformStream::derive_seed(spec.seed, kStreamNoise));
  const auto noise = error_distribution(spec.error);

  SimData data;
  data.X.resize(spec.n, 1);
  data.y.resize(spec.n);
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    const double x = -8.0 + 16.0 * xs.next_uniform();
    data.X(i, 0) = x;
    data.y[i] = sim1_mean(x) + sim1_noise_scale(x) * noise.sample(es);
  }
  return data;
}

double sim1_true_expectile(Sim1Error family, double x, loss::ExpectileLevel level) {
  return sim1_mean(x) + sim1_noise_scale(x) * error_expectile(family, level);
}

Eigen::VectorXd sim1_true_expectile(Sim1Error family, const Eigen::VectorXd& x,
                                    loss::ExpectileLevel level) {
  const double b = error_expectile(family, level);
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    out[i] = sim1_mean(x[i]) + sim1_noise_scale(x[i]) * b;
  return out;
}

RandomFunction RandomFunction::draw(int p, std::uint64_t seed) {
  if (p < 1) throw std::invalid_argument("RandomFunction needs p >= 1");
  UniformStream stream(seed);
  RandomFunction f;
  f.terms_.reserve(20);
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(p));
  for (int l = 0; l < 20; ++l) {
    Term term;
    term.weight = -1.0 + 2.0 * stream.next_uniform();
    // subset size min(floor(1.5 + r), p) with r exponential of mean 2
    const double r = -2.0 * std::log(stream.next_uniform());
    const int pl = std::min(static_cast<int>(std::floor(1.5 + r)), p);
    std::iota(pool.begin(), pool.end(), 0);
    term.subset.resize(static_cast<std::size_t>(pl));
    for (int j = 0; j < pl; ++j) {
      const auto pick = static_cast<std::size_t>(
          stream.next_below(static_cast<std::uint64_t>(p - j)));
      std::swap(pool[static_cast<std::size_t>(j) + pick], pool[static_cast<std::size_t>(j)]);
      term.subset[static_cast<std::size_t>(j)] = pool[static_cast<std::size_t>(j)];
    }
    term.center.resize(pl);
    for (int j = 0; j < pl; ++j) term.center[j] = stream.next_normal();
    const Eigen::MatrixXd u = haar_orthogonal(pl, stream);
    Eigen::VectorXd d(pl);
    for (int j = 0; j < pl; ++j) {
      const double root = 0.1 + 1.9 * stream.next_uniform();
      d[j] = root * root;
    }
    term.curvature.noalias() = u * d.asDiagonal() * u.transpose();
    f.terms_.push_back(std::move(term));
  }
  return f;
}

double RandomFunction::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double acc = 0.0;
  for (const auto& term : terms_) {
    const auto pl = static_cast<Eigen::Index>(term.subset.size());
    Eigen::VectorXd z(pl);
    for (Eigen::Index j = 0; j < pl; ++j)
      z[j] = x[term.subset[static_cast<std::size_t>(j)]] - term.center[j];
    acc += term.weight * std::exp(-0.5 * z.dot(term.curvature * z));
  }
  return acc;
}

Eigen::VectorXd RandomFunction::evaluate_rows(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = (*this)(X.row(i).transpose());
  return out;
}

Sim2Spec Sim2Spec::make(Eigen::Index n, int p, bool heteroscedastic, Sim2Error error,
                        std::uint64_t seed) {
  if (n < 1 || p < 1) throw std::invalid_argument("Sim2Spec: n and p must be positive");
  Sim2Spec spec;
  spec.n = n;
  spec.p = p;
  spec.heteroscedastic = heteroscedastic;
  spec.error = error;
  spec.seed = seed;
  spec.f1 = RandomFunction::draw(p, UniformStream::derive_seed(seed, kStreamF1));
  if (heteroscedastic)
    spec.f2 = RandomFunction::draw(p, UniformStream::derive_seed(seed, kStreamF2));
  return spec;
}

Sim2Spec Sim2Spec::resized(Eigen::Index n, std::uint64_t seed) const {
  Sim2Spec out = *this;
  out.n = n;
  out.seed = seed;
  return out;
}

SimData sim2_generate(const Sim2Spec& spec) {
  UniformStream xs(UniformStream::derive_seed(spec.seed, kStreamX));
  UniformStream es(UniformStream::derive_seed(spec.seed, kStreamNoise));
  const auto noise = error_distribution(spec.error);

  SimData data;
  data.X.resize(spec.n, spec.p);
  data.y.resize(spec.n);
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    for (int j = 0; j < spec.p; ++j) data.X(i, j) = xs.next_normal();
    const double f1 = spec.f1(data.X.row(i).transpose());
    const double scale = spec.f2 ? std::abs((*spec.f2)(data.X.row(i).transpose())) : 1.0;
    data.y[i] = f1 + scale * noise.sample(es);
  }
  return data;
}

double sim2_true_expectile(const Sim2Spec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                           loss::ExpectileLevel level) {
  const double b = error_expectile(spec.error, level);
  const double scale = spec.f2 ? std::abs((*spec.f2)(x)) : 1.0;
  return spec.f1(x) + scale * b;
}

Eigen::VectorXd sim2_true_expectile(const Sim2Spec& spec, const Eigen::MatrixXd& X,
                                    loss::ExpectileLevel level) {
  const double b = error_expectile(spec.error, level);
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto x = X.row(i).transpose();
    const double scale = spec.f2 ? std::abs((*spec.f2)(x)) : 1.0;
    out[i] = spec.f1(x) + scale * b;
  }
  return out;
}

double mad(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("mad: length mismatch");
  if (predicted.size() == 0) throw std::invalid_argument("mad: empty input");
  return (predicted - truth).cwiseAbs().mean();
}

double prediction_error(const Eigen::VectorXd& y, const Eigen::VectorXd& fitted,
                        loss::ExpectileLevel level) {
  if (y.size() != fitted.size())
    throw std::invalid_argument("prediction_error: length mismatch");
  if (y.size() == 0) throw std::invalid_argument("prediction_error: empty input");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    acc += loss::loss_value(y[i] - fitted[i], level);
  return acc / static_cast<double>(y.size());
}

}  // namespace kere::sim
