#include "kere/kernel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "kere/parallel.hpp"

namespace kere::kernel {
namespace {

double int_power(double base, int exponent) {
  double out = 1.0;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

double eval_nochecks(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& y) {
  switch (spec.family) {
    case KernelFamily::rbf:
      return std::exp(-(x - y).squaredNorm() / spec.sigma2);
    case KernelFamily::sigmoid:
      return std::tanh(spec.kappa * x.dot(y) + spec.theta);
    case KernelFamily::polynomial:
      return int_power(x.dot(y) + spec.theta, spec.degree);
    case KernelFamily::linear:
      return x.dot(y);
  }
  return 0.0;
}

}  // namespace

std::string family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::rbf: return "rbf";
    case KernelFamily::sigmoid: return "sigmoid";
    case KernelFamily::polynomial: return "poly";
    case KernelFamily::linear: return "linear";
  }
  return "rbf";
}

KernelFamily family_from_name(const std::string& name) {
  if (name == "rbf") return KernelFamily::rbf;
  if (name == "sigmoid") return KernelFamily::sigmoid;
  if (name == "poly" || name == "polynomial") return KernelFamily::polynomial;
  if (name == "linear") return KernelFamily::linear;
  throw std::invalid_argument("unknown kernel family: " + name);
}

KernelSpec KernelSpec::rbf(double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("rbf sigma2 must be positive");
  KernelSpec s;
  s.family = KernelFamily::rbf;
  s.sigma2 = sigma2;
  return s;
}

KernelSpec KernelSpec::sigmoid(double kappa, double theta) {
  KernelSpec s;
  s.family = KernelFamily::sigmoid;
  s.kappa = kappa;
  s.theta = theta;
  return s;
}

KernelSpec KernelSpec::polynomial(int degree, double theta) {
  if (degree < 1) throw std::invalid_argument("polynomial degree must be at least 1");
  KernelSpec s;
  s.family = KernelFamily::polynomial;
  s.degree = degree;
  s.theta = theta;
  return s;
}

KernelSpec KernelSpec::linear() {
  KernelSpec s;
  s.family = KernelFamily::linear;
  return s;
}

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("kernel_eval: inputs have different dimensions");
  return eval_nochecks(spec, x, y);
}

GramBundle gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& inputs) {
  const Eigen::Index n = inputs.rows();
  GramBundle b;
  b.spec = spec;
  b.inputs = inputs;
  b.kernel.resize(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t iu) {
    const auto i = static_cast<Eigen::Index>(iu);
    for (Eigen::Index j = 0; j <= i; ++j)
      b.kernel(i, j) = eval_nochecks(spec, inputs.row(i), inputs.row(j));
  });
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) b.kernel(i, j) = b.kernel(j, i);
  return b;
}

void eigendecompose(GramBundle& bundle) {
  if (bundle.decomposed) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(bundle.kernel);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition of the Gram matrix failed");
  // Eigen returns ascending order; store descending.
  bundle.eigenvalues = solver.eigenvalues().reverse();
  bundle.eigenvectors = solver.eigenvectors().rowwise().reverse();

  const double dmax = bundle.eigenvalues.size() > 0 ? bundle.eigenvalues[0] : 0.0;
  const double tau = 1e-8 * std::max(dmax, 0.0);
  bundle.clamped_indefinite = false;
  for (Eigen::Index i = 0; i < bundle.eigenvalues.size(); ++i) {
    if (bundle.eigenvalues[i] < tau) {
      if (bundle.eigenvalues[i] < -tau) bundle.clamped_indefinite = true;
      bundle.eigenvalues[i] = 0.0;
    }
  }
  bundle.decomposed = true;
}

Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& train,
                           const Eigen::MatrixXd& query) {
  if (train.cols() != query.cols())
    throw std::invalid_argument("cross_gram: feature dimensions differ");
  Eigen::MatrixXd out(train.rows(), query.rows());
  parallel_for(static_cast<std::size_t>(query.rows()), [&](std::size_t ju) {
    const auto j = static_cast<Eigen::Index>(ju);
    for (Eigen::Index i = 0; i < train.rows(); ++i)
      out(i, j) = eval_nochecks(spec, train.row(i), query.row(j));
  });
  return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows(), p = X.cols();
  Standardizer s;
  s.mean = X.colwise().mean();
  s.scale.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double ss = (X.col(j).array() - s.mean[j]).square().sum();
    const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    s.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(Eigen::Index p) {
  Standardizer s;
  s.mean = Eigen::VectorXd::Zero(p);
  s.scale = Eigen::VectorXd::Ones(p);
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size())
    throw std::invalid_argument("standardizer: feature dimension mismatch");
  return (X.rowwise() - mean.transpose()).array().rowwise() /
         scale.transpose().array();
}

bool Standardizer::is_identity() const {
  return mean.isZero(0.0) && (scale.array() == 1.0).all();
}

double median_pairwise_sq_dist(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  if (n < 2) throw std::invalid_argument("median_pairwise_sq_dist needs two rows");
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      d2.push_back((X.row(i) - X.row(j)).squaredNorm());
  const std::size_t m = d2.size();
  auto mid = d2.begin() + m / 2;
  std::nth_element(d2.begin(), mid, d2.end());
  if (m % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(d2.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace kere::kernel
