#pragma once

#include <Eigen/Core>

#include <string>

namespace kere::kernel {

enum class KernelFamily { rbf, sigmoid, polynomial, linear };

std::string family_name(KernelFamily family);
KernelFamily family_from_name(const std::string& name);

/** Kernel family plus its hyperparameters, built through validating factories. */
struct KernelSpec {
  KernelFamily family = KernelFamily::rbf;
  double sigma2 = 1.0;  ///< rbf bandwidth (squared length scale)
  double kappa = 1.0;   ///< sigmoid slope
  double theta = 0.0;   ///< sigmoid / polynomial offset
  int degree = 2;       ///< polynomial degree

  static KernelSpec rbf(double sigma2);
  static KernelSpec sigmoid(double kappa, double theta);
  static KernelSpec polynomial(int degree, double theta);
  static KernelSpec linear();
};

/// k(x, y); throws std::invalid_argument on dimension mismatch.
double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

/** Gram matrix of one sample together with its spectral decomposition.
 *
 *  gram_matrix fills the kernel matrix only; eigendecompose adds U and the
 *  eigenvalue vector (descending).  Eigenvalues with |d| below
 *  1e-8 * max(d) are zeroed; genuinely negative ones (possible for the
 *  sigmoid family, which is not positive semidefinite) are zeroed as well
 *  and flagged through clamped_indefinite.
 */
struct GramBundle {
  KernelSpec spec;
  Eigen::MatrixXd inputs;        ///< n x p sample, rows are observations
  Eigen::MatrixXd kernel;        ///< n x n symmetric Gram matrix
  Eigen::MatrixXd eigenvectors;  ///< U with K = U diag(d) U^T (after clamping)
  Eigen::VectorXd eigenvalues;   ///< d, descending, min(d) >= 0
  bool decomposed = false;
  bool clamped_indefinite = false;

  Eigen::Index size() const { return kernel.rows(); }
};

GramBundle gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& inputs);

/// Idempotent; a second call on a decomposed bundle is a no-op.
void eigendecompose(GramBundle& bundle);

/// k(train_i, query_j) for all pairs, shaped train rows x query columns.
Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& train,
                           const Eigen::MatrixXd& query);

/** Column-wise affine transform mapping features to mean 0 and unit sample
 *  standard deviation (denominator n - 1); constant columns keep scale 1. */
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  static Standardizer identity(Eigen::Index p);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  bool is_identity() const;
};

/// Median of the n(n-1)/2 pairwise squared distances (average of middles
/// for even counts); used to center default rbf bandwidth grids.
double median_pairwise_sq_dist(const Eigen::MatrixXd& X);

}  // namespace kere::kernel
