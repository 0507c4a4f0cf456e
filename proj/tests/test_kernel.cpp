// Tests for kernel evaluation, Gram assembly, the clamped spectral
// decomposition, feature standardization and the bandwidth heuristic.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kere/kernel.hpp"
#include "kere/random.hpp"
#include "oracles.hpp"

using namespace kere;
using Catch::Approx;
using kernel::KernelSpec;

TEST_CASE("kernel evaluation at pinned inputs", "[kernel]") {
  Eigen::VectorXd x(2), z(2);
  x << 1.0, 1.0;
  z << 0.0, 0.0;

  SECTION("rbf") {
    const auto spec = KernelSpec::rbf(2.0);
    REQUIRE(kernel::kernel_eval(spec, x, x) == 1.0);
    // squared distance 2 equals sigma2, so the value is exp(-1)
    REQUIRE(kernel::kernel_eval(spec, x, z) == Approx(std::exp(-1.0)));
  }

  SECTION("polynomial") {
    // (x . z + theta)^degree = (2 + 1)^2 = 9
    REQUIRE(kernel::kernel_eval(KernelSpec::polynomial(2, 1.0), x, x) == Approx(9.0));
  }

  SECTION("linear") {
    Eigen::VectorXd a(3), b(3);
    a << 1.0, 2.0, 3.0;
    b << -1.0, 0.5, 2.0;
    REQUIRE(kernel::kernel_eval(KernelSpec::linear(), a, b) == Approx(a.dot(b)));
  }

  SECTION("sigmoid") {
    // tanh(kappa x . z + theta) = tanh(0.5 * 2 - 0.5)
    REQUIRE(kernel::kernel_eval(KernelSpec::sigmoid(0.5, -0.5), x, x) ==
            Approx(std::tanh(0.5)));
  }

  SECTION("dimension mismatch") {
    Eigen::VectorXd short_vec(1);
    short_vec << 1.0;
    REQUIRE_THROWS_AS(kernel::kernel_eval(KernelSpec::rbf(1.0), x, short_vec),
                      std::invalid_argument);
  }
}

TEST_CASE("spec factories validate hyperparameters", "[kernel]") {
  REQUIRE_THROWS_AS(KernelSpec::rbf(0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(KernelSpec::rbf(-1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(KernelSpec::polynomial(0, 1.0), std::invalid_argument);
  REQUIRE(kernel::family_name(KernelSpec::linear().family) == "linear");
  REQUIRE(kernel::family_from_name("rbf") == kernel::KernelFamily::rbf);
  REQUIRE_THROWS_AS(kernel::family_from_name("spline"), std::invalid_argument);
}

TEST_CASE("gram matrices match pairwise evaluation", "[kernel]") {
  SECTION("a single point gives the 1 x 1 diagonal") {
    Eigen::MatrixXd one(1, 2);
    one << 0.3, -0.7;
    REQUIRE(kernel::gram_matrix(KernelSpec::rbf(1.5), one).kernel(0, 0) == 1.0);
  }

  SECTION("identical points give a matrix of ones") {
    Eigen::MatrixXd X(2, 1);
    X << 2.0, 2.0;
    const auto b = kernel::gram_matrix(KernelSpec::rbf(3.0), X);
    REQUIRE(b.kernel(0, 1) == 1.0);
    REQUIRE(b.kernel(1, 0) == 1.0);
  }

  SECTION("entries equal elementwise evaluation and are exactly symmetric") {
    const Eigen::MatrixXd X = oracles::random_design(6, 3, 21);
    for (const auto& spec : {KernelSpec::rbf(2.0), KernelSpec::polynomial(2, 0.5),
                             KernelSpec::linear(), KernelSpec::sigmoid(0.3, 0.1)}) {
      const auto b = kernel::gram_matrix(spec, X);
      for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 6; ++j) {
          REQUIRE(b.kernel(i, j) ==
                  Approx(kernel::kernel_eval(spec, X.row(i), X.row(j))).margin(1e-14));
          REQUIRE(b.kernel(i, j) == b.kernel(j, i));
        }
    }
  }
}

TEST_CASE("the spectral decomposition reconstructs the gram matrix", "[kernel]") {
  SECTION("a hand-set two by two matrix") {
    Eigen::MatrixXd X(2, 1);
    X << 0.0, 1.0;
    auto b = kernel::gram_matrix(KernelSpec::rbf(1.0), X);
    b.kernel << 1.0, 0.5, 0.5, 1.0;  // eigenvalues 1.5 and 0.5
    kernel::eigendecompose(b);
    REQUIRE(b.eigenvalues[0] == Approx(1.5));
    REQUIRE(b.eigenvalues[1] == Approx(0.5));
    REQUIRE_FALSE(b.clamped_indefinite);
    const Eigen::MatrixXd recon = oracles::clamped_kernel(b);
    REQUIRE((recon - b.kernel).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("random rbf bundles") {
    auto b = kernel::gram_matrix(KernelSpec::rbf(2.5), oracles::random_design(10, 2, 33));
    const Eigen::MatrixXd original = b.kernel;
    kernel::eigendecompose(b);

    // descending nonnegative spectrum
    for (Eigen::Index i = 1; i < 10; ++i)
      REQUIRE(b.eigenvalues[i] <= b.eigenvalues[i - 1]);
    REQUIRE(b.eigenvalues.minCoeff() >= 0.0);

    // orthonormal basis and reconstruction up to the clamping threshold
    const Eigen::MatrixXd utu = b.eigenvectors.transpose() * b.eigenvectors;
    REQUIRE((utu - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((oracles::clamped_kernel(b) - original).cwiseAbs().maxCoeff() <=
            1e-8 * b.eigenvalues.maxCoeff() + 1e-12);

    SECTION("a second decomposition call is a no-op") {
      const Eigen::MatrixXd u = b.eigenvectors;
      kernel::eigendecompose(b);
      REQUIRE((b.eigenvectors.array() == u.array()).all());
    }
  }

  SECTION("rbf gram matrices are positive semidefinite before clamping") {
    const auto b =
        kernel::gram_matrix(KernelSpec::rbf(4.0), oracles::random_design(15, 3, 55));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b.kernel,
                                                             Eigen::EigenvaluesOnly);
    REQUIRE(eig.eigenvalues().minCoeff() >= -1e-8 * eig.eigenvalues().maxCoeff());
  }
}

TEST_CASE("indefinite sigmoid gram matrices are clamped and flagged", "[kernel]") {
  // the sigmoid kernel is not positive semidefinite; this instance has a
  // genuinely negative eigenvalue before clamping
  const Eigen::MatrixXd X = oracles::random_design(8, 2, 71) * 2.0;
  auto b = kernel::gram_matrix(KernelSpec::sigmoid(2.0, -1.0), X);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> raw(b.kernel,
                                                           Eigen::EigenvaluesOnly);
  REQUIRE(raw.eigenvalues().minCoeff() < -1e-6);

  kernel::eigendecompose(b);
  REQUIRE(b.clamped_indefinite);
  REQUIRE(b.eigenvalues.minCoeff() >= 0.0);
}

TEST_CASE("fitted combinations obey the reproducing norm bound", "[kernel]") {
  // |(K a)_i| <= sqrt(K_ii) * sqrt(a^T K a) by Cauchy-Schwarz in the
  // induced inner product; checked on the clamped reconstruction
  auto b = oracles::random_pd_rbf(12, 3, 83);
  const Eigen::MatrixXd K = oracles::clamped_kernel(b);
  UniformStream stream(84);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd a(12);
    for (Eigen::Index i = 0; i < 12; ++i) a[i] = stream.next_normal();
    const double norm = std::sqrt(a.dot(K * a));
    const Eigen::VectorXd ka = K * a;
    for (Eigen::Index i = 0; i < 12; ++i)
      REQUIRE(std::abs(ka[i]) <= std::sqrt(K(i, i)) * norm + 1e-10);
  }
}

TEST_CASE("cross gram evaluates training rows against queries", "[kernel]") {
  const Eigen::MatrixXd train = oracles::random_design(7, 2, 91);
  const Eigen::MatrixXd query = oracles::random_design(4, 2, 92);
  const auto spec = KernelSpec::rbf(1.7);
  const Eigen::MatrixXd C = kernel::cross_gram(spec, train, query);
  REQUIRE(C.rows() == 7);
  REQUIRE(C.cols() == 4);
  for (Eigen::Index i = 0; i < 7; ++i)
    for (Eigen::Index j = 0; j < 4; ++j)
      REQUIRE(C(i, j) ==
              Approx(kernel::kernel_eval(spec, train.row(i), query.row(j))).margin(1e-14));

  // querying the training set reproduces the gram matrix
  const Eigen::MatrixXd self = kernel::cross_gram(spec, train, train);
  REQUIRE((self - kernel::gram_matrix(spec, train).kernel).cwiseAbs().maxCoeff() < 1e-14);

  Eigen::MatrixXd wrong(3, 5);
  wrong.setZero();
  REQUIRE_THROWS_AS(kernel::cross_gram(spec, train, wrong), std::invalid_argument);
}

TEST_CASE("standardizer centers and scales columns", "[kernel]") {
  Eigen::MatrixXd X = oracles::random_design(20, 3, 101);
  X.col(1).array() = 4.2;  // constant column keeps scale one

  const auto std_fit = kernel::Standardizer::fit(X);
  const Eigen::MatrixXd Z = std_fit.apply(X);

  for (int j : {0, 2}) {
    REQUIRE(Z.col(j).mean() == Approx(0.0).margin(1e-12));
    const double sd = std::sqrt(Z.col(j).squaredNorm() / (Z.rows() - 1));
    REQUIRE(sd == Approx(1.0).margin(1e-12));
  }
  REQUIRE(std_fit.scale[1] == 1.0);
  REQUIRE(Z.col(1).cwiseAbs().maxCoeff() == Approx(0.0).margin(1e-12));

  SECTION("new data uses the training mean and scale") {
    const Eigen::MatrixXd fresh = oracles::random_design(5, 3, 102);
    const Eigen::MatrixXd T = std_fit.apply(fresh);
    for (Eigen::Index i = 0; i < 5; ++i)
      for (int j = 0; j < 3; ++j)
        REQUIRE(T(i, j) == Approx((fresh(i, j) - std_fit.mean[j]) / std_fit.scale[j]));
  }

  SECTION("the identity transform passes data through") {
    const auto id = kernel::Standardizer::identity(3);
    REQUIRE(id.is_identity());
    REQUIRE_FALSE(std_fit.is_identity());
    REQUIRE(((id.apply(X) - X).cwiseAbs().maxCoeff()) == 0.0);
  }
}

TEST_CASE("median pairwise squared distance", "[kernel]") {
  SECTION("odd pair count takes the middle value") {
    Eigen::MatrixXd X(3, 1);
    X << 0.0, 1.0, 3.0;  // squared distances 1, 9, 4
    REQUIRE(kernel::median_pairwise_sq_dist(X) == 4.0);
  }

  SECTION("even pair count averages the middle two") {
    Eigen::MatrixXd X(4, 1);
    X << 0.0, 1.0, 2.0, 3.0;  // squared distances 1, 4, 9, 1, 4, 1
    REQUIRE(kernel::median_pairwise_sq_dist(X) == 2.5);
  }

  SECTION("fewer than two rows is an error") {
    REQUIRE_THROWS_AS(kernel::median_pairwise_sq_dist(Eigen::MatrixXd::Zero(1, 2)),
                      std::invalid_argument);
  }
}
