#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "silm/errors.hpp"
#include "silm/pdlinalg.hpp"
#include "silm/randdist.hpp"

using namespace silm;

namespace {

MatrixXd random_pd(Index n, std::mt19937_64& eng, double ridge = 0.5) {
    std::normal_distribution<double> nd;
    MatrixXd a(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) a(i, j) = nd(eng);
    MatrixXd s = a * a.transpose() / static_cast<double>(n);
    s.diagonal().array() += ridge;
    return s;
}

MatrixXd random_symmetric(Index n, std::mt19937_64& eng) {
    std::normal_distribution<double> nd;
    MatrixXd a(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) a(i, j) = nd(eng);
    return 0.5 * (a + a.transpose());
}

VectorXd random_points(Index n, std::mt19937_64& eng, double spread = 1.0) {
    std::normal_distribution<double> nd(0.0, spread);
    VectorXd z(n);
    for (Index i = 0; i < n; ++i) z[i] = nd(eng);
    return z;
}

KernelColumnSource columns_of(const MatrixXd& k) {
    return [k](Index j) { return VectorXd(k.col(j)); };
}

// Explicit surrogate through a dense inverse of the regularized W.
MatrixXd explicit_surrogate(const NystromFactor& f) {
    MatrixXd w = f.w;
    w.diagonal().array() += f.reg + f.w_factor.jitter_used;
    return f.c * w.inverse() * f.c.transpose();
}

}  // namespace

TEST_CASE("factor_pd examples") {
    const auto id = factor_pd(MatrixXd::Identity(4, 4));
    CHECK(id.factor.isApprox(MatrixXd::Identity(4, 4)));
    CHECK(id.logdet == 0.0);
    CHECK(id.jitter_used == 0.0);

    MatrixXd d = MatrixXd::Zero(2, 2);
    d(0, 0) = 4;
    d(1, 1) = 9;
    CHECK(factor_pd(d).logdet == doctest::Approx(std::log(36.0)).epsilon(1e-15));

    VectorXd v(5);
    v << 1, -2, 0.5, 3, 1;
    const MatrixXd r1 = v * v.transpose();
    const auto f = factor_pd(r1, 1e-8);
    CHECK(f.jitter_used > 0.0);
    const MatrixXd recon = f.factor * f.factor.transpose();
    // L L^T = A + jitter I, so the spectral error against A is exactly the jitter.
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(recon - r1);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= f.jitter_used * (1.0 + 1e-6));
    MatrixXd shifted = r1;
    shifted.diagonal().array() += f.jitter_used;
    CHECK(f.logdet == doctest::Approx(oracle::logdet_by_eigen(shifted)).epsilon(1e-6));
}

TEST_CASE("factor_pd errors") {
    MatrixXd asym = MatrixXd::Identity(3, 3);
    asym(0, 1) = 0.1;
    CHECK_THROWS_AS(factor_pd(asym), InvalidArgument);
    try {
        factor_pd(-MatrixXd::Identity(3, 3), 1e-6);
        FAIL("expected SingularMatrixError");
    } catch (const SingularMatrixError& e) {
        CHECK(e.attempted_jitter() >= 1e-6);
    }
    CHECK_THROWS_AS(factor_pd(MatrixXd::Identity(2, 3)), InvalidArgument);
}

TEST_CASE("factor_pd: logdet and reconstruction against an eigen oracle") {
    std::mt19937_64 eng(7);
    for (Index n : {1, 2, 5, 10, 25, 50}) {
        const MatrixXd a = random_pd(n, eng);
        const auto f = factor_pd(a);
        CHECK(f.jitter_used == 0.0);
        CHECK(std::abs(f.logdet - oracle::logdet_by_eigen(a)) < 1e-6);
        CHECK(std::abs(f.logdet - 2.0 * f.factor.diagonal().array().log().sum()) < 1e-12);
        const double rel = (f.factor * f.factor.transpose() - a).norm() / a.norm();
        CHECK(rel < 1e-8);
    }
}

TEST_CASE("solve_pd") {
    const auto id = factor_pd(MatrixXd::Identity(3, 3));
    MatrixXd b(3, 2);
    b << 1, 2, 3, 4, 5, 6;
    CHECK(solve_pd(id, b).isApprox(b));

    const auto two = factor_pd(MatrixXd::Constant(1, 1, 2.0));
    CHECK(solve_pd(two, MatrixXd::Constant(1, 1, 4.0))(0, 0) == doctest::Approx(2.0));

    std::mt19937_64 eng(3);
    const MatrixXd a = random_pd(10, eng);
    MatrixXd rhs = random_symmetric(10, eng).leftCols(4);
    const MatrixXd x = solve_pd(factor_pd(a), rhs);
    CHECK((a * x - rhs).norm() / rhs.norm() < 1e-6);

    CHECK_THROWS_AS(solve_pd(id, MatrixXd::Ones(4, 1)), InvalidArgument);
}

TEST_CASE("psd_project examples") {
    std::mt19937_64 eng(5);
    const MatrixXd pd = random_pd(6, eng, 0.0);
    CHECK((psd_project(pd) - pd).cwiseAbs().maxCoeff() < 1e-10);

    MatrixXd d = MatrixXd::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = -1;
    const MatrixXd pr = psd_project(d);
    CHECK(pr(0, 0) == doctest::Approx(1.0));
    CHECK(std::abs(pr(1, 1)) < 1e-15);
    CHECK(std::abs(pr(0, 1)) < 1e-15);
}

TEST_CASE("psd_project: PSD, nearest, idempotent, positive spectrum preserved") {
    std::mt19937_64 eng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const Index n = 3 + trial;
        const MatrixXd s = random_symmetric(n, eng);
        const MatrixXd p = psd_project(s);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es_p(p), es_s(s);
        CHECK(es_p.eigenvalues().minCoeff() >= -1e-10);
        const double dist = (s - p).norm();
        for (int probe = 0; probe < 100; ++probe) {
            const MatrixXd q = random_pd(n, eng, 0.0) * std::abs(std::normal_distribution<double>(0, 1)(eng));
            CHECK(dist <= (s - q).norm() + 1e-12);
        }
        CHECK((psd_project(p) - p).cwiseAbs().maxCoeff() < 1e-10);
        // Sorted spectra: output eigenvalue i is max(input eigenvalue i, 0).
        for (Index i = 0; i < n; ++i)
            CHECK(std::abs(es_p.eigenvalues()[i] - std::max(es_s.eigenvalues()[i], 0.0)) < 1e-10);
    }
}

TEST_CASE("psd_root reproduces the projection") {
    std::mt19937_64 eng(9);
    const MatrixXd s = random_symmetric(7, eng);
    const MatrixXd r = psd_root(s);
    CHECK((r * r.transpose() - psd_project(s)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("nystrom_build: landmarks and blocks") {
    std::mt19937_64 eng(21);
    const VectorXd z = random_points(30, eng);
    const MatrixXd k = oracle::se_kernel(z, 1.5, 1.0);
    RngStream rng(4, 0);
    const auto f = nystrom_build(columns_of(k), 30, 12, rng, 0.015);
    CHECK(f.m() == 12);
    std::vector<Index> sorted = f.landmark_indices;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(sorted.front() >= 0);
    CHECK(sorted.back() < 30);
    for (Index a = 0; a < 12; ++a) {
        CHECK(f.c.col(a).isApprox(k.col(f.landmark_indices[static_cast<std::size_t>(a)])));
        for (Index b = 0; b < 12; ++b)
            CHECK(f.w(a, b) == k(f.landmark_indices[static_cast<std::size_t>(a)], f.landmark_indices[static_cast<std::size_t>(b)]));
    }
    CHECK_THROWS_AS(nystrom_build(columns_of(k), 30, 31, rng, 0.01), InvalidArgument);
    CHECK_THROWS_AS(nystrom_from_landmarks(columns_of(k), 30, {1, 1}, 0.01), InvalidArgument);
    CHECK_THROWS_AS(nystrom_from_landmarks(columns_of(k), 30, {30}, 0.01), InvalidArgument);
}

TEST_CASE("sample_landmarks is uniform over indices") {
    RngStream rng(2, 2);
    std::vector<int> counts(10, 0);
    for (int rep = 0; rep < 20000; ++rep)
        for (Index i : sample_landmarks(10, 3, rng)) ++counts[static_cast<std::size_t>(i)];
    // Each index is included with probability 3/10.
    for (int c : counts) CHECK(std::abs(c / 20000.0 - 0.3) < 4.0 * std::sqrt(0.3 * 0.7 / 20000.0));
}

TEST_CASE("nystrom surrogate: full columns, rank one, monotone error") {
    std::mt19937_64 eng(31);
    const VectorXd z = random_points(50, eng);
    const MatrixXd k = oracle::se_kernel(z, 1.0, 2.0);
    RngStream rng(1, 1);

    const auto full = nystrom_build(columns_of(k), 50, 50, rng, 1e-8);
    CHECK((full.dense_surrogate() - k).norm() / k.norm() < 1e-6);

    const auto one = nystrom_build(columns_of(k), 50, 1, rng, 1e-2);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(one.dense_surrogate());
    CHECK((es.eigenvalues().array().abs() > 1e-10).count() == 1);

    // Averaged over landmark draws so one lucky small set cannot win.
    double err20 = 0.0, err5 = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        err20 += (k - nystrom_build(columns_of(k), 50, 20, rng, 1e-2).dense_surrogate()).norm();
        err5 += (k - nystrom_build(columns_of(k), 50, 5, rng, 1e-2).dense_surrogate()).norm();
    }
    CHECK(err20 < err5);
}

TEST_CASE("nystrom with a zero kernel reduces to the diagonal") {
    const MatrixXd zero = MatrixXd::Zero(6, 6);
    const auto f = nystrom_from_landmarks(columns_of(zero), 6, {0, 2, 4}, 1.0);
    VectorXd omega(6), v(6);
    omega << 0.5, 1, 2, 3, 0.25, 1.5;
    v << 1, -1, 2, 0.5, 3, -2;
    CHECK((nystrom_apply_inverse(f, omega, v) - omega.cwiseProduct(v)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(nystrom_logdet(f, omega) == doctest::Approx(-omega.array().log().sum()).epsilon(1e-14));
}

TEST_CASE("nystrom m = n matches dense solves of K + Omega^{-1}") {
    std::mt19937_64 eng(41);
    const VectorXd z = random_points(30, eng);
    const MatrixXd k = oracle::se_kernel(z, 1.0, 1.0);
    std::vector<Index> all(30);
    std::iota(all.begin(), all.end(), Index{0});
    const auto f = nystrom_from_landmarks(columns_of(k), 30, all, 1e-9);

    const VectorXd v = random_points(30, eng);
    const VectorXd ones = VectorXd::Ones(30);
    MatrixXd a = k + MatrixXd::Identity(30, 30);
    const VectorXd dense = solve_pd(factor_pd(a), v);
    CHECK((nystrom_apply_inverse(f, ones, v) - dense).norm() / dense.norm() < 1e-6);

    VectorXd omega(30);
    for (Index i = 0; i < 30; ++i) omega[i] = 0.2 + 0.1 * i;
    MatrixXd a2 = k;
    a2.diagonal() += omega.cwiseInverse();
    const VectorXd dense2 = a2.ldlt().solve(v);
    CHECK((nystrom_apply_inverse(f, omega, v) - dense2).norm() / dense2.norm() < 1e-6);
    CHECK(std::abs(nystrom_logdet(f, ones) - oracle::logdet_by_eigen(a)) < 1e-4);
}

TEST_CASE("nystrom n = 30, m = 10 matches the explicit surrogate") {
    std::mt19937_64 eng(43);
    const VectorXd z = random_points(30, eng);
    const MatrixXd k = oracle::se_kernel(z, 2.0, 0.5);
    RngStream rng(8, 0);
    const auto f = nystrom_build(columns_of(k), 30, 10, rng, 0.02);
    VectorXd omega(30);
    for (Index i = 0; i < 30; ++i) omega[i] = 0.1 + 0.05 * i;
    MatrixXd a = explicit_surrogate(f);
    a.diagonal() += omega.cwiseInverse();
    CHECK(std::abs(nystrom_logdet(f, omega) - oracle::logdet_by_eigen(a)) < 1e-6);
    const VectorXd v = random_points(30, eng);
    const VectorXd dense = a.inverse() * v;
    CHECK((nystrom_apply_inverse(f, omega, v) - dense).norm() / dense.norm() < 1e-8);
}

TEST_CASE("Woodbury exactness on random low-rank-plus-diagonal systems") {
    std::mt19937_64 eng(47);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 5 + 35 * trial / 19;
        const Index r = 1 + trial % 4;
        MatrixXd basis(n, r);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < r; ++j) basis(i, j) = std::normal_distribution<double>()(eng);
        const MatrixXd k = basis * basis.transpose();
        RngStream rng(trial, 3);
        const auto f = nystrom_build(columns_of(k), n, std::min<Index>(n, r + 2), rng, 1e-3);
        VectorXd omega(n);
        for (Index i = 0; i < n; ++i) omega[i] = u(eng);
        MatrixXd a = explicit_surrogate(f);
        a.diagonal() += omega.cwiseInverse();
        const VectorXd v = random_points(n, eng);
        const VectorXd dense = a.inverse() * v;
        CHECK((nystrom_apply_inverse(f, omega, v) - dense).norm() / dense.norm() < 1e-8);
    }
}

TEST_CASE("nystrom_logdet converges to the dense value as reg shrinks") {
    std::mt19937_64 eng(53);
    const VectorXd z = random_points(20, eng, 2.0);
    const MatrixXd k = oracle::se_kernel(z, 1.0, 0.3);
    std::vector<Index> all(20);
    std::iota(all.begin(), all.end(), Index{0});
    const VectorXd ones = VectorXd::Ones(20);
    MatrixXd a = k + MatrixXd::Identity(20, 20);
    const double dense = oracle::logdet_by_eigen(a);
    double prev = std::numeric_limits<double>::infinity();
    for (double reg : {1e-4, 1e-6, 1e-8}) {
        const auto f = nystrom_from_landmarks(columns_of(k), 20, all, reg);
        const double err = std::abs(nystrom_logdet(f, ones) - dense);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-4);
}
