#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerical code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

// Polya-Gamma ---------------------------------------------------------------

inline double pg_mean(double c) {
    if (std::abs(c) < 1e-8) return 0.25;
    return std::tanh(c / 2.0) / (2.0 * c);
}

// Cumulant generating function of PG(1, c): log E[exp(s w)]
//   = log cosh(c/2) - log cosh(sqrt(c^2/4 - s/2)), valid for s < c^2/2 + pi^2/2.
inline double pg_cumulant(double c, double s) {
    const double arg = c * c / 4.0 - s / 2.0;
    double lc;
    if (arg >= 0.0) {
        lc = std::log(std::cosh(std::sqrt(arg)));
    } else {
        lc = std::log(std::cos(std::sqrt(-arg)));
    }
    return std::log(std::cosh(c / 2.0)) - lc;
}

// Variance by central differences of the cumulant function.
inline double pg_variance(double c) {
    const double h = 1e-3;
    return (pg_cumulant(c, h) - 2.0 * pg_cumulant(c, 0.0) + pg_cumulant(c, -h)) / (h * h);
}

// Truncated sum-of-gammas representation with `terms` summands.
inline double pg_sum_of_gammas(double c, std::mt19937_64& eng, int terms = 200) {
    std::exponential_distribution<double> ex(1.0);
    double s = 0.0;
    const double shift = c * c / (4.0 * kPi * kPi);
    for (int k = 1; k <= terms; ++k) {
        const double h = k - 0.5;
        s += ex(eng) / (h * h + shift);
    }
    return s / (2.0 * kPi * kPi);
}

// Expected value of the truncated sum (for checking the oracle itself).
inline double pg_sum_of_gammas_mean(double c, int terms = 200) {
    double s = 0.0;
    const double shift = c * c / (4.0 * kPi * kPi);
    for (int k = 1; k <= terms; ++k) s += 1.0 / ((k - 0.5) * (k - 0.5) + shift);
    return s / (2.0 * kPi * kPi);
}

// Quadrature ----------------------------------------------------------------

inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// Gauss-Hermite nodes/weights for integrals against exp(-x^2), via the
// Golub-Welsch eigenproblem.
struct GaussRule {
    std::vector<double> nodes, weights;
};

inline GaussRule gauss_hermite(int n) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) j(i, i - 1) = j(i - 1, i) = std::sqrt(i / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    GaussRule r;
    for (int i = 0; i < n; ++i) {
        r.nodes.push_back(es.eigenvalues()[i]);
        const double v = es.eigenvectors()(0, i);
        r.weights.push_back(std::sqrt(kPi) * v * v);
    }
    return r;
}

// Densities -----------------------------------------------------------------

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x, double var) {
    return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * kPi * var);
}

// Marginal of beta | sigma ~ N(0, r sigma), sigma ~ InvGamma(a, b): a scaled
// Student t with 2a degrees of freedom.
inline double student_t_marginal(double beta, double r, double a, double b) {
    return std::exp(std::lgamma(a + 0.5) - std::lgamma(a)) / std::sqrt(2.0 * kPi * r * b) *
           std::pow(1.0 + beta * beta / (2.0 * r * b), -(a + 0.5));
}

inline double invgamma_logpdf(double x, double a, double b) {
    return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

// Statistics ----------------------------------------------------------------

struct Moments {
    double mean = 0.0, var = 0.0, m4 = 0.0;
    std::size_t n = 0;
    double se() const { return std::sqrt(var / static_cast<double>(n)); }
    // Standard error of the sample variance.
    double var_se() const { return std::sqrt(std::max(m4 - var * var, 0.0) / static_cast<double>(n)); }
};

inline Moments moments(const std::vector<double>& v) {
    Moments m;
    m.n = v.size();
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(m.n);
    for (double x : v) {
        const double d = (x - m.mean) * (x - m.mean);
        m.var += d;
        m.m4 += d * d;
    }
    m.var /= static_cast<double>(m.n - 1);
    m.m4 /= static_cast<double>(m.n);
    return m;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

inline double ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
    std::sort(a.begin(), a.end());
    double d = 0.0;
    const double n = static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double f = cdf(a[i]);
        d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    return d;
}

// Two-sided exact binomial p-value (sum of outcomes no more likely than k).
inline double binomial_two_sided_p(long k, long n, double p) {
    auto logpmf = [&](long i) {
        return std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
               (i > 0 ? i * std::log(p) : 0.0) + (n - i > 0 ? (n - i) * std::log1p(-p) : 0.0);
    };
    const double ref = logpmf(k);
    double total = 0.0;
    for (long i = 0; i <= n; ++i) {
        const double lp = logpmf(i);
        if (lp <= ref + 1e-9) total += std::exp(lp);
    }
    return std::min(1.0, total);
}

// Dense linear algebra --------------------------------------------------------

inline Eigen::MatrixXd se_kernel(const Eigen::VectorXd& z, double tau, double l) {
    const auto n = z.size();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) k(i, j) = tau * std::exp(-(z[i] - z[j]) * (z[i] - z[j]) / l);
    return k;
}

inline double logdet_by_eigen(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    return es.eigenvalues().array().log().sum();
}

// Collapsed log-likelihood -1/2 log|K + W^-1| - 1/8 y' W^-1 (K + W^-1)^-1 W^-1 y
// through an explicit dense inverse.
inline double collapsed_loglik(const Eigen::MatrixXd& k, const Eigen::VectorXd& omega, const Eigen::VectorXd& y) {
    Eigen::MatrixXd a = k;
    a.diagonal() += omega.cwiseInverse();
    const Eigen::VectorXd v = y.cwiseQuotient(omega);
    const double quad = v.dot(a.inverse() * v);
    return -0.5 * logdet_by_eigen(a) - 0.125 * quad;
}

}  // namespace oracle
