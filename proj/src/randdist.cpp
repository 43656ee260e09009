#include "silm/randdist.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "silm/errors.hpp"
#include "silm/pdlinalg.hpp"

namespace silm {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x53494c4dU};
    engine_.seed(seq);
}

double RngStream::uniform() {
    // 53 random mantissa bits, shifted off zero by half an ulp.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t bound) {
    if (bound == 0) throw InvalidArgument("uniform_index needs a positive bound");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
        r = engine_();
    } while (r >= limit);
    return r % bound;
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::exponential() { return -std::log(uniform()); }

double RngStream::gamma(double shape) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(engine_);
}

RngStream RngStream::derive(std::uint64_t salt) const {
    return RngStream(seed_, mix64(stream_id_ ^ mix64(salt)));
}

std::string RngStream::serialize() const {
    std::ostringstream out;
    out << engine_ << ' ' << normal_;
    return out.str();
}

void RngStream::deserialize(const std::string& text) {
    std::istringstream in(text);
    in >> engine_ >> normal_;
    if (!in) throw InvalidArgument("malformed RNG state");
}

// ---------------------------------------------------------------------------
// Polya-Gamma PG(1, c)
//
// PG(1, c) = J*(1, c/2) / 4. J*(1, z) is drawn by Devroye's alternating
// series method: a two-piece proposal (truncated inverse Gaussian on (0, t],
// exponential tail on (t, inf)) accepted through the partial sums of the
// Jacobi-density series.

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTrunc = 0.64;
constexpr int kMaxSeriesTerms = 200;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double log_std_normal_cdf(double x) {
    if (x > -30.0) return std::log(std_normal_cdf(x));
    // Asymptotic expansion for the far lower tail.
    return -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * kPi);
}

// n-th coefficient of the Jacobi series, piecewise in x around t.
double series_term(int n, double x) {
    const double k = n + 0.5;
    if (x <= kTrunc)
        return kPi * k * std::pow(2.0 / (kPi * x), 1.5) * std::exp(-2.0 * k * k / x);
    return kPi * k * std::exp(-0.5 * k * k * kPi * kPi * x);
}

// IG(mu = 1/z, shape 1) restricted to (0, t].
double truncated_inverse_gaussian(double z, RngStream& rng) {
    if (z < 1.0 / kTrunc) {
        // mu exceeds t: draw from the z = 0 (Levy) piece and thin by exp(-z^2 x / 2).
        while (true) {
            double e1, e2;
            do {
                e1 = rng.exponential();
                e2 = rng.exponential();
            } while (e1 * e1 > 2.0 * e2 / kTrunc);
            const double x = kTrunc / ((1.0 + kTrunc * e1) * (1.0 + kTrunc * e1));
            if (rng.uniform() <= std::exp(-0.5 * z * z * x)) return x;
        }
    }
    const double mu = 1.0 / z;
    while (true) {
        const double nrm = rng.normal();
        const double y = nrm * nrm;
        double x = mu + 0.5 * mu * mu * y - 0.5 * mu * std::sqrt(4.0 * mu * y + mu * mu * y * y);
        if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
        if (x <= kTrunc) return x;
    }
}

double sample_jacobi_star(double z, RngStream& rng) {
    z = std::abs(z);
    const double k = kPi * kPi / 8.0 + 0.5 * z * z;
    // Masses of the exponential (right) and inverse-Gaussian (left) pieces.
    const double log_p = std::log(kPi / (2.0 * k)) - k * kTrunc;
    double log_q;
    if (z == 0.0) {
        log_q = std::log(2.0) + std::log(std::erfc(1.0 / std::sqrt(2.0 * kTrunc)));
    } else {
        const double s = 1.0 / std::sqrt(kTrunc);
        const double a = log_std_normal_cdf(s * (kTrunc * z - 1.0)) - z;
        const double b = log_std_normal_cdf(-s * (kTrunc * z + 1.0)) + z;
        const double hi = std::max(a, b);
        log_q = std::log(2.0) + hi + std::log(std::exp(a - hi) + std::exp(b - hi));
    }
    const double p_right = 1.0 / (1.0 + std::exp(log_q - log_p));

    while (true) {
        const double x = (rng.uniform() < p_right) ? kTrunc + rng.exponential() / k
                                                   : truncated_inverse_gaussian(z, rng);
        double s = series_term(0, x);
        const double y = rng.uniform() * s;
        for (int n = 1; n < kMaxSeriesTerms; ++n) {
            if (n % 2 == 1) {
                s -= series_term(n, x);
                if (y <= s) return x;
            } else {
                s += series_term(n, x);
                if (y > s) break;
            }
        }
    }
}

}  // namespace

double sample_pg(double c, RngStream& rng) {
    if (!std::isfinite(c)) throw InvalidArgument("sample_pg needs a finite tilt");
    return 0.25 * sample_jacobi_star(0.5 * c, rng);
}

double sample_invgamma(double a, double b, RngStream& rng) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("inverse-gamma parameters must be positive");
    const double g = rng.gamma(a);
    // A gamma draw below the smallest normal double would overflow 1/g.
    return b / std::max(g, std::numeric_limits<double>::min());
}

double sample_beta(double a, double b, RngStream& rng) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("beta parameters must be positive");
    const double x = rng.gamma(a);
    const double y = rng.gamma(b);
    double v = x / (x + y);
    if (!(v > 0.0)) v = std::numeric_limits<double>::min();
    if (!(v < 1.0)) v = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    return v;
}

int sample_bernoulli(double prob, RngStream& rng) {
    if (!(prob >= 0.0 && prob <= 1.0)) throw InvalidArgument("Bernoulli probability outside [0, 1]");
    return rng.uniform() < prob ? 1 : 0;
}

Eigen::VectorXd sample_std_normal(Eigen::Index n, RngStream& rng) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
    return z;
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, RngStream& rng) {
    const Eigen::Index n = mean.size();
    if (cov.rows() != n || cov.cols() != n) throw InvalidArgument("sample_mvn: dimension mismatch");
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if (!cov.allFinite() || (cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw InvalidArgument("sample_mvn: covariance must be finite and symmetric");

    Eigen::MatrixXd root;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().allFinite()) {
        root = llt.matrixL();
    } else {
        root = psd_root(cov);
    }
    const Eigen::VectorXd z = sample_std_normal(n, rng);
    return mean + root * z;
}

}  // namespace silm
