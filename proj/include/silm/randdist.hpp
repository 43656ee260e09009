#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace silm {

/// A seedable random stream keyed by (seed, stream_id). Two streams with
/// the same key replay identical variates; distinct stream ids seed the
/// engine through independent seed sequences.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Uniform integer in [0, bound).
    std::uint64_t uniform_index(std::uint64_t bound);
    double normal();
    double exponential();
    /// Gamma(shape, rate 1).
    double gamma(double shape);

    /// A child stream whose key is derived from this stream's key.
    RngStream derive(std::uint64_t salt) const;

    /// Engine state as text, for checkpoints.
    std::string serialize() const;
    void deserialize(const std::string& text);

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Exact draw from PG(1, c) by the alternating-series method. The series
/// test is capped at 200 terms; a proposal still undecided at the cap is
/// rejected.
double sample_pg(double c, RngStream& rng);

/// Reciprocal of Gamma(shape a, rate b).
double sample_invgamma(double a, double b, RngStream& rng);

double sample_beta(double a, double b, RngStream& rng);

int sample_bernoulli(double prob, RngStream& rng);

Eigen::VectorXd sample_std_normal(Eigen::Index n, RngStream& rng);

/// mean + L z where L L^T = cov. Uses Cholesky when cov admits it and the
/// eigen square root of psd_project(cov) otherwise.
Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, RngStream& rng);

}  // namespace silm
