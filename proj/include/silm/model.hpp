#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "silm/errors.hpp"

namespace silm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

/// Covariates plus +/-1 coded responses. Validated on construction.
class Dataset {
public:
    Dataset(MatrixXd x, VectorXd y);

    const MatrixXd& x() const noexcept { return x_; }
    const VectorXd& y() const noexcept { return y_; }
    Index n() const noexcept { return x_.rows(); }
    Index p() const noexcept { return x_.cols(); }

private:
    MatrixXd x_;
    VectorXd y_;
};

/// Prior hyperparameters, proposal scales, iteration counts and the
/// optional low-rank setting. Defaults are the reference settings
/// (c = 1/1000, every shape/scale 0.5, 10000 sweeps, half discarded).
struct ModelConfig {
    double c = 1e-3;
    // Per-coefficient inverse-gamma shape/scale for the slab variances.
    // An empty vector means "0.5 for every coefficient".
    std::vector<double> a_sigma;
    std::vector<double> b_sigma;
    double a_tau = 0.5, b_tau = 0.5;
    double a_l = 0.5, b_l = 0.5;
    double a_pi = 0.5, b_pi = 0.5;

    // Initial proposal scales; tuned during burn-in when adapt is set.
    double prop_sd_beta = 0.05;
    double prop_sd_log_tau = 0.5;
    double prop_sd_log_l = 0.5;
    bool adapt = true;
    double target_accept = 0.25;

    long n_iter = 10000;
    long burn_in = 5000;

    std::optional<Index> nystrom_m;
    // W is regularized by nystrom_reg_ratio * tau before inversion.
    double nystrom_reg_ratio = 1e-2;

    // Keep a full-state snapshot every `thin` retained sweeps (0 = never).
    long thin = 0;
    std::uint64_t seed = 1;

    double a_sigma_at(Index j) const;
    double b_sigma_at(Index j) const;

    /// Throws InvalidArgument if any invariant is violated for data of size (n, p).
    void validate(Index n, Index p) const;
};

/// One full parameter configuration of the sampler.
struct ChainState {
    VectorXd beta;
    VectorXd g;
    VectorXd omega;
    VectorXi delta;
    VectorXd sigma_beta;
    VectorXd pi;
    double tau = 1.0;
    double l = 1.0;

    void validate(Index n, Index p) const;
};

struct ColumnScaling {
    VectorXd mean;
    VectorXd sd;
};

struct StandardizedMatrix {
    MatrixXd x;
    ColumnScaling scaling;
};

/// Centres each column and scales it to unit sample sd (n - 1 denominator).
/// Throws ConstantColumnError naming the first constant column.
StandardizedMatrix standardize(const MatrixXd& raw);

/// Maps {0,1} to {-1,+1}; {-1,+1} passes through.
VectorXd encode_labels(std::span<const double> raw);

VectorXd projections(const MatrixXd& x, const VectorXd& beta);

/// K_ij = tau * exp(-(z_i - z_j)^2 / l) for precomputed projections z.
MatrixXd gram_from_projections(const VectorXd& z, double tau, double l);

MatrixXd gram_matrix(const MatrixXd& x, const VectorXd& beta, double tau, double l);

/// log Normal(beta_j; 0, r(delta_j) * sigma_j) with r(0) = c, r(1) = 1.
double spike_slab_logdensity(double beta_j, int delta_j, double sigma_j, double c);

struct CsvTable {
    std::vector<std::string> header;
    MatrixXd values;
};

/// Parses a numeric CSV with a mandatory header row. Empty, "NA" or "nan"
/// fields are rejected with their (1-based data) row index.
CsvTable read_numeric_csv(const std::string& path);

struct LabelledData {
    MatrixXd x;
    VectorXd y;
    std::vector<std::string> covariate_names;
};

/// Splits a CSV into covariates and the named +/-1 (or 0/1) response.
LabelledData read_labelled_csv(const std::string& path, const std::string& label_column);

}  // namespace silm
