#pragma once

#include <optional>
#include <string>
#include <vector>

#include "silm/model.hpp"
#include "silm/sampler.hpp"

namespace silm {

struct AcceptRates {
    double beta = 0.0;
    double tau = 0.0;
    double l = 0.0;
};

struct PosteriorSummary {
    VectorXd beta_mean;
    VectorXd beta_sd;
    VectorXd inclusion_prob;
    VectorXd inclusion_sd;  // sd of the delta draws, not a standard error of the mean
    std::vector<bool> selected;
    std::optional<VectorXd> psrf;  // per coefficient, only with two or more chains
    AcceptRates accept_rates;
    double tau_mean = 0.0;
    double l_mean = 0.0;
    Index sign_coordinate = 0;  // coordinate forced positive by sign canonicalization
    std::size_t n_draws = 0;
    std::size_t n_chains = 0;
};

/// Gelman-Rubin R-hat for one scalar over >= 2 equal-length chains.
/// W = 0 gives +inf when the chain means differ and 1 when they agree.
double psrf(const std::vector<std::vector<double>>& chains);

/// Coordinate with the largest |mean| over the draws.
Index dominant_coordinate(const std::vector<VectorXd>& draws);

/// Flips each draw so the dominant coordinate is positive.
std::vector<VectorXd> canonicalize_sign(const std::vector<VectorXd>& draws);
/// Same, with the coordinate chosen by the caller.
std::vector<VectorXd> canonicalize_sign(const std::vector<VectorXd>& draws, Index coordinate);

std::vector<bool> select_variables(const VectorXd& inclusion_prob);

/// Pools the draws of all traces after a common sign canonicalization.
PosteriorSummary summarize(const std::vector<Trace>& traces);

/// Per-covariate report rows: estimate, sd, inclusion probability, delta
/// draw sd, PSRF and the selection flag. `scaling` adds the standardization
/// mean/sd of each covariate.
std::string summary_to_csv(const PosteriorSummary& s, const std::vector<std::string>& names,
                           const ColumnScaling* scaling = nullptr);
std::string summary_to_json(const PosteriorSummary& s, const std::vector<std::string>& names,
                            const ColumnScaling* scaling = nullptr);

struct ParameterCheck {
    std::string name;
    double value = 0.0;
    bool pass = false;
};

struct ConvergenceReport {
    std::vector<ParameterCheck> psrf;               // beta_j, tau, l
    std::vector<std::vector<ParameterCheck>> rates; // per chain: beta, tau, l
    double psrf_threshold = 1.2;
    double rate_low = 0.20;
    double rate_high = 0.30;
};

/// PSRF for every coefficient (sign canonicalized), tau and l, and the
/// per-chain acceptance rates checked against [rate_low, rate_high].
ConvergenceReport diagnose_traces(const std::vector<Trace>& traces, double psrf_threshold = 1.2,
                                  double rate_low = 0.20, double rate_high = 0.30);

std::string psrf_table_csv(const ConvergenceReport& r);
std::string accept_table_csv(const ConvergenceReport& r);

}  // namespace silm
