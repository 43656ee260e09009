#pragma once

#include <string>
#include <utility>
#include <vector>

#include "silm/diagnostics.hpp"
#include "silm/model.hpp"
#include "silm/randdist.hpp"

namespace silm {

enum class CovDesign { identity, ar_half };

CovDesign parse_cov_design(const std::string& name);
std::string to_string(CovDesign d);

/// One of the three simulation designs: link g0, true index beta0 (unit
/// norm, zero past the first s entries) and the covariate design.
struct TrueModel {
    int id = 1;
    VectorXd beta0;
    Index s = 0;
    CovDesign cov_design = CovDesign::identity;

    double link(double t) const;

    /// Throws InvalidArgument for ids outside {1, 2, 3} or p < s.
    static TrueModel make(int id, Index p, CovDesign design);
};

/// Rows i.i.d. normal with identity covariance, or with Cov(x_i, x_j) = 0.5^|i-j|
/// through x_k = 0.5 x_{k-1} + sqrt(0.75) z_k.
MatrixXd gen_covariates(Index n, Index p, CovDesign design, RngStream& rng);

/// y_i = +1 with probability logistic(g0(x_i^T beta0)), else -1.
VectorXd gen_response(const MatrixXd& x, const TrueModel& model, RngStream& rng);

std::pair<int, int> tp_fp(const std::vector<bool>& selected, const TrueModel& model);

struct StudyConfig {
    int model_id = 1;
    Index n = 100;
    Index p = 10;
    CovDesign cov_design = CovDesign::identity;
    int reps = 20;
    bool standardize = false;
    unsigned threads = 1;
    ModelConfig sampler;  // seed is the master seed; replication r uses stream r

    StudyConfig() {
        sampler.n_iter = 4000;
        sampler.burn_in = 2000;
    }
};

struct ReplicationResult {
    int rep = 0;
    bool ok = false;
    std::string error;
    int tp = 0;
    int fp = 0;
    VectorXd beta_hat;
    VectorXd inclusion_prob;
    AcceptRates accept_rates;
    double seconds = 0.0;
};

struct StudyReport {
    int model_id = 1;
    Index n = 0;
    Index p = 0;
    CovDesign cov_design = CovDesign::identity;
    std::uint64_t seed = 0;
    std::vector<ReplicationResult> reps;
    int failed = 0;
    double tp_mean = 0.0, tp_sd = 0.0;
    double fp_mean = 0.0, fp_sd = 0.0;
    VectorXd bias;  // mean of beta_hat - beta0 over successful replications
    VectorXd se;    // sd of beta_hat over successful replications
};

/// Generates data and runs one chain per replication in parallel.
/// A failing replication is recorded and excluded from the aggregates.
StudyReport run_study(const StudyConfig& cfg);

/// Per-replication rows (no timings, so the file is reproducible).
std::string study_reps_csv(const StudyReport& r);
std::string study_summary_json(const StudyReport& r);
std::string study_timing_csv(const StudyReport& r);

}  // namespace silm
