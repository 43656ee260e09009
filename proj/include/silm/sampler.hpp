#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "silm/model.hpp"
#include "silm/pdlinalg.hpp"
#include "silm/randdist.hpp"

namespace silm {

/// Everything the collapsed targets need for one (beta, tau, l, omega)
/// tuple: the kernel (dense or Nystrom), one factorization of
/// K + Omega^{-1}, and the two scalars derived from it.
struct ReducedConditionalWorkspace {
    VectorXd beta;
    double tau = 0.0;
    double l = 0.0;
    VectorXd omega;

    VectorXd projections;
    MatrixXd gram;                        // exact mode only
    std::optional<PDFactor> sys_factor;   // exact mode only
    std::optional<NystromFactor> nystrom; // low-rank mode only
    double quad = 0.0;    // y^T Omega^{-1} (K + Omega^{-1})^{-1} Omega^{-1} y
    double logdet = 0.0;  // log det(K + Omega^{-1})

    bool matches(const VectorXd& b, double t, double len, const VectorXd& w) const;
};

/// Builds the workspace. When `landmarks` is non-null the kernel is replaced
/// by its Nystrom surrogate on those columns.
ReducedConditionalWorkspace build_workspace(const Dataset& data, const VectorXd& beta, double tau,
                                            double l, const VectorXd& omega, const ModelConfig& cfg,
                                            const std::vector<Index>* landmarks = nullptr);

/// -1/2 log det(K + Omega^{-1}) - 1/8 quad.
double log_collapsed_likelihood(const ReducedConditionalWorkspace& ws);

/// -1/2 sum_j beta_j^2 / (r(delta_j) sigma_j).
double log_beta_prior_kernel(const VectorXd& beta, const VectorXi& delta, const VectorXd& sigma,
                             double c);

double log_reduced_target_beta(const ReducedConditionalWorkspace& ws, const VectorXi& delta,
                               const VectorXd& sigma, double c);

/// Convenience form: builds the workspace for `candidate_beta` from the
/// state's (omega, tau, l) and evaluates the beta target there.
double log_reduced_target_beta(const Dataset& data, const ChainState& state,
                               const VectorXd& candidate_beta, const ModelConfig& cfg,
                               const std::vector<Index>* landmarks = nullptr);

/// Collapsed target for tau (or l, with its own prior) on the natural scale.
double log_reduced_target_scale(const ReducedConditionalWorkspace& ws, double value, double a,
                                double b);

/// Log acceptance ratio of a log-normal random-walk move old -> proposed,
/// including the proposal Jacobian log(proposed / old).
double log_scale_move_ratio(double log_target_proposed, double log_target_old, double proposed,
                            double old);

// Conjugate draws ----------------------------------------------------------

VectorXd draw_omega(const VectorXd& g, RngStream& rng);
VectorXd draw_sigma_beta(const VectorXd& beta, const VectorXi& delta, const ModelConfig& cfg,
                         RngStream& rng);
/// P(delta_j = 1 | rest), evaluated in log space.
double inclusion_probability(double beta_j, double sigma_j, double pi_j, double c);
VectorXi draw_delta(const VectorXd& beta, const VectorXd& sigma, const VectorXd& pi, double c,
                    RngStream& rng);
VectorXd draw_pi(const VectorXi& delta, const ModelConfig& cfg, RngStream& rng);

/// Uncollapsed tau | g draw: InvGamma(a + n/2, g^T K0^{-1} g / 2 + b), K0 = K / tau.
/// Not used by the sweep; kept as the closed-form reference conditional.
double draw_tau_full_conditional(const VectorXd& g, const VectorXd& projections, double l,
                                 double a_tau, double b_tau, RngStream& rng);

struct GaussianConditional {
    VectorXd mean;
    MatrixXd cov;
};

/// Mean and covariance of g | rest. In low-rank mode the covariance is the
/// PSD projection of K - K (K~ + Omega^{-1})^{-1} K.
GaussianConditional g_conditional(const Dataset& data, const ReducedConditionalWorkspace& ws);

struct ProposalScales {
    double beta = 0.05;
    double log_tau = 0.5;
    double log_l = 0.5;
};

struct AcceptCounts {
    long beta = 0;
    long tau = 0;
    long l = 0;
};

struct DrawRecord {
    long iter = 0;
    VectorXd beta;
    VectorXi delta;
    double tau = 0.0;
    double l = 0.0;
    bool acc_beta = false;
    bool acc_tau = false;
    bool acc_l = false;
};

/// Retained (post burn-in) draws of one chain.
struct Trace {
    std::vector<DrawRecord> draws;
    std::vector<std::pair<long, ChainState>> snapshots;
    AcceptCounts accept_counts;  // over retained sweeps
    long iter_total = 0;
    long burn_in = 0;
    ProposalScales final_scales;
    ChainState final_state;

    Index p() const { return draws.empty() ? 0 : draws.front().beta.size(); }
};

/// Default initial state: beta uniform on the sphere, g = 0, omega = 1,
/// tau = l = 1, sigma = 1, delta = 1, pi = 1/2.
ChainState initial_state(Index n, Index p, RngStream& rng);

/// One chain of the partially collapsed sampler. Updates run in the fixed
/// order beta, tau, l, g, omega, sigma_beta, delta, pi; beta, tau and l are
/// drawn from their g-marginalized conditionals.
class ChainSampler {
public:
    ChainSampler(const Dataset& data, ModelConfig cfg, ChainState init, RngStream rng);

    const ChainState& state() const noexcept { return state_; }
    void set_state(ChainState s);
    ProposalScales& scales() noexcept { return scales_; }
    const ProposalScales& scales() const noexcept { return scales_; }
    RngStream& rng() noexcept { return rng_; }
    const ModelConfig& config() const noexcept { return cfg_; }

    /// Current landmark set (empty in exact mode).
    const std::vector<Index>& landmarks() const noexcept { return landmarks_; }
    /// Draws a fresh landmark set; no-op in exact mode.
    void refresh_landmarks();

    /// Workspace for the current state, rebuilt only if the tuple changed.
    const ReducedConditionalWorkspace& workspace();

    // Each MH step returns the acceptance flag and records the acceptance
    // probability in last_accept_prob().
    bool step_beta();
    bool step_tau();
    bool step_l();
    void step_g();
    void step_omega();
    void step_sigma_beta();
    void step_delta();
    void step_pi();

    struct SweepFlags {
        bool beta = false, tau = false, l = false;
    };
    /// One full sweep; with adapt_step >= 0 the proposal scales take a
    /// Robbins-Monro step of size (adapt_step + 1)^-0.6.
    SweepFlags sweep(long adapt_step = -1);

    double last_accept_prob() const noexcept { return last_alpha_; }

private:
    ReducedConditionalWorkspace build(const VectorXd& beta, double tau, double l) const;
    const std::vector<Index>* landmark_ptr() const;
    bool step_scale(double& value, double log_sd, double a, double b, bool is_tau);

    const Dataset* data_;
    ModelConfig cfg_;
    ChainState state_;
    RngStream rng_;
    RngStream landmark_rng_;
    ProposalScales scales_;
    std::vector<Index> landmarks_;
    std::optional<ReducedConditionalWorkspace> ws_;
    double last_alpha_ = 0.0;
};

/// Runs cfg.n_iter sweeps, discarding the first cfg.burn_in. Proposal scales
/// adapt during burn-in only (when cfg.adapt). Deterministic in rng's key.
/// Any failure is rethrown as ChainError carrying the sweep index.
Trace run_chain(const Dataset& data, const ModelConfig& cfg, std::optional<ChainState> init,
                RngStream rng);

}  // namespace silm
