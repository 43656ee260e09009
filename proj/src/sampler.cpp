#include "silm/sampler.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "silm/errors.hpp"

namespace silm {

namespace {

constexpr std::uint64_t kLandmarkSalt = 0x4c414e44ULL;

double log_normal_density(double x, double var) {
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * x * x / var;
}

// Cholesky with a roundoff-sized jitter ladder; falls back to the eigen
// square root when the covariance is numerically rank deficient.
VectorXd draw_gaussian(const VectorXd& mean, const MatrixXd& cov, RngStream& rng) {
    const MatrixXd sym = 0.5 * (cov + cov.transpose());
    const double scale = std::max(sym.diagonal().mean(), 0.0);
    MatrixXd root;
    try {
        root = factor_pd(sym, 0.0, 1e-8 * scale).factor;
    } catch (const SingularMatrixError&) {
        root = psd_root(sym);
    }
    return mean + root * sample_std_normal(mean.size(), rng);
}

}  // namespace

bool ReducedConditionalWorkspace::matches(const VectorXd& b, double t, double len,
                                          const VectorXd& w) const {
    return tau == t && l == len && beta.size() == b.size() && omega.size() == w.size() &&
           beta == b && omega == w;
}

ReducedConditionalWorkspace build_workspace(const Dataset& data, const VectorXd& beta, double tau,
                                            double l, const VectorXd& omega, const ModelConfig& cfg,
                                            const std::vector<Index>* landmarks) {
    if (!(tau > 0.0) || !(l > 0.0)) throw InvalidArgument("tau and l must be positive");
    if (omega.size() != data.n() || !(omega.array() > 0.0).all())
        throw InvalidArgument("omega must be positive with one entry per observation");

    ReducedConditionalWorkspace ws;
    ws.beta = beta;
    ws.tau = tau;
    ws.l = l;
    ws.omega = omega;
    ws.projections = projections(data.x(), beta);
    const VectorXd v = data.y().cwiseQuotient(omega);

    if (landmarks == nullptr) {
        ws.gram = gram_from_projections(ws.projections, tau, l);
        MatrixXd a = ws.gram;
        a.diagonal() += omega.cwiseInverse();
        ws.sys_factor = factor_pd(a);
        const VectorXd half = ws.sys_factor->factor.triangularView<Eigen::Lower>().solve(v);
        ws.quad = half.squaredNorm();
        ws.logdet = ws.sys_factor->logdet;
    } else {
        const VectorXd& z = ws.projections;
        KernelColumnSource column = [&z, tau, l](Index j) {
            return VectorXd((tau * (-(z.array() - z[j]).square() / l).exp()).matrix());
        };
        ws.nystrom = nystrom_from_landmarks(column, data.n(), *landmarks, cfg.nystrom_reg_ratio * tau);
        const NystromSystem sys(*ws.nystrom, omega);
        ws.quad = std::max(0.0, v.dot(sys.apply_inverse(v).col(0)));
        ws.logdet = sys.logdet();
    }
    if (!std::isfinite(ws.quad) || !std::isfinite(ws.logdet))
        throw Error("collapsed likelihood is not finite");
    return ws;
}

double log_collapsed_likelihood(const ReducedConditionalWorkspace& ws) {
    return -0.5 * ws.logdet - 0.125 * ws.quad;
}

double log_beta_prior_kernel(const VectorXd& beta, const VectorXi& delta, const VectorXd& sigma,
                             double c) {
    double s = 0.0;
    for (Index j = 0; j < beta.size(); ++j) {
        const double r = delta[j] == 1 ? 1.0 : c;
        s += beta[j] * beta[j] / (r * sigma[j]);
    }
    return -0.5 * s;
}

double log_reduced_target_beta(const ReducedConditionalWorkspace& ws, const VectorXi& delta,
                               const VectorXd& sigma, double c) {
    return log_collapsed_likelihood(ws) + log_beta_prior_kernel(ws.beta, delta, sigma, c);
}

double log_reduced_target_beta(const Dataset& data, const ChainState& state,
                               const VectorXd& candidate_beta, const ModelConfig& cfg,
                               const std::vector<Index>* landmarks) {
    if (candidate_beta.size() != data.p() || !candidate_beta.allFinite())
        throw InvalidArgument("candidate beta must be finite with p entries");
    const auto ws = build_workspace(data, candidate_beta, state.tau, state.l, state.omega, cfg, landmarks);
    return log_reduced_target_beta(ws, state.delta, state.sigma_beta, cfg.c);
}

double log_reduced_target_scale(const ReducedConditionalWorkspace& ws, double value, double a,
                                double b) {
    return log_collapsed_likelihood(ws) - (a + 1.0) * std::log(value) - b / value;
}

double log_scale_move_ratio(double log_target_proposed, double log_target_old, double proposed,
                            double old) {
    return log_target_proposed - log_target_old + std::log(proposed / old);
}

VectorXd draw_omega(const VectorXd& g, RngStream& rng) {
    VectorXd w(g.size());
    for (Index i = 0; i < g.size(); ++i) w[i] = sample_pg(g[i], rng);
    return w;
}

VectorXd draw_sigma_beta(const VectorXd& beta, const VectorXi& delta, const ModelConfig& cfg,
                         RngStream& rng) {
    VectorXd s(beta.size());
    for (Index j = 0; j < beta.size(); ++j) {
        const double r = delta[j] == 1 ? 1.0 : cfg.c;
        s[j] = sample_invgamma(cfg.a_sigma_at(j) + 0.5,
                               beta[j] * beta[j] / (2.0 * r) + cfg.b_sigma_at(j), rng);
    }
    return s;
}

double inclusion_probability(double beta_j, double sigma_j, double pi_j, double c) {
    if (pi_j >= 1.0) return 1.0;
    if (pi_j <= 0.0) return 0.0;
    const double logit = std::log(pi_j) - std::log1p(-pi_j) + log_normal_density(beta_j, sigma_j) -
                         log_normal_density(beta_j, c * sigma_j);
    if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
    const double e = std::exp(logit);
    return e / (1.0 + e);
}

VectorXi draw_delta(const VectorXd& beta, const VectorXd& sigma, const VectorXd& pi, double c,
                    RngStream& rng) {
    VectorXi d(beta.size());
    for (Index j = 0; j < beta.size(); ++j)
        d[j] = sample_bernoulli(inclusion_probability(beta[j], sigma[j], pi[j], c), rng);
    return d;
}

VectorXd draw_pi(const VectorXi& delta, const ModelConfig& cfg, RngStream& rng) {
    VectorXd pi(delta.size());
    for (Index j = 0; j < delta.size(); ++j)
        pi[j] = sample_beta(cfg.a_pi + delta[j], cfg.b_pi + 1 - delta[j], rng);
    return pi;
}

double draw_tau_full_conditional(const VectorXd& g, const VectorXd& projections, double l,
                                 double a_tau, double b_tau, RngStream& rng) {
    if (g.size() != projections.size()) throw InvalidArgument("g and projections differ in length");
    const PDFactor k0 = factor_pd(gram_from_projections(projections, 1.0, l));
    const VectorXd half = k0.factor.triangularView<Eigen::Lower>().solve(g);
    return sample_invgamma(a_tau + 0.5 * static_cast<double>(g.size()), 0.5 * half.squaredNorm() + b_tau,
                           rng);
}

GaussianConditional g_conditional(const Dataset& data, const ReducedConditionalWorkspace& ws) {
    GaussianConditional out;
    if (ws.sys_factor) {
        const MatrixXd x = ws.sys_factor->factor.triangularView<Eigen::Lower>().solve(ws.gram);
        out.cov = ws.gram;
        out.cov.noalias() -= x.transpose() * x;
        out.cov = 0.5 * (out.cov + out.cov.transpose());
    } else if (ws.nystrom) {
        const MatrixXd k = gram_from_projections(ws.projections, ws.tau, ws.l);
        const NystromSystem sys(*ws.nystrom, ws.omega);
        MatrixXd s = k;
        s.noalias() -= k * sys.apply_inverse(k);
        out.cov = psd_project(s);
    } else {
        throw InvalidArgument("workspace holds no kernel");
    }
    out.mean = 0.5 * (out.cov * data.y());
    return out;
}

ChainState initial_state(Index n, Index p, RngStream& rng) {
    ChainState s;
    do {
        s.beta = sample_std_normal(p, rng);
    } while (s.beta.norm() == 0.0);
    s.beta /= s.beta.norm();
    s.g = VectorXd::Zero(n);
    s.omega = VectorXd::Ones(n);
    s.delta = VectorXi::Ones(p);
    s.sigma_beta = VectorXd::Ones(p);
    s.pi = VectorXd::Constant(p, 0.5);
    s.tau = 1.0;
    s.l = 1.0;
    return s;
}

// ---------------------------------------------------------------------------

ChainSampler::ChainSampler(const Dataset& data, ModelConfig cfg, ChainState init, RngStream rng)
    : data_(&data),
      cfg_(std::move(cfg)),
      state_(std::move(init)),
      rng_(rng),
      landmark_rng_(rng.derive(kLandmarkSalt)) {
    cfg_.validate(data.n(), data.p());
    state_.validate(data.n(), data.p());
    scales_.beta = cfg_.prop_sd_beta;
    scales_.log_tau = cfg_.prop_sd_log_tau;
    scales_.log_l = cfg_.prop_sd_log_l;
    refresh_landmarks();
}

void ChainSampler::set_state(ChainState s) {
    s.validate(data_->n(), data_->p());
    state_ = std::move(s);
    ws_.reset();
}

void ChainSampler::refresh_landmarks() {
    if (!cfg_.nystrom_m) return;
    landmarks_ = sample_landmarks(data_->n(), *cfg_.nystrom_m, landmark_rng_);
    ws_.reset();
}

const std::vector<Index>* ChainSampler::landmark_ptr() const {
    return cfg_.nystrom_m ? &landmarks_ : nullptr;
}

ReducedConditionalWorkspace ChainSampler::build(const VectorXd& beta, double tau, double l) const {
    return build_workspace(*data_, beta, tau, l, state_.omega, cfg_, landmark_ptr());
}

const ReducedConditionalWorkspace& ChainSampler::workspace() {
    if (!ws_ || !ws_->matches(state_.beta, state_.tau, state_.l, state_.omega))
        ws_ = build(state_.beta, state_.tau, state_.l);
    return *ws_;
}

bool ChainSampler::step_beta() {
    if (scales_.beta == 0.0) {
        last_alpha_ = 1.0;
        return true;
    }
    const double current = log_reduced_target_beta(workspace(), state_.delta, state_.sigma_beta, cfg_.c);
    VectorXd proposal;
    do {
        proposal = state_.beta + scales_.beta * sample_std_normal(state_.beta.size(), rng_);
    } while (proposal.norm() == 0.0);
    const auto pws = build(proposal, state_.tau, state_.l);
    const double log_ratio =
        log_reduced_target_beta(pws, state_.delta, state_.sigma_beta, cfg_.c) - current;
    last_alpha_ = std::isnan(log_ratio) ? 0.0 : std::exp(std::min(0.0, log_ratio));
    if (std::log(rng_.uniform()) < log_ratio) {
        state_.beta = proposal / proposal.norm();
        ws_.reset();
        return true;
    }
    return false;
}

bool ChainSampler::step_scale(double& value, double log_sd, double a, double b, bool is_tau) {
    if (log_sd == 0.0) {
        last_alpha_ = 1.0;
        return true;
    }
    const double current = log_reduced_target_scale(workspace(), value, a, b);
    const double proposed = value * std::exp(log_sd * rng_.normal());
    auto pws = is_tau ? build(state_.beta, proposed, state_.l) : build(state_.beta, state_.tau, proposed);
    const double log_ratio =
        log_scale_move_ratio(log_reduced_target_scale(pws, proposed, a, b), current, proposed, value);
    last_alpha_ = std::isnan(log_ratio) ? 0.0 : std::exp(std::min(0.0, log_ratio));
    if (std::log(rng_.uniform()) < log_ratio) {
        value = proposed;
        ws_ = std::move(pws);
        return true;
    }
    return false;
}

bool ChainSampler::step_tau() {
    return step_scale(state_.tau, scales_.log_tau, cfg_.a_tau, cfg_.b_tau, true);
}

bool ChainSampler::step_l() {
    return step_scale(state_.l, scales_.log_l, cfg_.a_l, cfg_.b_l, false);
}

void ChainSampler::step_g() {
    const auto cond = g_conditional(*data_, workspace());
    state_.g = draw_gaussian(cond.mean, cond.cov, rng_);
}

void ChainSampler::step_omega() {
    state_.omega = draw_omega(state_.g, rng_);
    ws_.reset();
}

void ChainSampler::step_sigma_beta() {
    state_.sigma_beta = draw_sigma_beta(state_.beta, state_.delta, cfg_, rng_);
}

void ChainSampler::step_delta() {
    state_.delta = draw_delta(state_.beta, state_.sigma_beta, state_.pi, cfg_.c, rng_);
}

void ChainSampler::step_pi() { state_.pi = draw_pi(state_.delta, cfg_, rng_); }

ChainSampler::SweepFlags ChainSampler::sweep(long adapt_step) {
    refresh_landmarks();
    const double gain = adapt_step >= 0 ? std::pow(static_cast<double>(adapt_step) + 1.0, -0.6) : 0.0;
    auto adapt = [&](double& sd) {
        if (adapt_step < 0 || sd == 0.0) return;
        sd = std::exp(std::log(sd) + gain * (last_alpha_ - cfg_.target_accept));
    };
    SweepFlags f;
    f.beta = step_beta();
    adapt(scales_.beta);
    f.tau = step_tau();
    adapt(scales_.log_tau);
    f.l = step_l();
    adapt(scales_.log_l);
    step_g();
    step_omega();
    step_sigma_beta();
    step_delta();
    step_pi();
    return f;
}

Trace run_chain(const Dataset& data, const ModelConfig& cfg, std::optional<ChainState> init,
                RngStream rng) {
    cfg.validate(data.n(), data.p());
    ChainState start = init ? std::move(*init) : initial_state(data.n(), data.p(), rng);
    ChainSampler sampler(data, cfg, std::move(start), rng);

    Trace trace;
    trace.iter_total = cfg.n_iter;
    trace.burn_in = cfg.burn_in;
    trace.draws.reserve(static_cast<std::size_t>(cfg.n_iter - cfg.burn_in));
    for (long t = 0; t < cfg.n_iter; ++t) {
        ChainSampler::SweepFlags flags;
        try {
            flags = sampler.sweep(cfg.adapt && t < cfg.burn_in ? t : -1);
        } catch (const std::exception& e) {
            throw ChainError(std::string(e.what()) + " (sweep " + std::to_string(t) + ")", t);
        }
        if (t < cfg.burn_in) continue;
        const ChainState& s = sampler.state();
        trace.draws.push_back({t, s.beta, s.delta, s.tau, s.l, flags.beta, flags.tau, flags.l});
        trace.accept_counts.beta += flags.beta;
        trace.accept_counts.tau += flags.tau;
        trace.accept_counts.l += flags.l;
        if (cfg.thin > 0 && (t - cfg.burn_in) % cfg.thin == 0) trace.snapshots.emplace_back(t, s);
    }
    trace.final_scales = sampler.scales();
    trace.final_state = sampler.state();
    return trace;
}

}  // namespace silm
