#include "silm/simbench.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "silm/errors.hpp"
#include "silm/parallel.hpp"
#include "silm/sampler.hpp"
#include "silm/trace_io.hpp"

namespace silm {

CovDesign parse_cov_design(const std::string& name) {
    if (name == "identity" || name == "sigma1") return CovDesign::identity;
    if (name == "ar_half" || name == "sigma2") return CovDesign::ar_half;
    throw InvalidArgument("unknown covariance design '" + name + "' (use identity or ar_half)");
}

std::string to_string(CovDesign d) { return d == CovDesign::identity ? "identity" : "ar_half"; }

double TrueModel::link(double t) const {
    switch (id) {
        case 1: return 5.0 * t;
        case 2: return 5.0 * (t + std::sin(t * t * t));
        default: return 10.0 * std::abs(t) * std::sin(t);
    }
}

TrueModel TrueModel::make(int id, Index p, CovDesign design) {
    TrueModel m;
    m.id = id;
    m.cov_design = design;
    std::vector<double> head;
    switch (id) {
        case 1: head = {3, 2, 2}; break;
        case 2: head = {2, 2, 1, 1}; break;
        case 3: head = {1, 1, 1, 1, 1}; break;
        default: throw InvalidArgument("model id must be 1, 2 or 3, got " + std::to_string(id));
    }
    m.s = static_cast<Index>(head.size());
    if (p < m.s) throw InvalidArgument("model " + std::to_string(id) + " needs p >= " + std::to_string(m.s));
    m.beta0 = VectorXd::Zero(p);
    for (Index j = 0; j < m.s; ++j) m.beta0[j] = head[static_cast<std::size_t>(j)];
    m.beta0 /= m.beta0.norm();
    return m;
}

MatrixXd gen_covariates(Index n, Index p, CovDesign design, RngStream& rng) {
    if (n < 1 || p < 1) throw InvalidArgument("gen_covariates needs n, p >= 1");
    MatrixXd x(n, p);
    const double innov = std::sqrt(1.0 - 0.25);
    for (Index i = 0; i < n; ++i) {
        for (Index k = 0; k < p; ++k) {
            const double z = rng.normal();
            x(i, k) = (design == CovDesign::ar_half && k > 0) ? 0.5 * x(i, k - 1) + innov * z : z;
        }
    }
    return x;
}

VectorXd gen_response(const MatrixXd& x, const TrueModel& model, RngStream& rng) {
    if (x.cols() != model.beta0.size()) throw InvalidArgument("covariate count does not match model");
    const VectorXd t = x * model.beta0;
    VectorXd y(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-model.link(t[i])));
        y[i] = rng.uniform() < prob ? 1.0 : -1.0;
    }
    return y;
}

std::pair<int, int> tp_fp(const std::vector<bool>& selected, const TrueModel& model) {
    if (static_cast<Index>(selected.size()) != model.beta0.size())
        throw InvalidArgument("selection length does not match model");
    int tp = 0, fp = 0;
    for (std::size_t j = 0; j < selected.size(); ++j) {
        if (!selected[j]) continue;
        if (model.beta0[static_cast<Index>(j)] != 0.0) ++tp;
        else ++fp;
    }
    return {tp, fp};
}

StudyReport run_study(const StudyConfig& cfg) {
    if (cfg.reps < 1) throw InvalidArgument("reps must be at least 1");
    const TrueModel model = TrueModel::make(cfg.model_id, cfg.p, cfg.cov_design);
    cfg.sampler.validate(cfg.n, cfg.p);

    StudyReport report;
    report.model_id = cfg.model_id;
    report.n = cfg.n;
    report.p = cfg.p;
    report.cov_design = cfg.cov_design;
    report.seed = cfg.sampler.seed;
    report.reps.resize(static_cast<std::size_t>(cfg.reps));

    parallel_for(report.reps.size(), cfg.threads, [&](std::size_t r) {
        ReplicationResult& out = report.reps[r];
        out.rep = static_cast<int>(r);
        const auto start = std::chrono::steady_clock::now();
        try {
            RngStream rng(cfg.sampler.seed, r);
            MatrixXd x = gen_covariates(cfg.n, cfg.p, cfg.cov_design, rng);
            const VectorXd y = gen_response(x, model, rng);
            if (cfg.standardize) x = standardize(x).x;
            const Dataset data(std::move(x), y);
            const Trace trace = run_chain(data, cfg.sampler, std::nullopt, rng);
            const PosteriorSummary s = summarize({trace});
            std::tie(out.tp, out.fp) = tp_fp(s.selected, model);
            out.beta_hat = s.beta_mean;
            out.inclusion_prob = s.inclusion_prob;
            out.accept_rates = s.accept_rates;
            out.ok = true;
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });

    std::vector<double> tps, fps;
    std::vector<VectorXd> hats;
    for (const auto& r : report.reps) {
        if (!r.ok) {
            ++report.failed;
            continue;
        }
        tps.push_back(r.tp);
        fps.push_back(r.fp);
        hats.push_back(r.beta_hat);
    }
    auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
        mean = sd = 0.0;
        if (v.empty()) return;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        if (v.size() < 2) return;
        for (double x : v) sd += (x - mean) * (x - mean);
        sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
    };
    mean_sd(tps, report.tp_mean, report.tp_sd);
    mean_sd(fps, report.fp_mean, report.fp_sd);
    report.bias = VectorXd::Zero(cfg.p);
    report.se = VectorXd::Zero(cfg.p);
    for (Index j = 0; j < cfg.p; ++j) {
        std::vector<double> col;
        for (const auto& h : hats) col.push_back(h[j]);
        double m = 0, sd = 0;
        mean_sd(col, m, sd);
        report.bias[j] = hats.empty() ? 0.0 : m - model.beta0[j];
        report.se[j] = sd;
    }
    return report;
}

std::string study_reps_csv(const StudyReport& r) {
    std::ostringstream out;
    out << "rep,ok,tp,fp";
    for (Index j = 1; j <= r.p; ++j) out << ",beta_hat_" << j;
    for (Index j = 1; j <= r.p; ++j) out << ",pip_" << j;
    out << ",acc_beta,acc_tau,acc_l,error\n";
    for (const auto& rep : r.reps) {
        out << rep.rep << ',' << (rep.ok ? 1 : 0) << ',' << rep.tp << ',' << rep.fp;
        for (Index j = 0; j < r.p; ++j) out << ',' << (rep.ok ? format_double(rep.beta_hat[j]) : "NA");
        for (Index j = 0; j < r.p; ++j) out << ',' << (rep.ok ? format_double(rep.inclusion_prob[j]) : "NA");
        if (rep.ok)
            out << ',' << format_double(rep.accept_rates.beta) << ',' << format_double(rep.accept_rates.tau)
                << ',' << format_double(rep.accept_rates.l) << ",";
        else
            out << ",NA,NA,NA,\"" << rep.error << '"';
        out << '\n';
    }
    return out.str();
}

std::string study_summary_json(const StudyReport& r) {
    nlohmann::ordered_json j;
    j["model"] = r.model_id;
    j["n"] = r.n;
    j["p"] = r.p;
    j["cov_design"] = to_string(r.cov_design);
    j["seed"] = r.seed;
    j["reps"] = r.reps.size();
    j["failed_reps"] = r.failed;
    j["tp"] = {{"mean", r.tp_mean}, {"sd", r.tp_sd}};
    j["fp"] = {{"mean", r.fp_mean}, {"sd", r.fp_sd}};
    j["bias"] = std::vector<double>(r.bias.data(), r.bias.data() + r.bias.size());
    j["se"] = std::vector<double>(r.se.data(), r.se.data() + r.se.size());
    std::vector<int> failed;
    for (const auto& rep : r.reps)
        if (!rep.ok) failed.push_back(rep.rep);
    j["failed_rep_ids"] = failed;
    return j.dump(2) + "\n";
}

std::string study_timing_csv(const StudyReport& r) {
    std::ostringstream out;
    out << "rep,seconds\n";
    for (const auto& rep : r.reps) out << rep.rep << ',' << format_double(rep.seconds) << '\n';
    return out.str();
}

}  // namespace silm
