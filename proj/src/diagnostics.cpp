#include "silm/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "silm/errors.hpp"
#include "silm/trace_io.hpp"

namespace silm {

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;  // n - 1 denominator; 0 for a single value
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    if (v.empty()) return m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    if (v.size() < 2) return m;
    for (double x : v) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(v.size() - 1);
    return m;
}

void check_traces(const std::vector<Trace>& traces) {
    if (traces.empty()) throw InvalidArgument("no traces to summarize");
    const std::size_t len = traces.front().draws.size();
    const Index p = traces.front().p();
    if (len == 0) throw InvalidArgument("trace holds no draws");
    for (const auto& t : traces) {
        if (t.draws.size() != len) throw InvalidArgument("traces differ in length");
        if (t.p() != p) throw InvalidArgument("traces differ in coefficient count");
    }
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    return format_double(v);
}

}  // namespace

double psrf(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) throw InvalidArgument("psrf needs at least two chains");
    const std::size_t len = chains.front().size();
    if (len < 2) throw InvalidArgument("psrf needs at least two draws per chain");
    std::vector<double> means;
    double w = 0.0;
    for (const auto& c : chains) {
        if (c.size() != len) throw InvalidArgument("psrf chains differ in length");
        const auto m = moments(c);
        means.push_back(m.mean);
        w += m.var;
    }
    w /= static_cast<double>(chains.size());
    const double b_over_l = moments(means).var;
    if (w == 0.0) return b_over_l > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    const double l = static_cast<double>(len);
    return std::sqrt(((l - 1.0) / l * w + b_over_l) / w);
}

Index dominant_coordinate(const std::vector<VectorXd>& draws) {
    if (draws.empty()) return 0;
    VectorXd mean_abs = VectorXd::Zero(draws.front().size());
    for (const auto& d : draws) mean_abs += d.cwiseAbs();
    Index idx = 0;
    mean_abs.maxCoeff(&idx);
    return idx;
}

std::vector<VectorXd> canonicalize_sign(const std::vector<VectorXd>& draws, Index coordinate) {
    std::vector<VectorXd> out = draws;
    for (auto& d : out)
        if (d[coordinate] < 0.0) d = -d;
    return out;
}

std::vector<VectorXd> canonicalize_sign(const std::vector<VectorXd>& draws) {
    if (draws.empty()) return draws;
    return canonicalize_sign(draws, dominant_coordinate(draws));
}

std::vector<bool> select_variables(const VectorXd& inclusion_prob) {
    std::vector<bool> sel(static_cast<std::size_t>(inclusion_prob.size()));
    for (Index j = 0; j < inclusion_prob.size(); ++j) sel[static_cast<std::size_t>(j)] = inclusion_prob[j] > 0.5;
    return sel;
}

PosteriorSummary summarize(const std::vector<Trace>& traces) {
    check_traces(traces);
    const Index p = traces.front().p();
    const std::size_t len = traces.front().draws.size();

    std::vector<VectorXd> pooled;
    for (const auto& t : traces)
        for (const auto& d : t.draws) pooled.push_back(d.beta);
    PosteriorSummary s;
    s.sign_coordinate = dominant_coordinate(pooled);
    pooled = canonicalize_sign(pooled, s.sign_coordinate);
    s.n_draws = pooled.size();
    s.n_chains = traces.size();

    s.beta_mean.resize(p);
    s.beta_sd.resize(p);
    s.inclusion_prob.resize(p);
    s.inclusion_sd.resize(p);
    for (Index j = 0; j < p; ++j) {
        std::vector<double> b, dl;
        b.reserve(pooled.size());
        for (const auto& v : pooled) b.push_back(v[j]);
        for (const auto& t : traces)
            for (const auto& d : t.draws) dl.push_back(d.delta[j]);
        const auto mb = moments(b);
        const auto md = moments(dl);
        s.beta_mean[j] = mb.mean;
        s.beta_sd[j] = std::sqrt(mb.var);
        s.inclusion_prob[j] = md.mean;
        s.inclusion_sd[j] = std::sqrt(md.var);
    }
    s.selected = select_variables(s.inclusion_prob);

    if (traces.size() >= 2 && len >= 2) {
        s.psrf = VectorXd(p);
        for (Index j = 0; j < p; ++j) {
            std::vector<std::vector<double>> chains;
            std::size_t k = 0;
            for (const auto& t : traces) {
                std::vector<double> c;
                for (std::size_t i = 0; i < t.draws.size(); ++i) c.push_back(pooled[k++][j]);
                chains.push_back(std::move(c));
            }
            (*s.psrf)[j] = psrf(chains);
        }
    }

    double acc_b = 0, acc_t = 0, acc_l = 0, tau = 0, l = 0;
    for (const auto& t : traces) {
        acc_b += static_cast<double>(t.accept_counts.beta);
        acc_t += static_cast<double>(t.accept_counts.tau);
        acc_l += static_cast<double>(t.accept_counts.l);
        for (const auto& d : t.draws) {
            tau += d.tau;
            l += d.l;
        }
    }
    const auto total = static_cast<double>(s.n_draws);
    s.accept_rates = {acc_b / total, acc_t / total, acc_l / total};
    s.tau_mean = tau / total;
    s.l_mean = l / total;
    return s;
}

std::string summary_to_csv(const PosteriorSummary& s, const std::vector<std::string>& names,
                           const ColumnScaling* scaling) {
    const Index p = s.beta_mean.size();
    if (static_cast<Index>(names.size()) != p) throw InvalidArgument("one name per covariate required");
    std::ostringstream out;
    out << "covariate,beta_hat,beta_sd,inclusion_prob,delta_draw_sd,psrf,selected";
    if (scaling) out << ",raw_mean,raw_sd";
    out << '\n';
    for (Index j = 0; j < p; ++j) {
        out << names[static_cast<std::size_t>(j)] << ',' << fmt(s.beta_mean[j]) << ',' << fmt(s.beta_sd[j])
            << ',' << fmt(s.inclusion_prob[j]) << ',' << fmt(s.inclusion_sd[j]) << ','
            << (s.psrf ? fmt((*s.psrf)[j]) : std::string("NA")) << ','
            << (s.selected[static_cast<std::size_t>(j)] ? 1 : 0);
        if (scaling) out << ',' << fmt(scaling->mean[j]) << ',' << fmt(scaling->sd[j]);
        out << '\n';
    }
    return out.str();
}

std::string summary_to_json(const PosteriorSummary& s, const std::vector<std::string>& names,
                            const ColumnScaling* scaling) {
    const Index p = s.beta_mean.size();
    if (static_cast<Index>(names.size()) != p) throw InvalidArgument("one name per covariate required");
    nlohmann::ordered_json j;
    j["draws"] = s.n_draws;
    j["chains"] = s.n_chains;
    j["sign_reference"] = names[static_cast<std::size_t>(s.sign_coordinate)];
    j["accept_rates"] = {{"beta", s.accept_rates.beta}, {"tau", s.accept_rates.tau}, {"l", s.accept_rates.l}};
    j["tau_mean"] = s.tau_mean;
    j["l_mean"] = s.l_mean;
    auto rows = nlohmann::ordered_json::array();
    for (Index j2 = 0; j2 < p; ++j2) {
        nlohmann::ordered_json r;
        r["covariate"] = names[static_cast<std::size_t>(j2)];
        r["beta_hat"] = s.beta_mean[j2];
        r["beta_sd"] = s.beta_sd[j2];
        r["inclusion_prob"] = s.inclusion_prob[j2];
        r["delta_draw_sd"] = s.inclusion_sd[j2];
        if (s.psrf) {
            const double v = (*s.psrf)[j2];
            if (std::isfinite(v)) r["psrf"] = v;
            else r["psrf"] = "inf";
        }
        r["selected"] = static_cast<bool>(s.selected[static_cast<std::size_t>(j2)]);
        if (scaling) {
            r["raw_mean"] = scaling->mean[j2];
            r["raw_sd"] = scaling->sd[j2];
        }
        rows.push_back(std::move(r));
    }
    j["covariates"] = std::move(rows);
    return j.dump(2) + "\n";
}

ConvergenceReport diagnose_traces(const std::vector<Trace>& traces, double psrf_threshold,
                                  double rate_low, double rate_high) {
    if (traces.size() < 2) throw InvalidArgument("convergence diagnosis needs at least two traces");
    check_traces(traces);
    ConvergenceReport r;
    r.psrf_threshold = psrf_threshold;
    r.rate_low = rate_low;
    r.rate_high = rate_high;

    const Index p = traces.front().p();
    std::vector<VectorXd> pooled;
    for (const auto& t : traces)
        for (const auto& d : t.draws) pooled.push_back(d.beta);
    pooled = canonicalize_sign(pooled);

    auto check = [&](const std::string& name, const std::vector<std::vector<double>>& chains) {
        const double v = psrf(chains);
        r.psrf.push_back({name, v, v < psrf_threshold});
    };
    std::size_t k0 = 0;
    for (Index j = 0; j < p; ++j) {
        std::vector<std::vector<double>> chains;
        std::size_t k = k0;
        for (const auto& t : traces) {
            std::vector<double> c;
            for (std::size_t i = 0; i < t.draws.size(); ++i) c.push_back(pooled[k++][j]);
            chains.push_back(std::move(c));
        }
        check("beta_" + std::to_string(j + 1), chains);
    }
    std::vector<std::vector<double>> taus, ls;
    for (const auto& t : traces) {
        std::vector<double> a, b;
        for (const auto& d : t.draws) {
            a.push_back(d.tau);
            b.push_back(d.l);
        }
        taus.push_back(std::move(a));
        ls.push_back(std::move(b));
    }
    check("tau", taus);
    check("l", ls);

    for (const auto& t : traces) {
        const auto n = static_cast<double>(t.draws.size());
        std::vector<ParameterCheck> row;
        for (auto [name, cnt] : {std::pair<const char*, long>{"beta", t.accept_counts.beta},
                                 {"tau", t.accept_counts.tau},
                                 {"l", t.accept_counts.l}}) {
            const double rate = static_cast<double>(cnt) / n;
            row.push_back({name, rate, rate >= rate_low && rate <= rate_high});
        }
        r.rates.push_back(std::move(row));
    }
    return r;
}

std::string psrf_table_csv(const ConvergenceReport& r) {
    std::ostringstream out;
    out << "parameter,psrf,threshold,pass\n";
    for (const auto& c : r.psrf)
        out << c.name << ',' << fmt(c.value) << ',' << fmt(r.psrf_threshold) << ','
            << (c.pass ? "pass" : "fail") << '\n';
    return out.str();
}

std::string accept_table_csv(const ConvergenceReport& r) {
    std::ostringstream out;
    out << "chain,parameter,accept_rate,low,high,pass\n";
    for (std::size_t k = 0; k < r.rates.size(); ++k)
        for (const auto& c : r.rates[k])
            out << k + 1 << ',' << c.name << ',' << fmt(c.value) << ',' << fmt(r.rate_low) << ','
                << fmt(r.rate_high) << ',' << (c.pass ? "pass" : "fail") << '\n';
    return out.str();
}

}  // namespace silm
