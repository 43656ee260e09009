#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "silm/diagnostics.hpp"
#include "silm/errors.hpp"

using namespace silm;

namespace {

// Textbook R-hat written out longhand.
double rhat_longhand(const std::vector<std::vector<double>>& c) {
    const double m = static_cast<double>(c.size()), n = static_cast<double>(c[0].size());
    std::vector<double> means;
    double grand = 0.0;
    for (const auto& x : c) {
        double s = 0.0;
        for (double v : x) s += v;
        means.push_back(s / n);
        grand += s / n;
    }
    grand /= m;
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b *= n / (m - 1.0);
    double w = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        double s = 0.0;
        for (double v : c[k]) s += (v - means[k]) * (v - means[k]);
        w += s / (n - 1.0);
    }
    w /= m;
    const double vhat = (n - 1.0) / n * w + b / n;
    return std::sqrt(vhat / w);
}

std::vector<std::vector<double>> normal_chains(int m, int n, double spread, unsigned seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> nd;
    std::vector<std::vector<double>> out(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(k)].push_back(nd(eng) + spread * k);
    return out;
}

Trace make_trace(const std::vector<VectorXd>& betas, const std::vector<VectorXi>& deltas) {
    Trace t;
    for (std::size_t i = 0; i < betas.size(); ++i) {
        DrawRecord r;
        r.iter = static_cast<long>(i);
        r.beta = betas[i];
        r.delta = deltas[i];
        r.tau = 1.0 + static_cast<double>(i);
        r.l = 2.0;
        r.acc_beta = i % 2 == 0;
        t.draws.push_back(r);
        t.accept_counts.beta += r.acc_beta;
    }
    t.iter_total = static_cast<long>(betas.size());
    return t;
}

}  // namespace

TEST_CASE("psrf agrees with the longhand formula") {
    for (double spread : {0.0, 0.3, 3.0}) {
        const auto c = normal_chains(4, 500, spread, 7);
        CHECK(psrf(c) == doctest::Approx(rhat_longhand(c)).epsilon(1e-12));
    }
    CHECK(psrf(normal_chains(4, 20000, 0.0, 8)) < 1.01);
    CHECK(psrf(normal_chains(2, 500, 5.0, 9)) > 2.0);
}

TEST_CASE("psrf: conventions and affine invariance") {
    CHECK(psrf({{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}}) == 1.0);
    CHECK(std::isinf(psrf({{1.0, 1.0, 1.0}, {2.0, 2.0, 2.0}})));
    CHECK_THROWS_AS(psrf({{1.0, 2.0}}), InvalidArgument);
    CHECK_THROWS_AS(psrf({{1.0}, {2.0}}), InvalidArgument);
    CHECK_THROWS_AS(psrf({{1.0, 2.0}, {1.0, 2.0, 3.0}}), InvalidArgument);

    auto c = normal_chains(3, 200, 0.4, 10);
    const double base = psrf(c);
    for (auto& x : c)
        for (auto& v : x) v = -3.5 * v + 12.0;
    CHECK(psrf(c) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("sign canonicalization") {
    std::vector<VectorXd> draws = {(VectorXd(3) << 0.1, -0.9, 0.4).finished(),
                                   (VectorXd(3) << -0.2, 0.8, -0.5).finished(),
                                   (VectorXd(3) << 0.0, -0.95, 0.3).finished()};
    CHECK(dominant_coordinate(draws) == 1);
    const auto c = canonicalize_sign(draws);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(c[i][1] > 0.0);
        CHECK(((c[i] - draws[i]).norm() == 0.0 || (c[i] + draws[i]).norm() == 0.0));
    }
    // Flipping the input flips nothing in the output.
    std::vector<VectorXd> flipped;
    for (const auto& d : draws) flipped.push_back(-d);
    const auto c2 = canonicalize_sign(flipped);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == c2[i]);
}

TEST_CASE("select_variables thresholds at one half") {
    VectorXd p(6);
    p << 0.107, 0.151, 0.158, 0.888, 0.592, 0.861;
    CHECK(select_variables(p) == std::vector<bool>{false, false, false, true, true, true});
    VectorXd edge(2);
    edge << 0.5, 0.5000001;
    CHECK(select_variables(edge) == std::vector<bool>{false, true});
}

TEST_CASE("summarize pools chains after a common sign flip") {
    const VectorXd a = (VectorXd(2) << 0.6, 0.8).finished();
    const VectorXi d1 = (VectorXi(2) << 1, 1).finished(), d0 = (VectorXi(2) << 0, 1).finished();
    const Trace t1 = make_trace({a, a, a, -a}, {d1, d0, d1, d1});
    const Trace t2 = make_trace({-a, -a, a, a}, {d0, d0, d1, d1});
    const auto s = summarize({t1, t2});
    CHECK(s.sign_coordinate == 1);
    CHECK(s.n_draws == 8);
    CHECK(s.n_chains == 2);
    CHECK(s.beta_mean[0] == doctest::Approx(0.6));
    CHECK(s.beta_sd[1] == doctest::Approx(0.0));
    CHECK(s.inclusion_prob[0] == doctest::Approx(5.0 / 8.0));
    CHECK(s.inclusion_prob[1] == 1.0);
    CHECK(s.selected == std::vector<bool>{true, true});
    REQUIRE(s.psrf.has_value());
    CHECK(s.accept_rates.beta == doctest::Approx(0.5));
    CHECK(s.tau_mean == doctest::Approx(2.5));

    const auto one = summarize({t1});
    CHECK_FALSE(one.psrf.has_value());
    CHECK_THROWS_AS(summarize({}), InvalidArgument);
    CHECK_THROWS_AS(summarize({t1, make_trace({a}, {d1})}), InvalidArgument);

    const std::vector<std::string> names{"u", "v"};
    const std::string csv = summary_to_csv(s, names);
    CHECK(csv.rfind("covariate,beta_hat,beta_sd,inclusion_prob,delta_draw_sd,psrf,selected\n", 0) == 0);
    const auto j = nlohmann::json::parse(summary_to_json(s, names));
    CHECK(j["covariates"].size() == 2);
    CHECK(j["sign_reference"] == "v");
    CHECK_THROWS_AS(summary_to_csv(s, {"u"}), InvalidArgument);
}

TEST_CASE("diagnose_traces reports PSRF and per-chain rates") {
    const VectorXd a = (VectorXd(2) << 0.6, 0.8).finished();
    const VectorXi d1 = VectorXi::Ones(2);
    const Trace t1 = make_trace({a, a, a, a}, {d1, d1, d1, d1});
    const Trace t2 = make_trace({a, a, a, a}, {d1, d1, d1, d1});
    const auto r = diagnose_traces({t1, t2});
    CHECK(r.psrf.size() == 4);
    CHECK(r.psrf[0].name == "beta_1");
    CHECK(r.psrf[3].name == "l");
    CHECK(r.rates.size() == 2);
    CHECK(r.rates[0][0].value == doctest::Approx(0.5));
    CHECK_FALSE(r.rates[0][0].pass);
    CHECK(psrf_table_csv(r).rfind("parameter,psrf,threshold,pass\n", 0) == 0);
    CHECK_THROWS_AS(diagnose_traces({t1}), InvalidArgument);
}

TEST_CASE("psrf: permuted chains and separated chains") {
    auto c = normal_chains(1, 1000, 0.0, 12)[0];
    auto d = c;
    std::mt19937_64 eng(13);
    std::shuffle(d.begin(), d.end(), eng);
    CHECK(psrf({c, d}) <= 1.0 + 1e-6);
    auto far = normal_chains(2, 1000, 10.0, 14);
    CHECK(psrf(far) > 1.2);
}
