#include "silm/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "silm/diagnostics.hpp"
#include "silm/errors.hpp"
#include "silm/parallel.hpp"
#include "silm/sampler.hpp"
#include "silm/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace silm {

namespace {

std::vector<double> number_or_array(const json& v) {
    if (v.is_number()) return {v.get<double>()};
    return v.get<std::vector<double>>();
}

void apply_model_json(const json& m, ModelConfig& mc) {
    static const std::set<std::string> known = {
        "c",       "a_sigma",        "b_sigma",      "a_tau",         "b_tau",         "a_l",
        "b_l",     "a_pi",           "b_pi",         "prop_sd_beta",  "prop_sd_log_tau",
        "prop_sd_log_l", "adapt",    "target_accept", "n_iter",       "burn_in",       "nystrom_m",
        "nystrom_reg_ratio", "thin", "seed"};
    for (const auto& [key, _] : m.items())
        if (!known.contains(key)) throw InvalidArgument("unknown key in model section: " + key);

    auto num = [&](const char* key, double& dst) {
        if (m.contains(key)) dst = m.at(key).get<double>();
    };
    num("c", mc.c);
    if (m.contains("a_sigma")) mc.a_sigma = number_or_array(m.at("a_sigma"));
    if (m.contains("b_sigma")) mc.b_sigma = number_or_array(m.at("b_sigma"));
    num("a_tau", mc.a_tau);
    num("b_tau", mc.b_tau);
    num("a_l", mc.a_l);
    num("b_l", mc.b_l);
    num("a_pi", mc.a_pi);
    num("b_pi", mc.b_pi);
    num("prop_sd_beta", mc.prop_sd_beta);
    num("prop_sd_log_tau", mc.prop_sd_log_tau);
    num("prop_sd_log_l", mc.prop_sd_log_l);
    num("target_accept", mc.target_accept);
    num("nystrom_reg_ratio", mc.nystrom_reg_ratio);
    if (m.contains("adapt")) mc.adapt = m.at("adapt").get<bool>();
    if (m.contains("n_iter")) {
        mc.n_iter = m.at("n_iter").get<long>();
        if (!m.contains("burn_in")) mc.burn_in = mc.n_iter / 2;
    }
    if (m.contains("burn_in")) mc.burn_in = m.at("burn_in").get<long>();
    if (m.contains("nystrom_m")) {
        if (m.at("nystrom_m").is_null()) mc.nystrom_m.reset();
        else mc.nystrom_m = m.at("nystrom_m").get<Index>();
    }
    if (m.contains("thin")) mc.thin = m.at("thin").get<long>();
    if (m.contains("seed")) mc.seed = m.at("seed").get<std::uint64_t>();
}

json model_to_json(const ModelConfig& mc) {
    json m;
    m["c"] = mc.c;
    m["a_sigma"] = mc.a_sigma;
    m["b_sigma"] = mc.b_sigma;
    m["a_tau"] = mc.a_tau;
    m["b_tau"] = mc.b_tau;
    m["a_l"] = mc.a_l;
    m["b_l"] = mc.b_l;
    m["a_pi"] = mc.a_pi;
    m["b_pi"] = mc.b_pi;
    m["prop_sd_beta"] = mc.prop_sd_beta;
    m["prop_sd_log_tau"] = mc.prop_sd_log_tau;
    m["prop_sd_log_l"] = mc.prop_sd_log_l;
    m["adapt"] = mc.adapt;
    m["target_accept"] = mc.target_accept;
    m["n_iter"] = mc.n_iter;
    m["burn_in"] = mc.burn_in;
    m["nystrom_m"] = mc.nystrom_m ? json(*mc.nystrom_m) : json(nullptr);
    m["nystrom_reg_ratio"] = mc.nystrom_reg_ratio;
    m["thin"] = mc.thin;
    m["seed"] = mc.seed;
    return m;
}

void ensure_writable_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw InvalidArgument("cannot create output directory " + dir);
    const fs::path probe = fs::path(dir) / ".silm-write-probe";
    {
        std::ofstream out(probe);
        if (!out) throw InvalidArgument("output directory " + dir + " is not writable");
    }
    fs::remove(probe, ec);
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw InvalidArgument(std::string("no ") + what + " given");
    if (!fs::is_regular_file(path)) throw InvalidArgument(std::string(what) + " not found: " + path);
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

void write_manifest(const RunConfig& cfg, const std::vector<std::string>& inputs, double seconds,
                    const std::vector<std::string>& outputs) {
    const std::string config = config_to_json(cfg);
    json m;
    m["tool"] = "silm";
    m["version"] = kVersion;
    m["config"] = json::parse(config);
    m["config_sha256"] = sha256_hex(config);
    m["seed"] = cfg.command == Command::simulate ? cfg.study.sampler.seed : cfg.model.seed;
    json in = json::array();
    for (const auto& p : inputs) in.push_back({{"path", p}, {"sha256", sha256_hex(read_file(p))}});
    m["inputs"] = in;
    m["outputs"] = outputs;
    m["threads"] = cfg.threads;
    m["wall_clock_seconds"] = seconds;
    m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                         "." + std::to_string(EIGEN_MINOR_VERSION);
    write_file_atomic(out_path(cfg, "manifest.json"), m.dump(2) + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void RunConfig::validate() const {
    if (threads < 1) throw InvalidArgument("threads must be at least 1");
    switch (command) {
        case Command::fit:
            require_file(data_path, "data file");
            if (chains < 1) throw InvalidArgument("chains must be at least 1");
            if (want_psrf && chains < 2) throw InvalidArgument("PSRF requires at least two chains");
            if (!init_path.empty()) require_file(init_path, "initial-state file");
            if (model.burn_in >= model.n_iter) throw InvalidArgument("burn_in must be below n_iter");
            break;
        case Command::simulate:
            TrueModel::make(study.model_id, study.p, study.cov_design);
            if (study.reps < 1) throw InvalidArgument("reps must be at least 1");
            study.sampler.validate(study.n, study.p);
            break;
        case Command::diagnose:
            if (trace_paths.size() < 2) throw InvalidArgument("diagnose needs at least two trace files");
            for (const auto& p : trace_paths) require_file(p, "trace file");
            if (!(psrf_threshold > 1.0)) throw InvalidArgument("PSRF threshold must exceed 1");
            break;
    }
    ensure_writable_dir(out_dir);
}

void apply_config_json(const std::string& text, RunConfig& cfg) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0, 0);
    }
    try {
        if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
        if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
        if (j.contains("model")) {
            apply_model_json(j.at("model"), cfg.model);
            apply_model_json(j.at("model"), cfg.study.sampler);
        }
        if (j.contains("fit")) {
            const auto& f = j.at("fit");
            if (f.contains("data")) cfg.data_path = f.at("data").get<std::string>();
            if (f.contains("label_col")) cfg.label_col = f.at("label_col").get<std::string>();
            if (f.contains("chains")) cfg.chains = f.at("chains").get<int>();
            if (f.contains("standardize")) cfg.standardize = f.at("standardize").get<bool>();
            if (f.contains("psrf")) cfg.want_psrf = f.at("psrf").get<bool>();
            if (f.contains("init")) cfg.init_path = f.at("init").get<std::string>();
        }
        if (j.contains("study")) {
            const auto& s = j.at("study");
            if (s.contains("model_id")) cfg.study.model_id = s.at("model_id").get<int>();
            if (s.contains("n")) cfg.study.n = s.at("n").get<Index>();
            if (s.contains("p")) cfg.study.p = s.at("p").get<Index>();
            if (s.contains("cov_design")) cfg.study.cov_design = parse_cov_design(s.at("cov_design").get<std::string>());
            if (s.contains("reps")) cfg.study.reps = s.at("reps").get<int>();
            if (s.contains("standardize")) cfg.study.standardize = s.at("standardize").get<bool>();
        }
        if (j.contains("diagnose")) {
            const auto& d = j.at("diagnose");
            if (d.contains("traces")) cfg.trace_paths = d.at("traces").get<std::vector<std::string>>();
            if (d.contains("psrf_threshold")) cfg.psrf_threshold = d.at("psrf_threshold").get<double>();
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad value in config: ") + e.what(), 0, 0);
    }
}

std::string config_to_json(const RunConfig& cfg) {
    json j;
    j["out"] = cfg.out_dir;
    switch (cfg.command) {
        case Command::fit:
            j["command"] = "fit";
            j["model"] = model_to_json(cfg.model);
            j["fit"] = {{"data", cfg.data_path},     {"label_col", cfg.label_col},
                        {"chains", cfg.chains},      {"standardize", cfg.standardize},
                        {"psrf", cfg.want_psrf},     {"init", cfg.init_path}};
            break;
        case Command::simulate:
            j["command"] = "simulate";
            j["model"] = model_to_json(cfg.study.sampler);
            j["study"] = {{"model_id", cfg.study.model_id}, {"n", cfg.study.n},
                          {"p", cfg.study.p},               {"cov_design", to_string(cfg.study.cov_design)},
                          {"reps", cfg.study.reps},         {"standardize", cfg.study.standardize}};
            break;
        case Command::diagnose:
            j["command"] = "diagnose";
            j["diagnose"] = {{"traces", cfg.trace_paths}, {"psrf_threshold", cfg.psrf_threshold}};
            break;
    }
    return j.dump(2);
}

void cmd_fit(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    LabelledData raw = read_labelled_csv(cfg.data_path, cfg.label_col);
    std::optional<ColumnScaling> scaling;
    MatrixXd x = std::move(raw.x);
    if (cfg.standardize) {
        auto st = standardize(x);
        x = std::move(st.x);
        scaling = std::move(st.scaling);
    }
    const Dataset data(std::move(x), raw.y);
    ModelConfig mc = cfg.model;
    mc.validate(data.n(), data.p());

    std::optional<ChainState> init;
    if (!cfg.init_path.empty()) {
        ProposalScales scales{mc.prop_sd_beta, mc.prop_sd_log_tau, mc.prop_sd_log_l};
        init = checkpoint_from_json(read_file(cfg.init_path), &scales);
        init->validate(data.n(), data.p());
        mc.prop_sd_beta = scales.beta;
        mc.prop_sd_log_tau = scales.log_tau;
        mc.prop_sd_log_l = scales.log_l;
    }

    log << "fitting " << cfg.chains << " chain(s) on n=" << data.n() << ", p=" << data.p() << '\n';
    std::vector<Trace> traces(static_cast<std::size_t>(cfg.chains));
    parallel_for(traces.size(), cfg.threads, [&](std::size_t k) {
        traces[k] = run_chain(data, mc, init, RngStream(mc.seed, k));
    });

    std::vector<std::string> outputs;
    for (std::size_t k = 0; k < traces.size(); ++k) {
        const std::string stem = "chain_" + std::to_string(k + 1);
        write_file_atomic(out_path(cfg, stem + ".trace.csv"), trace_to_csv(traces[k]));
        write_file_atomic(out_path(cfg, stem + ".state.json"),
                          checkpoint_to_json(traces[k].final_state, traces[k].final_scales));
        outputs.push_back(stem + ".trace.csv");
        outputs.push_back(stem + ".state.json");
    }
    const PosteriorSummary summary = summarize(traces);
    const ColumnScaling* sc = scaling ? &*scaling : nullptr;
    write_file_atomic(out_path(cfg, "summary.csv"), summary_to_csv(summary, raw.covariate_names, sc));
    write_file_atomic(out_path(cfg, "summary.json"), summary_to_json(summary, raw.covariate_names, sc));
    outputs.push_back("summary.csv");
    outputs.push_back("summary.json");
    write_manifest(cfg, {cfg.data_path}, seconds_since(t0), outputs);

    int n_sel = 0;
    for (bool s : summary.selected) n_sel += s;
    log << "selected " << n_sel << " of " << data.p() << " covariates; results in " << cfg.out_dir << '\n';
}

void cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    StudyConfig sc = cfg.study;
    sc.threads = cfg.threads;
    log << "simulating model " << sc.model_id << ", n=" << sc.n << ", " << sc.reps << " replication(s)\n";
    const StudyReport report = run_study(sc);
    write_file_atomic(out_path(cfg, "study_reps.csv"), study_reps_csv(report));
    write_file_atomic(out_path(cfg, "study_summary.json"), study_summary_json(report));
    write_file_atomic(out_path(cfg, "study_timing.csv"), study_timing_csv(report));
    write_manifest(cfg, {}, seconds_since(t0), {"study_reps.csv", "study_summary.json", "study_timing.csv"});
    log << "TP " << report.tp_mean << " (" << report.tp_sd << "), FP " << report.fp_mean << " ("
        << report.fp_sd << ")";
    if (report.failed > 0) log << ", " << report.failed << " failed replication(s)";
    log << '\n';
}

void cmd_diagnose(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Trace> traces;
    for (const auto& p : cfg.trace_paths) traces.push_back(read_trace_csv(p));
    for (std::size_t k = 1; k < traces.size(); ++k) {
        if (traces[k].p() != traces[0].p())
            throw ParseError("trace " + cfg.trace_paths[k] + " has a different coefficient count", 0, 0);
        if (traces[k].draws.size() != traces[0].draws.size())
            throw ParseError("trace " + cfg.trace_paths[k] + " has a different number of draws", 0, 0);
    }
    const ConvergenceReport r = diagnose_traces(traces, cfg.psrf_threshold);
    write_file_atomic(out_path(cfg, "psrf.csv"), psrf_table_csv(r));
    write_file_atomic(out_path(cfg, "accept_rates.csv"), accept_table_csv(r));
    write_manifest(cfg, cfg.trace_paths, seconds_since(t0), {"psrf.csv", "accept_rates.csv"});
    int fails = 0;
    for (const auto& c : r.psrf) fails += !c.pass;
    log << fails << " of " << r.psrf.size() << " parameters above PSRF " << cfg.psrf_threshold << '\n';
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian single-index logistic regression with variable selection"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> data, label_col, out_dir, init;
    std::optional<int> chains, model_id, reps;
    std::optional<long> iters, burn_in, thin, n, p;
    std::optional<std::uint64_t> seed;
    std::optional<Index> nystrom_m;
    std::optional<unsigned> threads;
    std::optional<double> psrf_threshold;
    std::optional<std::string> cov;
    bool no_standardize = false, do_standardize = false, psrf = false;
    std::vector<std::string> traces;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file; flags override its values");
        sub->add_option("--threads", threads, "worker threads");
        sub->add_option("--out", out_dir, "output directory");
    };
    auto sampler_flags = [&](CLI::App* sub) {
        sub->add_option("--iters", iters, "total sweeps per chain");
        sub->add_option("--burn-in", burn_in, "discarded sweeps (default: half of --iters)");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--nystrom-m", nystrom_m, "landmark count for the low-rank kernel");
        sub->add_option("--thin", thin, "keep a full-state snapshot every N retained sweeps");
    };

    auto* fit = app.add_subcommand("fit", "fit a labelled CSV dataset");
    common(fit);
    sampler_flags(fit);
    fit->add_option("--data", data, "CSV file with a header row");
    fit->add_option("--label-col", label_col, "name of the response column");
    fit->add_option("--chains", chains, "number of chains");
    fit->add_option("--init", init, "initial state checkpoint (JSON)");
    fit->add_flag("--no-standardize", no_standardize, "fit covariates on their raw scale");
    fit->add_flag("--psrf", psrf, "require a PSRF column (needs two or more chains)");

    auto* sim = app.add_subcommand("simulate", "run a simulation study");
    common(sim);
    sampler_flags(sim);
    sim->add_option("--model", model_id, "true model id (1, 2 or 3)");
    sim->add_option("--n", n, "sample size");
    sim->add_option("--p", p, "covariate count");
    sim->add_option("--cov", cov, "covariance design: identity or ar_half");
    sim->add_option("--reps", reps, "replications");
    sim->add_flag("--standardize", do_standardize, "standardize simulated covariates before fitting");

    auto* diag = app.add_subcommand("diagnose", "convergence diagnostics for trace files");
    common(diag);
    diag->add_option("traces", traces, "trace CSV files");
    diag->add_option("--psrf-threshold", psrf_threshold, "PSRF pass threshold");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (fit->parsed()) cfg.command = Command::fit;
        else if (sim->parsed()) cfg.command = Command::simulate;
        else cfg.command = Command::diagnose;

        if (!config_path.empty()) {
            require_file(config_path, "config file");
            apply_config_json(read_file(config_path), cfg);
        }
        auto both = [&](auto&& fn) {
            fn(cfg.model);
            fn(cfg.study.sampler);
        };
        if (iters) both([&](ModelConfig& m) {
            m.n_iter = *iters;
            if (!burn_in) m.burn_in = *iters / 2;
        });
        if (burn_in) both([&](ModelConfig& m) { m.burn_in = *burn_in; });
        if (seed) both([&](ModelConfig& m) { m.seed = *seed; });
        if (nystrom_m) both([&](ModelConfig& m) { m.nystrom_m = *nystrom_m; });
        if (thin) both([&](ModelConfig& m) { m.thin = *thin; });
        if (threads) cfg.threads = *threads;
        if (out_dir) cfg.out_dir = *out_dir;
        if (data) cfg.data_path = *data;
        if (label_col) cfg.label_col = *label_col;
        if (chains) cfg.chains = *chains;
        if (init) cfg.init_path = *init;
        if (no_standardize) cfg.standardize = false;
        if (psrf) cfg.want_psrf = true;
        if (model_id) cfg.study.model_id = *model_id;
        if (n) cfg.study.n = *n;
        if (p) cfg.study.p = *p;
        if (cov) cfg.study.cov_design = parse_cov_design(*cov);
        if (reps) cfg.study.reps = *reps;
        if (do_standardize) cfg.study.standardize = true;
        if (!traces.empty()) cfg.trace_paths = traces;
        if (psrf_threshold) cfg.psrf_threshold = *psrf_threshold;

        switch (cfg.command) {
            case Command::fit: cmd_fit(cfg, out); break;
            case Command::simulate: cmd_simulate(cfg, out); break;
            case Command::diagnose: cmd_diagnose(cfg, out); break;
        }
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace silm
