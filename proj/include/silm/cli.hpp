#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "silm/model.hpp"
#include "silm/simbench.hpp"

namespace silm {

inline constexpr const char* kVersion = "0.1.0";

enum class Command { fit, simulate, diagnose };

/// Everything one invocation needs. Built from an optional JSON config file
/// with command-line flags layered on top.
struct RunConfig {
    Command command = Command::fit;
    std::string out_dir = "silm-out";
    unsigned threads = 1;
    ModelConfig model;

    // fit
    std::string data_path;
    std::string label_col = "y";
    int chains = 1;
    bool standardize = true;
    bool want_psrf = false;
    std::string init_path;

    // simulate
    StudyConfig study;

    // diagnose
    std::vector<std::string> trace_paths;
    double psrf_threshold = 1.2;

    /// Checks paths, counts and the model block; creates out_dir.
    void validate() const;
};

/// Fills `cfg` from a JSON document with optional "model", "fit", "study"
/// and "diagnose" sections plus top-level "out" and "threads".
void apply_config_json(const std::string& text, RunConfig& cfg);

/// The effective configuration as canonical JSON (used for the manifest hash).
std::string config_to_json(const RunConfig& cfg);

void cmd_fit(const RunConfig& cfg, std::ostream& log);
void cmd_simulate(const RunConfig& cfg, std::ostream& log);
void cmd_diagnose(const RunConfig& cfg, std::ostream& log);

/// Parses arguments, runs the command and returns the process exit status:
/// 0 on success, 1 on a runtime error, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace silm
