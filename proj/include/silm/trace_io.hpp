#pragma once

#include <iosfwd>
#include <string>

#include "silm/sampler.hpp"

namespace silm {

inline constexpr const char* kTraceSchema = "silm-trace v1";

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

std::string sha256_hex(const std::string& bytes);

/// One row per retained draw: iter, beta_1..p, delta_1..p, tau, l and the
/// three acceptance flags, under a "# silm-trace v1 p=<p>" header line.
void write_trace_csv(std::ostream& out, const Trace& trace);
std::string trace_to_csv(const Trace& trace);

/// Parses a trace written by write_trace_csv. Throws ParseError when the
/// schema line, column set or any field does not match.
Trace read_trace_csv(const std::string& path);
Trace parse_trace_csv(const std::string& text);

/// Full chain state plus proposal scales as JSON, for checkpoint/restart.
std::string checkpoint_to_json(const ChainState& state, const ProposalScales& scales);
ChainState checkpoint_from_json(const std::string& text, ProposalScales* scales = nullptr);

}  // namespace silm
