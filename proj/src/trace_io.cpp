#include "silm/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"
#include "silm/errors.hpp"

namespace silm {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw Error("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot move output into place at " + path + ": " + ec.message());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i)
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return out.str();
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
    const Index p = trace.p();
    out << "# " << kTraceSchema << " p=" << p << '\n';
    out << "iter";
    for (Index j = 1; j <= p; ++j) out << ",beta_" << j;
    for (Index j = 1; j <= p; ++j) out << ",delta_" << j;
    out << ",tau,l,acc_beta,acc_tau,acc_l\n";
    for (const auto& d : trace.draws) {
        out << d.iter;
        for (Index j = 0; j < p; ++j) out << ',' << format_double(d.beta[j]);
        for (Index j = 0; j < p; ++j) out << ',' << d.delta[j];
        out << ',' << format_double(d.tau) << ',' << format_double(d.l) << ',' << int(d.acc_beta)
            << ',' << int(d.acc_tau) << ',' << int(d.acc_l) << '\n';
    }
}

std::string trace_to_csv(const Trace& trace) {
    std::ostringstream out;
    write_trace_csv(out, trace);
    return out.str();
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <typename T>
T parse_field(const std::string& s, std::size_t row, std::size_t col) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("trace field '" + s + "' at row " + std::to_string(row) + ", column " +
                             std::to_string(col) + " is not numeric",
                         row, col);
    return v;
}

}  // namespace

Trace parse_trace_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind(std::string("# ") + kTraceSchema + " p=", 0) != 0)
        throw ParseError("missing or unsupported trace schema line", 0, 0);
    const std::string p_text = line.substr(std::string("# ").size() + std::string(kTraceSchema).size() + 3);
    const long p = parse_field<long>(p_text, 0, 0);
    if (p < 1) throw ParseError("trace schema line declares no coefficients", 0, 0);

    if (!std::getline(in, line)) throw ParseError("trace has no column header", 1, 0);
    std::string expected = "iter";
    for (long j = 1; j <= p; ++j) expected += ",beta_" + std::to_string(j);
    for (long j = 1; j <= p; ++j) expected += ",delta_" + std::to_string(j);
    expected += ",tau,l,acc_beta,acc_tau,acc_l";
    if (line != expected) throw ParseError("trace column header does not match schema", 1, 0);

    const std::size_t width = static_cast<std::size_t>(2 * p + 6);
    Trace trace;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != width)
            throw ParseError("trace row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                                 " fields, expected " + std::to_string(width),
                             row, 0);
        DrawRecord d;
        d.iter = parse_field<long>(f[0], row, 1);
        d.beta.resize(p);
        d.delta.resize(p);
        for (long j = 0; j < p; ++j) {
            d.beta[j] = parse_field<double>(f[1 + j], row, 2 + j);
            d.delta[j] = parse_field<int>(f[1 + p + j], row, 2 + p + j);
        }
        d.tau = parse_field<double>(f[1 + 2 * p], row, 2 + 2 * p);
        d.l = parse_field<double>(f[2 + 2 * p], row, 3 + 2 * p);
        d.acc_beta = parse_field<int>(f[3 + 2 * p], row, 4 + 2 * p) != 0;
        d.acc_tau = parse_field<int>(f[4 + 2 * p], row, 5 + 2 * p) != 0;
        d.acc_l = parse_field<int>(f[5 + 2 * p], row, 6 + 2 * p) != 0;
        trace.accept_counts.beta += d.acc_beta;
        trace.accept_counts.tau += d.acc_tau;
        trace.accept_counts.l += d.acc_l;
        trace.draws.push_back(std::move(d));
    }
    if (!trace.draws.empty()) {
        trace.burn_in = trace.draws.front().iter;
        trace.iter_total = trace.draws.back().iter + 1;
    }
    return trace;
}

Trace read_trace_csv(const std::string& path) { return parse_trace_csv(read_file(path)); }

namespace {

nlohmann::json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd json_vec(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

std::string checkpoint_to_json(const ChainState& s, const ProposalScales& scales) {
    nlohmann::json j;
    j["beta"] = vec_json(s.beta);
    j["g"] = vec_json(s.g);
    j["omega"] = vec_json(s.omega);
    j["delta"] = std::vector<int>(s.delta.data(), s.delta.data() + s.delta.size());
    j["sigma_beta"] = vec_json(s.sigma_beta);
    j["pi"] = vec_json(s.pi);
    j["tau"] = s.tau;
    j["l"] = s.l;
    j["proposal_scales"] = {{"beta", scales.beta}, {"log_tau", scales.log_tau}, {"log_l", scales.log_l}};
    return j.dump(1) + "\n";
}

ChainState checkpoint_from_json(const std::string& text, ProposalScales* scales) {
    try {
        const auto j = nlohmann::json::parse(text);
        ChainState s;
        s.beta = json_vec(j.at("beta"));
        s.g = json_vec(j.at("g"));
        s.omega = json_vec(j.at("omega"));
        const auto d = j.at("delta").get<std::vector<int>>();
        s.delta = Eigen::Map<const VectorXi>(d.data(), static_cast<Index>(d.size()));
        s.sigma_beta = json_vec(j.at("sigma_beta"));
        s.pi = json_vec(j.at("pi"));
        s.tau = j.at("tau").get<double>();
        s.l = j.at("l").get<double>();
        if (scales && j.contains("proposal_scales")) {
            const auto& ps = j["proposal_scales"];
            scales->beta = ps.at("beta").get<double>();
            scales->log_tau = ps.at("log_tau").get<double>();
            scales->log_l = ps.at("log_l").get<double>();
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0, 0);
    }
}

}  // namespace silm
