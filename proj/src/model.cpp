#include "silm/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace silm {

Dataset::Dataset(MatrixXd x, VectorXd y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.rows() < 2) throw InvalidArgument("dataset needs at least 2 samples");
    if (x_.cols() < 1) throw InvalidArgument("dataset needs at least 1 covariate");
    if (y_.size() != x_.rows()) throw InvalidArgument("x and y have different sample counts");
    if (!x_.allFinite()) throw InvalidArgument("covariate matrix has non-finite entries");
    for (Index i = 0; i < y_.size(); ++i) {
        if (y_[i] != 1.0 && y_[i] != -1.0)
            throw InvalidArgument("response " + std::to_string(i) + " is not -1 or +1");
    }
}

double ModelConfig::a_sigma_at(Index j) const {
    if (a_sigma.empty()) return 0.5;
    return a_sigma.size() == 1 ? a_sigma[0] : a_sigma.at(static_cast<std::size_t>(j));
}

double ModelConfig::b_sigma_at(Index j) const {
    if (b_sigma.empty()) return 0.5;
    return b_sigma.size() == 1 ? b_sigma[0] : b_sigma.at(static_cast<std::size_t>(j));
}

void ModelConfig::validate(Index n, Index p) const {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw InvalidArgument(msg);
    };
    require(c > 0.0 && c < 1.0, "spike ratio c must lie in (0, 1)");
    for (const auto* v : {&a_sigma, &b_sigma}) {
        require(v->empty() || v->size() == 1 || v->size() == static_cast<std::size_t>(p),
                "a_sigma/b_sigma must have 1 or p entries");
        for (double s : *v) require(s > 0.0, "a_sigma/b_sigma entries must be positive");
    }
    require(a_tau > 0 && b_tau > 0 && a_l > 0 && b_l > 0 && a_pi > 0 && b_pi > 0,
            "all prior shape/scale parameters must be positive");
    require(prop_sd_beta > 0 && prop_sd_log_tau > 0 && prop_sd_log_l > 0,
            "proposal standard deviations must be positive");
    require(target_accept > 0 && target_accept < 1, "target acceptance must lie in (0, 1)");
    require(n_iter >= 1, "n_iter must be positive");
    require(burn_in >= 0 && burn_in < n_iter, "burn_in must satisfy 0 <= burn_in < n_iter");
    require(thin >= 0, "thin must be non-negative");
    require(nystrom_reg_ratio >= 0, "nystrom regularization must be non-negative");
    if (nystrom_m) require(*nystrom_m >= 1 && *nystrom_m <= n, "nystrom_m must satisfy 1 <= m <= n");
}

void ChainState::validate(Index n, Index p) const {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw InvalidArgument(msg);
    };
    require(beta.size() == p && delta.size() == p && sigma_beta.size() == p && pi.size() == p,
            "state vectors must have length p");
    require(g.size() == n && omega.size() == n, "state vectors must have length n");
    require(std::abs(beta.norm() - 1.0) <= 1e-10, "beta must have unit norm");
    require((omega.array() > 0).all(), "omega entries must be positive");
    require((sigma_beta.array() > 0).all(), "sigma_beta entries must be positive");
    require((pi.array() > 0).all() && (pi.array() < 1).all(), "pi entries must lie in (0, 1)");
    require(((delta.array() == 0) || (delta.array() == 1)).all(), "delta entries must be 0 or 1");
    require(tau > 0 && l > 0, "tau and l must be positive");
    require(g.allFinite(), "g must be finite");
}

StandardizedMatrix standardize(const MatrixXd& raw) {
    const Index n = raw.rows();
    if (n < 2) throw InvalidArgument("standardize needs at least 2 rows");
    StandardizedMatrix out{raw, {VectorXd(raw.cols()), VectorXd(raw.cols())}};
    for (Index j = 0; j < raw.cols(); ++j) {
        const double mean = raw.col(j).mean();
        const double ss = (raw.col(j).array() - mean).square().sum();
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (!(sd > 0.0) || sd <= 1e-14 * std::max(1.0, std::abs(mean)))
            throw ConstantColumnError(static_cast<std::size_t>(j));
        out.x.col(j) = (raw.col(j).array() - mean) / sd;
        out.scaling.mean[j] = mean;
        out.scaling.sd[j] = sd;
    }
    return out;
}

VectorXd encode_labels(std::span<const double> raw) {
    std::set<double> distinct(raw.begin(), raw.end());
    if (distinct.size() > 2)
        throw LabelCodingError("labels take more than two distinct values");
    const bool zero_one = std::all_of(distinct.begin(), distinct.end(),
                                      [](double v) { return v == 0.0 || v == 1.0; });
    const bool plus_minus = std::all_of(distinct.begin(), distinct.end(),
                                        [](double v) { return v == -1.0 || v == 1.0; });
    if (!zero_one && !plus_minus)
        throw LabelCodingError("labels must be coded {0,1} or {-1,+1}");
    VectorXd y(static_cast<Index>(raw.size()));
    for (std::size_t i = 0; i < raw.size(); ++i)
        y[static_cast<Index>(i)] = (raw[i] == 0.0) ? -1.0 : raw[i];
    return y;
}

VectorXd projections(const MatrixXd& x, const VectorXd& beta) {
    if (x.cols() != beta.size()) throw InvalidArgument("beta length does not match covariates");
    VectorXd z = x * beta;
    if (!z.allFinite()) throw InvalidArgument("non-finite projection values");
    return z;
}

MatrixXd gram_from_projections(const VectorXd& z, double tau, double l) {
    if (!(tau > 0.0) || !(l > 0.0)) throw InvalidArgument("kernel needs tau > 0 and l > 0");
    if (!z.allFinite()) throw InvalidArgument("non-finite projection values");
    const Index n = z.size();
    MatrixXd k(n, n);
    const double inv_l = 1.0 / l;
    for (Index j = 0; j < n; ++j) {
        k(j, j) = tau;
        for (Index i = j + 1; i < n; ++i) {
            const double d = z[i] - z[j];
            const double v = tau * std::exp(-d * d * inv_l);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

MatrixXd gram_matrix(const MatrixXd& x, const VectorXd& beta, double tau, double l) {
    return gram_from_projections(projections(x, beta), tau, l);
}

double spike_slab_logdensity(double beta_j, int delta_j, double sigma_j, double c) {
    if (!(sigma_j > 0.0)) throw InvalidArgument("slab variance must be positive");
    if (!(c > 0.0 && c < 1.0)) throw InvalidArgument("spike ratio must lie in (0, 1)");
    if (delta_j != 0 && delta_j != 1) throw InvalidArgument("delta must be 0 or 1");
    const double var = (delta_j == 1 ? 1.0 : c) * sigma_j;
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * beta_j * beta_j / var;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            fields.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    fields.push_back(field);
    for (auto& f : fields) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = (b == std::string::npos) ? std::string{} : f.substr(b, e - b + 1);
    }
    return fields;
}

bool is_missing(const std::string& f) {
    std::string lower;
    for (char ch : f) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    return lower.empty() || lower == "na" || lower == "nan" || lower == "null";
}

}  // namespace

CsvTable read_numeric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path, 0, 0);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": missing header row", 0, 0);
    CsvTable table;
    table.header = split_csv_line(line);
    const std::size_t ncol = table.header.size();

    std::vector<double> cells;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++row;
        const auto fields = split_csv_line(line);
        if (fields.size() != ncol)
            throw ParseError(path + ": row " + std::to_string(row) + " has " +
                                 std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(ncol),
                             row, 0);
        for (std::size_t j = 0; j < ncol; ++j) {
            if (is_missing(fields[j]))
                throw ParseError(path + ": missing value at row " + std::to_string(row) +
                                     ", column '" + table.header[j] + "'",
                                 row, j + 1);
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(fields[j], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != fields[j].size() || !std::isfinite(v))
                throw ParseError(path + ": non-numeric value '" + fields[j] + "' at row " +
                                     std::to_string(row) + ", column '" + table.header[j] + "'",
                                 row, j + 1);
            cells.push_back(v);
        }
    }
    table.values.resize(static_cast<Index>(row), static_cast<Index>(ncol));
    for (std::size_t r = 0; r < row; ++r)
        for (std::size_t j = 0; j < ncol; ++j)
            table.values(static_cast<Index>(r), static_cast<Index>(j)) = cells[r * ncol + j];
    return table;
}

LabelledData read_labelled_csv(const std::string& path, const std::string& label_column) {
    CsvTable table = read_numeric_csv(path);
    const auto it = std::find(table.header.begin(), table.header.end(), label_column);
    if (it == table.header.end())
        throw ParseError(path + ": no column named '" + label_column + "'", 0, 0);
    const auto label_idx = static_cast<Index>(it - table.header.begin());

    LabelledData out;
    const Index p = table.values.cols() - 1;
    out.x.resize(table.values.rows(), p);
    Index k = 0;
    for (Index j = 0; j < table.values.cols(); ++j) {
        if (j == label_idx) continue;
        out.x.col(k++) = table.values.col(j);
        out.covariate_names.push_back(table.header[static_cast<std::size_t>(j)]);
    }
    const VectorXd raw_y = table.values.col(label_idx);
    out.y = encode_labels(std::span<const double>(raw_y.data(), static_cast<std::size_t>(raw_y.size())));
    return out;
}

}  // namespace silm
