#include "silm/pdlinalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "silm/randdist.hpp"

namespace silm {

namespace {

double max_asymmetry(const MatrixXd& a) {
    return (a - a.transpose()).cwiseAbs().maxCoeff();
}

bool try_cholesky(const MatrixXd& a, double jitter, MatrixXd& lower) {
    MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    Eigen::LLT<MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) return false;
    lower = llt.matrixL();
    return lower.diagonal().minCoeff() > 0.0 && lower.allFinite();
}

}  // namespace

PDFactor factor_pd(const MatrixXd& a, double base_jitter, double max_jitter) {
    if (a.rows() != a.cols()) throw InvalidArgument("factor_pd needs a square matrix");
    if (base_jitter < 0.0) throw InvalidArgument("base jitter must be non-negative");
    if (a.size() == 0) return {};
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (!a.allFinite() || max_asymmetry(a) > 1e-10 * scale)
        throw InvalidArgument("factor_pd needs a finite symmetric matrix");

    const double mean_diag = a.diagonal().mean();
    const double cap = max_jitter >= 0.0 ? max_jitter : 1e-2 * std::max(mean_diag, 0.0);
    double jitter = base_jitter;
    PDFactor out;
    while (true) {
        if (try_cholesky(a, jitter, out.factor)) {
            out.jitter_used = jitter;
            out.logdet = 2.0 * out.factor.diagonal().array().log().sum();
            return out;
        }
        const double next = jitter > 0.0 ? 10.0 * jitter : 1e-12 * std::max(mean_diag, 0.0);
        if (!(next > 0.0) || next > cap) {
            std::ostringstream msg;
            msg << "matrix is not positive definite after jitter " << jitter;
            throw SingularMatrixError(msg.str(), jitter);
        }
        jitter = next;
    }
}

MatrixXd solve_pd(const PDFactor& f, const MatrixXd& b) {
    if (b.rows() != f.size())
        throw InvalidArgument("solve_pd: right-hand side has " + std::to_string(b.rows()) +
                              " rows, factor has " + std::to_string(f.size()));
    const auto lower = f.factor.triangularView<Eigen::Lower>();
    MatrixXd x = lower.solve(b);
    lower.transpose().solveInPlace(x);
    return x;
}

namespace {

Eigen::SelfAdjointEigenSolver<MatrixXd> symmetric_eigen(const MatrixXd& s) {
    if (s.rows() != s.cols()) throw InvalidArgument("psd_project needs a square matrix");
    const MatrixXd sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw Error("eigen-decomposition failed");
    return es;
}

}  // namespace

MatrixXd psd_project(const MatrixXd& s) {
    if (s.size() == 0) return s;
    const auto es = symmetric_eigen(s);
    const VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
    const MatrixXd& u = es.eigenvectors();
    MatrixXd out = u * clipped.asDiagonal() * u.transpose();
    return 0.5 * (out + out.transpose());
}

MatrixXd psd_root(const MatrixXd& s) {
    if (s.size() == 0) return s;
    const auto es = symmetric_eigen(s);
    const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

MatrixXd NystromFactor::dense_surrogate() const {
    return c * solve_pd(w_factor, c.transpose());
}

std::vector<Index> sample_landmarks(Index n, Index m, RngStream& rng) {
    if (m < 1 || m > n) throw InvalidArgument("landmark count must satisfy 1 <= m <= n");
    std::vector<Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Index{0});
    // Partial Fisher-Yates: the first m slots end up a uniform m-subset.
    for (Index i = 0; i < m; ++i) {
        const Index j = i + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(m));
    return pool;
}

NystromFactor nystrom_from_landmarks(const KernelColumnSource& source, Index n,
                                     std::vector<Index> landmarks, double reg) {
    const auto m = static_cast<Index>(landmarks.size());
    if (m < 1 || m > n) throw InvalidArgument("landmark count must satisfy 1 <= m <= n");
    if (reg < 0.0) throw InvalidArgument("nystrom regularizer must be non-negative");
    std::vector<Index> sorted = landmarks;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() || sorted.front() < 0 ||
        sorted.back() >= n)
        throw InvalidArgument("landmark indices must be distinct and lie in [0, n)");

    NystromFactor f;
    f.c.resize(n, m);
    for (Index k = 0; k < m; ++k) {
        VectorXd col = source(landmarks[static_cast<std::size_t>(k)]);
        if (col.size() != n) throw InvalidArgument("kernel column has wrong length");
        f.c.col(k) = col;
    }
    f.w.resize(m, m);
    for (Index a = 0; a < m; ++a)
        for (Index b = 0; b < m; ++b) f.w(a, b) = f.c(landmarks[static_cast<std::size_t>(a)], b);
    f.w = 0.5 * (f.w + f.w.transpose());
    f.reg = reg;
    f.landmark_indices = std::move(landmarks);
    MatrixXd w_reg = f.w;
    w_reg.diagonal().array() += reg;
    f.w_factor = factor_pd(w_reg);
    return f;
}

NystromFactor nystrom_build(const KernelColumnSource& source, Index n, Index m, RngStream& rng,
                            double reg) {
    if (m > n) throw InvalidArgument("nystrom_build: m exceeds n");
    return nystrom_from_landmarks(source, n, sample_landmarks(n, m, rng), reg);
}

NystromSystem::NystromSystem(const NystromFactor& f, const VectorXd& omega)
    : f_(&f), omega_(omega) {
    if (omega.size() != f.n()) throw InvalidArgument("omega length does not match kernel size");
    if (!(omega.array() > 0.0).all()) throw InvalidArgument("omega entries must be positive");
    // Work with B = L_W^{-1} C^T so that K~ = B^T B. The inner matrix
    // I + B Omega B^T has eigenvalues >= 1, which keeps the determinant
    // lemma accurate even when W is nearly singular.
    b_ = f.w_factor.factor.triangularView<Eigen::Lower>().solve(f.c.transpose());
    MatrixXd inner = b_ * omega.asDiagonal() * b_.transpose();
    inner.diagonal().array() += 1.0;
    inner = 0.5 * (inner + inner.transpose());
    inner_ = factor_pd(inner);
}

MatrixXd NystromSystem::apply_inverse(const MatrixXd& b) const {
    if (b.rows() != f_->n()) throw InvalidArgument("apply_inverse: dimension mismatch");
    const MatrixXd omega_b = omega_.asDiagonal() * b;
    return omega_b - omega_.asDiagonal() * (b_.transpose() * solve_pd(inner_, b_ * omega_b));
}

double NystromSystem::logdet() const { return -omega_.array().log().sum() + inner_.logdet; }

VectorXd nystrom_apply_inverse(const NystromFactor& f, const VectorXd& omega, const VectorXd& v) {
    return NystromSystem(f, omega).apply_inverse(v);
}

double nystrom_logdet(const NystromFactor& f, const VectorXd& omega) {
    return NystromSystem(f, omega).logdet();
}

}  // namespace silm
