#pragma once

#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "silm/errors.hpp"

namespace silm {

class RngStream;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Cholesky factor of A + jitter_used * I.
struct PDFactor {
    MatrixXd factor;  // lower triangular
    double logdet = 0.0;
    double jitter_used = 0.0;

    Index size() const noexcept { return factor.rows(); }
};

/// Factors A + jitter * I, starting from base_jitter and growing the jitter
/// tenfold after each failed attempt. When base_jitter is zero the first
/// escalation step is 1e-12 * mean(diag(A)). Gives up once the jitter would
/// exceed max_jitter; a negative max_jitter means 1e-2 * mean(diag(A)).
PDFactor factor_pd(const MatrixXd& a, double base_jitter = 0.0, double max_jitter = -1.0);

/// Solves (A + jitter I) X = B using the factor.
MatrixXd solve_pd(const PDFactor& f, const MatrixXd& b);

/// Frobenius-nearest PSD matrix: U max(Lambda, 0) U^T of the symmetrized input.
MatrixXd psd_project(const MatrixXd& s);

/// Square root R with R R^T = psd_project(s).
MatrixXd psd_root(const MatrixXd& s);

/// Returns column j of an n x n kernel matrix.
using KernelColumnSource = std::function<VectorXd(Index)>;

/// Nystrom surrogate K~ = C (W + reg I)^{-1} C^T from m sampled columns.
struct NystromFactor {
    MatrixXd c;                         // n x m
    MatrixXd w;                         // m x m, unregularized
    std::vector<Index> landmark_indices;
    double reg = 0.0;
    PDFactor w_factor;                  // factor of W + reg I

    Index n() const noexcept { return c.rows(); }
    Index m() const noexcept { return c.cols(); }
    /// Forms K~ densely; for tests and diagnostics only.
    MatrixXd dense_surrogate() const;
};

/// m distinct indices drawn uniformly without replacement from [0, n).
std::vector<Index> sample_landmarks(Index n, Index m, RngStream& rng);

NystromFactor nystrom_from_landmarks(const KernelColumnSource& source, Index n,
                                     std::vector<Index> landmarks, double reg);

NystromFactor nystrom_build(const KernelColumnSource& source, Index n, Index m, RngStream& rng,
                            double reg);

/// (K~ + Omega^{-1}) factored through the Woodbury identity. Holds the m x m
/// inner factor of W + reg I + C^T Omega C so several solves share it.
class NystromSystem {
public:
    NystromSystem(const NystromFactor& f, const VectorXd& omega);

    /// (K~ + Omega^{-1})^{-1} B, column by column.
    MatrixXd apply_inverse(const MatrixXd& b) const;
    /// log det(K~ + Omega^{-1}) via the matrix-determinant lemma.
    double logdet() const;

private:
    const NystromFactor* f_;
    VectorXd omega_;
    MatrixXd b_;
    PDFactor inner_;
};

VectorXd nystrom_apply_inverse(const NystromFactor& f, const VectorXd& omega, const VectorXd& v);

double nystrom_logdet(const NystromFactor& f, const VectorXd& omega);

}  // namespace silm
