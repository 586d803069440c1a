#pragma once

#include "lmr/common.hpp"
#include "lmr/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

namespace lmr {

// --------------------------------------------------------------------------
// Gaussian smoothing kernel, truncated at +-4 tau_z and normalized to sum 1.

struct SmoothingKernel {
    Vector G;           // weights over offsets -J..J
    double tau_z = 0.0;

    int half_width() const { return (static_cast<int>(G.size()) - 1) / 2; }
    int support() const { return static_cast<int>(G.size()); }
    bool identity() const { return G.size() == 1; }

    // sum_tau G_tau^2, the fast-noise variance reduction factor
    double sq_sum() const { return G.squaredNorm(); }

    static SmoothingKernel gaussian(double tau_z) {
        require(tau_z >= 0.0, "SmoothingKernel: tau_z must be nonnegative");
        SmoothingKernel k;
        k.tau_z = tau_z;
        if (tau_z == 0.0) {
            k.G = Vector::Ones(1);
            return k;
        }
        const int J = static_cast<int>(std::ceil(4.0 * tau_z));
        k.G.resize(2 * J + 1);
        for (int j = -J; j <= J; ++j) k.G[j + J] = std::exp(-j * j / (2.0 * tau_z * tau_z));
        k.G /= k.G.sum();
        return k;
    }
};

// Row-wise circular convolution with the smoothing kernel.
inline Matrix smooth(const Matrix& series, const SmoothingKernel& kernel) {
    require(kernel.support() <= series.cols(), "smooth: kernel support exceeds T");
    if (kernel.identity()) return series;
    Matrix out(series.rows(), series.cols());
    for (int i = 0; i < series.rows(); ++i)
        out.row(i) = circ_conv_centered(series.row(i).transpose(), kernel.G).transpose();
    return out;
}

// C_ij = (1/T) sum_t s_i s_j - (1/T) sum_t s_i * (1/T) sum_t s_j
inline Matrix covariance(const Matrix& s_bar) {
    require(s_bar.cols() >= 2, "covariance: need T >= 2");
    const double T = static_cast<double>(s_bar.cols());
    Vector mean = s_bar.rowwise().mean();
    Matrix centered = s_bar.colwise() - mean;
    Matrix C = centered * centered.transpose() / T;
    return 0.5 * (C + C.transpose());
}

// Eigenvectors of the K largest eigenvalues, rows scaled to norm sqrt(N),
// descending eigenvalue order, sign fixed by the largest-magnitude entry.
inline Matrix top_modes(const Matrix& C, int K, Vector* eigenvalues = nullptr) {
    const int N = static_cast<int>(C.rows());
    require(C.cols() == N, "top_modes: C must be square");
    require(K <= N, "top_modes: K must not exceed N");
    Eigen::SelfAdjointEigenSolver<Matrix> es(C);
    require(es.info() == Eigen::Success, "top_modes: eigensolver failed");
    Matrix v(K, N);
    if (eigenvalues) eigenvalues->resize(K);
    const double scale = std::sqrt(static_cast<double>(N));
    for (int k = 0; k < K; ++k) {
        Vector col = es.eigenvectors().col(N - 1 - k);  // solver sorts ascending
        Index imax;
        col.cwiseAbs().maxCoeff(&imax);
        if (col[imax] < 0.0) col = -col;
        v.row(k) = (scale * col).transpose();
        if (eigenvalues) (*eigenvalues)[k] = es.eigenvalues()[N - 1 - k];
    }
    return v;
}

// --------------------------------------------------------------------------
// Alignment of inferred modes to ground truth (permutation + sign).

struct Alignment {
    std::vector<int> permutation;  // aligned row k = raw row permutation[k]
    std::vector<int> signs;        // +-1 applied after permuting
};

namespace detail {

// O(K^3) assignment maximizing the total score (rows -> columns).
inline std::vector<int> hungarian_max(const Matrix& score) {
    const int n = static_cast<int>(score.rows());
    Matrix cost = Matrix::Constant(n, n, score.maxCoeff()) - score;
    // Jonker-style shortest augmenting path on the cost matrix.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = -1;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
                if (minv[j] < delta) { delta = minv[j]; j1 = j; }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_of_col(n);
    for (int j = 1; j <= n; ++j) row_of_col[j - 1] = p[j] - 1;
    // invert: assignment[row] = col; we want perm[k] = raw row for target k
    std::vector<int> perm(n);
    for (int j = 0; j < n; ++j) perm[j] = row_of_col[j];
    return perm;
}

}  // namespace detail

// Resolve the eigenvector permutation/sign ambiguity against reference modes:
// maximize sum_k |<v^(perm(k)), e^(k)>| (exhaustive for K <= 4), then flip
// signs so every aligned row has nonnegative overlap with its reference.
inline std::pair<Matrix, Alignment> align(const Matrix& v, const Matrix& e) {
    const int K = static_cast<int>(v.rows());
    require(e.rows() == K && e.cols() == v.cols(), "align: shape mismatch");
    Matrix overlap = v * e.transpose();  // overlap(raw, ref)

    std::vector<int> best(K);
    if (K <= 4) {
        std::vector<int> perm(K);
        std::iota(perm.begin(), perm.end(), 0);
        double best_score = -1.0;
        std::vector<int> p = perm;
        std::sort(p.begin(), p.end());
        do {
            double score = 0.0;
            for (int k = 0; k < K; ++k) score += std::abs(overlap(p[k], k));
            if (score > best_score) { best_score = score; best = p; }
        } while (std::next_permutation(p.begin(), p.end()));
    } else {
        best = detail::hungarian_max(overlap.cwiseAbs().transpose());
    }

    Alignment a;
    a.permutation = best;
    a.signs.resize(K);
    Matrix out(K, v.cols());
    for (int k = 0; k < K; ++k) {
        const int raw = best[k];
        a.signs[k] = overlap(raw, k) >= 0.0 ? 1 : -1;
        out.row(k) = a.signs[k] * v.row(raw);
    }
    return {out, a};
}

// y_t^(k) = (1/N) sum_i v_i^(k) s_{i,t}
inline Matrix project(const Matrix& v, const Matrix& s) {
    require(v.cols() == s.rows(), "project: shape mismatch");
    return v * s / static_cast<double>(s.rows());
}

// eps^(k,k') = (1/T) sum_t (y - x)^(k)_t (y - x)^(k')_t
inline Matrix epsilon_empirical(const Matrix& y, const Matrix& x) {
    require(y.rows() == x.rows() && y.cols() == x.cols(), "epsilon_empirical: shape mismatch");
    Matrix d = y - x;
    Matrix eps = d * d.transpose() / static_cast<double>(y.cols());
    return 0.5 * (eps + eps.transpose());
}

// rho^(k,k') = (1/2N) sum_i (v - e)^(k)_i (v - e)^(k')_i
inline Matrix rho_empirical(const Matrix& v_aligned, const Matrix& e) {
    require(v_aligned.rows() == e.rows() && v_aligned.cols() == e.cols(),
            "rho_empirical: shape mismatch");
    Matrix d = v_aligned - e;
    Matrix rho = d * d.transpose() / (2.0 * static_cast<double>(e.cols()));
    return 0.5 * (rho + rho.transpose());
}

// --------------------------------------------------------------------------
// Full pipeline

struct PipelineOptions {
    // Eq. 11 projects the raw data; theory comparisons project the smoothed
    // data instead (see run notes). Both are kept available.
    bool project_smoothed = false;
};

struct RecoveryResult {
    Matrix v;        // K x N aligned inferred modes, row norms sqrt(N)
    Matrix y;        // K x T projected trajectories
    Matrix eps_emp;  // K x K trajectory error (vs the mean latent signal)
    Matrix rho_emp;  // K x K mode error
    Alignment alignment;
    // intermediates
    Matrix smoothed;      // N x T smoothed data
    Matrix cov;           // N x N covariance
    Vector eigenvalues;   // top-K eigenvalues, descending
    Matrix v_unaligned;   // modes before permutation/sign fixing
};

// smooth -> covariance -> top modes -> align -> project(raw) -> eps, rho.
inline RecoveryResult run_pca_pipeline(const Dataset& dataset, const SmoothingKernel& kernel,
                                       const PipelineOptions& opt = {}) {
    dataset.validate();
    RecoveryResult r;
    r.smoothed = smooth(dataset.s, kernel);
    r.cov = covariance(r.smoothed);
    r.v_unaligned = top_modes(r.cov, dataset.dims.K, &r.eigenvalues);
    auto [aligned, alignment] = align(r.v_unaligned, dataset.truth.modes.e);
    r.v = std::move(aligned);
    r.alignment = std::move(alignment);
    r.y = project(r.v, opt.project_smoothed ? r.smoothed : dataset.s);
    r.eps_emp = epsilon_empirical(r.y, dataset.truth.signal.x);
    r.rho_emp = rho_empirical(r.v, dataset.truth.modes.e);
    return r;
}

}  // namespace lmr
