#pragma once

#include "lmr/common.hpp"
#include "lmr/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <utility>
#include <vector>

namespace lmr {

// --------------------------------------------------------------------------
// Circular convolutions (all time indexing in this codebase is periodic).

// out[t] = sum_{tau=0..L-1} F[tau] * x[(t-tau) mod T]
inline Vector circ_conv_causal(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& F) {
    const int T = static_cast<int>(x.size());
    const int L = static_cast<int>(F.size());
    Vector out = Vector::Zero(T);
    for (int t = 0; t < T; ++t) {
        double acc = 0.0;
        for (int tau = 0; tau < L; ++tau) acc += F[tau] * x[wrap(t - tau, T)];
        out[t] = acc;
    }
    return out;
}

// Symmetric kernel with offsets -J..J stored in G[0..2J]; out[t] = sum_j G[j+J] x[(t-j) mod T]
inline Vector circ_conv_centered(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& G) {
    const int T = static_cast<int>(x.size());
    const int L = static_cast<int>(G.size());
    const int J = (L - 1) / 2;
    Vector out = Vector::Zero(T);
    for (int t = 0; t < T; ++t) {
        double acc = 0.0;
        for (int j = -J; j <= J; ++j) acc += G[j + J] * x[wrap(t - j, T)];
        out[t] = acc;
    }
    return out;
}

// --------------------------------------------------------------------------
// Latent signal

struct LatentSignal {
    Matrix x;           // K x T, each row centered over time
    Vector amplitudes;  // per-mode amplitude scale a^(k)

    int K() const { return static_cast<int>(x.rows()); }
    int T() const { return static_cast<int>(x.cols()); }
};

// Two-mode tilted infinity-shape profile used throughout the reference runs:
//   x^(1)_t = a1 (sin(2 pi t / T) + sin(4 pi t / T))
//   x^(2)_t = a2 (-sin(2 pi t / T) + sin(4 pi t / T)),  t = 1..T.
inline LatentSignal make_signal(const Dims& dims, double a1, double a2) {
    require(dims.K == 2, "make_signal: built-in profile requires K = 2");
    require(dims.T >= 4, "make_signal: need T >= 4");
    const int T = dims.T;
    LatentSignal sig;
    sig.x.resize(2, T);
    for (int j = 0; j < T; ++j) {
        const double t = static_cast<double>(j + 1);
        const double s1 = std::sin(2.0 * M_PI * t / T);
        const double s2 = std::sin(4.0 * M_PI * t / T);
        sig.x(0, j) = a1 * (s1 + s2);
        sig.x(1, j) = a2 * (-s1 + s2);
    }
    // Rows are centered analytically; remove the residual rounding offset.
    for (int k = 0; k < 2; ++k) sig.x.row(k).array() -= sig.x.row(k).mean();
    sig.amplitudes.resize(2);
    sig.amplitudes << a1, a2;
    return sig;
}

// Generic constructor for arbitrary K: rows are re-centered. Amplitudes
// default to the row standard deviations.
inline LatentSignal make_signal_from(Matrix x, Vector amplitudes = Vector()) {
    const int K = static_cast<int>(x.rows());
    require(K >= 1 && x.cols() >= 2, "make_signal_from: need a K x T matrix with T >= 2");
    for (int k = 0; k < K; ++k) x.row(k).array() -= x.row(k).mean();
    if (amplitudes.size() == 0) {
        amplitudes.resize(K);
        for (int k = 0; k < K; ++k)
            amplitudes[k] = std::sqrt(x.row(k).squaredNorm() / static_cast<double>(x.cols()));
    }
    require(amplitudes.size() == K, "make_signal_from: amplitude vector must have K entries");
    return LatentSignal{std::move(x), std::move(amplitudes)};
}

// --------------------------------------------------------------------------
// Latent modes

struct Modes {
    Matrix e;  // K x N, rows orthogonal with squared norm N

    int K() const { return static_cast<int>(e.rows()); }
    int N() const { return static_cast<int>(e.cols()); }
};

// K orthogonal directions from the uniform distribution on the sphere
// (Gaussian rows + modified Gram-Schmidt), scaled to squared norm N.
inline Modes sample_modes(const Dims& dims, std::uint64_t rng_seed) {
    require(dims.K <= dims.N, "sample_modes: K must not exceed N");
    const int K = dims.K, N = dims.N;
    RngStream rng(rng_seed);
    Matrix e(K, N);
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < N; ++i) e(k, i) = rng.gaussian();
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < k; ++l) e.row(k) -= e.row(k).dot(e.row(l)) * e.row(l);
        const double nrm = e.row(k).norm();
        require(nrm > 1e-12, "sample_modes: degenerate Gaussian draw");
        e.row(k) /= nrm;
    }
    e *= std::sqrt(static_cast<double>(N));
    return Modes{std::move(e)};
}

// --------------------------------------------------------------------------
// Sample-to-sample fluctuations

struct FluctuationSpec {
    Vector xi;      // per-mode standard deviations xi^(k) (absolute, signal units)
    Matrix Delta;   // T x T temporal correlation, unit diagonal, PSD
    double tau_xi = 0.0;  // correlation width used to build Delta (bookkeeping)

    bool zero() const { return xi.size() == 0 || xi.cwiseAbs().maxCoeff() == 0.0; }
};

// Gaussian correlation matrix Delta_{t1,t2} = exp(-d^2 / (2 tau^2)) with
// plain or circular distance. If indefinite beyond -1e-10, eigenvalues are
// clipped at zero; the clip magnitude is reported through *clip_magnitude.
inline Matrix build_gaussian_delta(int T, double tau_xi, bool periodic, double* clip_magnitude = nullptr) {
    require(T >= 1, "build_gaussian_delta: T must be positive");
    require(tau_xi > 0.0, "build_gaussian_delta: tau_xi must be positive");
    Matrix D(T, T);
    for (int t1 = 0; t1 < T; ++t1) {
        for (int t2 = 0; t2 < T; ++t2) {
            double d = std::abs(t1 - t2);
            if (periodic) d = std::min(d, T - d);
            D(t1, t2) = std::exp(-d * d / (2.0 * tau_xi * tau_xi));
        }
    }
    double clip = 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(D);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -1e-10) {
        Vector lam = es.eigenvalues().cwiseMax(0.0);
        clip = -min_eig;
        D = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
        D = 0.5 * (D + D.transpose());
    }
    if (clip_magnitude) *clip_magnitude = clip;
    return D;
}

// Factor Delta = V sqrt(lambda) so that (factor * g) has covariance Delta.
// Rejects spectra below -1e-10; clamps smaller round-off negatives to zero.
inline Matrix covariance_factor(const Matrix& Delta) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Delta);
    const double min_eig = es.eigenvalues().minCoeff();
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (min_eig < -1e-10 * scale)
        throw NumericalError("covariance_factor: matrix is not PSD (min eigenvalue " +
                             std::to_string(min_eig) + ")");
    Vector lam = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

// delta-x draw: row k = xi^(k) * factor(Delta) * g, rows independent across k.
inline Matrix sample_fluctuations_with_factor(const Matrix& factor, const Vector& xi, RngStream& rng) {
    const int T = static_cast<int>(factor.rows());
    const int K = static_cast<int>(xi.size());
    Matrix dx = Matrix::Zero(K, T);
    for (int k = 0; k < K; ++k) {
        if (xi[k] == 0.0) {
            // keep the stream layout independent of xi so seeds line up
            for (int t = 0; t < T; ++t) (void)rng.gaussian();
            continue;
        }
        Vector g(T);
        for (int t = 0; t < T; ++t) g[t] = rng.gaussian();
        dx.row(k) = (xi[k] * (factor * g)).transpose();
    }
    return dx;
}

inline Matrix sample_fluctuations(const FluctuationSpec& spec, const Dims& dims, std::uint64_t rng_seed) {
    require(static_cast<int>(spec.xi.size()) == dims.K, "sample_fluctuations: xi must have K entries");
    require(spec.Delta.rows() == dims.T && spec.Delta.cols() == dims.T,
            "sample_fluctuations: Delta must be T x T");
    RngStream rng(rng_seed);
    if (spec.zero()) return Matrix::Zero(dims.K, dims.T);
    const Matrix factor = covariance_factor(spec.Delta);
    return sample_fluctuations_with_factor(factor, spec.xi, rng);
}

// --------------------------------------------------------------------------
// Measurement convolution kernels

struct GammaPair {
    double shape = 0.0;
    double scale = 0.0;
};

struct KernelSpec {
    bool enabled = false;
    int L = 0;                // support length; 0 = auto from decay stats
    GammaPair gamma_rise;     // (k_r, theta_r)
    GammaPair gamma_decay;    // (k_d, theta_d)
    Vector F_mean;            // population mean kernel (filled on demand)
    Matrix Xi;                // population covariance of kernel fluctuations

    int support(int T) const {
        if (!enabled) return 1;
        int l = L;
        if (l <= 0) l = static_cast<int>(std::ceil(6.0 * gamma_decay.shape * gamma_decay.scale));
        return std::min(T, std::max(1, l));
    }

    void validate() const {
        if (!enabled) return;
        require(gamma_rise.shape > 0 && gamma_rise.scale > 0 && gamma_decay.shape > 0 &&
                    gamma_decay.scale > 0,
                "KernelSpec: Gamma shape/scale parameters must be positive");
    }
};

inline Vector kernel_curve(double rise, double decay, int L) {
    Vector F(L);
    for (int tau = 0; tau < L; ++tau)
        F[tau] = std::exp(-tau / decay) - std::exp(-tau / rise);
    return F;
}

struct KernelDraw {
    Matrix F;           // N x L per-component kernels F_tau + dF_{i,tau}
    Vector F_mean_emp;  // empirical mean over components
    Matrix Xi_emp;      // empirical covariance over components
};

// Draw per-component rise/decay pairs (redrawing until r < d), evaluate the
// double-exponential curve, and report the empirical first two moments.
inline KernelDraw sample_kernels(const KernelSpec& spec, const Dims& dims, std::uint64_t rng_seed) {
    spec.validate();
    require(spec.enabled, "sample_kernels: kernel model is disabled");
    const int L = spec.support(dims.T);
    const int N = dims.N;
    RngStream rng(rng_seed);
    KernelDraw out;
    out.F.resize(N, L);
    for (int i = 0; i < N; ++i) {
        double r, d;
        do {
            r = rng.gamma(spec.gamma_rise.shape, spec.gamma_rise.scale);
            d = rng.gamma(spec.gamma_decay.shape, spec.gamma_decay.scale);
        } while (!(r < d));
        out.F.row(i) = kernel_curve(r, d, L).transpose();
    }
    out.F_mean_emp = out.F.colwise().mean().transpose();
    Matrix centered = out.F.rowwise() - out.F_mean_emp.transpose();
    out.Xi_emp = centered.transpose() * centered / static_cast<double>(N);
    return out;
}

// Population mean/covariance of the kernel ensemble by Monte-Carlo.
inline void kernel_population_stats(KernelSpec& spec, int T, int n_draws = 200000,
                                    std::uint64_t rng_seed = 0xC0FFEE) {
    spec.validate();
    const int L = spec.support(T);
    RngStream rng(rng_seed);
    Vector mean = Vector::Zero(L);
    Matrix second = Matrix::Zero(L, L);
    for (int n = 0; n < n_draws; ++n) {
        double r, d;
        do {
            r = rng.gamma(spec.gamma_rise.shape, spec.gamma_rise.scale);
            d = rng.gamma(spec.gamma_decay.shape, spec.gamma_decay.scale);
        } while (!(r < d));
        Vector F = kernel_curve(r, d, L);
        mean += F;
        second.selfadjointView<Eigen::Lower>().rankUpdate(F);
    }
    mean /= n_draws;
    second = Matrix(second.selfadjointView<Eigen::Lower>()) / n_draws;
    spec.F_mean = mean;
    spec.Xi = second - mean * mean.transpose();
    spec.Xi = 0.5 * (spec.Xi + spec.Xi.transpose());
}

// --------------------------------------------------------------------------
// Fast measurement noise

struct NoiseSpec {
    Vector sigma;  // per-component standard deviations, >= 0

    static NoiseSpec uniform(int N, double sigma) {
        return NoiseSpec{Vector::Constant(N, sigma)};
    }
    void validate(int N) const {
        require(static_cast<int>(sigma.size()) == N, "NoiseSpec: sigma must have N entries");
        require(sigma.minCoeff() >= 0.0, "NoiseSpec: sigma entries must be nonnegative");
    }
};

// --------------------------------------------------------------------------
// Full generative specification and datasets

struct ModelSpec {
    Dims dims;
    LatentSignal signal;
    FluctuationSpec fluct;
    KernelSpec kernel;
    NoiseSpec noise;
    bool kernel_redraw_per_sample = false;  // default: probes fixed per experiment

    void validate() const {
        require(signal.K() == dims.K && signal.T() == dims.T, "ModelSpec: signal shape mismatch");
        if (!fluct.zero()) {
            require(static_cast<int>(fluct.xi.size()) == dims.K, "ModelSpec: xi must have K entries");
            require(fluct.Delta.rows() == dims.T && fluct.Delta.cols() == dims.T,
                    "ModelSpec: Delta must be T x T");
        }
        kernel.validate();
        require(kernel.support(dims.T) <= dims.T, "ModelSpec: kernel support exceeds T");
        noise.validate(dims.N);
    }
};

struct GroundTruth {
    LatentSignal signal;  // mean latent signal
    Modes modes;
    Matrix delta_x;  // K x T realized (or sample-averaged) signal fluctuation
    Matrix delta_F;  // N x L realized kernel fluctuations (empty when disabled)
    Vector F_mean_emp;  // empirical mean kernel of this experiment (empty when disabled)
};

struct Dataset {
    Matrix s;  // N x T raw (or sample-averaged) data
    Dims dims;
    ModelSpec meta;
    GroundTruth truth;
    int samples_averaged = 1;

    void validate() const {
        require(s.allFinite(), "Dataset: data contains NaN/Inf");
    }
};

namespace detail {

// s_{i,t} = sum_tau F_{i,tau} sum_k (x+dx)^(k)_{t-tau} e_i^(k) + z_{i,t},
// t - tau periodic. F may be a single shared row or one row per component.
inline Matrix assemble_sample(const Matrix& e, const Matrix& x_total, const Matrix* F_rows,
                              const Vector& sigma, RngStream& z_rng) {
    const int N = static_cast<int>(e.cols());
    const int T = static_cast<int>(x_total.cols());
    Matrix U = e.transpose() * x_total;  // N x T latent drive per component
    Matrix s(N, T);
    if (F_rows == nullptr) {
        s = U;  // instantaneous probes: F = delta_{tau,0}
    } else {
        for (int i = 0; i < N; ++i)
            s.row(i) = circ_conv_causal(U.row(i).transpose(), F_rows->row(i).transpose()).transpose();
    }
    for (int i = 0; i < N; ++i) {
        if (sigma[i] == 0.0) continue;
        for (int t = 0; t < T; ++t) s(i, t) += sigma[i] * z_rng.gaussian();
    }
    return s;
}

}  // namespace detail

// One sample (S=1) of the generative model, everything drawn from rng_seed.
inline Dataset generate_sample(const ModelSpec& spec, std::uint64_t rng_seed) {
    spec.validate();
    const Dims& d = spec.dims;

    Dataset ds;
    ds.dims = d;
    ds.meta = spec;
    ds.truth.signal = spec.signal;
    ds.truth.modes = sample_modes(d, derive_seed(rng_seed, 1));
    ds.truth.delta_x = sample_fluctuations(spec.fluct, d, derive_seed(rng_seed, 2));

    const Matrix* F_rows = nullptr;
    Matrix F;
    if (spec.kernel.enabled) {
        KernelDraw kd = sample_kernels(spec.kernel, d, derive_seed(rng_seed, 3));
        F = std::move(kd.F);
        ds.truth.F_mean_emp = kd.F_mean_emp;
        ds.truth.delta_F = F.rowwise() - kd.F_mean_emp.transpose();
        F_rows = &F;
    }

    RngStream z_rng(derive_seed(rng_seed, 4));
    Matrix x_total = spec.signal.x + ds.truth.delta_x;
    ds.s = detail::assemble_sample(ds.truth.modes.e, x_total, F_rows, spec.noise.sigma, z_rng);
    ds.validate();
    return ds;
}

// Entrywise mean over samples of one experiment. All inputs must share the
// spec and the realized modes/signal; only delta-x, delta-F and z may differ.
inline Dataset average_samples(const std::vector<Dataset>& sets) {
    require(!sets.empty(), "average_samples: empty sample list");
    const Dataset& first = sets.front();
    Dataset out = first;
    for (size_t n = 1; n < sets.size(); ++n) {
        const Dataset& ds = sets[n];
        require(ds.dims.N == first.dims.N && ds.dims.T == first.dims.T && ds.dims.K == first.dims.K,
                "average_samples: dimension mismatch");
        require(ds.truth.modes.e == first.truth.modes.e,
                "average_samples: samples do not share ground-truth modes");
        require(ds.truth.signal.x == first.truth.signal.x,
                "average_samples: samples do not share the latent signal");
        out.s += ds.s;
        out.truth.delta_x += ds.truth.delta_x;
        if (out.truth.delta_F.size() > 0 && ds.truth.delta_F.size() > 0)
            out.truth.delta_F += ds.truth.delta_F;
    }
    const double S = static_cast<double>(sets.size());
    out.s /= S;
    out.truth.delta_x /= S;
    if (out.truth.delta_F.size() > 0) out.truth.delta_F /= S;
    out.samples_averaged = static_cast<int>(sets.size());
    return out;
}

// S-sample experiment: modes, signal and (by default) probe kernels are fixed
// across samples; delta-x and z are redrawn per sample. Returns the average.
inline Dataset generate_experiment(const ModelSpec& spec, std::uint64_t rng_seed) {
    spec.validate();
    const Dims& d = spec.dims;
    if (d.S == 1) return generate_sample(spec, rng_seed);

    Modes modes = sample_modes(d, derive_seed(rng_seed, 1));
    Matrix F_shared;
    Vector F_mean_shared;
    Matrix dF_shared;
    if (spec.kernel.enabled && !spec.kernel_redraw_per_sample) {
        KernelDraw kd = sample_kernels(spec.kernel, d, derive_seed(rng_seed, 3));
        F_shared = std::move(kd.F);
        F_mean_shared = kd.F_mean_emp;
        dF_shared = F_shared.rowwise() - F_mean_shared.transpose();
    }

    std::vector<Dataset> samples;
    samples.reserve(d.S);
    for (int n = 0; n < d.S; ++n) {
        Dataset ds;
        ds.dims = d;
        ds.meta = spec;
        ds.truth.signal = spec.signal;
        ds.truth.modes = modes;
        ds.truth.delta_x = sample_fluctuations(spec.fluct, d, derive_seed(rng_seed, 2, n));

        const Matrix* F_rows = nullptr;
        Matrix F_local;
        if (spec.kernel.enabled) {
            if (spec.kernel_redraw_per_sample) {
                KernelDraw kd = sample_kernels(spec.kernel, d, derive_seed(rng_seed, 3, n));
                F_local = std::move(kd.F);
                ds.truth.F_mean_emp = kd.F_mean_emp;
                ds.truth.delta_F = F_local.rowwise() - kd.F_mean_emp.transpose();
                F_rows = &F_local;
            } else {
                ds.truth.F_mean_emp = F_mean_shared;
                ds.truth.delta_F = dF_shared;
                F_rows = &F_shared;
            }
        }

        RngStream z_rng(derive_seed(rng_seed, 4, n));
        Matrix x_total = spec.signal.x + ds.truth.delta_x;
        ds.s = detail::assemble_sample(modes.e, x_total, F_rows, spec.noise.sigma, z_rng);
        samples.push_back(std::move(ds));
    }
    Dataset avg = average_samples(samples);
    avg.validate();
    return avg;
}

}  // namespace lmr
