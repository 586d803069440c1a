#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lmr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Validation failures (bad shapes, bad parameters, malformed configs).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (singular matrices, non-convergence, indefinite covariances).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// I/O failures.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

// Problem dimensions. alpha = T/N is the aspect ratio held fixed in the
// double large-size limit; r is its inverse.
struct Dims {
    int N = 0;  // components
    int T = 0;  // time steps
    int K = 0;  // latent dimension
    int S = 1;  // samples per experiment

    Dims() = default;
    Dims(int N_, int T_, int K_, int S_ = 1) : N(N_), T(T_), K(K_), S(S_) {
        require(N > 0 && T > 0 && K > 0 && S > 0, "Dims: all of N, T, K, S must be positive");
        require(K <= N && K <= T, "Dims: K must not exceed min(N, T)");
    }

    double alpha() const { return static_cast<double>(T) / static_cast<double>(N); }
    double r() const { return static_cast<double>(N) / static_cast<double>(T); }
};

// Positive modulo for circular time indexing.
inline int wrap(int t, int T) {
    int m = t % T;
    return m < 0 ? m + T : m;
}

}  // namespace lmr
