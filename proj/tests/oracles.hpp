#pragma once

// Test-only reference computations. Everything here is written independently
// of the library implementation paths it is used to check: plain loops and
// complex arithmetic, no calls into the modules under test.

#include <complex>
#include <random>

#include <Eigen/Dense>

namespace oracles {

inline std::mt19937& rng() {
    static std::mt19937 gen(20240613u);
    return gen;
}

inline double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng());
}

inline Eigen::VectorXcd random_complex_vector(int n, double scale = 1.0) {
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = std::complex<double>(uniform(-scale, scale), uniform(-scale, scale));
    return v;
}

inline Eigen::MatrixXcd random_hermitian(int n, double scale = 1.0) {
    Eigen::MatrixXcd A(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            A(r, c) = std::complex<double>(uniform(-scale, scale), uniform(-scale, scale));
        }
    }
    return 0.5 * (A + A.adjoint());
}

inline Eigen::MatrixXcd random_hermitian_psd(int n, double scale = 1.0) {
    const Eigen::MatrixXcd A = random_hermitian(n, scale);
    return A * A.adjoint() / static_cast<double>(n);
}

inline Eigen::MatrixXd random_symmetric(int n, double scale = 1.0) {
    Eigen::MatrixXd A(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) A(r, c) = uniform(-scale, scale);
    }
    return 0.5 * (A + A.transpose());
}

// Closed form of max tr(CX) s.t. tr(X) <= tau, X >= 0.
inline double trace_lp_optimum(const Eigen::MatrixXd& C, double tau) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
    return tau * std::max(0.0, es.eigenvalues().maxCoeff());
}

// Quadratic form a(q)^H M a(q) evaluated from scratch: per-antenna phases of a
// half-wavelength-style ULA steered by cos_theta.
inline double quadratic_form_reference(const Eigen::MatrixXcd& M, double cos_theta,
                                       double spacing_over_wavelength) {
    const int n = static_cast<int>(M.rows());
    Eigen::VectorXcd a(n);
    for (int r = 0; r < n; ++r) {
        a(r) = std::polar(1.0, 2.0 * M_PI * spacing_over_wavelength * r * cos_theta);
    }
    std::complex<double> acc(0.0, 0.0);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) acc += std::conj(a(r)) * M(r, c) * a(c);
    }
    return acc.real();
}

// Naive SINR straight from its definition; interference from GBS l uses that
// GBS's own channel toward the UAV.
inline double naive_sinr(bool type_two, const std::vector<Eigen::VectorXcd>& h_per_gbs,
                         int serving_m, int k,
                         const std::vector<std::vector<Eigen::MatrixXcd>>& W,
                         const std::vector<Eigen::MatrixXcd>& R, double sigma2) {
    const int M = static_cast<int>(W.size());
    const int K = static_cast<int>(W[0].size());
    auto quad = [](const Eigen::VectorXcd& h, const Eigen::MatrixXcd& X) {
        return (h.adjoint() * X * h).value().real();
    };
    double signal = 0.0;
    double interf = 0.0;
    for (int l = 0; l < M; ++l) {
        for (int i = 0; i < K; ++i) {
            const double t = quad(h_per_gbs[l], W[l][i]);
            if (l == serving_m && i == k) {
                signal = t;
            } else {
                interf += t;
            }
        }
        if (!type_two) interf += quad(h_per_gbs[l], R[l]);
    }
    return signal / (interf + sigma2);
}

inline Eigen::Vector2d central_difference(const std::function<double(const Eigen::Vector2d&)>& f,
                                          const Eigen::Vector2d& x, double step) {
    Eigen::Vector2d g;
    for (int i = 0; i < 2; ++i) {
        Eigen::Vector2d lo = x, hi = x;
        lo(i) -= step;
        hi(i) += step;
        g(i) = (f(hi) - f(lo)) / (2.0 * step);
    }
    return g;
}

}  // namespace oracles
