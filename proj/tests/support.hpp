#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "decaylab/linear_propagator.hpp"
#include "decaylab/operator_model.hpp"

namespace decaylab::testing {

/// Small deterministic generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    bool chance(double p) { return uniform(0.0, 1.0) < p; }

    Vector vector(Index n, double scale = 1.0) {
        Vector x(n);
        for (Index i = 0; i < n; ++i) x[i] = scale * normal();
        return x;
    }

    PhasePair pair(Index n, double scale = 1.0) { return {vector(n, scale), vector(n, scale)}; }

    /// Spectrum mixing kernel, overdamped, critical and underdamped modes,
    /// with occasional repeats.
    std::vector<double> spectrum(int n, double delta) {
        std::vector<double> eig;
        for (int k = 0; k < n; ++k) {
            const int pick = integer(0, 5);
            if (pick == 0) eig.push_back(0.0);
            else if (pick == 1) eig.push_back(delta * delta);
            else if (pick == 2 && !eig.empty()) eig.push_back(eig[static_cast<std::size_t>(integer(0, k - 1))]);
            else if (pick == 3) eig.push_back(uniform(0.01, 0.99) * delta * delta);
            else eig.push_back(uniform(1.01, 6.0) * delta * delta);
        }
        return eig;
    }

    /// Random symmetric nonnegative matrix with a rotated basis.
    Matrix matrix(const std::vector<double>& eig) {
        const auto n = static_cast<Index>(eig.size());
        Matrix g(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) g(i, j) = normal();
        const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
        Vector d(n);
        for (Index i = 0; i < n; ++i) d[i] = eig[static_cast<std::size_t>(i)];
        Matrix m = q * d.asDiagonal() * q.transpose();
        return 0.5 * (m + m.transpose());
    }

    OperatorSpec operator_spec(int max_n = 10) {
        const double delta = uniform(0.1, 2.0);
        return OperatorSpec::from_eigenvalues(delta, spectrum(integer(1, max_n), delta));
    }

private:
    std::mt19937_64 rng_;
};

/// exp(t M) for the first-order system of one mode, M = [[0, 1], [-lambda, -2 delta]].
inline PhasePair expm_propagate(const OperatorSpec& spec, const PhasePair& x, double t) {
    PhasePair out = PhasePair::zero(spec.size());
    for (Index k = 0; k < spec.size(); ++k) {
        Eigen::Matrix2d m;
        m << 0.0, 1.0, -spec.eigenvalue(k), -2.0 * spec.delta();
        const Eigen::Matrix2d e = (t * m).exp();
        out.u[k] = e(0, 0) * x.u[k] + e(0, 1) * x.v[k];
        out.v[k] = e(1, 0) * x.u[k] + e(1, 1) * x.v[k];
    }
    return out;
}

inline double max_abs_diff(const PhasePair& a, const PhasePair& b) {
    return std::max((a.u - b.u).cwiseAbs().maxCoeff(), (a.v - b.v).cwiseAbs().maxCoeff());
}

inline double max_abs(const PhasePair& a) { return std::max(a.u.cwiseAbs().maxCoeff(), a.v.cwiseAbs().maxCoeff()); }

}  // namespace decaylab::testing
