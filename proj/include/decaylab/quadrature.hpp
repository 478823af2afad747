#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "decaylab/error.hpp"
#include "decaylab/operator_model.hpp"

namespace decaylab {

struct QuadratureConfig {
    /// Absolute tolerance.  Callers that integrate against an exponential
    /// envelope scale it by the envelope at the interval start.
    double abs_tol = 1e-10;
    double rel_tol = 1e-13;
    int max_subdivisions = 400;
};

struct QuadratureResult {
    Vector value;
    double error = 0.0;
    int evaluations = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for nodes 1, 3, 5 and the centre.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    Vector value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod_15(F& f, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    Vector fc = f(centre);
    Vector kronrod = kKronrodWeights[7] * fc;
    Vector gauss = kGaussWeights[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kKronrodNodes[static_cast<std::size_t>(j)];
        Vector f1 = f(centre - dx);
        Vector f2 = f(centre + dx);
        kronrod += kKronrodWeights[static_cast<std::size_t>(j)] * (f1 + f2);
        if (j % 2 == 1) gauss += kGaussWeights[static_cast<std::size_t>(j / 2)] * (f1 + f2);
    }
    kronrod *= half;
    gauss *= half;
    const double error = (kronrod - gauss).cwiseAbs().maxCoeff();
    return {a, b, std::move(kronrod), error};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of a vector-valued
/// integrand over [a, b].  Throws QuadratureFailure when the subdivision
/// budget runs out before max(abs_tol, rel_tol*|I|) is met.
template <class F>
QuadratureResult integrate_adaptive(F&& f, Index dim, double a, double b, double abs_tol, double rel_tol,
                                    int max_subdivisions) {
    QuadratureResult out;
    if (a == b) {
        out.value = Vector::Zero(dim);
        return out;
    }
    std::priority_queue<detail::Panel> panels;
    detail::Panel first = detail::gauss_kronrod_15(f, a, b);
    out.evaluations = 15;
    Vector total = first.value;
    double total_error = first.error;
    panels.push(std::move(first));

    int subdivisions = 0;
    while (total_error > std::max(abs_tol, rel_tol * total.cwiseAbs().maxCoeff())) {
        if (!std::isfinite(total_error))
            throw Error(ErrorCode::QuadratureFailure, "integrand is not finite on the interval");
        if (subdivisions >= max_subdivisions)
            throw Error(ErrorCode::QuadratureFailure,
                        "no convergence on [" + std::to_string(a) + ", " + std::to_string(b) +
                            "]: error estimate " + std::to_string(total_error));
        detail::Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        detail::Panel left = detail::gauss_kronrod_15(f, worst.a, mid);
        detail::Panel right = detail::gauss_kronrod_15(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        panels.push(std::move(left));
        panels.push(std::move(right));
        ++subdivisions;
    }
    // Re-sum to shed the drift of the running updates.
    total.setZero(dim);
    total_error = 0.0;
    while (!panels.empty()) {
        total += panels.top().value;
        total_error += panels.top().error;
        panels.pop();
    }
    out.value = std::move(total);
    out.error = total_error;
    return out;
}

}  // namespace decaylab
