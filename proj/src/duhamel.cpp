#include "decaylab/duhamel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "decaylab/error.hpp"

namespace decaylab {

namespace {

Vector pack(const PhasePair& x) {
    Vector out(2 * x.size());
    out << x.u, x.v;
    return out;
}

PhasePair unpack(const Vector& packed, Index offset, Index n) {
    return {packed.segment(offset, n), packed.segment(offset + n, n)};
}

void check_grid(std::span<const double> grid) {
    if (grid.size() < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least two nodes");
    if (grid.front() != 0.0) throw Error(ErrorCode::InvalidArgument, "grid must start at t = 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw Error(ErrorCode::InvalidArgument, "grid must be strictly increasing");
}

// Length tau of the W_- tail beyond which e^{-gap tau}(1 + tau) < tol / 10.
double tail_length(double gap, double tol) {
    const double target = tol / 10.0;
    double tau = 0.0;
    for (int i = 0; i < 200; ++i) tau = (std::log(1.0 / target) + std::log1p(tau)) / gap;
    while (std::exp(-gap * tau) * (1.0 + tau) >= target) tau *= 1.1;
    return tau;
}

PhasePair hermite(const PhasePair& y0, const PhasePair& d0, const PhasePair& y1, const PhasePair& d1, double h,
                  double theta) {
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + theta;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return {h00 * y0.u + h10 * h * d0.u + h01 * y1.u + h11 * h * d1.u,
            h00 * y0.v + h10 * h * d0.v + h01 * y1.v + h11 * h * d1.v};
}

// (W, g) -> W' = (v, g - 2 delta v - A u).
PhasePair system_derivative(const OperatorSpec& spec, const PhasePair& w, const Vector& g) {
    return {w.v, g - 2.0 * spec.delta() * w.v - spec.eigenvalues().cwiseProduct(w.u)};
}

}  // namespace

std::vector<double> uniform_grid(double t_end, std::size_t intervals) {
    if (!(t_end > 0.0) || intervals == 0) throw Error(ErrorCode::InvalidArgument, "uniform grid needs t_end > 0");
    std::vector<double> grid(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i)
        grid[i] = t_end * static_cast<double>(i) / static_cast<double>(intervals);
    grid.back() = t_end;
    return grid;
}

std::size_t SpecialSolution::node_at_or_before(double t) const {
    if (t < 0.0) throw Error(ErrorCode::InvalidArgument, "special solution is defined for t >= 0");
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    return static_cast<std::size_t>(std::distance(times_.begin(), it)) - 1;
}

PhasePair SpecialSolution::eval(double t) const {
    const std::size_t j = node_at_or_before(t);
    const double t0 = times_[j];
    PhasePair out = propagate(*spec_, states_[j], t - t0);
    if (t == t0 || forcing_.K_g == 0.0) return out;

    const Index n = spec_->size();
    const std::vector<char> all(rates_->size(), 1);
    auto integrand = [&](double s) { return pack(propagate_impulse(*spec_, *rates_, forcing_.eval(s), t - s, all)); };
    const double tol = quad_.abs_tol * forcing_.K_g * std::exp(-gamma0_ * t0) * (t - t0);
    const auto result = integrate_adaptive(integrand, 2 * n, t0, t, tol, quad_.rel_tol, quad_.max_subdivisions);
    out += unpack(result.value, 0, n);
    return out;
}

PhasePair SpecialSolution::interpolate(double t) const {
    const std::size_t j = node_at_or_before(t);
    if (j + 1 >= times_.size()) return eval(t);
    const double h = times_[j + 1] - times_[j];
    const PhasePair d0 = system_derivative(*spec_, states_[j], forcing_at_nodes_[j]);
    const PhasePair d1 = system_derivative(*spec_, states_[j + 1], forcing_at_nodes_[j + 1]);
    return hermite(states_[j], d0, states_[j + 1], d1, h, (t - times_[j]) / h);
}

SpecialSolution special_solution(const OperatorSpec& spec, const DecayRateSet& rates, const ForcingSampler& g,
                                 const QuadratureConfig& quad, std::span<const double> grid) {
    check_grid(grid);
    if (!(g.gamma0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma0 must be positive");
    if (!(g.K_g >= 0.0)) throw Error(ErrorCode::InvalidArgument, "K_g must be nonnegative");
    const AlphaBeta ab = alpha_beta(rates, g.gamma0);

    SpecialSolution out;
    out.spec_ = std::make_shared<const OperatorSpec>(spec);
    out.rates_ = std::make_shared<const DecayRateSet>(rates);
    out.forcing_ = g;
    out.quad_ = quad;
    out.gamma0_ = g.gamma0;
    out.alpha0_ = ab.alpha0;
    out.beta0_ = ab.beta0;
    out.grid_size_ = grid.size();

    const Index n = spec.size();
    if (g.K_g == 0.0) {
        out.times_.assign(grid.begin(), grid.end());
        out.states_.assign(grid.size(), PhasePair::zero(n));
        out.forcing_at_nodes_.assign(grid.size(), Vector::Zero(n));
        return out;
    }

    const std::vector<char> minus = rates_below(rates, g.gamma0);
    const std::vector<char> plus = rates_above(rates, g.gamma0);
    const bool has_minus = ab.alpha0.has_value();

    std::vector<double> times(grid.begin(), grid.end());
    if (has_minus) {
        const double tau = tail_length(g.gamma0 - *ab.alpha0, quad.abs_tol);
        const double step = std::max(times.back() - times[times.size() - 2], 0.5);
        const double count = std::ceil(tau / step);
        if (count > 1e5)
            throw Error(ErrorCode::QuadratureFailure,
                        "tail of W_- too long: gamma0 - alpha0 = " + std::to_string(g.gamma0 - *ab.alpha0) +
                            " is too small for the requested accuracy");
        const double t_end = times.back();
        for (int i = 1; i <= static_cast<int>(count); ++i) times.push_back(t_end + tau * i / count);
    }

    std::size_t breaches = 0;
    double worst_ratio = 0.0;
    auto sample = [&](double s) {
        Vector value = g.eval(s);
        if (value.size() != n) throw Error(ErrorCode::DimensionMismatch, "forcing returned wrong length");
        const double ratio = value.norm() / (g.K_g * std::exp(-g.gamma0 * s));
        worst_ratio = std::max(worst_ratio, ratio);
        if (ratio > 1.05) ++breaches;
        return value;
    };

    const std::size_t nodes = times.size();
    std::vector<PhasePair> w_plus(nodes, PhasePair::zero(n));
    std::vector<PhasePair> j_minus(nodes - 1, PhasePair::zero(n));
    for (std::size_t j = 0; j + 1 < nodes; ++j) {
        const double a = times[j];
        const double b = times[j + 1];
        auto integrand = [&](double s) {
            const Vector gs = sample(s);
            Vector packed(4 * n);
            packed << pack(propagate_impulse(spec, rates, gs, b - s, plus)),
                pack(propagate_impulse(spec, rates, gs, a - s, minus));
            return packed;
        };
        const double tol = quad.abs_tol * g.K_g * std::exp(-g.gamma0 * a) * (b - a);
        const auto result = integrate_adaptive(integrand, 4 * n, a, b, tol, quad.rel_tol, quad.max_subdivisions);
        w_plus[j + 1] = project_mask(spec, rates, propagate(spec, w_plus[j], b - a), plus) + unpack(result.value, 0, n);
        j_minus[j] = unpack(result.value, 2 * n, n);
    }

    std::vector<PhasePair> w_minus(nodes, PhasePair::zero(n));
    if (has_minus) {
        for (std::size_t j = nodes - 1; j-- > 0;) {
            const double h = times[j + 1] - times[j];
            w_minus[j] = project_mask(spec, rates, propagate(spec, w_minus[j + 1], -h), minus) - j_minus[j];
        }
    }

    out.states_.reserve(nodes);
    out.forcing_at_nodes_.reserve(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
        out.states_.push_back(w_plus[j] + w_minus[j]);
        out.forcing_at_nodes_.push_back(sample(times[j]));
    }
    out.times_ = std::move(times);

    double gamma_hat = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const PhasePair& w = out.states_[j];
        const double size = w.v.norm() + domain_norm(spec, w.u);
        gamma_hat = std::max(gamma_hat, size * std::exp(g.gamma0 * out.times_[j]) / g.K_g);
    }
    out.measured_Gamma0_ = gamma_hat;
    out.envelope_breaches_ = breaches;
    out.max_envelope_ratio_ = worst_ratio;
    return out;
}

std::vector<PhasePair> solve_nonhomogeneous_ivp(const OperatorSpec& spec, const ForcingSampler& g,
                                                const PhasePair& initial, std::span<const double> t_grid,
                                                const QuadratureConfig& quad) {
    check_grid(t_grid);
    const Index n = spec.size();
    if (initial.size() != n) throw Error(ErrorCode::DimensionMismatch, "initial pair has wrong length");
    const DecayRateSet rates = decay_rate_set(spec);
    const std::vector<char> all(rates.size(), 1);

    std::vector<PhasePair> out;
    out.reserve(t_grid.size());
    out.push_back(initial);
    for (std::size_t j = 0; j + 1 < t_grid.size(); ++j) {
        const double a = t_grid[j];
        const double b = t_grid[j + 1];
        PhasePair next = propagate(spec, out.back(), b - a);
        if (g.eval) {
            auto integrand = [&](double s) { return pack(propagate_impulse(spec, rates, g.eval(s), b - s, all)); };
            const double scale = g.K_g > 0.0 ? g.K_g * std::exp(-g.gamma0 * a) : 1.0;
            const auto result =
                integrate_adaptive(integrand, 2 * n, a, b, quad.abs_tol * scale * (b - a), quad.rel_tol,
                                   quad.max_subdivisions);
            next += unpack(result.value, 0, n);
        }
        out.push_back(std::move(next));
    }
    return out;
}

double special_solution_residual(const OperatorSpec& spec, const SpecialSolution& w, const ForcingSampler& g,
                                 std::span<const double> times, double step) {
    double worst = 0.0;
    for (double t : times) {
        if (t - 2.0 * step < 0.0) continue;
        const PhasePair fd = (1.0 / (12.0 * step)) * (w.eval(t - 2 * step) - 8.0 * w.eval(t - step) +
                                                      8.0 * w.eval(t + step) - w.eval(t + 2 * step));
        const PhasePair exact = system_derivative(spec, w.eval(t), g.eval(t));
        const PhasePair diff = fd - exact;
        worst = std::max(worst, std::sqrt(diff.u.squaredNorm() + diff.v.squaredNorm()));
    }
    return worst;
}

double probe_gamma0(const OperatorSpec& spec, const DecayRateSet& rates, double gamma0,
                    std::span<const double> grid, const QuadratureConfig& quad) {
    double worst = 0.0;
    for (Index k = 0; k < spec.size(); ++k) {
        if (k > 0 && spec.eigenvalue(k) == spec.eigenvalue(k - 1)) continue;
        ForcingSampler probe;
        probe.K_g = 1.0;
        probe.gamma0 = gamma0;
        probe.eval = [k, gamma0, n = spec.size()](double t) {
            Vector g = Vector::Zero(n);
            g[k] = std::exp(-gamma0 * t);
            return g;
        };
        worst = std::max(worst, special_solution(spec, rates, probe, quad, grid).measured_Gamma0());
    }
    return worst;
}

}  // namespace decaylab
