#include "decaylab/linear_propagator.hpp"

#include <cmath>

#include "decaylab/error.hpp"

namespace decaylab {

PhasePair::PhasePair(Vector u_, Vector v_) : u(std::move(u_)), v(std::move(v_)) {
    if (u.size() != v.size()) throw Error(ErrorCode::DimensionMismatch, "u and v lengths differ");
}

PhasePair& PhasePair::operator+=(const PhasePair& other) {
    u += other.u;
    v += other.v;
    return *this;
}

PhasePair& PhasePair::operator-=(const PhasePair& other) {
    u -= other.u;
    v -= other.v;
    return *this;
}

PhasePair& PhasePair::operator*=(double s) {
    u *= s;
    v *= s;
    return *this;
}

PhasePair operator+(PhasePair a, const PhasePair& b) { return a += b; }
PhasePair operator-(PhasePair a, const PhasePair& b) { return a -= b; }
PhasePair operator*(double s, PhasePair a) { return a *= s; }

namespace {

void check_dimension(const OperatorSpec& spec, const PhasePair& state) {
    if (state.u.size() != spec.size() || state.v.size() != spec.size())
        throw Error(ErrorCode::DimensionMismatch, "state has " + std::to_string(state.u.size()) +
                                                      " modes, operator has " + std::to_string(spec.size()));
}

// Coefficients of a real-split mode on its two eigenlines:
// (a, b) = c1 (1, -r1) + c2 (1, -r2).
std::pair<double, double> eigenline_coefficients(const RootPair& root, double a, double b) {
    const double gap = root.r2 - root.r1;
    return {(b + root.r2 * a) / gap, -(b + root.r1 * a) / gap};
}

}  // namespace

double domain_norm(const OperatorSpec& spec, const Vector& u) {
    double acc = 0.0;
    for (Index k = 0; k < u.size(); ++k) acc += (1.0 + spec.eigenvalue(k)) * u[k] * u[k];
    return std::sqrt(acc);
}

double energy_norm(const OperatorSpec& spec, const PhasePair& x) {
    check_dimension(spec, x);
    double acc = x.v.squaredNorm();
    for (Index k = 0; k < x.u.size(); ++k) acc += (1.0 + spec.eigenvalue(k)) * x.u[k] * x.u[k];
    return std::sqrt(acc);
}

ModeState propagate_mode(const RootPair& root, double u0, double u1, double t) {
    switch (root.kind) {
        case RootKind::Complex: {
            const double delta = root.r1;
            const double decay = std::exp(-delta * t);
            const double c = std::cos(root.phi * t);
            const double s = std::sin(root.phi * t);
            const double b = (u1 + delta * u0) / root.phi;
            const double u = decay * (u0 * c + b * s);
            const double v = -delta * u + decay * (-u0 * root.phi * s + b * root.phi * c);
            return {u, v};
        }
        case RootKind::Critical: {
            const double delta = root.r1;
            const double decay = std::exp(-delta * t);
            const double b = u1 + delta * u0;
            const double u = decay * (u0 + b * t);
            return {u, -delta * u + decay * b};
        }
        case RootKind::RealSplit: {
            const auto [c1, c2] = eigenline_coefficients(root, u0, u1);
            const double e1 = c1 * std::exp(-root.r1 * t);
            const double e2 = c2 * std::exp(-root.r2 * t);
            return {e1 + e2, -root.r1 * e1 - root.r2 * e2};
        }
    }
    return {};
}

PhasePair propagate(const OperatorSpec& spec, const PhasePair& state, double t) {
    check_dimension(spec, state);
    PhasePair out = PhasePair::zero(spec.size());
    for (Index k = 0; k < spec.size(); ++k) {
        const ModeState m = propagate_mode(spec.root(k), state.u[k], state.v[k], t);
        out.u[k] = m.u;
        out.v[k] = m.v;
    }
    return out;
}

PhasePair ComponentSplit::sum() const {
    PhasePair out = PhasePair::zero(components.empty() ? 0 : components.front().size());
    for (const auto& c : components) out += c;
    return out;
}

ComponentSplit split_components(const OperatorSpec& spec, const DecayRateSet& rates, const PhasePair& state) {
    check_dimension(spec, state);
    ComponentSplit out;
    out.components.assign(rates.size(), PhasePair::zero(spec.size()));
    for (Index k = 0; k < spec.size(); ++k) {
        const RootPair& root = spec.root(k);
        const auto [i1, i2] = rates.mode_rates[static_cast<std::size_t>(k)];
        if (root.kind == RootKind::RealSplit) {
            const auto [c1, c2] = eigenline_coefficients(root, state.u[k], state.v[k]);
            out.components[i1].u[k] = c1;
            out.components[i1].v[k] = -root.r1 * c1;
            out.components[i2].u[k] = c2;
            out.components[i2].v[k] = -root.r2 * c2;
        } else {
            out.components[i1].u[k] = state.u[k];
            out.components[i1].v[k] = state.v[k];
        }
    }
    return out;
}

PhasePair project_mask(const OperatorSpec& spec, const DecayRateSet& rates, const PhasePair& state,
                       const std::vector<char>& mask) {
    check_dimension(spec, state);
    PhasePair out = PhasePair::zero(spec.size());
    for (Index k = 0; k < spec.size(); ++k) {
        const RootPair& root = spec.root(k);
        const auto [i1, i2] = rates.mode_rates[static_cast<std::size_t>(k)];
        if (root.kind == RootKind::RealSplit) {
            const auto [c1, c2] = eigenline_coefficients(root, state.u[k], state.v[k]);
            if (mask[i1]) {
                out.u[k] += c1;
                out.v[k] -= root.r1 * c1;
            }
            if (mask[i2]) {
                out.u[k] += c2;
                out.v[k] -= root.r2 * c2;
            }
        } else if (mask[i1]) {
            out.u[k] = state.u[k];
            out.v[k] = state.v[k];
        }
    }
    return out;
}

std::vector<char> rates_below(const DecayRateSet& rates, double threshold) {
    std::vector<char> mask(rates.size(), 0);
    for (std::size_t i = 0; i < rates.size(); ++i) mask[i] = rates.rates[i] < threshold;
    return mask;
}

std::vector<char> rates_above(const DecayRateSet& rates, double threshold) {
    std::vector<char> mask(rates.size(), 0);
    for (std::size_t i = 0; i < rates.size(); ++i) mask[i] = rates.rates[i] > threshold;
    return mask;
}

PhasePair propagate_impulse(const OperatorSpec& spec, const DecayRateSet& rates, const Vector& g, double tau,
                            const std::vector<char>& mask) {
    PhasePair out = PhasePair::zero(spec.size());
    for (Index k = 0; k < spec.size(); ++k) {
        const double gk = g[k];
        if (gk == 0.0) continue;
        const RootPair& root = spec.root(k);
        const auto [i1, i2] = rates.mode_rates[static_cast<std::size_t>(k)];
        if (root.kind == RootKind::RealSplit) {
            const double c = gk / (root.r2 - root.r1);
            if (mask[i1]) {
                const double e = c * std::exp(-root.r1 * tau);
                out.u[k] += e;
                out.v[k] -= root.r1 * e;
            }
            if (mask[i2]) {
                const double e = -c * std::exp(-root.r2 * tau);
                out.u[k] += e;
                out.v[k] -= root.r2 * e;
            }
        } else if (mask[i1]) {
            const ModeState m = propagate_mode(root, 0.0, gk, tau);
            out.u[k] = m.u;
            out.v[k] = m.v;
        }
    }
    return out;
}

PhasePair project(const OperatorSpec& spec, const DecayRateSet& rates, const PhasePair& state, double r0,
                  ProjectionMode mode) {
    const std::size_t index = rates.index_of(r0);
    std::vector<char> mask(rates.size(), 0);
    for (std::size_t i = 0; i < rates.size(); ++i) {
        switch (mode) {
            case ProjectionMode::Pure: mask[i] = i == index; break;
            case ProjectionMode::Fast: mask[i] = i > index; break;
            case ProjectionMode::Slow: mask[i] = i <= index; break;
        }
    }
    return project_mask(spec, rates, state, mask);
}

std::string_view to_string(PairClass c) noexcept {
    switch (c) {
        case PairClass::Pure: return "pure";
        case PairClass::Fast: return "fast";
        case PairClass::Slow: return "slow";
        case PairClass::Mixed: return "mixed";
        case PairClass::Zero: return "zero";
    }
    return "unknown";
}

PairClass classify_pair(const OperatorSpec& spec, const DecayRateSet& rates, const PhasePair& state, double r0,
                        double tol) {
    const std::size_t index = rates.index_of(r0);
    const double norm = energy_norm(spec, state);
    if (norm <= tol) return PairClass::Zero;

    const ComponentSplit split = split_components(spec, rates, state);
    PhasePair below = PhasePair::zero(spec.size());
    PhasePair above = PhasePair::zero(spec.size());
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (i < index) below += split.components[i];
        else if (i > index) above += split.components[i];
    }
    const double below_rel = energy_norm(spec, below) / norm;
    const double above_rel = energy_norm(spec, above) / norm;
    const double at_rel = energy_norm(spec, split.components[index]) / norm;

    if (below_rel <= tol && above_rel <= tol) return PairClass::Pure;
    if (below_rel <= tol && at_rel <= tol) return PairClass::Fast;
    if (above_rel <= tol) return PairClass::Slow;
    return PairClass::Mixed;
}

}  // namespace decaylab
