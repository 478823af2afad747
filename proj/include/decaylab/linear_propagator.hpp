#pragma once

#include <string_view>
#include <vector>

#include "decaylab/operator_model.hpp"

namespace decaylab {

/// A point (u, u') of the energy space, in mode coordinates.
struct PhasePair {
    Vector u;
    Vector v;

    PhasePair() = default;
    PhasePair(Vector u_, Vector v_);
    static PhasePair zero(Index n) { return {Vector::Zero(n), Vector::Zero(n)}; }

    Index size() const noexcept { return u.size(); }
    bool all_finite() const { return u.allFinite() && v.allFinite(); }

    PhasePair& operator+=(const PhasePair& other);
    PhasePair& operator-=(const PhasePair& other);
    PhasePair& operator*=(double s);
};

PhasePair operator+(PhasePair a, const PhasePair& b);
PhasePair operator-(PhasePair a, const PhasePair& b);
PhasePair operator*(double s, PhasePair a);

/// |u|_{D(A^{1/2})} = (|u|^2 + |A^{1/2}u|^2)^{1/2}.
double domain_norm(const OperatorSpec& spec, const Vector& u);
/// (|u|^2 + |A^{1/2}u|^2 + |v|^2)^{1/2}.
double energy_norm(const OperatorSpec& spec, const PhasePair& x);

struct ModeState {
    double u = 0.0;
    double v = 0.0;
};

/// Closed-form solution of u'' + 2 delta u' + lambda u = 0 at time t (any
/// sign) for one mode.  `v` is the exact derivative.
ModeState propagate_mode(const RootPair& root, double u0, double u1, double t);

/// S(t): the homogeneous linear flow applied mode by mode.
PhasePair propagate(const OperatorSpec& spec, const PhasePair& state, double t);

/// Components of a state in the direct sum over the rate set; aligned with
/// `DecayRateSet::rates`.
struct ComponentSplit {
    std::vector<PhasePair> components;

    PhasePair sum() const;
};

ComponentSplit split_components(const OperatorSpec& spec, const DecayRateSet& rates, const PhasePair& state);

/// Sum of the components whose rate index is flagged in `mask`.
PhasePair project_mask(const OperatorSpec& spec, const DecayRateSet& rates, const PhasePair& state,
                       const std::vector<char>& mask);

/// Mask selecting rates strictly below (or strictly above) a threshold.
std::vector<char> rates_below(const DecayRateSet& rates, double threshold);
std::vector<char> rates_above(const DecayRateSet& rates, double threshold);

/// S(tau) P (0, g), with P the projection onto the rates flagged in `mask`.
PhasePair propagate_impulse(const OperatorSpec& spec, const DecayRateSet& rates, const Vector& g, double tau,
                            const std::vector<char>& mask);

enum class ProjectionMode { Pure, Fast, Slow };

/// Pure: component at r0.  Fast: rates above r0.  Slow: rates at or below r0.
PhasePair project(const OperatorSpec& spec, const DecayRateSet& rates, const PhasePair& state, double r0,
                  ProjectionMode mode);

enum class PairClass { Pure, Fast, Slow, Mixed, Zero };

std::string_view to_string(PairClass c) noexcept;

/// Relative-tolerance classification of a pair against r0.
PairClass classify_pair(const OperatorSpec& spec, const DecayRateSet& rates, const PhasePair& state, double r0,
                        double tol);

}  // namespace decaylab
