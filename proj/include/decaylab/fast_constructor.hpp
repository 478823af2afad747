#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decaylab/duhamel.hpp"
#include "decaylab/linear_propagator.hpp"
#include "decaylab/operator_model.hpp"
#include "decaylab/quadrature.hpp"
#include "decaylab/semilinear_integrator.hpp"

namespace decaylab {

/// Target of a fast-solution construction: the r0-pure profile v, an
/// r0-fast perturbation z, and the rates used by the contraction.
struct ProfileSpec {
    double r0 = 0.0;
    PhasePair v_pair;
    PhasePair z_pair;
    /// Bound on |v1| + |v0|_D + |z1| + |z0|_D.
    double epsilon0 = 0.0;
    double s0 = 0.0;
    /// (1 + p) s0.
    double gamma0 = 0.0;
};

struct S0Choice {
    double s0 = 0.0;
    double gamma0 = 0.0;
};

/// gamma0 = (r0 + min{(1+p) r0, beta0}) / 2 and s0 = gamma0 / (1+p), with
/// gamma0 moved toward r0 by bisection if it lands on a rate.
S0Choice choose_s0(double r0, double p, const DecayRateSet& rates);

/// ProfileSpec with s0/gamma0 from `choose_s0`.  epsilon0 <= 0 takes the
/// exact size of the pairs.  Throws InvalidArgument if v is not r0-pure or
/// z is not r0-fast.
ProfileSpec make_profile(const OperatorSpec& spec, const DecayRateSet& rates, double r0, double p, PhasePair v_pair,
                         PhasePair z_pair, double epsilon0 = 0.0);

struct ConstructOptions {
    /// Stop when the sup distance between successive iterates is below this.
    double tol = 1e-10;
    int max_iter = 30;
    /// Run even when a smallness condition fails.
    bool override_smallness = false;
    /// Starting iterate psi_0(t) (positions); zero when empty.
    std::function<Vector(double)> psi0;
    QuadratureConfig quad;
    /// Used to re-integrate from u_pair; tol defaults to 1e-10.
    IntegratorOptions integrator;
    bool reintegrate = true;
};

struct FastSolution {
    PhasePair w_pair;
    PhasePair u_pair;
    /// Semilinear trajectory from u_pair over the grid horizon.
    std::optional<Trajectory> trajectory;
    int iterations = 0;
    bool converged = false;
    /// sup |psi_{n+1} - psi_n|_D for each iteration.
    std::vector<double> distances;
    /// Largest ratio of successive distances.
    double contraction_factor = 0.0;
    /// 2 L Gamma0 (K1 + K2 + 1)^p eps0^p.
    double theoretical_factor = 0.0;
    double K1 = 0.0;
    double K2 = 0.0;
    double Gamma0 = 0.0;
    double L = 0.0;
    double p = 1.0;
    double R0 = kInfinity;
    /// (K1 + K2 + 1) eps0, must stay below R0.
    double smallness_radius = 0.0;
    /// 2 L Gamma0 (K1 + K2 + 1)^{1+p} eps0^p, must stay below 1.
    double smallness_product = 0.0;
    bool smallness_overridden = false;
    /// L (K1 + K2 + 1)^{1+p} eps0^{1+p}: envelope of the forcing.
    double envelope = 0.0;
    std::size_t envelope_breaches = 0;
    /// max over iterates of sup |psi_n|_D.
    double sup_psi = 0.0;
    /// |P_fast(u_pair) - z_pair| in the energy norm.
    double fast_component_error = 0.0;
    /// e^{r0 t}(|u' - v'| + |u - v|_D) at the trajectory end.
    double profile_residual = 0.0;
    /// sup of the same quantity over the last 40% of the trajectory.
    double profile_residual_tail_sup = 0.0;
    /// Least-squares slope of its logarithm over that window.
    double profile_residual_slope = 0.0;
    /// The last special solution w_psi.
    std::optional<SpecialSolution> correction;
    std::vector<std::string> warnings;
};

/// Fixed-point iteration psi -> w_psi e^{gamma0 t} with w_psi the decaying
/// solution forced by f(v + z + psi e^{-gamma0 t}).  `grid` starts at 0 and
/// should reach far enough that e^{-(gamma0 - r0) T} is below the target
/// accuracy.  Throws SmallnessViolated, NoConvergence, RateCollision.
FastSolution construct(const OperatorSpec& spec, const DecayRateSet& rates, const Nonlinearity& f,
                       const ProfileSpec& profile, std::span<const double> grid, const ConstructOptions& options = {});

struct ConstructionReport {
    bool fast_component_preserved = false;
    bool residual_decreasing = false;
    bool residual_small = false;
    bool contraction_consistent = false;
    std::vector<std::string> failures;
    bool passed() const { return failures.empty(); }
};

/// Checks fast-component preservation, decay of e^{r0 t} dist(u, v) with a
/// final value below `tol`, and measured contraction within 2x of the
/// theoretical factor.  A residual under 1e-6 epsilon0 counts as decayed
/// even when rounding makes it creep upward.
ConstructionReport verify_construction(const OperatorSpec& spec, const FastSolution& result,
                                       const ProfileSpec& profile, double tol = 1e-6);

}  // namespace decaylab
