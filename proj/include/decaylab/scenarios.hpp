#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "decaylab/config.hpp"
#include "decaylab/fast_constructor.hpp"
#include "decaylab/operator_model.hpp"
#include "decaylab/semilinear_integrator.hpp"

namespace decaylab {

/// f(u) = -|B^{1/2}u|^{2 alpha} B u, the damped Kirchhoff right-hand side
/// (A = 0), in physical coordinates.  Growth certificate K0 = lambda_max^{alpha+1},
/// p = 2 alpha; Lipschitz L = (1 + 2 alpha) lambda_max^{alpha+1}.  Throws
/// NotCoercive unless B is symmetric positive definite.
Nonlinearity kirchhoff_nonlinearity(const Matrix& B, double alpha);

/// H = |u'|^2 + |B^{1/2}u|^{2(alpha+1)} / (alpha + 1).
double kirchhoff_hamiltonian(const Matrix& B, double alpha, const PhasePair& x);

/// Along u'' + u' = f(u) the Hamiltonian obeys dH/dt = -2|u'|^2.  Returns
/// max over steps of |H(t2) - H(t1) + 2 int |u'|^2| along the dense output.
/// The trajectory must be in physical coordinates (A = 0, identity basis).
double kirchhoff_dissipation_defect(const Matrix& B, double alpha, const Trajectory& traj);

struct Pipeline {
    bool simulate = true;
    bool classify = true;
    bool construct = false;
};

struct ConstructRequest {
    double r0 = 0.0;
    PhasePair v_pair;
    PhasePair z_pair;
    double epsilon0 = 0.0;
    double grid_step = 0.1;
    double t_end = 100.0;
    ConstructOptions options;
};

struct KirchhoffData {
    Matrix B;
    double alpha = 1.0;
};

/// A fully resolved run: operator, nonlinearity, data and what to compute.
/// All states are in mode coordinates.
struct Scenario {
    std::string name;
    std::string builtin;
    std::shared_ptr<const OperatorSpec> spec;
    DecayRateSet rates;
    Nonlinearity f;
    PhasePair initial;
    double t_end = 100.0;
    double tol = 1e-10;
    unsigned long seed = 0;
    Pipeline pipeline;
    /// Rates gamma at which to check a fast verdict's profile.
    std::vector<double> verify_gammas;
    std::optional<ConstructRequest> construct;
    std::optional<KirchhoffData> kirchhoff;
    /// Closed-form solution when one is known.
    std::function<PhasePair(double)> exact;
    std::vector<std::string> notes;
};

/// x'' + x' = -x^3 + 3x^5, y'' + y' + y = x^3 - 3x^5 + 15x^7 from
/// (1, 1, -1, -3); solution x = (1+2t)^{-1/2}, y = (1+2t)^{-3/2}.
Scenario slow_counterexample(double t_end = 200.0, double tol = 1e-10);

/// x'' + x' + (r0 - r0^2) x = 0, y'' + y' + (beta0 - beta0^2) y = |x|^{1+p} + |x|^{1+q}
/// from x = 1, x' = -r0, y = y' = 0.  Requires 0 < r0 < beta0 < 1/2.
Scenario fast_optimality(double r0 = 0.1, double beta0 = 0.2, double p = 1.0, double q = 1.0,
                         double t_end = 250.0, double tol = 1e-10);

/// u'' + u' + |B^{1/2}u|^{2 alpha} B u = 0 written with A = 0.
Scenario kirchhoff_scenario(const Matrix& B, double alpha, const Vector& u0, const Vector& u1,
                            double t_end = 4000.0, double tol = 1e-10);

/// Fast data for the Kirchhoff equation: v = eps (e, -e) with e the first
/// eigenvector of B, constructed by contraction.
ConstructRequest kirchhoff_fast_request(const Matrix& B, double alpha, double eps, double t_end = 15.0);

/// u'' + u' + |u|^p u = 0.
Scenario ode_scalar(double p = 2.0, double u0 = 1.0, double u1 = 0.0, double t_end = 4000.0, double tol = 1e-10);

/// u'' + u' = u^3 + 3u^5 from (1, 1); blows up at t = 1/2.
Scenario blowup_scenario(double t_end = 1.0, double tol = 1e-10);

/// Random operator and data, f = 0.
Scenario random_linear(unsigned long seed, int n = 5, double t_end = 50.0, double tol = 1e-10);

std::vector<std::string> builtin_names();

/// Resolves a configuration.  `scenario` selects a builtin (default
/// `custom`); builtin parameters and common keys (t_end, tol, seed,
/// pipeline, name) may be overridden.  Throws ConfigError.
Scenario build_scenario(const Config& config);

}  // namespace decaylab
