#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "decaylab/linear_propagator.hpp"
#include "decaylab/operator_model.hpp"
#include "decaylab/semilinear_integrator.hpp"

namespace decaylab {

/// Energies of a single state.
struct EnergyPoint {
    double norm_u = 0.0;
    double norm_a_half_u = 0.0;
    double norm_v = 0.0;
    /// |u'|^2 + |A^{1/2}u|^2.
    double E = 0.0;
    /// E + |u|^2.
    double F_full = 0.0;
    /// E + 2 mu <u', Q u>.
    double E_hat = 0.0;
};

EnergyPoint energy_point(const OperatorSpec& spec, double mu, const PhasePair& x);

/// E / |u|^{2+d}; NaN when |u| < 1e-300.
double dirichlet_quotient(double energy, double norm_u, double d);

struct EnergyTrace {
    std::vector<double> times;
    std::vector<EnergyPoint> points;
    std::vector<double> d_values;
    /// G[i][j]: G_{d_values[i]} at node j (NaN where undefined).
    std::vector<std::vector<double>> G;
    std::vector<std::vector<double>> G_hat;
    double mu = 0.0;
    double nu = 0.0;
};

EnergyTrace energy_trace(const OperatorSpec& spec, const Trajectory& traj, std::vector<double> d_values);

struct SandwichCheck {
    std::size_t checked = 0;
    std::size_t violations = 0;
    /// Largest violation relative to E (or G) at the offending node.
    double worst = 0.0;
};

/// E/2 <= E_hat <= 2E and G/2 <= G_hat <= 2G at every node, up to a
/// rounding slack of a few ulps.
SandwichCheck check_sandwich(const EnergyTrace& trace);

struct InequalityCheck {
    std::size_t checked = 0;
    /// Nodes skipped because the stencil does not resolve the quotient.
    std::size_t unresolved = 0;
    /// max over nodes of (LHS - RHS) / max(1, |LHS|, |RHS terms|).
    double energy_violation = 0.0;
    double quotient_violation = 0.0;
    double worst() const { return std::max(energy_violation, quotient_violation); }
};

/// Checks E_hat' <= -mu/2 E_hat + 2/delta |g|^2 and
/// G_hat_d' <= -mu/2 G_hat_d + 2/delta |g|^2 / |u|^{2+d} + (2+d)|u|^{d/2} G_d^{1/2} G_hat_d
/// at the interior nodes, derivatives from five-point central differences
/// of the dense output.  Nodes where the h and 2h central differences of
/// G_hat_d disagree by more than 1e-4 of the scale are counted as unresolved.
/// Throws UndefinedQuotient if u vanishes at a node.
InequalityCheck verify_quotient_inequalities(const OperatorSpec& spec, const Trajectory& traj, double d,
                                             double fd_step = 1e-3);

struct TailWindow {
    /// Fraction of the time span at the end of the trajectory.
    double fraction = 0.4;
    std::size_t min_nodes = 50;
};

struct ClassifyOptions {
    TailWindow window;
    /// Energy norm at the end of the window below which the solution is null.
    double null_threshold = 1e-13;
    /// G_p at or below this on the whole window: slow.
    double slow_threshold = 0.5;
    /// G_p at or above this on the whole window: fast.
    double fast_threshold = 2.0;
    /// Relative distance within which a fitted rate snaps to the rate set.
    double snap_tolerance = 0.05;
    /// Allowed distance of the fitted power from -1/p for a slow verdict.
    double power_band = 0.1;
};

enum class Verdict { Null, Slow, Fast, Undecided, Nonglobal };

std::string_view to_string(Verdict v) noexcept;

struct SlowConstants {
    /// min over the window of |u| (1+t)^{1/p}.
    double M1 = 0.0;
    /// max over the window of (|u'| + |A^{1/2}u|) / |u|^{1+p}.
    double M2 = 0.0;
    /// Earliest node after which G_p stays at or below the slow threshold.
    double T0 = 0.0;
};

struct DecayReport {
    Verdict verdict = Verdict::Undecided;
    double p = 1.0;
    double q = 1.0;
    std::optional<double> fitted_power;
    std::optional<double> fitted_rate;
    std::optional<double> matched_r0;
    /// Initial data of the r0-pure linear solution the trajectory follows.
    std::optional<PhasePair> profile;
    std::optional<SlowConstants> constants;
    /// Decay rate of |u' - v0'| + |u - v0|_D fitted on the window.
    std::optional<double> residual_gamma;
    std::optional<double> beta0;
    /// min{beta0, (1+p) r0, (1+q) r0}.
    std::optional<double> gamma_bound;
    /// "exp" or "exp_linear" (the (1+t) e^{-rt} model) for fast verdicts.
    std::string fit_model;
    std::string note;
    double window_start = 0.0;
    std::size_t window_nodes = 0;
};

/// Null / slow / fast classification of a decaying trajectory from the
/// behaviour of G_p on its tail.  Throws WindowTooShort.
DecayReport classify(const OperatorSpec& spec, const DecayRateSet& rates, const Nonlinearity& f,
                     const Trajectory& traj, const ClassifyOptions& options = {});

struct FastProfileCheck {
    double gamma = 0.0;
    std::optional<double> gamma_bound;
    /// sup over the window of e^{gamma t}(|u' - v0'| + |u - v0|_D).
    double sup_residual = 0.0;
    double final_residual = 0.0;
    /// Least-squares slope of log(residual) over the last tenth of the horizon.
    double tail_slope = 0.0;
    /// Residual non-decreasing at every node of the last tenth.
    bool monotone_growth = false;
    bool verified = false;
};

/// Weighted distance e^{gamma t}(|u' - v0'| + |u - v0|_D) at the nodes, v0
/// the linear solution from `profile`.
std::vector<double> profile_residuals(const OperatorSpec& spec, const Trajectory& traj, const PhasePair& profile,
                                      double gamma);

/// Verified when the weighted residual decreases over the last tenth of
/// the horizon or is already below `floor`.  Throws NotFast unless the
/// report is a fast verdict.
FastProfileCheck verify_fast_profile(const OperatorSpec& spec, const Trajectory& traj, const DecayReport& report,
                                     double gamma, const TailWindow& window = {}, double floor = 1e-8);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
};

/// Ordinary least squares y = slope x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace decaylab
