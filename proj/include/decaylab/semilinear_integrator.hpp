#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "decaylab/error.hpp"
#include "decaylab/linear_propagator.hpp"
#include "decaylab/operator_model.hpp"

namespace decaylab {

/// |f(u)| <= K0 (|u|^{1+p} + |A^{1/2}u|^{1+q}).
struct GrowthCertificate {
    double K0 = 0.0;
    double p = 1.0;
    double q = 1.0;
};

/// |f(a) - f(b)| <= L (|a|_D^p + |b|_D^p) |a - b|_D whenever both norms
/// are at most R0 (norms in D(A^{1/2})).
struct LipschitzCertificate {
    double L = 0.0;
    double p = 1.0;
    double R0 = kInfinity;
};

/// Right-hand side f(u) of u'' + 2 delta u' + A u = f(u), in mode
/// coordinates.  `eval` receives u and A^{1/2}u.
struct Nonlinearity {
    std::function<Vector(const Vector& u, const Vector& a_half_u)> eval;
    std::optional<GrowthCertificate> growth;
    std::optional<LipschitzCertificate> lipschitz;
    bool f0_zero = true;
    std::string name;

    Vector operator()(const OperatorSpec& spec, const Vector& u) const { return eval(u, spec.a_half(u)); }
};

Nonlinearity zero_nonlinearity();

/// Wraps f written in physical coordinates, f(x, A^{1/2}x), as a mode
/// coordinate nonlinearity for `spec`.
Nonlinearity in_mode_coordinates(const OperatorSpec& spec,
                                 std::function<Vector(const Vector& x, const Vector& a_half_x)> physical,
                                 std::string name = {});

/// Lawson: Dormand-Prince 5(4) in the frame of the exact linear flow.
/// Classical: Dormand-Prince 5(4) on the first-order system, as a
/// cross-check.
enum class Scheme { Lawson, Classical };

struct IntegratorOptions {
    double tol = 1e-10;
    /// 0 picks t_end / 500.
    double max_step = 0.0;
    /// 0 picks a step from the initial derivative.
    double initial_step = 0.0;
    Scheme scheme = Scheme::Lawson;
    std::size_t max_steps = 5'000'000;
};

struct TrajectoryMeta {
    std::size_t steps = 0;
    std::size_t rejected = 0;
    double tol = 0.0;
    Scheme scheme = Scheme::Lawson;
    /// Evaluations of f that broke the growth certificate by more than 5%.
    std::size_t certificate_breaches = 0;
    double max_certificate_ratio = 0.0;
    /// False when integration stopped before t_end.
    bool completed = true;
};

/// Accepted steps of an integration with dense output between nodes.
class Trajectory {
public:
    /// g(t, x): the forcing seen by the linear equation along the solution.
    using Forcing = std::function<Vector(double t, const PhasePair& x)>;

    Trajectory() = default;
    Trajectory(std::shared_ptr<const OperatorSpec> spec, Forcing forcing);

    const OperatorSpec& spec() const { return *spec_; }
    std::shared_ptr<const OperatorSpec> spec_ptr() const { return spec_; }
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<PhasePair>& states() const noexcept { return states_; }
    const std::vector<Vector>& g_values() const noexcept { return g_values_; }
    const TrajectoryMeta& meta() const noexcept { return meta_; }
    TrajectoryMeta& meta() noexcept { return meta_; }
    std::size_t size() const noexcept { return times_.size(); }
    bool empty() const noexcept { return times_.empty(); }
    double t_end() const { return times_.back(); }

    /// State at any t in [times().front(), times().back()].
    PhasePair at(double t) const;
    /// Forcing g(t, x(t)) along the dense output.
    Vector forcing_at(double t) const;
    const Forcing& forcing() const noexcept { return forcing_; }

    /// Appends a node.  `dense` holds the five continuous-extension vectors
    /// of the step that ends at this node (empty for cubic Hermite).
    void push(double t, PhasePair x, Vector g, std::vector<Vector> dense = {}, Scheme scheme = Scheme::Lawson);

    /// Every `stride`-th node (plus the last); cubic Hermite in between.
    Trajectory subsample(std::size_t stride) const;

private:
    std::size_t segment(double t) const;

    std::shared_ptr<const OperatorSpec> spec_;
    Forcing forcing_;
    std::vector<double> times_;
    std::vector<PhasePair> states_;
    std::vector<Vector> g_values_;
    std::vector<std::vector<Vector>> dense_;
    std::vector<Scheme> dense_scheme_;
    TrajectoryMeta meta_;
};

/// Raised when integration stops early; carries what was computed.
class IntegrationError : public Error {
public:
    IntegrationError(ErrorCode code, const std::string& message, Trajectory partial)
        : Error(code, message), partial_(std::make_shared<Trajectory>(std::move(partial))) {}

    const Trajectory& partial() const noexcept { return *partial_; }

private:
    std::shared_ptr<Trajectory> partial_;
};

/// Adaptive solution of u'' + 2 delta u' + A u = f(u) on [0, t_end].
/// Throws IntegrationError with StepSizeUnderflow when the step collapses
/// (typically finite-time blowup) and NonFiniteState for non-finite input.
Trajectory integrate(const OperatorSpec& spec, const Nonlinearity& f, const PhasePair& initial, double t_end,
                     const IntegratorOptions& options = {});

/// Same driver for the linear equation with a time-dependent forcing.
Trajectory integrate_forced(const OperatorSpec& spec, std::function<Vector(double)> g, const PhasePair& initial,
                            double t_end, const IntegratorOptions& options = {});

/// max over steps of |E(t2) - E(t1) - int (-4 delta |u'|^2 + 2 <u', g>)|,
/// the integral taken along the dense output.
double energy_residual(const OperatorSpec& spec, const Trajectory& traj);

}  // namespace decaylab
