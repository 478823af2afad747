#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "decaylab/linear_propagator.hpp"
#include "decaylab/operator_model.hpp"
#include "decaylab/quadrature.hpp"

namespace decaylab {

/// A forcing term g(t) in mode coordinates with a certified envelope
/// |g(t)| <= K_g e^{-gamma0 t}.
struct ForcingSampler {
    std::function<Vector(double)> eval;
    double K_g = 0.0;
    double gamma0 = 1.0;
};

/// The solution of w'' + 2 delta w' + A w = g whose initial pair is
/// alpha0-slow and which decays like the forcing.  Node values are computed
/// once; `eval` refines exactly between nodes, `interpolate` is the cheap
/// cubic Hermite version.
class SpecialSolution {
public:
    const PhasePair& initial() const { return states_.front(); }
    double gamma0() const noexcept { return gamma0_; }
    std::optional<double> alpha0() const noexcept { return alpha0_; }
    double beta0() const noexcept { return beta0_; }
    /// Smallest Gamma with |w'| + |w|_{D(A^{1/2})} <= Gamma K_g e^{-gamma0 t}
    /// on the caller grid.
    double measured_Gamma0() const noexcept { return measured_Gamma0_; }
    /// Number of quadrature samples where |g| exceeded 1.05 K_g e^{-gamma0 t}.
    std::size_t envelope_breaches() const noexcept { return envelope_breaches_; }
    double max_envelope_ratio() const noexcept { return max_envelope_ratio_; }

    /// Caller grid followed by the tail nodes used to truncate W_-.
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<PhasePair>& states() const noexcept { return states_; }
    std::size_t grid_size() const noexcept { return grid_size_; }
    double horizon() const noexcept { return times_.back(); }

    /// W(t) = S(t - t_j) W(t_j) + int_{t_j}^t S(t - s)(0, g(s)) ds from the
    /// node at or before t.
    PhasePair eval(double t) const;
    /// Cubic Hermite interpolation of W between nodes (W' from the equation).
    PhasePair interpolate(double t) const;

private:
    friend SpecialSolution special_solution(const OperatorSpec&, const DecayRateSet&, const ForcingSampler&,
                                            const QuadratureConfig&, std::span<const double>);

    std::size_t node_at_or_before(double t) const;

    std::shared_ptr<const OperatorSpec> spec_;
    std::shared_ptr<const DecayRateSet> rates_;
    ForcingSampler forcing_;
    QuadratureConfig quad_;
    double gamma0_ = 0.0;
    std::optional<double> alpha0_;
    double beta0_ = kInfinity;
    double measured_Gamma0_ = 0.0;
    std::size_t envelope_breaches_ = 0;
    double max_envelope_ratio_ = 0.0;
    std::vector<double> times_;
    std::vector<PhasePair> states_;
    std::vector<Vector> forcing_at_nodes_;
    std::size_t grid_size_ = 0;
};

/// W = W_+ + W_-, with W_+(t) = int_0^t S(t-s) P_+(0, g(s)) ds and
/// W_-(t) = -int_t^inf S(t-s) P_-(0, g(s)) ds, P_+/P_- projecting onto the
/// rates above/below gamma0.  `grid` must start at 0 and be strictly
/// increasing.
SpecialSolution special_solution(const OperatorSpec& spec, const DecayRateSet& rates, const ForcingSampler& g,
                                 const QuadratureConfig& quad, std::span<const double> grid);

/// Variation of constants on a grid: exact homogeneous flow plus the
/// quadrature of the Duhamel increment over each step.
std::vector<PhasePair> solve_nonhomogeneous_ivp(const OperatorSpec& spec, const ForcingSampler& g,
                                                const PhasePair& initial, std::span<const double> t_grid,
                                                const QuadratureConfig& quad = {});

/// max over `times` of |W' + AW - (0, g)| with W' from a five-point central
/// difference of `eval`.
double special_solution_residual(const OperatorSpec& spec, const SpecialSolution& w, const ForcingSampler& g,
                                 std::span<const double> times, double step = 1e-2);

/// Largest measured Gamma0 over unit probes e_k e^{-gamma0 t}, one per
/// distinct eigenvalue.  Depends only on gamma0, delta and the spectrum.
double probe_gamma0(const OperatorSpec& spec, const DecayRateSet& rates, double gamma0,
                    std::span<const double> grid, const QuadratureConfig& quad = {});

/// Uniform grid 0, h, ..., t_end (last node exactly t_end).
std::vector<double> uniform_grid(double t_end, std::size_t intervals);

}  // namespace decaylab
