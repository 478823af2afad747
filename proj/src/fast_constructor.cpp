#include "decaylab/fast_constructor.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "decaylab/diagnostics.hpp"
#include "decaylab/error.hpp"

namespace decaylab {

namespace {

double pair_size(const OperatorSpec& spec, const PhasePair& x) { return x.v.norm() + domain_norm(spec, x.u); }

// sup over the grid of |x(t)|_D e^{s0 t} / (|x1| + |x0|_D), x the linear solution.
double measure_linear_constant(const OperatorSpec& spec, const PhasePair& x, double s0,
                               std::span<const double> grid) {
    const double size = pair_size(spec, x);
    if (size == 0.0) return 0.0;
    double worst = 0.0;
    for (double t : grid)
        worst = std::max(worst, domain_norm(spec, propagate(spec, x, t).u) * std::exp(s0 * t) / size);
    return worst;
}

}  // namespace

S0Choice choose_s0(double r0, double p, const DecayRateSet& rates) {
    if (!(r0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "r0 must be positive");
    if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "p must be positive");
    const std::size_t index = rates.index_of(r0);
    const double beta0 = next_rate_above(rates, rates.rates[index]);
    const double upper = std::min((1.0 + p) * r0, beta0);
    if (!(upper > r0))
        throw Error(ErrorCode::DegenerateGap, "min{(1+p) r0, beta0} = " + std::to_string(upper) + " <= r0");
    double gamma0 = 0.5 * (r0 + upper);
    for (int i = 0; i < 60 && rates.contains(gamma0); ++i) gamma0 = 0.5 * (r0 + gamma0);
    if (rates.contains(gamma0) || !(gamma0 > r0))
        throw Error(ErrorCode::DegenerateGap, "no admissible gamma0 between r0 and " + std::to_string(upper));
    return {gamma0 / (1.0 + p), gamma0};
}

ProfileSpec make_profile(const OperatorSpec& spec, const DecayRateSet& rates, double r0, double p, PhasePair v_pair,
                         PhasePair z_pair, double epsilon0) {
    const PairClass vc = classify_pair(spec, rates, v_pair, r0, 1e-8);
    if (vc != PairClass::Pure && vc != PairClass::Zero)
        throw Error(ErrorCode::InvalidArgument, "v_pair is " + std::string(to_string(vc)) + ", not r0-pure");
    const PairClass zc = classify_pair(spec, rates, z_pair, r0, 1e-8);
    if (zc != PairClass::Fast && zc != PairClass::Zero)
        throw Error(ErrorCode::InvalidArgument, "z_pair is " + std::string(to_string(zc)) + ", not r0-fast");
    const S0Choice choice = choose_s0(r0, p, rates);
    ProfileSpec profile;
    profile.r0 = rates.rates[rates.index_of(r0)];
    profile.s0 = choice.s0;
    profile.gamma0 = choice.gamma0;
    const double size = pair_size(spec, v_pair) + pair_size(spec, z_pair);
    profile.epsilon0 = epsilon0 > 0.0 ? epsilon0 : size;
    if (size > profile.epsilon0 * (1.0 + 1e-12))
        throw Error(ErrorCode::InvalidArgument, "pairs have size " + std::to_string(size) + " > epsilon0 = " +
                                                    std::to_string(profile.epsilon0));
    profile.v_pair = std::move(v_pair);
    profile.z_pair = std::move(z_pair);
    return profile;
}

FastSolution construct(const OperatorSpec& spec, const DecayRateSet& rates, const Nonlinearity& f,
                       const ProfileSpec& profile, std::span<const double> grid, const ConstructOptions& options) {
    if (!f.eval) throw Error(ErrorCode::InvalidArgument, "nonlinearity has no evaluator");
    if (!f.lipschitz) throw Error(ErrorCode::InvalidArgument, "construction needs a Lipschitz certificate");
    if (!f.f0_zero) throw Error(ErrorCode::InvalidArgument, "construction needs f(0) = 0");
    if (grid.size() < 2 || grid.front() != 0.0) throw Error(ErrorCode::InvalidArgument, "grid must start at 0");
    const Index n = spec.size();
    if (profile.v_pair.size() != n || profile.z_pair.size() != n)
        throw Error(ErrorCode::DimensionMismatch, "profile pairs do not match the operator");
    const LipschitzCertificate cert = *f.lipschitz;
    const double p = cert.p;
    if (std::abs(profile.gamma0 - (1.0 + p) * profile.s0) > 1e-12 * profile.gamma0)
        throw Error(ErrorCode::InvalidArgument, "gamma0 must equal (1+p) s0");
    if (!(profile.s0 < profile.r0 && profile.r0 < profile.gamma0))
        throw Error(ErrorCode::InvalidArgument, "need s0 < r0 < gamma0");

    FastSolution out;
    out.L = cert.L;
    out.p = p;
    out.R0 = cert.R0;
    out.K1 = measure_linear_constant(spec, profile.v_pair, profile.s0, grid);
    out.K2 = measure_linear_constant(spec, profile.z_pair, profile.s0, grid);
    out.Gamma0 = probe_gamma0(spec, rates, profile.gamma0, grid, options.quad);

    const double eps0 = profile.epsilon0;
    const double spread = out.K1 + out.K2 + 1.0;
    out.smallness_radius = spread * eps0;
    out.smallness_product = 2.0 * cert.L * out.Gamma0 * std::pow(spread, 1.0 + p) * std::pow(eps0, p);
    out.theoretical_factor = 2.0 * cert.L * out.Gamma0 * std::pow(spread, p) * std::pow(eps0, p);
    out.envelope = cert.L * std::pow(spread, 1.0 + p) * std::pow(eps0, 1.0 + p);

    std::ostringstream failed;
    if (!(out.smallness_radius < cert.R0))
        failed << "(K1+K2+1) eps0 = " << out.smallness_radius << " is not below R0 = " << cert.R0 << "; ";
    if (!(out.smallness_product < 1.0))
        failed << "2 L Gamma0 (K1+K2+1)^{1+p} eps0^p = " << out.smallness_product << " is not below 1; ";
    if (!failed.str().empty()) {
        std::ostringstream constants;
        constants << "K1 = " << out.K1 << ", K2 = " << out.K2 << ", Gamma0 = " << out.Gamma0 << ", L = " << cert.L
                  << ", eps0 = " << eps0;
        if (!options.override_smallness)
            throw Error(ErrorCode::SmallnessViolated, failed.str() + constants.str());
        out.smallness_overridden = true;
        out.warnings.push_back("smallness override: " + failed.str() + constants.str() +
                               "; convergence is empirical");
    }

    const double gamma0 = profile.gamma0;
    auto spec_ptr = std::make_shared<const OperatorSpec>(spec);
    std::shared_ptr<const SpecialSolution> previous;
    // The forcing of each iterate owns everything it reads, so the returned
    // correction stays evaluable after this function returns.
    auto make_forcing = [&](std::shared_ptr<const SpecialSolution> prev) {
        ForcingSampler sampler;
        sampler.K_g = out.envelope;
        sampler.gamma0 = gamma0;
        sampler.eval = [spec_ptr, f, v = profile.v_pair, z = profile.z_pair, psi0 = options.psi0, prev, gamma0,
                        n](double t) {
            Vector w;
            if (!prev) {
                w = psi0 ? Vector(psi0(t) * std::exp(-gamma0 * t)) : Vector::Zero(n);
            } else if (t <= prev->horizon()) {
                w = prev->interpolate(t).u;
            } else {
                // Beyond the last node psi is held constant.
                w = prev->states().back().u * std::exp(-gamma0 * (t - prev->horizon()));
            }
            const Vector u = propagate(*spec_ptr, v, t).u + propagate(*spec_ptr, z, t).u + w;
            return f(*spec_ptr, u);
        };
        return sampler;
    };
    auto psi_on_grid = [&](std::size_t j) -> Vector {
        const double t = grid[j];
        if (!previous) return options.psi0 ? options.psi0(t) : Vector::Zero(n);
        return previous->states()[j].u * std::exp(gamma0 * t);
    };
    if (options.psi0) {
        for (std::size_t j = 0; j < grid.size(); ++j)
            out.sup_psi = std::max(out.sup_psi, domain_norm(spec, psi_on_grid(j)));
    }

    double previous_distance = 0.0;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        auto next = std::make_shared<const SpecialSolution>(
            special_solution(spec, rates, make_forcing(previous), options.quad, grid));
        out.envelope_breaches += next->envelope_breaches();
        double distance = 0.0;
        double sup_next = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const Vector psi_bar = next->states()[j].u * std::exp(gamma0 * grid[j]);
            distance = std::max(distance, domain_norm(spec, psi_bar - psi_on_grid(j)));
            sup_next = std::max(sup_next, domain_norm(spec, psi_bar));
        }
        out.sup_psi = std::max(out.sup_psi, sup_next);
        out.distances.push_back(distance);
        out.iterations = iter;
        if (iter > 1 && previous_distance > 0.0)
            out.contraction_factor = std::max(out.contraction_factor, distance / previous_distance);
        previous = std::move(next);
        previous_distance = distance;
        if (distance <= options.tol) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged) {
        const double last_ratio =
            out.distances.size() >= 2 ? out.distances.back() / out.distances[out.distances.size() - 2] : 1.0;
        if (last_ratio >= 1.0)
            throw Error(ErrorCode::NoConvergence, "distance " + std::to_string(out.distances.back()) + " after " +
                                                      std::to_string(out.iterations) +
                                                      " iterations, last ratio " + std::to_string(last_ratio));
        out.warnings.push_back("iteration budget reached before tolerance; last distance " +
                               std::to_string(out.distances.back()));
    }

    out.w_pair = previous->initial();
    out.u_pair = profile.v_pair + profile.z_pair + out.w_pair;
    const PhasePair fast_part = project(spec, rates, out.u_pair, profile.r0, ProjectionMode::Fast);
    out.fast_component_error = energy_norm(spec, fast_part - profile.z_pair);
    out.correction = *previous;

    if (options.reintegrate) {
        IntegratorOptions io = options.integrator;
        Trajectory traj = integrate(spec, f, out.u_pair, grid.back(), io);
        std::vector<double> residual(traj.size());
        for (std::size_t j = 0; j < traj.size(); ++j) {
            const double t = traj.times()[j];
            const PhasePair diff = traj.states()[j] - propagate(spec, profile.v_pair, t);
            residual[j] = std::exp(profile.r0 * t) * pair_size(spec, diff);
        }
        out.profile_residual = residual.back();
        const double start = 0.6 * traj.t_end();
        std::vector<double> x, y;
        for (std::size_t j = 0; j < traj.size(); ++j) {
            if (traj.times()[j] < start) continue;
            out.profile_residual_tail_sup = std::max(out.profile_residual_tail_sup, residual[j]);
            x.push_back(traj.times()[j]);
            y.push_back(std::log(std::max(residual[j], 1e-300)));
        }
        if (x.size() >= 2) out.profile_residual_slope = fit_line(x, y).slope;
        out.trajectory = std::move(traj);
    }
    return out;
}

ConstructionReport verify_construction(const OperatorSpec& spec, const FastSolution& result,
                                       const ProfileSpec& profile, double tol) {
    ConstructionReport report;
    const double scale = std::max(1.0, energy_norm(spec, profile.z_pair));
    report.fast_component_preserved = result.fast_component_error <= 1e-9 * scale;
    if (!report.fast_component_preserved)
        report.failures.push_back("fast component changed by " + std::to_string(result.fast_component_error));

    if (!result.trajectory) {
        report.failures.push_back("no re-integrated trajectory");
    } else {
        report.residual_small = result.profile_residual <= tol;
        report.residual_decreasing =
            result.profile_residual <= 1e-6 * profile.epsilon0 || result.profile_residual_slope < 0.0;
        if (!report.residual_small)
            report.failures.push_back("profile residual " + std::to_string(result.profile_residual) +
                                      " above " + std::to_string(tol));
        if (!report.residual_decreasing) report.failures.push_back("profile residual is not decreasing");
    }

    report.contraction_consistent = result.contraction_factor < 1.0 &&
                                    result.contraction_factor <= 2.0 * result.theoretical_factor + 1e-300;
    if (result.iterations <= 2 && result.contraction_factor == 0.0) report.contraction_consistent = true;
    if (!report.contraction_consistent)
        report.failures.push_back("measured contraction " + std::to_string(result.contraction_factor) +
                                  " vs theoretical " + std::to_string(result.theoretical_factor));
    return report;
}

}  // namespace decaylab
