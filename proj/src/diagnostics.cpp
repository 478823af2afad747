#include "decaylab/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "decaylab/error.hpp"

namespace decaylab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEps = std::numeric_limits<double>::epsilon();

double cross_term(const OperatorSpec& spec, const PhasePair& x) {
    double acc = 0.0;
    for (Index k = 0; k < x.size(); ++k)
        if (!spec.in_kernel(k)) acc += x.v[k] * x.u[k];
    return acc;
}

std::pair<double, double> exponents(const Nonlinearity& f) {
    if (f.growth) return {f.growth->p, f.growth->q};
    if (f.lipschitz) return {f.lipschitz->p, f.lipschitz->p};
    return {1.0, 1.0};
}

// Index of the first node of the tail window.
std::size_t window_begin(const Trajectory& traj, const TailWindow& window) {
    const auto& times = traj.times();
    const double start = times.back() - window.fraction * (times.back() - times.front());
    const auto it = std::lower_bound(times.begin(), times.end(), start);
    return static_cast<std::size_t>(std::distance(times.begin(), it));
}

constexpr double kResolutionTol = 1e-4;

double five_point(double fm2, double fm1, double fp1, double fp2, double h) {
    return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
}

}  // namespace

EnergyPoint energy_point(const OperatorSpec& spec, double mu, const PhasePair& x) {
    EnergyPoint e;
    e.norm_u = x.u.norm();
    const double a_half_sq = spec.eigenvalues().dot(x.u.cwiseAbs2());
    e.norm_a_half_u = std::sqrt(a_half_sq);
    e.norm_v = x.v.norm();
    e.E = x.v.squaredNorm() + a_half_sq;
    e.F_full = e.E + x.u.squaredNorm();
    e.E_hat = e.E + 2.0 * mu * cross_term(spec, x);
    return e;
}

double dirichlet_quotient(double energy, double norm_u, double d) {
    if (norm_u < 1e-300) return kNaN;
    return energy / std::pow(norm_u, 2.0 + d);
}

EnergyTrace energy_trace(const OperatorSpec& spec, const Trajectory& traj, std::vector<double> d_values) {
    if (traj.empty()) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
    EnergyTrace trace;
    const NuMu nm = nu_mu(spec);
    trace.mu = nm.mu;
    trace.nu = nm.nu;
    trace.times = traj.times();
    trace.d_values = std::move(d_values);
    trace.points.reserve(traj.size());
    for (const auto& x : traj.states()) trace.points.push_back(energy_point(spec, trace.mu, x));
    for (double d : trace.d_values) {
        std::vector<double> g(traj.size());
        std::vector<double> g_hat(traj.size());
        for (std::size_t j = 0; j < traj.size(); ++j) {
            const EnergyPoint& e = trace.points[j];
            g[j] = dirichlet_quotient(e.E, e.norm_u, d);
            g_hat[j] = dirichlet_quotient(e.E_hat, e.norm_u, d);
        }
        trace.G.push_back(std::move(g));
        trace.G_hat.push_back(std::move(g_hat));
    }
    return trace;
}

SandwichCheck check_sandwich(const EnergyTrace& trace) {
    SandwichCheck out;
    auto check = [&](double base, double modified) {
        if (std::isnan(base) || std::isnan(modified)) return;
        ++out.checked;
        const double slack = 16.0 * kEps * std::abs(base);
        const double below = 0.5 * base - modified;
        const double above = modified - 2.0 * base;
        const double excess = std::max(below, above);
        if (excess > slack) {
            ++out.violations;
            out.worst = std::max(out.worst, base > 0.0 ? excess / base : kInfinity);
        }
    };
    for (const auto& e : trace.points) check(e.E, e.E_hat);
    for (std::size_t i = 0; i < trace.G.size(); ++i)
        for (std::size_t j = 0; j < trace.G[i].size(); ++j) check(trace.G[i][j], trace.G_hat[i][j]);
    return out;
}

InequalityCheck verify_quotient_inequalities(const OperatorSpec& spec, const Trajectory& traj, double d,
                                             double fd_step) {
    if (traj.size() < 2) throw Error(ErrorCode::InvalidArgument, "trajectory needs at least two nodes");
    if (!(d >= 0.0)) throw Error(ErrorCode::InvalidArgument, "d must be nonnegative");
    const double mu = nu_mu(spec).mu;
    const double delta = spec.delta();
    const double h = fd_step;
    const double t_first = traj.times().front();
    const double t_last = traj.times().back();

    InequalityCheck out;
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const double t = traj.times()[j];
        if (t - 2.0 * h < t_first || t + 2.0 * h > t_last) continue;
        std::array<EnergyPoint, 5> stencil;
        for (int i = 0; i < 5; ++i) {
            const double s = t + (i - 2) * h;
            stencil[static_cast<std::size_t>(i)] = energy_point(spec, mu, i == 2 ? traj.states()[j] : traj.at(s));
        }
        const EnergyPoint& e = stencil[2];
        const double g_sq = traj.g_values()[j].squaredNorm();

        const double e_hat_dot =
            five_point(stencil[0].E_hat, stencil[1].E_hat, stencil[3].E_hat, stencil[4].E_hat, h);
        const double decay_term = 0.5 * mu * e.E_hat;
        const double forcing_term = 2.0 / delta * g_sq;
        const double energy_scale = std::max({1.0, std::abs(e_hat_dot), std::abs(decay_term), forcing_term});
        out.energy_violation =
            std::max(out.energy_violation, (e_hat_dot - (-decay_term + forcing_term)) / energy_scale);

        std::array<double, 5> g_hat{};
        for (std::size_t i = 0; i < 5; ++i) {
            if (stencil[i].norm_u < 1e-300)
                throw Error(ErrorCode::UndefinedQuotient, "u vanishes near t = " + std::to_string(t));
            g_hat[i] = stencil[i].E_hat / std::pow(stencil[i].norm_u, 2.0 + d);
        }
        const double weight = std::pow(e.norm_u, 2.0 + d);
        const double g_val = e.E / weight;
        const double g_hat_dot = five_point(g_hat[0], g_hat[1], g_hat[3], g_hat[4], h);
        const double q_decay = 0.5 * mu * g_hat[2];
        const double q_forcing = 2.0 / delta * g_sq / weight;
        const double q_growth = (2.0 + d) * std::pow(e.norm_u, 0.5 * d) * std::sqrt(g_val) * g_hat[2];
        const double quotient_scale =
            std::max({1.0, std::abs(g_hat_dot), std::abs(q_decay), q_forcing, std::abs(q_growth)});
        // Near a zero of |u| the quotient is too sharp for the stencil; the
        // central differences at h and 2h then disagree.
        const double spread = std::abs((g_hat[3] - g_hat[1]) / (2.0 * h) - (g_hat[4] - g_hat[0]) / (4.0 * h));
        if (spread > kResolutionTol * quotient_scale) {
            ++out.unresolved;
            continue;
        }
        out.quotient_violation =
            std::max(out.quotient_violation, (g_hat_dot - (-q_decay + q_forcing + q_growth)) / quotient_scale);
        ++out.checked;
    }
    return out;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidArgument, "line fit needs two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw Error(ErrorCode::InvalidArgument, "line fit needs distinct abscissae");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.slope * x[i] + fit.intercept);
        ss += r * r;
    }
    fit.rms = std::sqrt(ss / n);
    return fit;
}

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Null: return "null";
        case Verdict::Slow: return "slow";
        case Verdict::Fast: return "fast";
        case Verdict::Undecided: return "undecided";
        case Verdict::Nonglobal: return "nonglobal";
    }
    return "unknown";
}

std::vector<double> profile_residuals(const OperatorSpec& spec, const Trajectory& traj, const PhasePair& profile,
                                      double gamma) {
    std::vector<double> out(traj.size());
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const double t = traj.times()[j];
        const PhasePair diff = traj.states()[j] - propagate(spec, profile, t);
        out[j] = std::exp(gamma * t) * (diff.v.norm() + domain_norm(spec, diff.u));
    }
    return out;
}

DecayReport classify(const OperatorSpec& spec, const DecayRateSet& rates, const Nonlinearity& f,
                     const Trajectory& traj, const ClassifyOptions& options) {
    if (traj.empty()) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
    DecayReport report;
    std::tie(report.p, report.q) = exponents(f);
    if (!traj.meta().completed) {
        report.verdict = Verdict::Nonglobal;
        report.note = "integration stopped at t = " + std::to_string(traj.t_end());
        return report;
    }

    const std::size_t begin = window_begin(traj, options.window);
    const std::size_t count = traj.size() - begin;
    report.window_start = traj.times()[begin];
    report.window_nodes = count;
    if (count < options.window.min_nodes)
        throw Error(ErrorCode::WindowTooShort, "tail window holds " + std::to_string(count) + " nodes, need " +
                                                   std::to_string(options.window.min_nodes));

    if (energy_norm(spec, traj.states().back()) < options.null_threshold) {
        report.verdict = Verdict::Null;
        return report;
    }

    const double p = report.p;
    const double mu = nu_mu(spec).mu;
    auto quotient = [&](std::size_t j) {
        const EnergyPoint e = energy_point(spec, mu, traj.states()[j]);
        const double g = dirichlet_quotient(e.E, e.norm_u, p);
        return std::isnan(g) ? kInfinity : g;
    };

    bool all_low = true;
    bool all_high = true;
    for (std::size_t j = begin; j < traj.size(); ++j) {
        const double g = quotient(j);
        all_low = all_low && g <= options.slow_threshold;
        all_high = all_high && g >= options.fast_threshold;
    }

    if (all_low) {
        std::vector<double> x, y;
        SlowConstants c;
        c.M1 = kInfinity;
        for (std::size_t j = begin; j < traj.size(); ++j) {
            const double t = traj.times()[j];
            const EnergyPoint e = energy_point(spec, mu, traj.states()[j]);
            x.push_back(std::log1p(t));
            y.push_back(std::log(e.norm_u));
            c.M1 = std::min(c.M1, e.norm_u * std::pow(1.0 + t, 1.0 / p));
            c.M2 = std::max(c.M2, (e.norm_v + e.norm_a_half_u) / std::pow(e.norm_u, 1.0 + p));
        }
        std::size_t last_high = traj.size();
        for (std::size_t j = traj.size(); j-- > 0;) {
            if (!(quotient(j) <= options.slow_threshold)) {
                last_high = j;
                break;
            }
        }
        c.T0 = last_high == traj.size() ? traj.times().front() : traj.times()[last_high + 1];
        const LineFit fit = fit_line(x, y);
        report.fitted_power = fit.slope;
        report.constants = c;
        if (std::abs(fit.slope + 1.0 / p) <= options.power_band) {
            report.verdict = Verdict::Slow;
        } else {
            report.verdict = Verdict::Undecided;
            report.note = "quotient stays small but the fitted power " + std::to_string(fit.slope) +
                          " is far from -1/p = " + std::to_string(-1.0 / p);
        }
        return report;
    }

    if (!all_high) {
        report.verdict = Verdict::Undecided;
        report.note = "G_p crosses the band [" + std::to_string(options.slow_threshold) + ", " +
                      std::to_string(options.fast_threshold) + "] on the window";
        return report;
    }

    std::vector<double> t_values, log_norm, log_norm_linear;
    for (std::size_t j = begin; j < traj.size(); ++j) {
        const double t = traj.times()[j];
        const double norm = energy_norm(spec, traj.states()[j]);
        t_values.push_back(t);
        log_norm.push_back(std::log(norm));
        log_norm_linear.push_back(std::log(norm) - std::log1p(t));
    }
    const LineFit plain = fit_line(t_values, log_norm);
    const LineFit linear = fit_line(t_values, log_norm_linear);
    const bool use_linear = linear.rms < plain.rms;
    const double rate = -(use_linear ? linear.slope : plain.slope);
    report.fitted_rate = rate;
    report.fit_model = use_linear ? "exp_linear" : "exp";

    double nearest = kNaN;
    for (double r : rates.rates)
        if (std::isnan(nearest) || std::abs(r - rate) < std::abs(nearest - rate)) nearest = r;
    if (!(nearest > 0.0) || std::abs(nearest - rate) > options.snap_tolerance * nearest) {
        report.verdict = Verdict::Undecided;
        report.note = "fitted rate " + std::to_string(rate) + " does not match the rate set";
        return report;
    }
    report.matched_r0 = nearest;
    report.beta0 = next_rate_above(rates, nearest);
    report.gamma_bound = std::min({*report.beta0, (1.0 + report.p) * nearest, (1.0 + report.q) * nearest});

    const double t_end = traj.t_end();
    const PhasePair pure = project(spec, rates, traj.states().back(), nearest, ProjectionMode::Pure);
    PhasePair profile = propagate(spec, pure, -t_end);
    if (energy_norm(spec, profile) == 0.0) {
        report.verdict = Verdict::Undecided;
        report.note = "no component at the matched rate";
        return report;
    }
    report.verdict = Verdict::Fast;

    const std::vector<double> residuals = profile_residuals(spec, traj, profile, 0.0);
    std::vector<double> rx, ry;
    for (std::size_t j = begin; j < traj.size(); ++j) {
        if (residuals[j] > 0.0) {
            rx.push_back(traj.times()[j]);
            ry.push_back(std::log(residuals[j]));
        }
    }
    if (rx.size() >= 2) report.residual_gamma = -fit_line(rx, ry).slope;
    report.profile = std::move(profile);
    return report;
}

FastProfileCheck verify_fast_profile(const OperatorSpec& spec, const Trajectory& traj, const DecayReport& report,
                                     double gamma, const TailWindow& window, double floor) {
    if (report.verdict != Verdict::Fast || !report.profile)
        throw Error(ErrorCode::NotFast, "report verdict is " + std::string(to_string(report.verdict)));
    FastProfileCheck out;
    out.gamma = gamma;
    out.gamma_bound = report.gamma_bound;

    const std::vector<double> residuals = profile_residuals(spec, traj, *report.profile, gamma);
    const std::size_t begin = window_begin(traj, window);
    for (std::size_t j = begin; j < traj.size(); ++j) out.sup_residual = std::max(out.sup_residual, residuals[j]);
    out.final_residual = residuals.back();

    const auto& times = traj.times();
    const double decade_start = times.back() - 0.1 * (times.back() - times.front());
    std::vector<double> x, y;
    out.monotone_growth = true;
    for (std::size_t j = 0; j < traj.size(); ++j) {
        if (times[j] < decade_start) continue;
        x.push_back(times[j]);
        y.push_back(std::log(std::max(residuals[j], 1e-300)));
        if (j > 0 && times[j - 1] >= decade_start && residuals[j] < residuals[j - 1]) out.monotone_growth = false;
    }
    if (x.size() < 2) throw Error(ErrorCode::WindowTooShort, "last tenth of the horizon holds fewer than two nodes");
    out.tail_slope = fit_line(x, y).slope;
    out.verified = out.final_residual <= floor || out.tail_slope < 0.0;
    return out;
}

}  // namespace decaylab
