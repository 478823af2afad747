#include "decaylab/semilinear_integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace decaylab {

namespace {

std::string short_number(double x, int digits = 6) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

// Dormand-Prince 5(4) tableau.
constexpr std::array<double, 7> kC = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
// Fifth-order weights minus embedded fourth-order weights.
constexpr std::array<double, 7> kE = {71.0 / 57600,      0.0,         -71.0 / 16695, 71.0 / 1920,
                                      -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
// Continuous extension.
constexpr std::array<double, 7> kD = {-12715105075.0 / 11282082432.0, 0.0,
                                      87487479700.0 / 32700410799.0,  -10690763975.0 / 1880347072.0,
                                      701980252875.0 / 199316789632.0, -1453857185.0 / 822651844.0,
                                      69997945.0 / 29380423.0};

Vector pack(const PhasePair& x) {
    Vector out(2 * x.size());
    out << x.u, x.v;
    return out;
}

PhasePair unpack(const Vector& packed) {
    const Index n = packed.size() / 2;
    return {packed.head(n), packed.tail(n)};
}

// Time derivative of the first-order system at x with forcing g.
Vector system_derivative(const OperatorSpec& spec, const PhasePair& x, const Vector& g) {
    Vector out(2 * x.size());
    out << x.v, g - 2.0 * spec.delta() * x.v - spec.eigenvalues().cwiseProduct(x.u);
    return out;
}

// Flow of the integration frame: the exact linear flow for Lawson, the
// identity for the classical scheme.
Vector frame_flow(const OperatorSpec& spec, Scheme scheme, const Vector& y, double t) {
    if (scheme == Scheme::Classical || t == 0.0) return y;
    return pack(propagate(spec, unpack(y), t));
}

// Frame derivative Y'(c h) given the physical stage state and its forcing.
Vector frame_derivative(const OperatorSpec& spec, Scheme scheme, const PhasePair& x, const Vector& g, double c_h) {
    if (scheme == Scheme::Classical) return system_derivative(spec, x, g);
    const Index n = spec.size();
    Vector impulse = Vector::Zero(2 * n);
    impulse.tail(n) = g;
    return frame_flow(spec, scheme, impulse, -c_h);
}

PhasePair hermite(const OperatorSpec& spec, double t0, const PhasePair& x0, const Vector& g0, double t1,
                  const PhasePair& x1, const Vector& g1, double t) {
    const double h = t1 - t0;
    const double theta = (t - t0) / h;
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    const Vector d0 = system_derivative(spec, x0, g0);
    const Vector d1 = system_derivative(spec, x1, g1);
    const Vector y = (2 * t3 - 3 * t2 + 1) * pack(x0) + (t3 - 2 * t2 + theta) * h * d0 +
                     (-2 * t3 + 3 * t2) * pack(x1) + (t3 - t2) * h * d1;
    return unpack(y);
}

struct CertificateMonitor {
    std::optional<GrowthCertificate> growth;
    std::size_t breaches = 0;
    double max_ratio = 0.0;

    void check(const Vector& u, const Vector& a_half_u, const Vector& f) {
        if (!growth) return;
        const double bound =
            growth->K0 * (std::pow(u.norm(), 1.0 + growth->p) + std::pow(a_half_u.norm(), 1.0 + growth->q));
        const double size = f.norm();
        const double ratio = bound > 0.0 ? size / bound : (size > 0.0 ? kInfinity : 0.0);
        max_ratio = std::max(max_ratio, ratio);
        if (ratio > 1.05) ++breaches;
    }
};

Trajectory drive(const OperatorSpec& spec, const Trajectory::Forcing& rhs, Trajectory traj, const PhasePair& initial,
                 double t_end, const IntegratorOptions& options, const CertificateMonitor* monitor) {
    const Index n = spec.size();
    if (initial.size() != n)
        throw Error(ErrorCode::DimensionMismatch, "initial state has " + std::to_string(initial.size()) +
                                                      " modes, operator has " + std::to_string(n));
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw Error(ErrorCode::InvalidArgument, "t_end must be positive");
    if (!(options.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
    if (!initial.all_finite()) throw Error(ErrorCode::NonFiniteState, "initial state is not finite");

    const Scheme scheme = options.scheme;
    traj.meta().tol = options.tol;
    traj.meta().scheme = scheme;

    double max_step = options.max_step > 0.0 ? options.max_step : t_end / 500.0;
    if (scheme == Scheme::Lawson) max_step = std::min(max_step, 2.5 / spec.delta());

    auto sync_monitor = [&] {
        if (!monitor) return;
        traj.meta().certificate_breaches = monitor->breaches;
        traj.meta().max_certificate_ratio = monitor->max_ratio;
    };
    auto fail = [&](ErrorCode code, const std::string& message) {
        sync_monitor();
        traj.meta().completed = false;
        throw IntegrationError(code, message, std::move(traj));
    };

    double t = 0.0;
    PhasePair x = initial;
    Vector g = rhs(t, x);
    if (!g.allFinite()) throw Error(ErrorCode::NonFiniteState, "forcing is not finite at the initial state");
    traj.push(t, x, g);

    double h = options.initial_step;
    if (!(h > 0.0)) {
        const double scale = pack(x).norm();
        const double rate = system_derivative(spec, x, g).norm();
        h = (scale > 1e-5 && rate > 1e-5) ? 0.01 * scale / rate : 1e-6;
        if (scale == 0.0 && rate == 0.0) h = max_step;
    }
    h = std::min(h, max_step);

    std::array<Vector, 7> k;
    k[0] = frame_derivative(spec, scheme, x, g, 0.0);
    bool last_rejected = false;

    while (t < t_end) {
        if (traj.meta().steps >= options.max_steps)
            fail(ErrorCode::StepSizeUnderflow, "step budget exhausted at t = " + short_number(t, 12));
        bool final_step = false;
        if (t + 1.01 * h >= t_end) {
            h = t_end - t;
            final_step = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            fail(ErrorCode::StepSizeUnderflow,
                 "step size " + short_number(h) + " underflowed at t = " + short_number(t, 12) +
                     " (possible finite-time blowup)");

        const Vector y0 = pack(x);
        PhasePair x_stage;
        Vector g_stage;
        bool finite = true;
        for (int i = 1; i < 7 && finite; ++i) {
            Vector yi = y0;
            for (int j = 0; j < i; ++j)
                if (kA[i][j] != 0.0) yi += h * kA[i][j] * k[j];
            const double ch = kC[i] * h;
            x_stage = unpack(frame_flow(spec, scheme, yi, ch));
            g_stage = rhs(t + ch, x_stage);
            finite = x_stage.all_finite() && g_stage.allFinite();
            if (finite) k[i] = frame_derivative(spec, scheme, x_stage, g_stage, ch);
        }

        double err = kInfinity;
        Vector y1;
        PhasePair x1;
        if (finite) {
            y1 = y0;
            for (int j = 0; j < 6; ++j)
                if (kA[6][j] != 0.0) y1 += h * kA[6][j] * k[j];
            Vector delta_y = Vector::Zero(2 * n);
            for (int j = 0; j < 7; ++j)
                if (kE[j] != 0.0) delta_y += h * kE[j] * k[j];
            const Vector err_vec = frame_flow(spec, scheme, delta_y, h);
            // The last stage is evaluated at t + h, so it is the new state.
            x1 = x_stage;
            const Vector new_state = pack(x1);
            const double floor = 1e-8 * std::max(y0.cwiseAbs().maxCoeff(), new_state.cwiseAbs().maxCoeff());
            double acc = 0.0;
            for (Index i = 0; i < 2 * n; ++i) {
                const double sc = options.tol * (std::max(std::abs(y0[i]), std::abs(new_state[i])) + floor) + 1e-300;
                acc += (err_vec[i] / sc) * (err_vec[i] / sc);
            }
            err = std::sqrt(acc / static_cast<double>(2 * n));
            if (!std::isfinite(err)) err = kInfinity;
        }

        if (err <= 1.0) {
            std::vector<Vector> dense(5);
            const Vector ydiff = y1 - y0;
            const Vector bspl = h * k[0] - ydiff;
            dense[0] = y0;
            dense[1] = ydiff;
            dense[2] = bspl;
            dense[3] = ydiff - h * k[6] - bspl;
            dense[4] = Vector::Zero(2 * n);
            for (int j = 0; j < 7; ++j)
                if (kD[j] != 0.0) dense[4] += h * kD[j] * k[j];

            const double t_new = final_step ? t_end : t + h;
            traj.push(t_new, x1, g_stage, std::move(dense), scheme);
            ++traj.meta().steps;
            t = t_new;
            x = std::move(x1);
            k[0] = frame_derivative(spec, scheme, x, g_stage, 0.0);

            double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            factor = std::clamp(factor, 0.2, 5.0);
            if (last_rejected) factor = std::min(factor, 1.0);
            h = std::min(h * factor, max_step);
            last_rejected = false;
        } else {
            ++traj.meta().rejected;
            const double factor = std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0) : 0.2;
            h *= factor;
            last_rejected = true;
        }
    }
    sync_monitor();
    return traj;
}

}  // namespace

Nonlinearity zero_nonlinearity() {
    Nonlinearity f;
    f.eval = [](const Vector& u, const Vector&) { return Vector::Zero(u.size()); };
    f.growth = GrowthCertificate{0.0, 1.0, 1.0};
    f.lipschitz = LipschitzCertificate{0.0, 1.0, kInfinity};
    f.f0_zero = true;
    f.name = "zero";
    return f;
}

Nonlinearity in_mode_coordinates(const OperatorSpec& spec,
                                 std::function<Vector(const Vector& x, const Vector& a_half_x)> physical,
                                 std::string name) {
    Nonlinearity f;
    const Matrix basis = spec.basis();
    f.eval = [basis, physical = std::move(physical)](const Vector& u, const Vector& a_half_u) {
        return Vector(basis.transpose() * physical(basis * u, basis * a_half_u));
    };
    f.name = std::move(name);
    return f;
}

Trajectory::Trajectory(std::shared_ptr<const OperatorSpec> spec, Forcing forcing)
    : spec_(std::move(spec)), forcing_(std::move(forcing)) {}

void Trajectory::push(double t, PhasePair x, Vector g, std::vector<Vector> dense, Scheme scheme) {
    if (!times_.empty() && !(t > times_.back()))
        throw Error(ErrorCode::InvalidArgument, "trajectory times must increase");
    if (!times_.empty()) {
        dense_.push_back(std::move(dense));
        dense_scheme_.push_back(scheme);
    }
    times_.push_back(t);
    states_.push_back(std::move(x));
    g_values_.push_back(std::move(g));
}

std::size_t Trajectory::segment(double t) const {
    if (times_.empty()) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
    if (t < times_.front() || t > times_.back())
        throw Error(ErrorCode::InvalidArgument,
                    "t = " + std::to_string(t) + " outside [" + std::to_string(times_.front()) + ", " +
                        std::to_string(times_.back()) + "]");
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t j = static_cast<std::size_t>(std::distance(times_.begin(), it));
    return j == 0 ? 0 : std::min(j - 1, times_.size() - 2);
}

PhasePair Trajectory::at(double t) const {
    if (times_.size() == 1) {
        if (t != times_.front()) throw Error(ErrorCode::InvalidArgument, "single-node trajectory");
        return states_.front();
    }
    const std::size_t j = segment(t);
    const double t0 = times_[j];
    const double t1 = times_[j + 1];
    if (t == t0) return states_[j];
    if (t == t1) return states_[j + 1];
    const auto& dense = dense_[j];
    if (dense.size() != 5) return hermite(*spec_, t0, states_[j], g_values_[j], t1, states_[j + 1], g_values_[j + 1], t);

    const double h = t1 - t0;
    const double theta = (t - t0) / h;
    const double theta1 = 1.0 - theta;
    const Vector y = dense[0] + theta * (dense[1] + theta1 * (dense[2] + theta * (dense[3] + theta1 * dense[4])));
    return unpack(frame_flow(*spec_, dense_scheme_[j], y, t - t0));
}

Vector Trajectory::forcing_at(double t) const { return forcing_(t, at(t)); }

Trajectory Trajectory::subsample(std::size_t stride) const {
    if (stride == 0) throw Error(ErrorCode::InvalidArgument, "stride must be positive");
    Trajectory out(spec_, forcing_);
    out.meta_ = meta_;
    for (std::size_t i = 0; i < times_.size(); i += stride) out.push(times_[i], states_[i], g_values_[i]);
    if ((times_.size() - 1) % stride != 0) out.push(times_.back(), states_.back(), g_values_.back());
    return out;
}

Trajectory integrate(const OperatorSpec& spec, const Nonlinearity& f, const PhasePair& initial, double t_end,
                     const IntegratorOptions& options) {
    if (!f.eval) throw Error(ErrorCode::InvalidArgument, "nonlinearity has no evaluator");
    auto spec_ptr = std::make_shared<const OperatorSpec>(spec);
    Trajectory::Forcing forcing = [spec_ptr, eval = f.eval](double, const PhasePair& x) {
        return eval(x.u, spec_ptr->a_half(x.u));
    };
    CertificateMonitor monitor{f.growth};
    Trajectory::Forcing monitored = [&](double, const PhasePair& x) {
        const Vector a_half_u = spec_ptr->a_half(x.u);
        Vector value = f.eval(x.u, a_half_u);
        if (value.size() != x.size()) throw Error(ErrorCode::DimensionMismatch, "nonlinearity returned wrong length");
        if (value.allFinite()) monitor.check(x.u, a_half_u, value);
        return value;
    };
    return drive(spec, monitored, Trajectory(spec_ptr, std::move(forcing)), initial, t_end, options, &monitor);
}

Trajectory integrate_forced(const OperatorSpec& spec, std::function<Vector(double)> g, const PhasePair& initial,
                            double t_end, const IntegratorOptions& options) {
    if (!g) throw Error(ErrorCode::InvalidArgument, "forcing has no evaluator");
    auto spec_ptr = std::make_shared<const OperatorSpec>(spec);
    Trajectory::Forcing forcing = [g = std::move(g)](double t, const PhasePair&) { return g(t); };
    return drive(spec, forcing, Trajectory(spec_ptr, forcing), initial, t_end, options, nullptr);
}

double energy_residual(const OperatorSpec& spec, const Trajectory& traj) {
    if (traj.empty()) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
    // Five-point Gauss-Legendre on [0, 1].
    static constexpr std::array<double, 5> nodes = {0.046910077030668, 0.230765344947158, 0.5, 0.769234655052842,
                                                    0.953089922969332};
    static constexpr std::array<double, 5> weights = {0.118463442528095, 0.239314335249683, 0.284444444444444,
                                                      0.239314335249683, 0.118463442528095};
    const double delta = spec.delta();
    auto energy = [&](const PhasePair& x) {
        return x.v.squaredNorm() + spec.eigenvalues().dot(x.u.cwiseAbs2());
    };
    double worst = 0.0;
    const auto& times = traj.times();
    for (std::size_t j = 0; j + 1 < times.size(); ++j) {
        const double a = times[j];
        const double h = times[j + 1] - a;
        double integral = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double s = a + nodes[i] * h;
            const PhasePair x = traj.at(s);
            const Vector g = traj.forcing()(s, x);
            integral += weights[i] * (-4.0 * delta * x.v.squaredNorm() + 2.0 * x.v.dot(g));
        }
        integral *= h;
        const double defect = energy(traj.states()[j + 1]) - energy(traj.states()[j]) - integral;
        worst = std::max(worst, std::abs(defect));
    }
    return worst;
}

}  // namespace decaylab
