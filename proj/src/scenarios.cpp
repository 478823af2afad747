#include "decaylab/scenarios.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include "decaylab/error.hpp"

namespace decaylab {

namespace {

Vector vec(std::initializer_list<double> values) {
    Vector out(static_cast<Index>(values.size()));
    Index i = 0;
    for (double v : values) out[i++] = v;
    return out;
}

Vector to_vector(const std::vector<double>& values) {
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

Scenario finish(Scenario s) {
    s.rates = decay_rate_set(*s.spec);
    return s;
}

// Isotropic power law f(u) = c |u|^p u.
Nonlinearity power_nonlinearity(const OperatorSpec& spec, double c, double p) {
    Nonlinearity f = in_mode_coordinates(
        spec, [c, p](const Vector& x, const Vector&) { return Vector(c * std::pow(x.norm(), p) * x); }, "power");
    f.growth = GrowthCertificate{std::abs(c), p, p};
    f.lipschitz = LipschitzCertificate{std::abs(c) * (1.0 + p), p, kInfinity};
    return f;
}

// Componentwise cubic f(u)_i = c u_i^3.
Nonlinearity cubic_nonlinearity(const OperatorSpec& spec, double c) {
    Nonlinearity f = in_mode_coordinates(
        spec, [c](const Vector& x, const Vector&) { return Vector(c * x.array().cube().matrix()); }, "cubic");
    f.growth = GrowthCertificate{std::abs(c), 2.0, 2.0};
    // |a^3 - b^3| <= 3/2 (a^2 + b^2)|a - b| per component.
    f.lipschitz = LipschitzCertificate{1.5 * std::abs(c), 2.0, kInfinity};
    return f;
}

Pipeline parse_pipeline(const Config& config, Pipeline fallback) {
    if (!config.has("pipeline")) return fallback;
    Pipeline p{false, false, false};
    for (const auto& step : config.get_strings("pipeline")) {
        if (step == "simulate") p.simulate = true;
        else if (step == "classify") p.simulate = p.classify = true;
        else if (step == "construct") p.construct = true;
        else throw Error(ErrorCode::ConfigError, "pipeline: unknown step '" + step + "'");
    }
    return p;
}

PhasePair physical_pair(const Config& config, const OperatorSpec& spec, const std::string& prefix,
                        const PhasePair& fallback_modes) {
    const Index n = spec.size();
    if (!config.has(prefix + ".u") && !config.has(prefix + ".v")) return fallback_modes;
    auto read = [&](const std::string& key) -> Vector {
        if (!config.has(key)) return Vector::Zero(n);
        const Vector x = to_vector(config.get_doubles(key));
        if (x.size() != n)
            throw Error(ErrorCode::ConfigError, key + ": expected " + std::to_string(n) + " entries, got " +
                                                    std::to_string(x.size()));
        return spec.to_modes(x);
    };
    return {read(prefix + ".u"), read(prefix + ".v")};
}

std::optional<ConstructRequest> parse_construct(const Config& config, const OperatorSpec& spec,
                                                std::optional<ConstructRequest> fallback) {
    const bool any = std::any_of(config.entries().begin(), config.entries().end(),
                                 [](const auto& kv) { return kv.first.rfind("construct.", 0) == 0; });
    if (!any) return fallback;
    ConstructRequest req = fallback.value_or(ConstructRequest{});
    const Index n = spec.size();
    if (!fallback) {
        req.v_pair = PhasePair::zero(n);
        req.z_pair = PhasePair::zero(n);
    }
    req.r0 = config.get_double("construct.r0", req.r0);
    if (config.has("construct.v_u") || config.has("construct.v_v")) {
        Config sub;
        if (config.has("construct.v_u")) sub.set("p.u", config.get_string("construct.v_u"));
        if (config.has("construct.v_v")) sub.set("p.v", config.get_string("construct.v_v"));
        req.v_pair = physical_pair(sub, spec, "p", req.v_pair);
    }
    if (config.has("construct.z_u") || config.has("construct.z_v")) {
        Config sub;
        if (config.has("construct.z_u")) sub.set("p.u", config.get_string("construct.z_u"));
        if (config.has("construct.z_v")) sub.set("p.v", config.get_string("construct.z_v"));
        req.z_pair = physical_pair(sub, spec, "p", req.z_pair);
    }
    req.epsilon0 = config.get_double("construct.epsilon0", req.epsilon0);
    req.grid_step = config.get_double("construct.grid_step", req.grid_step);
    req.t_end = config.get_double("construct.t_end", req.t_end);
    req.options.tol = config.get_double("construct.tol", req.options.tol);
    req.options.max_iter = static_cast<int>(config.get_int("construct.max_iter", req.options.max_iter));
    req.options.override_smallness = config.get_bool("construct.override_smallness", req.options.override_smallness);
    if (!(req.r0 > 0.0)) throw Error(ErrorCode::ConfigError, "construct.r0: must be a positive rate");
    if (!(req.grid_step > 0.0)) throw Error(ErrorCode::ConfigError, "construct.grid_step: must be positive");
    if (!(req.t_end > req.grid_step)) throw Error(ErrorCode::ConfigError, "construct.t_end: must exceed grid_step");
    return req;
}

Nonlinearity custom_nonlinearity(const Config& config, const OperatorSpec& spec) {
    const std::string type = config.get_string("nonlinearity.type", "zero");
    if (type == "zero") return zero_nonlinearity();
    if (type == "power")
        return power_nonlinearity(spec, config.get_double("nonlinearity.coefficient", -1.0),
                                  config.get_double("nonlinearity.p", 2.0));
    if (type == "cubic") return cubic_nonlinearity(spec, config.get_double("nonlinearity.coefficient", 1.0));
    if (type == "kirchhoff") {
        if (spec.eigenvalues().cwiseAbs().maxCoeff() != 0.0)
            throw Error(ErrorCode::ConfigError, "nonlinearity.type: kirchhoff requires the null operator");
        return kirchhoff_nonlinearity(config.get_matrix("nonlinearity.B"), config.get_double("nonlinearity.alpha", 1.0));
    }
    throw Error(ErrorCode::ConfigError, "nonlinearity.type: unknown type '" + type + "'");
}

}  // namespace

Nonlinearity kirchhoff_nonlinearity(const Matrix& B, double alpha) {
    if (B.rows() != B.cols() || B.rows() == 0) throw Error(ErrorCode::NotCoercive, "B must be a square matrix");
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, B.cwiseAbs().maxCoeff()))
        throw Error(ErrorCode::NotCoercive, "B must be symmetric");
    if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
    const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(B).eigenvalues();
    if (!(eig.minCoeff() > 0.0))
        throw Error(ErrorCode::NotCoercive, "smallest eigenvalue of B is " + std::to_string(eig.minCoeff()));
    const double top = eig.maxCoeff();

    Nonlinearity f;
    f.eval = [B, alpha](const Vector& u, const Vector&) {
        const Vector bu = B * u;
        const double b_norm_sq = std::max(0.0, u.dot(bu));
        return Vector(-std::pow(b_norm_sq, alpha) * bu);
    };
    f.growth = GrowthCertificate{std::pow(top, alpha + 1.0), 2.0 * alpha, 2.0 * alpha};
    f.lipschitz = LipschitzCertificate{(1.0 + 2.0 * alpha) * std::pow(top, alpha + 1.0), 2.0 * alpha, kInfinity};
    f.f0_zero = true;
    f.name = "kirchhoff";
    return f;
}

double kirchhoff_hamiltonian(const Matrix& B, double alpha, const PhasePair& x) {
    const double b_norm_sq = std::max(0.0, x.u.dot(B * x.u));
    return x.v.squaredNorm() + std::pow(b_norm_sq, alpha + 1.0) / (alpha + 1.0);
}

double kirchhoff_dissipation_defect(const Matrix& B, double alpha, const Trajectory& traj) {
    static constexpr std::array<double, 5> nodes = {0.046910077030668004, 0.23076534494715845, 0.5,
                                                    0.76923465505284155, 0.95308992296933200};
    static constexpr std::array<double, 5> weights = {0.11846344252809454, 0.23931433524968324,
                                                      0.28444444444444444, 0.23931433524968324,
                                                      0.11846344252809454};
    double worst = 0.0;
    const auto& times = traj.times();
    for (std::size_t j = 0; j + 1 < times.size(); ++j) {
        const double h = times[j + 1] - times[j];
        double dissipated = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            dissipated += weights[i] * 2.0 * traj.at(times[j] + nodes[i] * h).v.squaredNorm();
        dissipated *= h;
        const double change = kirchhoff_hamiltonian(B, alpha, traj.states()[j + 1]) -
                              kirchhoff_hamiltonian(B, alpha, traj.states()[j]);
        worst = std::max(worst, std::abs(change + dissipated));
    }
    return worst;
}

Scenario slow_counterexample(double t_end, double tol) {
    Scenario s;
    s.name = s.builtin = "slow_counterexample";
    s.spec = std::make_shared<const OperatorSpec>(OperatorSpec::from_eigenvalues(0.5, {0.0, 1.0}));
    s.f.eval = [](const Vector& u, const Vector&) {
        const double x = u[0];
        const double x3 = x * x * x;
        const double x5 = x3 * x * x;
        const double x7 = x5 * x * x;
        return vec({-x3 + 3.0 * x5, x3 - 3.0 * x5 + 15.0 * x7});
    };
    // |f| <= 13.2 |x|^3 while |x| <= 1, and |x| <= |u|.
    s.f.growth = GrowthCertificate{14.0, 2.0, 2.0};
    s.f.name = "slow_counterexample";
    s.initial = PhasePair(vec({1.0, 1.0}), vec({-1.0, -3.0}));
    s.t_end = t_end;
    s.tol = tol;
    s.exact = [](double t) {
        const double x = 1.0 / std::sqrt(1.0 + 2.0 * t);
        const double x3 = x * x * x;
        const double x5 = x3 * x * x;
        return PhasePair(vec({x, x3}), vec({-x3, -3.0 * x5}));
    };
    return finish(std::move(s));
}

Scenario fast_optimality(double r0, double beta0, double p, double q, double t_end, double tol) {
    if (!(0.0 < r0 && r0 < beta0 && beta0 < 0.5))
        throw Error(ErrorCode::InvalidArgument, "fast_optimality needs 0 < r0 < beta0 < 1/2");
    if (!(p > 0.0 && q > 0.0)) throw Error(ErrorCode::InvalidArgument, "fast_optimality needs p, q > 0");
    Scenario s;
    s.name = s.builtin = "fast_optimality";
    const double lambda_x = r0 - r0 * r0;
    s.spec = std::make_shared<const OperatorSpec>(OperatorSpec::from_eigenvalues(0.5, {lambda_x, beta0 - beta0 * beta0}));
    // Both eigenvalues are below delta^2 = 1/4 and lambda_x < lambda_y, so mode 0 is x.
    s.f.eval = [p, q](const Vector& u, const Vector&) {
        const double ax = std::abs(u[0]);
        return vec({0.0, std::pow(ax, 1.0 + p) + std::pow(ax, 1.0 + q)});
    };
    // |x|^{1+q} <= (|A^{1/2}u| / sqrt(lambda_x))^{1+q}.
    s.f.growth = GrowthCertificate{std::max(1.0, std::pow(lambda_x, -0.5 * (1.0 + q))), p, q};
    s.f.name = "fast_optimality";
    s.initial = PhasePair(vec({1.0, 0.0}), vec({-r0, 0.0}));
    s.t_end = t_end;
    s.tol = tol;
    const double bound = std::min({beta0, (1.0 + p) * r0, (1.0 + q) * r0});
    s.verify_gammas = {0.95 * bound, 1.05 * bound};
    s.notes.push_back("x(t) = exp(-r0 t) exactly");
    return finish(std::move(s));
}

Scenario kirchhoff_scenario(const Matrix& B, double alpha, const Vector& u0, const Vector& u1, double t_end,
                            double tol) {
    const Index n = B.rows();
    if (u0.size() != n || u1.size() != n)
        throw Error(ErrorCode::DimensionMismatch, "initial data must match the size of B");
    Scenario s;
    s.name = s.builtin = "kirchhoff";
    s.spec = std::make_shared<const OperatorSpec>(
        OperatorSpec::from_eigenvalues(0.5, std::vector<double>(static_cast<std::size_t>(n), 0.0)));
    s.f = kirchhoff_nonlinearity(B, alpha);
    s.kirchhoff = KirchhoffData{B, alpha};
    s.initial = PhasePair(u0, u1);
    s.t_end = t_end;
    s.tol = tol;
    return finish(std::move(s));
}

ConstructRequest kirchhoff_fast_request(const Matrix& B, double alpha, double eps, double t_end) {
    (void)alpha;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(B);
    const Vector e = solver.eigenvectors().col(0);
    ConstructRequest req;
    req.r0 = 1.0;
    req.v_pair = PhasePair(eps * e, -eps * e);
    req.z_pair = PhasePair::zero(B.rows());
    req.grid_step = 0.05;
    req.t_end = t_end;
    req.options.tol = 1e-13;
    return req;
}

Scenario ode_scalar(double p, double u0, double u1, double t_end, double tol) {
    if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "ode_scalar needs p > 0");
    Scenario s;
    s.name = s.builtin = "ode_scalar";
    s.spec = std::make_shared<const OperatorSpec>(OperatorSpec::from_eigenvalues(0.5, {0.0}));
    s.f = power_nonlinearity(*s.spec, -1.0, p);
    s.f.name = "ode_scalar";
    s.initial = PhasePair(vec({u0}), vec({u1}));
    s.t_end = t_end;
    s.tol = tol;
    return finish(std::move(s));
}

Scenario blowup_scenario(double t_end, double tol) {
    Scenario s;
    s.name = s.builtin = "blowup";
    s.spec = std::make_shared<const OperatorSpec>(OperatorSpec::from_eigenvalues(0.5, {0.0}));
    s.f.eval = [](const Vector& u, const Vector&) {
        const double x = u[0];
        return vec({x * x * x + 3.0 * std::pow(x, 5)});
    };
    s.f.name = "blowup";
    s.initial = PhasePair(vec({1.0}), vec({1.0}));
    s.t_end = t_end;
    s.tol = tol;
    s.pipeline.classify = false;
    s.exact = [](double t) {
        const double u = 1.0 / std::sqrt(1.0 - 2.0 * t);
        return PhasePair(vec({u}), vec({u * u * u}));
    };
    return finish(std::move(s));
}

Scenario random_linear(unsigned long seed, int n, double t_end, double tol) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "random_linear needs n >= 1");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double delta = 0.1 + 1.9 * unit(gen);
    Vector eigenvalues(n);
    for (Index k = 0; k < n; ++k) eigenvalues[k] = unit(gen) < 0.2 ? 0.0 : 4.0 * delta * delta * unit(gen);
    Matrix gauss(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) gauss(i, j) = normal(gen);
    const Matrix q = Eigen::HouseholderQR<Matrix>(gauss).householderQ();
    Matrix m = q * eigenvalues.asDiagonal() * q.transpose();
    m = 0.5 * (m + m.transpose());

    Scenario s;
    s.name = "random_linear_" + std::to_string(seed);
    s.builtin = "random_linear";
    s.seed = seed;
    s.spec = std::make_shared<const OperatorSpec>(diagonalize(m, delta, 1e-10));
    s.f = zero_nonlinearity();
    Vector u0(n), u1(n);
    for (Index k = 0; k < n; ++k) {
        u0[k] = 2.0 * unit(gen) - 1.0;
        u1[k] = 2.0 * unit(gen) - 1.0;
    }
    s.initial = PhasePair(s.spec->to_modes(u0), s.spec->to_modes(u1));
    s.t_end = t_end;
    s.tol = tol;
    return finish(std::move(s));
}

std::vector<std::string> builtin_names() {
    return {"slow_counterexample", "fast_optimality", "kirchhoff", "ode_scalar", "blowup", "random_linear", "custom"};
}

namespace {

void reject_unknown_keys(const Config& config) {
    static const std::set<std::string> known = {
        "scenario", "name", "seed", "t_end", "tol", "pipeline", "verify.gammas",
        "fast.r0", "fast.beta0", "fast.p", "fast.q",
        "kirchhoff.B", "kirchhoff.alpha", "kirchhoff.fast", "kirchhoff.eps",
        "ode.p", "random.n",
        "operator.delta", "operator.eigenvalues", "operator.matrix", "operator.tol",
        "nonlinearity.type", "nonlinearity.coefficient", "nonlinearity.p", "nonlinearity.B", "nonlinearity.alpha",
        "initial.u", "initial.v",
        "construct.r0", "construct.v_u", "construct.v_v", "construct.z_u", "construct.z_v", "construct.epsilon0",
        "construct.grid_step", "construct.t_end", "construct.tol", "construct.max_iter",
        "construct.override_smallness"};
    for (const auto& [key, value] : config.entries())
        if (!known.contains(key)) throw Error(ErrorCode::ConfigError, config.source() + ": unknown key '" + key + "'");
}

}  // namespace

Scenario build_scenario(const Config& config) {
    reject_unknown_keys(config);
    const std::string builtin = config.get_string("scenario", "custom");
    const double t_end_key = config.get_double("t_end", 0.0);
    const double tol = config.get_double("tol", 1e-10);
    if (!(tol > 0.0)) throw Error(ErrorCode::ConfigError, "tol: must be positive");
    if (config.has("t_end") && !(t_end_key > 0.0)) throw Error(ErrorCode::ConfigError, "t_end: must be positive");
    auto t_end_or = [&](double fallback) { return config.has("t_end") ? t_end_key : fallback; };

    Scenario s;
    try {
        if (builtin == "slow_counterexample") {
            s = slow_counterexample(t_end_or(200.0), tol);
        } else if (builtin == "fast_optimality") {
            s = fast_optimality(config.get_double("fast.r0", 0.1), config.get_double("fast.beta0", 0.2),
                                config.get_double("fast.p", 1.0), config.get_double("fast.q", 1.0), t_end_or(250.0),
                                tol);
        } else if (builtin == "kirchhoff") {
            const Matrix B = config.has("kirchhoff.B") ? config.get_matrix("kirchhoff.B")
                                                       : Matrix(Vector(vec({1.0, 2.0})).asDiagonal());
            const double alpha = config.get_double("kirchhoff.alpha", 1.0);
            const Index n = B.rows();
            Vector u0 = config.has("initial.u") ? to_vector(config.get_doubles("initial.u")) : Vector::Ones(n);
            Vector u1 = config.has("initial.v") ? to_vector(config.get_doubles("initial.v")) : Vector::Zero(n);
            if (u0.size() != n || u1.size() != n)
                throw Error(ErrorCode::ConfigError, "initial.u/initial.v: must have one entry per row of kirchhoff.B");
            s = kirchhoff_scenario(B, alpha, u0, u1, t_end_or(4000.0), tol);
            if (config.get_bool("kirchhoff.fast", false))
                s.construct = kirchhoff_fast_request(B, alpha, config.get_double("kirchhoff.eps", 0.02),
                                                     config.get_double("construct.t_end", 15.0));
        } else if (builtin == "ode_scalar") {
            const double p = config.get_double("ode.p", 2.0);
            const auto u0 = config.has("initial.u") ? config.get_doubles("initial.u") : std::vector<double>{1.0};
            const auto u1 = config.has("initial.v") ? config.get_doubles("initial.v") : std::vector<double>{0.0};
            if (u0.size() != 1 || u1.size() != 1)
                throw Error(ErrorCode::ConfigError, "initial.u/initial.v: ode_scalar takes one value each");
            s = ode_scalar(p, u0[0], u1[0], t_end_or(4000.0), tol);
        } else if (builtin == "blowup") {
            s = blowup_scenario(t_end_or(1.0), tol);
        } else if (builtin == "random_linear") {
            s = random_linear(static_cast<unsigned long>(config.get_int("seed", 1)),
                              static_cast<int>(config.get_int("random.n", 5)), t_end_or(50.0), tol);
        } else if (builtin == "custom") {
            const double delta = config.get_double("operator.delta");
            if (!(delta > 0.0)) throw Error(ErrorCode::ConfigError, "operator.delta: must be positive");
            s.builtin = "custom";
            if (config.has("operator.matrix")) {
                s.spec = std::make_shared<const OperatorSpec>(
                    diagonalize(config.get_matrix("operator.matrix"), delta, config.get_double("operator.tol", 1e-10)));
            } else if (config.has("operator.eigenvalues")) {
                s.spec = std::make_shared<const OperatorSpec>(
                    OperatorSpec::from_eigenvalues(delta, config.get_doubles("operator.eigenvalues")));
            } else {
                throw Error(ErrorCode::ConfigError, "operator: give operator.eigenvalues or operator.matrix");
            }
            s.f = custom_nonlinearity(config, *s.spec);
            s.initial = physical_pair(config, *s.spec, "initial", PhasePair::zero(s.spec->size()));
            s.t_end = t_end_or(100.0);
            s.tol = tol;
            s = finish(std::move(s));
        } else {
            throw Error(ErrorCode::ConfigError, "scenario: unknown builtin '" + builtin + "'");
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(ErrorCode::ConfigError, config.source() + ": " + e.what());
    }

    if (builtin != "custom" && builtin != "kirchhoff" && builtin != "ode_scalar" &&
        (config.has("initial.u") || config.has("initial.v")))
        s.initial = physical_pair(config, *s.spec, "initial", s.initial);
    s.name = config.get_string("name", s.name);
    s.seed = static_cast<unsigned long>(config.get_int("seed", static_cast<long>(s.seed)));
    s.pipeline = parse_pipeline(config, s.pipeline);
    s.construct = parse_construct(config, *s.spec, s.construct);
    if (s.construct && !config.has("pipeline")) s.pipeline.construct = true;
    if (config.has("verify.gammas")) s.verify_gammas = config.get_doubles("verify.gammas");
    return s;
}

}  // namespace decaylab
