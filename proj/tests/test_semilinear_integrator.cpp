#include <gtest/gtest.h>

#include <cmath>

#include "decaylab/duhamel.hpp"
#include "decaylab/error.hpp"
#include "decaylab/scenarios.hpp"
#include "decaylab/semilinear_integrator.hpp"
#include "support.hpp"

using namespace decaylab;
using decaylab::testing::Gen;
using decaylab::testing::max_abs;
using decaylab::testing::max_abs_diff;

namespace {

double max_relative_error(const Scenario& s, const Trajectory& traj) {
    double worst = 0.0;
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const PhasePair exact = s.exact(traj.times()[j]);
        for (Index k = 0; k < exact.size(); ++k)
            worst = std::max(worst, std::abs(traj.states()[j].u[k] - exact.u[k]) / std::abs(exact.u[k]));
    }
    return worst;
}

}  // namespace

TEST(Integrate, LinearFlowIsReproduced) {
    Gen gen(61);
    for (int trial = 0; trial < 10; ++trial) {
        const OperatorSpec spec = gen.operator_spec(6);
        const PhasePair x0 = gen.pair(spec.size());
        for (Scheme scheme : {Scheme::Lawson, Scheme::Classical}) {
            IntegratorOptions options;
            options.scheme = scheme;
            const Trajectory traj = integrate(spec, zero_nonlinearity(), x0, 20.0, options);
            for (std::size_t j = 0; j < traj.size(); j += 7)
                EXPECT_LE(max_abs_diff(traj.states()[j], propagate(spec, x0, traj.times()[j])),
                          1e-8 * std::max(1.0, max_abs(x0)));
        }
    }
}

TEST(Integrate, ClosedFormSlowSolution) {
    const Scenario s = slow_counterexample(200.0);
    for (Scheme scheme : {Scheme::Lawson, Scheme::Classical}) {
        IntegratorOptions options;
        options.scheme = scheme;
        const Trajectory traj = integrate(*s.spec, s.f, s.initial, 200.0, options);
        EXPECT_DOUBLE_EQ(traj.t_end(), 200.0);
        EXPECT_LE(max_relative_error(s, traj), 1e-6);
        EXPECT_EQ(traj.meta().certificate_breaches, 0u);
    }
}

TEST(Integrate, ErrorShrinksWithTolerance) {
    const Scenario s = slow_counterexample(50.0);
    IntegratorOptions loose, tight;
    loose.tol = 1e-6;
    tight.tol = 1e-9;
    const double e_loose = max_relative_error(s, integrate(*s.spec, s.f, s.initial, 50.0, loose));
    const double e_tight = max_relative_error(s, integrate(*s.spec, s.f, s.initial, 50.0, tight));
    EXPECT_LT(e_tight * 2.0, e_loose);
}

TEST(Integrate, DenseOutputBetweenNodes) {
    const Scenario s = slow_counterexample(20.0);
    const Trajectory traj = integrate(*s.spec, s.f, s.initial, 20.0);
    for (double t = 0.013; t < 20.0; t += 0.61) EXPECT_NEAR(traj.at(t).u[0], s.exact(t).u[0], 1e-8 * s.exact(t).u[0]);
    const Trajectory coarse = traj.subsample(4);
    EXPECT_EQ(coarse.t_end(), traj.t_end());
    for (double t = 0.013; t < 20.0; t += 0.61) EXPECT_NEAR(coarse.at(t).u[0], s.exact(t).u[0], 1e-6);
}

TEST(Integrate, BlowupRaisesUnderflowWithPartialTrajectory) {
    const Scenario s = blowup_scenario();
    try {
        integrate(*s.spec, s.f, s.initial, 1.0);
        FAIL() << "expected blowup";
    } catch (const IntegrationError& e) {
        EXPECT_EQ(e.code(), ErrorCode::StepSizeUnderflow);
        EXPECT_FALSE(e.partial().meta().completed);
        EXPECT_GE(e.partial().t_end(), 0.49);
        EXPECT_LE(e.partial().t_end(), 0.5);
    }
}

TEST(Integrate, RejectsNonFiniteInitialData) {
    const OperatorSpec spec = OperatorSpec::from_eigenvalues(0.5, {1.0});
    PhasePair x = PhasePair::zero(1);
    x.u[0] = std::nan("");
    try {
        integrate(spec, zero_nonlinearity(), x, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonFiniteState);
    }
}

TEST(Integrate, AutonomousRestart) {
    const Scenario s = slow_counterexample();
    const Trajectory straight = integrate(*s.spec, s.f, s.initial, 30.0);
    const Trajectory first = integrate(*s.spec, s.f, s.initial, 10.0);
    const Trajectory second = integrate(*s.spec, s.f, first.states().back(), 20.0);
    EXPECT_LE(max_abs_diff(second.states().back(), straight.states().back()), 1e-9);
}

TEST(Integrate, CertificateBreachesAreCounted) {
    const OperatorSpec spec = OperatorSpec::from_eigenvalues(0.5, {1.0});
    Nonlinearity f = in_mode_coordinates(spec, [](const Vector& u, const Vector&) { return Vector(-u.array().cube().matrix()); });
    f.growth = GrowthCertificate{0.01, 2.0, 2.0};
    const Trajectory traj = integrate(spec, f, {Vector::Ones(1), Vector::Zero(1)}, 5.0);
    EXPECT_GT(traj.meta().certificate_breaches, 0u);
    EXPECT_GT(traj.meta().max_certificate_ratio, 1.05);
}

TEST(EnergyResidual, KernelOnlyLinearFlow) {
    const OperatorSpec spec = OperatorSpec::from_eigenvalues(0.5, {0.0, 0.0});
    const Trajectory traj = integrate(spec, zero_nonlinearity(), {Vector::Ones(2), Vector::Constant(2, -0.7)}, 20.0);
    EXPECT_LE(energy_residual(spec, traj), 1e-9);
}

TEST(EnergyResidual, SlowSystem) {
    const Scenario s = slow_counterexample(100.0);
    const Trajectory traj = integrate(*s.spec, s.f, s.initial, 100.0);
    EXPECT_LE(energy_residual(*s.spec, traj), 1e-9);
}

TEST(EnergyResidual, ForcedLinearAgreesWithDuhamelSolver) {
    Gen gen(67);
    const OperatorSpec spec = gen.operator_spec(5);
    const Index n = spec.size();
    const Vector a = gen.vector(n);
    auto g = [a](double t) { return Vector(a * std::cos(2.0 * t) * std::exp(-0.2 * t)); };
    const PhasePair x0 = gen.pair(n);
    const Trajectory traj = integrate_forced(spec, g, x0, 10.0);
    EXPECT_LE(energy_residual(spec, traj), 1e-9 * std::max(1.0, max_abs(x0) * max_abs(x0)));

    const ForcingSampler sampler{g, a.norm(), 0.2};
    const std::vector<double> grid = uniform_grid(10.0, 20);
    const auto reference = solve_nonhomogeneous_ivp(spec, sampler, x0, grid);
    for (std::size_t j = 0; j < grid.size(); ++j)
        EXPECT_LE(max_abs_diff(traj.at(grid[j]), reference[j]), 1e-8 * std::max(1.0, max_abs(reference[j])));
}

TEST(Nonlinearity, ModeWrapperUsesPhysicalCoordinates) {
    Matrix m(2, 2);
    m << 2.0, 1.0, 1.0, 2.0;
    const OperatorSpec spec = diagonalize(m, 1.0);
    const Nonlinearity f =
        in_mode_coordinates(spec, [](const Vector& x, const Vector&) { return Vector((Vector(2) << x[0] * x[0], 0.0).finished()); });
    const Vector x = (Vector(2) << 0.3, -0.4).finished();
    const Vector got = spec.to_physical(f(spec, spec.to_modes(x)));
    EXPECT_NEAR(got[0], 0.09, 1e-15);
    EXPECT_NEAR(got[1], 0.0, 1e-15);
}
