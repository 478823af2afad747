#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "decaylab/config.hpp"
#include "decaylab/diagnostics.hpp"
#include "decaylab/emit.hpp"
#include "decaylab/error.hpp"
#include "decaylab/scenarios.hpp"
#include "support.hpp"

using namespace decaylab;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorCode::InvalidArgument;
}

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("decaylab_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Config, SectionsCommentsAndLists) {
    const Config c = Config::parse("name = demo  # trailing\n[operator]\ndelta = 0.5\neigenvalues = 0, 0.09\n"
                                   "matrix = 2, 1; 1, 2\n");
    EXPECT_EQ(c.get_string("name"), "demo");
    EXPECT_DOUBLE_EQ(c.get_double("operator.delta"), 0.5);
    EXPECT_EQ(c.get_doubles("operator.eigenvalues"), (std::vector<double>{0.0, 0.09}));
    const Matrix m = c.get_matrix("operator.matrix");
    EXPECT_EQ(m(0, 1), 1.0);
    EXPECT_EQ(m(1, 1), 2.0);
}

TEST(Config, ErrorsNameTheField) {
    EXPECT_NE(message_of([] { Config::parse("a = 1\na = 2\n", "f.cfg"); }).find("f.cfg:2"), std::string::npos);
    const Config c = Config::parse("x = abc\nm = 1, 2; 3\nb = maybe\n");
    EXPECT_NE(message_of([&] { c.get_double("x"); }).find("x"), std::string::npos);
    EXPECT_NE(message_of([&] { c.get_double("missing"); }).find("missing"), std::string::npos);
    EXPECT_EQ(code_of([&] { c.get_matrix("m"); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([&] { c.get_bool("b", false); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { Config::load("/nonexistent/decaylab.cfg"); }), ErrorCode::IoError);
}

TEST(Kirchhoff, IdentityFormula) {
    const Nonlinearity f = kirchhoff_nonlinearity(Matrix::Identity(2, 2), 1.0);
    const Vector u = (Vector(2) << 2.0, 0.0).finished();
    const Vector got = f.eval(u, Vector::Zero(2));
    EXPECT_DOUBLE_EQ(got[0], -8.0);
    EXPECT_DOUBLE_EQ(got[1], 0.0);
    EXPECT_EQ(f.eval(Vector::Zero(2), Vector::Zero(2)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Kirchhoff, SimpleModeReducesToScalarOde) {
    Matrix B(1, 1);
    B << 2.0;
    const Nonlinearity f = kirchhoff_nonlinearity(B, 1.0);
    for (double x : {-0.7, 0.1, 1.3}) EXPECT_NEAR(f.eval(Vector::Constant(1, x), Vector::Zero(1))[0], -4.0 * x * x * x, 1e-14);
    EXPECT_DOUBLE_EQ(f.growth->K0, 4.0);
    EXPECT_DOUBLE_EQ(f.growth->p, 2.0);
}

TEST(Kirchhoff, RejectsDegenerateB) {
    Matrix B(2, 2);
    B << 1.0, 0.0, 0.0, 0.0;
    EXPECT_EQ(code_of([&] { kirchhoff_nonlinearity(B, 1.0); }), ErrorCode::NotCoercive);
    Matrix asym(2, 2);
    asym << 1.0, 0.3, 0.0, 1.0;
    EXPECT_EQ(code_of([&] { kirchhoff_nonlinearity(asym, 1.0); }), ErrorCode::NotCoercive);
}

TEST(Kirchhoff, GrowthCertificateHoldsOnRandomStates) {
    decaylab::testing::Gen gen(91);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = gen.integer(1, 5);
        std::vector<double> eig;
        for (int k = 0; k < n; ++k) eig.push_back(gen.uniform(0.2, 3.0));
        const Matrix B = gen.matrix(eig);
        const double alpha = gen.uniform(0.25, 2.0);
        const Nonlinearity f = kirchhoff_nonlinearity(B, alpha);
        const Vector u = gen.vector(n);
        EXPECT_LE(f.eval(u, Vector::Zero(n)).norm(), f.growth->K0 * std::pow(u.norm(), 1.0 + 2.0 * alpha) * (1.0 + 1e-12));
        const Vector w = gen.vector(n);
        const double lhs = (f.eval(u, Vector::Zero(n)) - f.eval(w, Vector::Zero(n))).norm();
        const double rhs = f.lipschitz->L * (std::pow(u.norm(), 2.0 * alpha) + std::pow(w.norm(), 2.0 * alpha)) * (u - w).norm();
        EXPECT_LE(lhs, rhs * (1.0 + 1e-12));
    }
}

TEST(Kirchhoff, DampedHamiltonianIdentity) {
    Matrix B(2, 2);
    B << 1.0, 0.0, 0.0, 2.0;
    const Scenario s = kirchhoff_scenario(B, 1.0, Vector::Ones(2), Vector::Zero(2), 100.0);
    const Trajectory traj = integrate(*s.spec, s.f, s.initial, s.t_end);
    EXPECT_LE(kirchhoff_dissipation_defect(B, 1.0, traj), 1e-9);
    // Half the dissipation would leave a visible defect.
    double half_defect = 0.0;
    for (std::size_t j = 0; j + 1 < traj.size(); ++j) {
        const double h = traj.times()[j + 1] - traj.times()[j];
        const double mid = 0.5 * (traj.times()[j] + traj.times()[j + 1]);
        const double change = kirchhoff_hamiltonian(B, 1.0, traj.states()[j + 1]) -
                              kirchhoff_hamiltonian(B, 1.0, traj.states()[j]);
        half_defect = std::max(half_defect, std::abs(change + h * traj.at(mid).v.squaredNorm()));
    }
    EXPECT_GT(half_defect, 1e-6);
}

TEST(Kirchhoff, GenericDataIsSlow) {
    Matrix B(2, 2);
    B << 1.0, 0.0, 0.0, 2.0;
    const Scenario s = kirchhoff_scenario(B, 1.0, Vector::Ones(2), Vector::Zero(2), 4000.0);
    const Trajectory traj = integrate(*s.spec, s.f, s.initial, s.t_end);
    const DecayReport r = classify(*s.spec, s.rates, s.f, traj);
    ASSERT_EQ(r.verdict, Verdict::Slow) << r.note;
    EXPECT_NEAR(*r.fitted_power, -0.5, 0.02);
}

TEST(Builtins, ParameterRanges) {
    EXPECT_THROW(fast_optimality(0.3, 0.2), Error);
    EXPECT_THROW(fast_optimality(0.1, 0.6), Error);
    EXPECT_THROW(ode_scalar(-1.0), Error);
    EXPECT_THROW(random_linear(1, 0), Error);
}

TEST(Builtins, SlowCounterexampleCertificate) {
    const Scenario s = slow_counterexample();
    decaylab::testing::Gen gen(97);
    for (int trial = 0; trial < 200; ++trial) {
        const Vector u = gen.vector(2, 0.4);
        if (std::abs(u[0]) > 1.0) continue;
        const double bound = s.f.growth->K0 * (std::pow(u.norm(), 3.0) + std::pow(s.spec->a_half(u).norm(), 3.0));
        EXPECT_LE(s.f(*s.spec, u).norm(), bound);
    }
}

TEST(Builtins, RandomLinearIsDeterministic) {
    const Scenario a = random_linear(5);
    const Scenario b = random_linear(5);
    const Scenario c = random_linear(6);
    EXPECT_EQ(a.spec->eigenvalues(), b.spec->eigenvalues());
    EXPECT_EQ(a.initial.u, b.initial.u);
    EXPECT_NE(a.spec->delta(), c.spec->delta());
}

TEST(BuildScenario, BuiltinWithOverrides) {
    const Scenario s = build_scenario(Config::parse("scenario = fast_optimality\nt_end = 120\n[fast]\nr0 = 0.15\n"));
    EXPECT_EQ(s.builtin, "fast_optimality");
    EXPECT_EQ(s.t_end, 120.0);
    EXPECT_TRUE(s.rates.contains(0.15));
}

TEST(BuildScenario, CustomOperatorAndConstruct) {
    const Scenario s = build_scenario(Config::parse(
        "name = c\n[operator]\ndelta = 0.5\neigenvalues = 0.09\n[nonlinearity]\ntype = cubic\n"
        "[construct]\nr0 = 0.1\nv_u = 0.02\nv_v = -0.002\nt_end = 50\n"));
    EXPECT_EQ(s.name, "c");
    ASSERT_TRUE(s.construct.has_value());
    EXPECT_TRUE(s.pipeline.construct);
    EXPECT_NEAR(s.construct->v_pair.u[0], 0.02, 1e-15);
    EXPECT_DOUBLE_EQ(s.f.lipschitz->L, 1.5);
}

TEST(BuildScenario, ConfigErrors) {
    EXPECT_NE(message_of([] { build_scenario(Config::parse("scenario = nope\n")); }).find("scenario"), std::string::npos);
    EXPECT_EQ(code_of([] { build_scenario(Config::parse("[operator]\ndelta = 0.5\n")); }), ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { build_scenario(Config::parse("[operator]\ndelta = 0.5\neigenvalues = -1\n")); }),
              ErrorCode::ConfigError);
    EXPECT_EQ(code_of([] { build_scenario(Config::parse("scenario = fast_optimality\nfast.r0 = 0.4\n")); }),
              ErrorCode::ConfigError);
    EXPECT_NE(message_of([] { build_scenario(Config::parse("initial.u = 1, 2\n[operator]\ndelta = 0.5\neigenvalues = 1\n")); })
                  .find("initial.u"),
              std::string::npos);
    EXPECT_NE(message_of([] { build_scenario(Config::parse("[operator]\ndelta = 0.5\neigenvalues = 1\ninitial.u = 1\n")); })
                  .find("operator.initial.u"),
              std::string::npos);
    EXPECT_EQ(code_of([] { build_scenario(Config::parse("scenario = ode_scalar\npipeline = simulate, dance\n")); }),
              ErrorCode::ConfigError);
}

TEST(Emit, FormatKeepsSeventeenDigits) {
    EXPECT_EQ(format_double(0.1), "1.0000000000000001e-01");
    EXPECT_EQ(std::stod(format_double(M_PI)), M_PI);
    EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Emit, EmptyTrajectoryWritesNothing) {
    const fs::path dir = scratch_dir("empty");
    const Trajectory empty;
    EXPECT_THROW(write_atomic(dir / "t.csv", trajectory_csv(empty)), Error);
    EXPECT_FALSE(fs::exists(dir / "t.csv"));
    EXPECT_FALSE(fs::exists(dir / "t.csv.tmp"));
}

TEST(Emit, TraceSchema) {
    const Scenario s = slow_counterexample(10.0);
    const Trajectory traj = integrate(*s.spec, s.f, s.initial, 10.0);
    std::istringstream in(trace_csv(*s.spec, s.rates, traj, 2.0));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# decay-lab v1");
    std::getline(in, line);
    EXPECT_EQ(line, "t,norm_u,norm_Ahalf_u,norm_v,E,E_hat,G_p,G_hat_p,comp_0,comp_0.5,comp_1");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, traj.size());
}

TEST(Emit, ReportIsSingleRow) {
    DecayReport r;
    r.verdict = Verdict::Slow;
    r.fitted_power = -0.5;
    r.note = "a, b";
    std::istringstream in(report_csv("demo", r));
    std::string header, columns, row, extra;
    std::getline(in, header);
    std::getline(in, columns);
    std::getline(in, row);
    EXPECT_FALSE(std::getline(in, extra));
    EXPECT_EQ(row.rfind("demo,slow,", 0), 0u);
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(columns.begin(), columns.end(), ','));
}

TEST(Emit, AtomicWriteReplaces) {
    const fs::path dir = scratch_dir("atomic");
    write_atomic(dir / "a.csv", "one\n");
    write_atomic(dir / "a.csv", "two\n");
    std::ifstream in(dir / "a.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "two");
    EXPECT_EQ(code_of([] { write_atomic("/proc/decaylab/x.csv", "x"); }), ErrorCode::IoError);
}
