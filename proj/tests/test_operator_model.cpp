#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "decaylab/error.hpp"
#include "decaylab/operator_model.hpp"
#include "support.hpp"

using namespace decaylab;

namespace {

std::vector<double> rates_of(double delta, std::vector<double> eig) {
    return decay_rate_set(OperatorSpec::from_eigenvalues(delta, std::move(eig))).rates;
}

void expect_rates(const std::vector<double>& got, const std::vector<double>& want, double tol = 1e-12) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "rate " << i;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Diagonalize, IdentityKeepsIdentityBasis) {
    const OperatorSpec spec = diagonalize(Matrix::Identity(2, 2), 1.0);
    EXPECT_DOUBLE_EQ(spec.eigenvalue(0), 1.0);
    EXPECT_DOUBLE_EQ(spec.eigenvalue(1), 1.0);
    EXPECT_LT((spec.basis().cwiseAbs() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Diagonalize, DiagonalInputIsSorted) {
    Matrix m(2, 2);
    m << 0.09, 0.0, 0.0, 0.0;
    const OperatorSpec spec = diagonalize(m, 0.5);
    EXPECT_DOUBLE_EQ(spec.eigenvalue(0), 0.0);
    EXPECT_NEAR(spec.eigenvalue(1), 0.09, 1e-15);
}

TEST(Diagonalize, TwoByTwoHandEigenpairs) {
    Matrix m(2, 2);
    m << 2.0, 1.0, 1.0, 2.0;
    const OperatorSpec spec = diagonalize(m, 1.0);
    EXPECT_NEAR(spec.eigenvalue(0), 1.0, 1e-14);
    EXPECT_NEAR(spec.eigenvalue(1), 3.0, 1e-14);
    const double s = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(std::abs(spec.basis()(0, 0)), s, 1e-14);
    EXPECT_NEAR(spec.basis()(0, 0), -spec.basis()(1, 0), 1e-14);
    EXPECT_NEAR(spec.basis()(0, 1), spec.basis()(1, 1), 1e-14);
}

TEST(Diagonalize, RejectsAsymmetricAndNegative) {
    Matrix asym(2, 2);
    asym << 1.0, 0.5, 0.0, 1.0;
    EXPECT_EQ(code_of([&] { diagonalize(asym, 1.0); }), ErrorCode::NotSymmetric);
    Matrix neg(1, 1);
    neg << -0.1;
    EXPECT_EQ(code_of([&] { diagonalize(neg, 1.0); }), ErrorCode::NegativeSpectrum);
}

TEST(Diagonalize, ClampsTinyNegativeEigenvalues) {
    Matrix m(1, 1);
    m << -1e-12;
    const OperatorSpec spec = diagonalize(m, 1.0);
    EXPECT_EQ(spec.eigenvalue(0), 0.0);
    EXPECT_TRUE(spec.in_kernel(0));
}

TEST(Diagonalize, ReconstructsRandomMatrices) {
    decaylab::testing::Gen gen(11);
    for (int trial = 0; trial < 50; ++trial) {
        const double delta = gen.uniform(0.1, 2.0);
        const Matrix m = gen.matrix(gen.spectrum(gen.integer(1, 10), delta));
        const OperatorSpec spec = diagonalize(m, delta);
        const Matrix back = spec.basis() * spec.eigenvalues().asDiagonal() * spec.basis().transpose();
        EXPECT_LE((back - m).norm(), 1e-8 * std::max(1.0, m.norm()));
        EXPECT_LE((spec.basis().transpose() * spec.basis() - Matrix::Identity(m.rows(), m.rows())).cwiseAbs().maxCoeff(),
                  1e-10);
    }
}

TEST(ModeRoots, OverdampedCriticalComplex) {
    const RootPair a = mode_roots(0.09, 0.5);
    EXPECT_EQ(a.kind, RootKind::RealSplit);
    EXPECT_NEAR(a.r1, 0.1, 1e-15);
    EXPECT_NEAR(a.r2, 0.9, 1e-15);

    const RootPair b = mode_roots(1.0, 1.0);
    EXPECT_EQ(b.kind, RootKind::Critical);
    EXPECT_EQ(b.r1, 1.0);
    EXPECT_EQ(b.r2, 1.0);

    const RootPair c = mode_roots(2.0, 1.0);
    EXPECT_EQ(c.kind, RootKind::Complex);
    EXPECT_EQ(c.r1, 1.0);
    EXPECT_NEAR(c.phi, 1.0, 1e-15);
}

TEST(ModeRoots, NearCriticalUsesCriticalBranch) {
    EXPECT_EQ(mode_roots(0.25 + 1e-11, 0.5).kind, RootKind::Critical);
    EXPECT_EQ(mode_roots(0.25 - 1e-11, 0.5).kind, RootKind::Critical);
    EXPECT_EQ(mode_roots(0.25 - 1e-6, 0.5).kind, RootKind::RealSplit);
}

TEST(ModeRoots, VietaRelationsOnRandomOverdampedModes) {
    decaylab::testing::Gen gen(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const double delta = gen.uniform(0.1, 2.0);
        const double lambda = gen.uniform(0.0, 0.999) * delta * delta;
        const RootPair r = mode_roots(lambda, delta);
        ASSERT_EQ(r.kind, RootKind::RealSplit);
        EXPECT_NEAR(r.r1 + r.r2, 2.0 * delta, 1e-12 * 2.0 * delta);
        EXPECT_NEAR(r.r1 * r.r2, lambda, 1e-12 * std::max(lambda, 1e-300) + 1e-300);
        EXPECT_LT(r.r1, delta);
        EXPECT_GT(r.r2, delta);
    }
}

TEST(DecayRateSet, OptimalityExampleSet) {
    expect_rates(rates_of(0.5, {0.09, 0.16}), {0.1, 0.2, 0.8, 0.9});
}

TEST(DecayRateSet, CriticalOnly) { expect_rates(rates_of(1.0, {1.0}), {1.0}); }

TEST(DecayRateSet, MixedOverAndUnderdamped) { expect_rates(rates_of(1.0, {0.75, 2.0}), {0.5, 1.0, 1.5}); }

TEST(DecayRateSet, PerRateModesAndIndexLookup) {
    const DecayRateSet d = decay_rate_set(OperatorSpec::from_eigenvalues(0.5, {0.0, 0.09}));
    expect_rates(d.rates, {0.0, 0.1, 0.9, 1.0});
    EXPECT_EQ(d.per_rate_modes[0], std::vector<Index>{0});
    EXPECT_EQ(d.per_rate_modes[1], std::vector<Index>{1});
    EXPECT_EQ(d.index_of(0.9), 2u);
    EXPECT_FALSE(d.contains(0.5));
    EXPECT_EQ(code_of([&] { d.index_of(0.5); }), ErrorCode::RateNotInSet);
}

TEST(DecayRateSet, PropertiesOnRandomSpectra) {
    decaylab::testing::Gen gen(5);
    for (int trial = 0; trial < 200; ++trial) {
        const double delta = gen.uniform(0.1, 2.0);
        std::vector<double> eig = gen.spectrum(gen.integer(1, 10), delta);
        const DecayRateSet d = decay_rate_set(OperatorSpec::from_eigenvalues(delta, eig));

        EXPECT_GE(d.min(), 0.0);
        EXPECT_LE(d.max(), 2.0 * delta + 1e-12);
        EXPECT_TRUE(std::is_sorted(d.rates.begin(), d.rates.end()));
        const bool has_kernel = std::count(eig.begin(), eig.end(), 0.0) > 0;
        EXPECT_EQ(has_kernel, d.contains(0.0) && d.contains(2.0 * delta));
        const bool has_delta_mode =
            std::any_of(eig.begin(), eig.end(), [&](double l) { return l >= delta * delta || is_critical(l, delta); });
        EXPECT_EQ(has_delta_mode, d.contains(delta));

        std::vector<double> shuffled = eig;
        std::reverse(shuffled.begin(), shuffled.end());
        shuffled.push_back(eig.front());
        const DecayRateSet d2 = decay_rate_set(OperatorSpec::from_eigenvalues(delta, shuffled));
        expect_rates(d2.rates, d.rates, 0.0);
    }
}

TEST(NuMu, HandValues) {
    NuMu a = nu_mu(OperatorSpec::from_eigenvalues(0.5, {0.0, 0.09}));
    EXPECT_NEAR(a.nu, 0.09, 1e-15);
    EXPECT_NEAR(a.mu, 0.036, 1e-15);
    NuMu b = nu_mu(OperatorSpec::from_eigenvalues(1.0, {0.0}));
    EXPECT_EQ(b.nu, 1.0);
    EXPECT_NEAR(b.mu, 0.2, 1e-15);
    NuMu c = nu_mu(OperatorSpec::from_eigenvalues(0.5, {4.0}));
    EXPECT_EQ(c.nu, 4.0);
    EXPECT_EQ(c.mu, 0.25);
}

TEST(NuMu, BoundedByHalfDeltaAndHalf) {
    decaylab::testing::Gen gen(17);
    for (int trial = 0; trial < 200; ++trial) {
        const OperatorSpec spec = gen.operator_spec();
        const NuMu nm = nu_mu(spec);
        EXPECT_LE(nm.mu, 0.5);
        EXPECT_LE(nm.mu, spec.delta() / 2.0);
        EXPECT_DOUBLE_EQ(nm.mu, std::min({0.5, nm.nu / 2.0, spec.delta() / 2.0, nm.nu / (5.0 * spec.delta())}));
    }
}

TEST(AlphaBeta, Neighbours) {
    const DecayRateSet d = decay_rate_set(OperatorSpec::from_eigenvalues(0.5, {0.09, 0.16}));
    AlphaBeta ab = alpha_beta(d, 0.15);
    ASSERT_TRUE(ab.alpha0.has_value());
    EXPECT_NEAR(*ab.alpha0, 0.1, 1e-15);
    EXPECT_NEAR(ab.beta0, 0.2, 1e-15);

    const DecayRateSet single = decay_rate_set(OperatorSpec::from_eigenvalues(0.5, {0.25}));
    ab = alpha_beta(single, 0.25);
    EXPECT_FALSE(ab.alpha0.has_value());
    EXPECT_NEAR(ab.beta0, 0.5, 1e-15);

    const DecayRateSet kernel = decay_rate_set(OperatorSpec::from_eigenvalues(1.0, {0.0}));
    ab = alpha_beta(kernel, 3.0);
    EXPECT_EQ(*ab.alpha0, 2.0);
    EXPECT_EQ(ab.beta0, kInfinity);
}

TEST(AlphaBeta, CollisionIsAnError) {
    const DecayRateSet d = decay_rate_set(OperatorSpec::from_eigenvalues(0.5, {0.09}));
    EXPECT_EQ(code_of([&] { alpha_beta(d, 0.1 + 1e-12); }), ErrorCode::RateCollision);
}

TEST(OperatorSpec, RejectsNonPositiveDamping) {
    EXPECT_THROW(OperatorSpec::from_eigenvalues(0.0, {1.0}), Error);
    EXPECT_THROW(OperatorSpec::from_eigenvalues(0.5, {-1.0}), Error);
}

TEST(OperatorSpec, ModeRoundTripAndHalfPower) {
    decaylab::testing::Gen gen(23);
    const Matrix m = gen.matrix({0.0, 1.0, 4.0});
    const OperatorSpec spec = diagonalize(m, 0.7);
    const Vector x = gen.vector(3);
    EXPECT_LT((spec.to_physical(spec.to_modes(x)) - x).cwiseAbs().maxCoeff(), 1e-13);
    const Vector modes = spec.to_modes(x);
    EXPECT_NEAR(spec.a_half(modes).squaredNorm(), x.dot(m * x), 1e-12);
    EXPECT_NEAR(spec.kernel_complement(modes)[0], 0.0, 0.0);
}
