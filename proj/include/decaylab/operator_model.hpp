#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace decaylab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Shape of the roots of z^2 - 2*delta*z + lambda.
enum class RootKind { RealSplit, Critical, Complex };

/// Roots of the characteristic polynomial of one mode.
///
/// RealSplit: two real roots r1 < delta < r2.  Critical: double root
/// r1 = r2 = delta.  Complex: roots delta +/- i*phi, reported as r1 = r2 = delta.
struct RootPair {
    double lambda = 0.0;
    RootKind kind = RootKind::Complex;
    double r1 = 0.0;
    double r2 = 0.0;
    double phi = 0.0;
};

/// Two decay rates are the same element of the rate set when they differ by
/// at most this much.
double rate_tolerance(double delta) noexcept;

/// lambda is treated as delta^2 (critical damping) within this band.
bool is_critical(double lambda, double delta) noexcept;

RootPair mode_roots(double lambda, double delta);

/// The pair (delta, A) held through a finite eigensystem.  Mode coordinates
/// are coordinates in `basis()`; every state in the library is expressed in
/// them.
class OperatorSpec {
public:
    /// Eigenvalues are sorted ascending; the basis is the matching
    /// permutation of identity columns.
    static OperatorSpec from_eigenvalues(double delta, std::vector<double> eigenvalues);

    /// Low-level constructor; checks every invariant.
    OperatorSpec(double delta, Vector eigenvalues, Matrix basis, std::optional<Matrix> matrix = std::nullopt);

    double delta() const noexcept { return delta_; }
    Index size() const noexcept { return eigenvalues_.size(); }
    const Vector& eigenvalues() const noexcept { return eigenvalues_; }
    double eigenvalue(Index k) const { return eigenvalues_[k]; }
    const Matrix& basis() const noexcept { return basis_; }
    const std::optional<Matrix>& matrix() const noexcept { return matrix_; }
    const std::vector<RootPair>& roots() const noexcept { return roots_; }
    const RootPair& root(Index k) const { return roots_[static_cast<std::size_t>(k)]; }

    bool in_kernel(Index k) const { return eigenvalues_[k] == 0.0; }

    Vector to_modes(const Vector& physical) const;
    Vector to_physical(const Vector& modes) const;

    /// A^{1/2} applied to a vector of mode coefficients.
    Vector a_half(const Vector& modes) const;
    /// Q: orthogonal projection onto ker(A)^perp, in mode coordinates.
    Vector kernel_complement(const Vector& modes) const;

private:
    double delta_;
    Vector eigenvalues_;
    Matrix basis_;
    std::optional<Matrix> matrix_;
    std::vector<RootPair> roots_;
};

/// Symmetric eigendecomposition of `matrix`.  Eigenvalues within
/// tol * max(1, max|eigenvalue|) of zero are set to exactly 0.
OperatorSpec diagonalize(const Matrix& matrix, double delta, double tol = 1e-10);

/// The finite set of real parts of the roots of z^2 - 2*delta*z + lambda over
/// the spectrum, with the modes feeding each element.
struct DecayRateSet {
    /// Strictly ascending.
    std::vector<double> rates;
    /// Aligned with `rates`: modes with a component at that rate.
    std::vector<std::vector<Index>> per_rate_modes;
    /// Per mode: rate indices of its r1 and r2 components.  Both entries
    /// are the index of delta for critical and complex modes.
    std::vector<std::pair<std::size_t, std::size_t>> mode_rates;
    double tolerance = 0.0;

    std::size_t size() const noexcept { return rates.size(); }
    double min() const { return rates.front(); }
    double max() const { return rates.back(); }
    std::optional<std::size_t> find(double rate) const;
    bool contains(double rate) const { return find(rate).has_value(); }
    /// Index of `rate`, throwing RateNotInSet when absent.
    std::size_t index_of(double rate) const;
};

DecayRateSet decay_rate_set(const OperatorSpec& spec);

struct NuMu {
    double nu = 1.0;
    double mu = 0.5;
};

/// nu: smallest positive eigenvalue (1 for the null operator).
/// mu = min{1/2, nu/2, delta/2, nu/(5 delta)}.
NuMu nu_mu(const OperatorSpec& spec);

struct AlphaBeta {
    std::optional<double> alpha0;
    double beta0 = kInfinity;
};

/// Neighbours of gamma0 in the rate set.  Throws RateCollision when gamma0
/// is itself a rate.
AlphaBeta alpha_beta(const DecayRateSet& rates, double gamma0);

/// Smallest rate strictly above r0, or +infinity when r0 is the maximum.
double next_rate_above(const DecayRateSet& rates, double r0);

}  // namespace decaylab
