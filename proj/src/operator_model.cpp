#include "decaylab/operator_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "decaylab/error.hpp"

namespace decaylab {

double rate_tolerance(double delta) noexcept { return 1e-9 * (1.0 + 2.0 * delta); }

bool is_critical(double lambda, double delta) noexcept {
    return std::abs(lambda - delta * delta) <= 1e-9 * (1.0 + delta * delta);
}

RootPair mode_roots(double lambda, double delta) {
    if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
    if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "eigenvalue must be nonnegative");

    RootPair root;
    root.lambda = lambda;
    if (is_critical(lambda, delta)) {
        root.kind = RootKind::Critical;
        root.r1 = root.r2 = delta;
    } else if (lambda < delta * delta) {
        root.kind = RootKind::RealSplit;
        const double s = std::sqrt(delta * delta - lambda);
        root.r2 = delta + s;
        // delta - s cancels badly for small lambda; r1 * r2 = lambda does not.
        root.r1 = lambda / root.r2;
    } else {
        root.kind = RootKind::Complex;
        root.r1 = root.r2 = delta;
        root.phi = std::sqrt(lambda - delta * delta);
    }
    return root;
}

OperatorSpec OperatorSpec::from_eigenvalues(double delta, std::vector<double> eigenvalues) {
    const auto n = static_cast<Index>(eigenvalues.size());
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "operator needs at least one eigenvalue");

    std::vector<Index> order(eigenvalues.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return eigenvalues[a] < eigenvalues[b]; });

    Vector sorted(n);
    Matrix basis = Matrix::Zero(n, n);
    for (Index k = 0; k < n; ++k) {
        sorted[k] = eigenvalues[static_cast<std::size_t>(order[k])];
        basis(order[k], k) = 1.0;
    }
    return OperatorSpec(delta, std::move(sorted), std::move(basis));
}

OperatorSpec::OperatorSpec(double delta, Vector eigenvalues, Matrix basis, std::optional<Matrix> matrix)
    : delta_(delta), eigenvalues_(std::move(eigenvalues)), basis_(std::move(basis)), matrix_(std::move(matrix)) {
    if (!(delta_ > 0.0) || !std::isfinite(delta_))
        throw Error(ErrorCode::InvalidArgument, "delta must be positive and finite");
    const Index n = eigenvalues_.size();
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "operator needs at least one eigenvalue");
    if (basis_.rows() != n || basis_.cols() != n)
        throw Error(ErrorCode::DimensionMismatch, "basis must be N x N");
    for (Index k = 0; k < n; ++k) {
        if (!std::isfinite(eigenvalues_[k]))
            throw Error(ErrorCode::InvalidArgument, "eigenvalues must be finite");
        if (eigenvalues_[k] < 0.0)
            throw Error(ErrorCode::NegativeSpectrum,
                        "eigenvalue " + std::to_string(eigenvalues_[k]) + " is negative");
        if (k > 0 && eigenvalues_[k] < eigenvalues_[k - 1])
            throw Error(ErrorCode::InvalidArgument, "eigenvalues must be ascending");
    }
    const double ortho = (basis_.transpose() * basis_ - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (ortho > 1e-10) throw Error(ErrorCode::InvalidArgument, "basis is not orthonormal");
    if (matrix_) {
        if (matrix_->rows() != n || matrix_->cols() != n)
            throw Error(ErrorCode::DimensionMismatch, "matrix must be N x N");
    }

    roots_.reserve(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) roots_.push_back(mode_roots(eigenvalues_[k], delta_));
}

Vector OperatorSpec::to_modes(const Vector& physical) const {
    if (physical.size() != size()) throw Error(ErrorCode::DimensionMismatch, "vector length differs from N");
    return basis_.transpose() * physical;
}

Vector OperatorSpec::to_physical(const Vector& modes) const {
    if (modes.size() != size()) throw Error(ErrorCode::DimensionMismatch, "vector length differs from N");
    return basis_ * modes;
}

Vector OperatorSpec::a_half(const Vector& modes) const {
    return eigenvalues_.cwiseSqrt().cwiseProduct(modes);
}

Vector OperatorSpec::kernel_complement(const Vector& modes) const {
    Vector out = modes;
    for (Index k = 0; k < size(); ++k)
        if (in_kernel(k)) out[k] = 0.0;
    return out;
}

OperatorSpec diagonalize(const Matrix& matrix, double delta, double tol) {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0)
        throw Error(ErrorCode::DimensionMismatch, "matrix must be square and nonempty");
    if (!matrix.allFinite()) throw Error(ErrorCode::InvalidArgument, "matrix has non-finite entries");
    const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol)
        throw Error(ErrorCode::NotSymmetric, "asymmetry " + std::to_string(asym) + " exceeds tolerance");

    const Matrix sym = 0.5 * (matrix + matrix.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::InvalidArgument, "symmetric eigensolver did not converge");

    Vector eigenvalues = solver.eigenvalues();
    // Roundoff-sized eigenvalues of either sign belong to the kernel.
    const double kernel_tol = tol * std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());
    for (Index k = 0; k < eigenvalues.size(); ++k) {
        if (eigenvalues[k] < -tol)
            throw Error(ErrorCode::NegativeSpectrum,
                        "eigenvalue " + std::to_string(eigenvalues[k]) + " is below -tol");
        if (std::abs(eigenvalues[k]) <= kernel_tol) eigenvalues[k] = 0.0;
    }
    return OperatorSpec(delta, std::move(eigenvalues), solver.eigenvectors(), matrix);
}

std::optional<std::size_t> DecayRateSet::find(double rate) const {
    for (std::size_t i = 0; i < rates.size(); ++i)
        if (std::abs(rates[i] - rate) <= tolerance) return i;
    return std::nullopt;
}

std::size_t DecayRateSet::index_of(double rate) const {
    if (auto i = find(rate)) return *i;
    throw Error(ErrorCode::RateNotInSet, "rate " + std::to_string(rate) + " is not in the decay-rate set");
}

DecayRateSet decay_rate_set(const OperatorSpec& spec) {
    struct Entry {
        double rate;
        Index mode;
        int slot;  // 0: r1 component, 1: r2 component, 2: whole mode at delta
    };
    const double delta = spec.delta();
    std::vector<Entry> entries;
    for (Index k = 0; k < spec.size(); ++k) {
        const RootPair& root = spec.root(k);
        if (root.kind == RootKind::RealSplit) {
            entries.push_back({root.r1, k, 0});
            entries.push_back({root.r2, k, 1});
        } else {
            entries.push_back({delta, k, 2});
        }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.rate < b.rate; });

    DecayRateSet out;
    out.tolerance = rate_tolerance(delta);
    out.mode_rates.assign(static_cast<std::size_t>(spec.size()), {0, 0});

    std::size_t i = 0;
    while (i < entries.size()) {
        std::size_t j = i;
        bool has_delta = false;
        while (j < entries.size() && entries[j].rate - entries[i].rate <= out.tolerance) {
            has_delta = has_delta || entries[j].slot == 2;
            ++j;
        }
        const std::size_t index = out.rates.size();
        out.rates.push_back(has_delta ? delta : entries[i].rate);
        std::vector<Index> modes;
        for (std::size_t e = i; e < j; ++e) {
            const auto& entry = entries[e];
            auto& slots = out.mode_rates[static_cast<std::size_t>(entry.mode)];
            if (entry.slot == 0) slots.first = index;
            else if (entry.slot == 1) slots.second = index;
            else slots = {index, index};
            if (std::find(modes.begin(), modes.end(), entry.mode) == modes.end()) modes.push_back(entry.mode);
        }
        std::sort(modes.begin(), modes.end());
        out.per_rate_modes.push_back(std::move(modes));
        i = j;
    }
    return out;
}

NuMu nu_mu(const OperatorSpec& spec) {
    NuMu out;
    out.nu = 1.0;
    for (Index k = 0; k < spec.size(); ++k) {
        if (spec.eigenvalue(k) > 0.0) {
            out.nu = spec.eigenvalue(k);
            break;
        }
    }
    const double delta = spec.delta();
    out.mu = std::min({0.5, out.nu / 2.0, delta / 2.0, out.nu / (5.0 * delta)});
    return out;
}

AlphaBeta alpha_beta(const DecayRateSet& rates, double gamma0) {
    if (!(gamma0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma0 must be positive");
    if (rates.contains(gamma0))
        throw Error(ErrorCode::RateCollision,
                    "gamma0 = " + std::to_string(gamma0) + " coincides with an element of the rate set");
    AlphaBeta out;
    for (double r : rates.rates) {
        if (r < gamma0) out.alpha0 = r;
        else if (r > gamma0) {
            out.beta0 = r;
            break;
        }
    }
    return out;
}

double next_rate_above(const DecayRateSet& rates, double r0) {
    for (double r : rates.rates)
        if (r > r0 + rates.tolerance) return r;
    return kInfinity;
}

}  // namespace decaylab
