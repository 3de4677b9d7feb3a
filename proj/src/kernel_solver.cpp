#include "mmv/kernel_solver.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>

namespace mmv {

namespace {

constexpr double kMeanTol = 1e-9;
constexpr std::size_t kEnumerationMaxAtoms = 20;
constexpr int kNewtonMaxIter = 500;

// Constraint matrix [1 | B] of the martingale conditions in basis coordinates.
Matrix constraint_matrix(const MarketModel& market) {
    const Matrix& basis = market.orthonormal_basis();
    Matrix a(basis.rows(), basis.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(basis.cols()) = basis;
    return a;
}

Vector unit_rhs(Eigen::Index k) {
    Vector b = Vector::Zero(k);
    b[0] = 1.0;
    return b;
}

struct DualState {
    Vector mu;
    Vector y;
    Vector gradient;
    double value = 0.0;
};

// Dual of min E[y^2]/2 s.t. A^T P y = b, y >= 0:
//   D(mu) = mu.b - E[((A mu)^+)^2] / 2,   y = (A mu)^+.
DualState evaluate_dual(const Matrix& a, const Vector& p, const Vector& b, const Vector& mu) {
    DualState s;
    s.mu = mu;
    s.y = (a * mu).cwiseMax(0.0);
    s.gradient = b - a.transpose() * p.cwiseProduct(s.y);
    s.value = mu.dot(b) - 0.5 * p.dot(s.y.cwiseProduct(s.y));
    return s;
}

enum class NewtonOutcome { Converged, Unbounded, Stalled };

struct NewtonResult {
    NewtonOutcome outcome;
    DualState state;
    int iterations = 0;
};

NewtonResult dual_newton(const Matrix& a, const Vector& p, const Vector& b, Vector mu) {
    const Eigen::Index k = a.cols();
    DualState s = evaluate_dual(a, p, b, mu);
    const double mu_scale = 1.0 + mu.norm();
    for (int iter = 0; iter < kNewtonMaxIter; ++iter) {
        const double tol = 1e-13 * std::max(1.0, s.y.lpNorm<Eigen::Infinity>());
        if (s.gradient.lpNorm<Eigen::Infinity>() <= tol) {
            return {NewtonOutcome::Converged, s, iter};
        }
        const Vector z = a * s.mu;
        Vector w(p.size());
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            w[i] = z[i] > 0.0 ? p[i] : 0.0;
        }
        Matrix h = a.transpose() * w.asDiagonal() * a;
        const double reg = 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
        h.diagonal().array() += reg;
        const Vector d = h.ldlt().solve(s.gradient);
        const double slope = s.gradient.dot(d);
        if (!(slope > 0.0) || !d.allFinite()) {
            return {NewtonOutcome::Stalled, s, iter};
        }
        double t = 1.0;
        bool accepted = false;
        while (t > 1e-14) {
            DualState trial = evaluate_dual(a, p, b, s.mu + t * d);
            if (trial.value >= s.value + 1e-4 * t * slope) {
                s = std::move(trial);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // Line search fails only at round-off level; accept if already tight.
            if (s.gradient.lpNorm<Eigen::Infinity>() <= 1e-10 * std::max(1.0, s.y.lpNorm<Eigen::Infinity>())) {
                return {NewtonOutcome::Converged, s, iter};
            }
            return {NewtonOutcome::Stalled, s, iter};
        }
        if (s.mu.norm() > 1e10 * mu_scale) {
            return {NewtonOutcome::Unbounded, s, iter};
        }
    }
    (void)k;
    return {NewtonOutcome::Stalled, s, kNewtonMaxIter};
}

struct SupportSolution {
    Vector y;
    Vector mu;
    double objective = 0.0;
};

// Equality-constrained least norm with y fixed to zero off `free_mask`.
std::optional<SupportSolution> solve_on_support(const Matrix& a, const Vector& p, const Vector& b,
                                                std::uint32_t free_mask) {
    const Eigen::Index n = a.rows();
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (free_mask & (1u << i)) {
            free.push_back(i);
        }
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    // In z = sqrt(p) y coordinates the constraints read C z = b.
    Matrix c(a.cols(), nf);
    for (Eigen::Index j = 0; j < nf; ++j) {
        c.col(j) = std::sqrt(p[free[j]]) * a.row(free[j]).transpose();
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(c);
    const Vector zf = cod.solve(b);
    if ((c * zf - b).lpNorm<Eigen::Infinity>() > 1e-10) {
        return std::nullopt;
    }
    SupportSolution out;
    out.y = Vector::Zero(n);
    for (Eigen::Index j = 0; j < nf; ++j) {
        const double yj = zf[j] / std::sqrt(p[free[j]]);
        if (yj < -1e-12) {
            return std::nullopt;
        }
        out.y[free[j]] = std::max(0.0, yj);
    }
    out.objective = zf.squaredNorm();
    // z_F = C^T mu.
    out.mu = c.transpose().completeOrthogonalDecomposition().solve(zf);
    return out;
}

std::optional<SupportSolution> enumerate_active_sets(const Matrix& a, const Vector& p, const Vector& b) {
    const auto n = static_cast<std::uint32_t>(a.rows());
    std::optional<SupportSolution> best;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        auto candidate = solve_on_support(a, p, b, mask);
        if (candidate && (!best || candidate->objective < best->objective)) {
            best = std::move(candidate);
        }
    }
    return best;
}

KernelReport make_report(const MarketModel& market, const Vector& density, const Vector& mu) {
    KernelReport report{Kernel(Payoff(market.space(), density)), 0.0, 0.0, 0, 0.0, Vector()};
    report.min_density = density.minCoeff();
    report.kkt_residual = martingale_residual(market, density);
    report.active_set_size = static_cast<std::size_t>((density.array() == 0.0).count());
    report.constant_multiplier = mu[0];
    report.span_multipliers = mu.tail(mu.size() - 1);
    return report;
}

}  // namespace

Kernel::Kernel(Payoff density) : density_(std::move(density)), second_moment_(mmv::second_moment(density_)) {
    const double mean = expectation(density_);
    if (std::abs(mean - 1.0) > kMeanTol) {
        std::ostringstream os;
        os.precision(17);
        os << "kernel mean is " << mean << ", expected 1";
        throw Error(ErrorKind::InvalidInput, os.str());
    }
}

double martingale_residual(const MarketModel& market, const Vector& density) {
    const Vector& p = market.space()->probabilities();
    const Vector weighted = p.cwiseProduct(density);
    double r = std::abs(weighted.sum() - 1.0);
    const Matrix& basis = market.orthonormal_basis();
    if (basis.cols() > 0) {
        r = std::max(r, (basis.transpose() * weighted).lpNorm<Eigen::Infinity>());
    }
    return r;
}

KernelReport solve_vsmm(const MarketModel& market) {
    const Vector& p = market.space()->probabilities();
    const Matrix& basis = market.orthonormal_basis();
    const Eigen::Index n = p.size();

    // M = (1 - proj 1) / E[(1 - proj 1)^2]; the projection uses the
    // orthonormal basis, i.e. normal equations with identity Gram matrix.
    const Vector beta = basis.transpose() * p;
    const Vector residual = Vector::Ones(n) - basis * beta;
    const double norm2 = p.dot(residual.cwiseProduct(residual));
    if (!(norm2 > 1e-12)) {
        const Vector strategy = market.least_squares_strategy(Vector::Ones(n));
        std::ostringstream os;
        os.precision(12);
        os << "the constant payoff 1 is attainable with strategy [";
        for (Eigen::Index j = 0; j < strategy.size(); ++j) {
            os << (j ? ", " : "") << strategy[j];
        }
        os << "]; no signed martingale density exists";
        throw Error(ErrorKind::InfeasibleConstraints, os.str());
    }
    const double scale = 1.0 / norm2;
    const Vector density = scale * residual;

    Vector mu(basis.cols() + 1);
    mu[0] = scale;
    mu.tail(basis.cols()) = -scale * beta;
    return make_report(market, density, mu);
}

KernelReport solve_nonneg_kernel(const MarketModel& market) {
    const Vector& p = market.space()->probabilities();
    const Matrix a = constraint_matrix(market);
    const Vector b = unit_rhs(a.cols());

    std::optional<KernelReport> signed_start;
    try {
        signed_start = solve_vsmm(market);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::InfeasibleConstraints) {
            throw;
        }
        throw Error(ErrorKind::InfeasibleQP, std::string("no martingale density at all: ") + e.what());
    }

    Vector mu0(a.cols());
    mu0[0] = signed_start->constant_multiplier;
    mu0.tail(a.cols() - 1) = signed_start->span_multipliers;

    NewtonResult newton = dual_newton(a, p, b, mu0);
    if (newton.outcome == NewtonOutcome::Converged) {
        return make_report(market, newton.state.y, newton.state.mu);
    }

    if (market.atoms() <= kEnumerationMaxAtoms) {
        auto best = enumerate_active_sets(a, p, b);
        if (!best) {
            throw Error(ErrorKind::InfeasibleQP,
                        "no non-negative martingale density exists (active-set enumeration found no feasible support)");
        }
        // Re-run the dual iteration from the enumerated multipliers so the
        // reported multipliers satisfy the sign conditions.
        NewtonResult polished = dual_newton(a, p, b, best->mu);
        if (polished.outcome == NewtonOutcome::Converged &&
            p.dot(polished.state.y.cwiseProduct(polished.state.y)) <= best->objective + 1e-12) {
            return make_report(market, polished.state.y, polished.state.mu);
        }
        return make_report(market, best->y, best->mu);
    }

    if (newton.outcome == NewtonOutcome::Unbounded) {
        throw Error(ErrorKind::InfeasibleQP, "dual objective unbounded: no non-negative martingale density exists");
    }
    std::ostringstream os;
    os << "non-negative kernel iteration stalled after " << newton.iterations << " steps, gradient norm "
       << newton.state.gradient.lpNorm<Eigen::Infinity>();
    throw Error(ErrorKind::OptimizerStalled, os.str());
}

NormalizedKernel normalize(const Payoff& raw_kernel) {
    const double m1 = expectation(raw_kernel);
    if (m1 == 0.0 || !std::isfinite(m1)) {
        throw Error(ErrorKind::ZeroMeanKernel, "raw kernel has zero mean");
    }
    Payoff density = raw_kernel * (1.0 / m1);
    return NormalizedKernel{Kernel(std::move(density)), m1, variance(raw_kernel)};
}

}  // namespace mmv
