#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "mmv/errors.hpp"

namespace mmv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Relative singular-value cutoff used when extracting a basis of the
// generator span.
inline constexpr double kRankTol = 1e-10;

/// Finite probability space: atoms carry strictly positive probabilities
/// summing to one.
class ScenarioSpace {
public:
    /// Throws InvalidInput unless there are at least two atoms, every
    /// probability is positive and finite, and the total is within
    /// `sum_tol` of one.
    explicit ScenarioSpace(Vector probabilities, double sum_tol = 1e-12);

    std::size_t size() const noexcept { return static_cast<std::size_t>(probabilities_.size()); }
    const Vector& probabilities() const noexcept { return probabilities_; }
    double probability(std::size_t i) const { return probabilities_[static_cast<Eigen::Index>(i)]; }

    /// E[x] for a raw vector over the atoms.
    double expectation(const Vector& x) const;
    /// E[xy], the L2(P) inner product.
    double inner(const Vector& x, const Vector& y) const;

    bool same_as(const ScenarioSpace& other) const noexcept;

private:
    Vector probabilities_;
};

using SpacePtr = std::shared_ptr<const ScenarioSpace>;

SpacePtr make_space(std::vector<double> probabilities, double sum_tol = 1e-12);

/// A random variable on a ScenarioSpace.
class Payoff {
public:
    Payoff(SpacePtr space, Vector values);
    Payoff(SpacePtr space, const std::vector<double>& values);

    static Payoff constant(SpacePtr space, double value);

    const SpacePtr& space() const noexcept { return space_; }
    const Vector& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

    double min() const { return values_.minCoeff(); }
    double max() const { return values_.maxCoeff(); }

    Payoff operator+(double a) const;
    Payoff operator*(double a) const;
    Payoff operator+(const Payoff& other) const;
    Payoff operator-(const Payoff& other) const;

private:
    SpacePtr space_;
    Vector values_;
};

/// Throws DimensionMismatch unless both payoffs live on the same space.
void require_same_space(const Payoff& a, const Payoff& b);

double expectation(const Payoff& x);
double variance(const Payoff& x);
double second_moment(const Payoff& x);
/// E[xy].
double inner(const Payoff& x, const Payoff& y);

/// One-period market: terminal wealth is x0 plus any linear combination of
/// the generators.
class MarketModel {
public:
    MarketModel(SpacePtr space, std::vector<Payoff> generators, double x0);

    const SpacePtr& space() const noexcept { return space_; }
    const std::vector<Payoff>& generators() const noexcept { return generators_; }
    double x0() const noexcept { return x0_; }
    std::size_t atoms() const noexcept { return space_->size(); }
    std::size_t strategy_dimension() const noexcept { return generators_.size(); }

    /// atoms x generators.
    const Matrix& generator_matrix() const noexcept { return generator_matrix_; }

    /// Basis of the generator span, orthonormal under E[xy]; atoms x rank.
    const Matrix& orthonormal_basis() const noexcept { return basis_; }
    std::size_t rank() const noexcept { return static_cast<std::size_t>(basis_.cols()); }

    /// Minimum-norm strategy whose gains best approximate `target` in L2(P).
    Vector least_squares_strategy(const Vector& target) const;

    /// x0 + sum_j strategy_j * generator_j.
    Payoff wealth(const Vector& strategy) const;

    MarketModel with_x0(double x0) const;

private:
    SpacePtr space_;
    std::vector<Payoff> generators_;
    double x0_;
    Matrix generator_matrix_;
    Matrix basis_;
    // Truncated SVD of P^{1/2} * generator_matrix_.
    Matrix svd_u_;
    Vector svd_s_;
    Matrix svd_v_;
};

/// Linearly independent spanning set of the generator span.
std::vector<Payoff> attainable_basis(const MarketModel& market);

struct Attainability {
    bool attainable = false;
    Vector strategy;
    /// sqrt(E[r^2]) of the projection residual.
    double residual = 0.0;
};

/// Projects X - x0 onto the generator span.
Attainability is_attainable(const MarketModel& market, const Payoff& x, double tol);

}  // namespace mmv
