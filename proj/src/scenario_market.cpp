#include "mmv/scenario_market.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace mmv {

namespace {

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) {
        throw Error(ErrorKind::InvalidInput, std::string(what) + " contains non-finite values");
    }
}

}  // namespace

ScenarioSpace::ScenarioSpace(Vector probabilities, double sum_tol)
    : probabilities_(std::move(probabilities)) {
    if (probabilities_.size() < 2) {
        throw Error(ErrorKind::InvalidInput, "scenario space needs at least 2 atoms");
    }
    require_finite(probabilities_, "probabilities");
    for (Eigen::Index i = 0; i < probabilities_.size(); ++i) {
        if (!(probabilities_[i] > 0.0)) {
            std::ostringstream os;
            os << "probability of atom " << i << " is " << probabilities_[i] << ", must be > 0";
            throw Error(ErrorKind::InvalidInput, os.str());
        }
    }
    const double total = probabilities_.sum();
    if (std::abs(total - 1.0) > sum_tol) {
        std::ostringstream os;
        os.precision(17);
        os << "probabilities sum to " << total << ", expected 1 within " << sum_tol;
        throw Error(ErrorKind::InvalidInput, os.str());
    }
}

double ScenarioSpace::expectation(const Vector& x) const {
    if (x.size() != probabilities_.size()) {
        throw Error(ErrorKind::DimensionMismatch, "vector length " + std::to_string(x.size()) +
                                                      " does not match " +
                                                      std::to_string(probabilities_.size()) + " atoms");
    }
    return probabilities_.dot(x);
}

double ScenarioSpace::inner(const Vector& x, const Vector& y) const {
    if (x.size() != probabilities_.size() || y.size() != probabilities_.size()) {
        throw Error(ErrorKind::DimensionMismatch, "inner product of vectors with wrong length");
    }
    return (probabilities_.array() * x.array() * y.array()).sum();
}

bool ScenarioSpace::same_as(const ScenarioSpace& other) const noexcept {
    return this == &other || probabilities_ == other.probabilities_;
}

SpacePtr make_space(std::vector<double> probabilities, double sum_tol) {
    Vector p = Eigen::Map<const Vector>(probabilities.data(), static_cast<Eigen::Index>(probabilities.size()));
    return std::make_shared<const ScenarioSpace>(std::move(p), sum_tol);
}

Payoff::Payoff(SpacePtr space, Vector values) : space_(std::move(space)), values_(std::move(values)) {
    if (!space_) {
        throw Error(ErrorKind::InvalidInput, "payoff without scenario space");
    }
    if (static_cast<std::size_t>(values_.size()) != space_->size()) {
        throw Error(ErrorKind::DimensionMismatch, "payoff has " + std::to_string(values_.size()) +
                                                      " values on a space of " +
                                                      std::to_string(space_->size()) + " atoms");
    }
    require_finite(values_, "payoff");
}

Payoff::Payoff(SpacePtr space, const std::vector<double>& values)
    : Payoff(std::move(space), Vector(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())))) {}

Payoff Payoff::constant(SpacePtr space, double value) {
    const auto n = static_cast<Eigen::Index>(space->size());
    return Payoff(std::move(space), Vector::Constant(n, value));
}

Payoff Payoff::operator+(double a) const { return Payoff(space_, (values_.array() + a).matrix()); }
Payoff Payoff::operator*(double a) const { return Payoff(space_, values_ * a); }

Payoff Payoff::operator+(const Payoff& other) const {
    require_same_space(*this, other);
    return Payoff(space_, values_ + other.values_);
}

Payoff Payoff::operator-(const Payoff& other) const {
    require_same_space(*this, other);
    return Payoff(space_, values_ - other.values_);
}

void require_same_space(const Payoff& a, const Payoff& b) {
    if (!a.space()->same_as(*b.space())) {
        throw Error(ErrorKind::DimensionMismatch, "payoffs live on different scenario spaces");
    }
}

double expectation(const Payoff& x) { return x.space()->expectation(x.values()); }

double second_moment(const Payoff& x) { return x.space()->inner(x.values(), x.values()); }

double variance(const Payoff& x) {
    if (x.min() == x.max()) {
        return 0.0;
    }
    // Centered form; E[X^2] - E[X]^2 loses digits for payoffs far from zero.
    const double mean = expectation(x);
    const Vector centered = (x.values().array() - mean).matrix();
    return std::max(0.0, x.space()->inner(centered, centered));
}

double inner(const Payoff& x, const Payoff& y) {
    require_same_space(x, y);
    return x.space()->inner(x.values(), y.values());
}

MarketModel::MarketModel(SpacePtr space, std::vector<Payoff> generators, double x0)
    : space_(std::move(space)), generators_(std::move(generators)), x0_(x0) {
    if (!space_) {
        throw Error(ErrorKind::InvalidInput, "market without scenario space");
    }
    if (!std::isfinite(x0_)) {
        throw Error(ErrorKind::InvalidInput, "x0 must be finite");
    }
    const auto n = static_cast<Eigen::Index>(space_->size());
    const auto m = static_cast<Eigen::Index>(generators_.size());
    generator_matrix_.resize(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Payoff& g = generators_[static_cast<std::size_t>(j)];
        if (!g.space()->same_as(*space_)) {
            throw Error(ErrorKind::DimensionMismatch, "generator " + std::to_string(j) + " is not on the market space");
        }
        generator_matrix_.col(j) = g.values();
    }

    svd_u_.resize(n, 0);
    svd_v_.resize(m, 0);
    basis_.resize(n, 0);
    if (m == 0) {
        return;
    }
    const Vector sqrt_p = space_->probabilities().cwiseSqrt();
    const Matrix weighted = sqrt_p.asDiagonal() * generator_matrix_;
    Eigen::JacobiSVD<Matrix> svd(weighted, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    Eigen::Index rank = 0;
    if (s.size() > 0 && s[0] > 0.0) {
        const double cutoff = kRankTol * s[0];
        while (rank < s.size() && s[rank] > cutoff) {
            ++rank;
        }
    }
    svd_u_ = svd.matrixU().leftCols(rank);
    svd_s_ = s.head(rank);
    svd_v_ = svd.matrixV().leftCols(rank);
    basis_ = sqrt_p.cwiseInverse().asDiagonal() * svd_u_;
}

Vector MarketModel::least_squares_strategy(const Vector& target) const {
    const auto m = static_cast<Eigen::Index>(generators_.size());
    if (target.size() != static_cast<Eigen::Index>(space_->size())) {
        throw Error(ErrorKind::DimensionMismatch, "target length does not match market atoms");
    }
    if (svd_s_.size() == 0) {
        return Vector::Zero(m);
    }
    const Vector weighted = space_->probabilities().cwiseSqrt().cwiseProduct(target);
    const Vector coeffs = (svd_u_.transpose() * weighted).cwiseQuotient(svd_s_);
    return svd_v_ * coeffs;
}

Payoff MarketModel::wealth(const Vector& strategy) const {
    if (strategy.size() != static_cast<Eigen::Index>(generators_.size())) {
        throw Error(ErrorKind::DimensionMismatch, "strategy has " + std::to_string(strategy.size()) +
                                                      " coefficients for " +
                                                      std::to_string(generators_.size()) + " generators");
    }
    Vector w = generator_matrix_ * strategy;
    w.array() += x0_;
    return Payoff(space_, std::move(w));
}

MarketModel MarketModel::with_x0(double x0) const {
    MarketModel copy = *this;
    if (!std::isfinite(x0)) {
        throw Error(ErrorKind::InvalidInput, "x0 must be finite");
    }
    copy.x0_ = x0;
    return copy;
}

std::vector<Payoff> attainable_basis(const MarketModel& market) {
    std::vector<Payoff> out;
    const Matrix& b = market.orthonormal_basis();
    out.reserve(static_cast<std::size_t>(b.cols()));
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
        out.emplace_back(market.space(), Vector(b.col(j)));
    }
    return out;
}

Attainability is_attainable(const MarketModel& market, const Payoff& x, double tol) {
    if (!x.space()->same_as(*market.space())) {
        throw Error(ErrorKind::DimensionMismatch, "payoff is not on the market space");
    }
    const Vector target = (x.values().array() - market.x0()).matrix();
    Attainability out;
    out.strategy = market.least_squares_strategy(target);
    const Vector residual = market.generator_matrix() * out.strategy - target;
    out.residual = std::sqrt(market.space()->inner(residual, residual));
    out.attainable = out.residual <= tol;
    return out;
}

}  // namespace mmv
