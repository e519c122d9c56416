#include "stormforge/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "stormforge/error.hpp"

namespace stormforge::cmaes {
namespace {

constexpr double kEigenFloor = 1e-14;
constexpr double kLogisticSlope = 4.0;  // 1 / logistic'(0)

}  // namespace

void Config::validate() const {
  if (dimension == 0) throw Error(Errc::kInvalidArgument, "cmaes.dimension must be positive");
  if (population < 4) throw Error(Errc::kInvalidArgument, "cmaes.population must be >= 4");
  const std::size_t mu = parent_count();
  if (mu < 1 || mu > population / 2) throw Error(Errc::kInvalidArgument, "cmaes.parents must lie in [1, population/2]");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw Error(Errc::kInvalidArgument, "cmaes.sigma0 must be > 0");
  if (lower.size() != dimension || upper.size() != dimension) {
    throw Error(Errc::kInvalidArgument, "cmaes bounds must have one entry per dimension");
  }
  for (std::size_t i = 0; i < dimension; ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i])) {
      throw Error(Errc::kInvalidArgument, "cmaes bound " + std::to_string(i) + " must be finite with lower < upper");
    }
  }
  if (!initial_mean.empty() && initial_mean.size() != dimension) {
    throw Error(Errc::kInvalidArgument, "cmaes.initial_mean must have one entry per dimension");
  }
}

StrategyParameters StrategyParameters::defaults(std::size_t n_dim, std::size_t lambda, std::size_t mu) {
  StrategyParameters p;
  const double n = static_cast<double>(n_dim);
  p.weights.resize(mu);
  for (std::size_t i = 0; i < mu; ++i) {
    p.weights[i] = std::log(static_cast<double>(mu) + 0.5) - std::log(static_cast<double>(i + 1));
  }
  const double sum = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
  double sq = 0.0;
  for (double& w : p.weights) {
    w /= sum;
    sq += w * w;
  }
  p.mu_eff = 1.0 / sq;
  p.c_sigma = (p.mu_eff + 2.0) / (n + p.mu_eff + 5.0);
  p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((p.mu_eff - 1.0) / (n + 1.0)) - 1.0) + p.c_sigma;
  p.c_c = (4.0 + p.mu_eff / n) / (n + 4.0 + 2.0 * p.mu_eff / n);
  p.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + p.mu_eff);
  p.c_mu = std::min(1.0 - p.c_1, 2.0 * (p.mu_eff - 2.0 + 1.0 / p.mu_eff) / ((n + 2.0) * (n + 2.0) + p.mu_eff));
  p.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  (void)lambda;
  return p;
}

Eigen::VectorXd BoxTransform::to_box(const Eigen::VectorXd& y) const {
  Eigen::VectorXd x(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double t = 1.0 / (1.0 + std::exp(-y(i)));
    x(i) = std::clamp(lower(i) + (upper(i) - lower(i)) * t, lower(i), upper(i));
  }
  return x;
}

Eigen::VectorXd BoxTransform::to_internal(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double t = (x(i) - lower(i)) / (upper(i) - lower(i));
    t = std::clamp(t, 1e-9, 1.0 - 1e-9);
    y(i) = std::log(t / (1.0 - t));
  }
  return y;
}

Optimizer::Optimizer(const Config& config)
    : config_(config),
      rng_(config.seed),
      sigma_(kLogisticSlope * config.sigma0),
      best_value_(std::numeric_limits<double>::infinity()) {
  config_.validate();
  const auto n = static_cast<Eigen::Index>(config_.dimension);
  params_ = StrategyParameters::defaults(config_.dimension, config_.population, config_.parent_count());
  box_.lower = Eigen::Map<const Eigen::VectorXd>(config_.lower.data(), n);
  box_.upper = Eigen::Map<const Eigen::VectorXd>(config_.upper.data(), n);
  if (config_.initial_mean.empty()) {
    mean_ = Eigen::VectorXd::Zero(n);
  } else {
    mean_ = box_.to_internal(Eigen::Map<const Eigen::VectorXd>(config_.initial_mean.data(), n));
  }
  cov_ = Eigen::MatrixXd::Identity(n, n);
  eig_vectors_ = Eigen::MatrixXd::Identity(n, n);
  eig_values_ = Eigen::VectorXd::Ones(n);
  p_sigma_ = Eigen::VectorXd::Zero(n);
  p_c_ = Eigen::VectorXd::Zero(n);
  best_point_ = box_.to_box(mean_);
}

const std::vector<Eigen::VectorXd>& Optimizer::ask() {
  const auto n = static_cast<Eigen::Index>(config_.dimension);
  const Eigen::VectorXd scale = eig_values_.cwiseSqrt();
  internal_samples_.clear();
  candidates_.clear();
  for (std::size_t k = 0; k < config_.population; ++k) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal_(rng_);
    Eigen::VectorXd y = mean_ + sigma_ * (eig_vectors_ * scale.cwiseProduct(z));
    candidates_.push_back(box_.to_box(y));
    internal_samples_.push_back(std::move(y));
  }
  return candidates_;
}

void Optimizer::tell(std::span<const double> values) {
  if (candidates_.empty()) throw Error(Errc::kInvalidArgument, "tell() without a preceding ask()");
  if (values.size() != candidates_.size()) {
    throw Error(Errc::kInvalidArgument, "tell() expects " + std::to_string(candidates_.size()) + " values");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::kNonFiniteObjective, "objective value " + std::to_string(v));
  }
  const auto n = static_cast<Eigen::Index>(config_.dimension);
  const std::size_t mu = config_.parent_count();
  const StrategyParameters& p = params_;

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  if (values[order[0]] < best_value_) {
    best_value_ = values[order[0]];
    best_point_ = candidates_[order[0]];
  }

  const Eigen::VectorXd old_mean = mean_;
  Eigen::MatrixXd steps(n, static_cast<Eigen::Index>(mu));
  Eigen::VectorXd step_w = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < mu; ++i) {
    steps.col(static_cast<Eigen::Index>(i)) = (internal_samples_[order[i]] - old_mean) / sigma_;
    step_w += p.weights[i] * steps.col(static_cast<Eigen::Index>(i));
  }
  mean_ = old_mean + sigma_ * step_w;

  // C^{-1/2} * step_w via the cached eigendecomposition.
  const Eigen::VectorXd inv_sqrt = eig_values_.cwiseSqrt().cwiseInverse();
  const Eigen::VectorXd whitened = eig_vectors_ * inv_sqrt.cwiseProduct(eig_vectors_.transpose() * step_w);
  p_sigma_ = (1.0 - p.c_sigma) * p_sigma_ + std::sqrt(p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff) * whitened;

  const double gen = static_cast<double>(generation_ + 1);
  const double norm_ps = p_sigma_.norm();
  const bool h_sigma = norm_ps / std::sqrt(1.0 - std::pow(1.0 - p.c_sigma, 2.0 * gen)) <
                       (1.4 + 2.0 / (static_cast<double>(n) + 1.0)) * p.chi_n;
  p_c_ = (1.0 - p.c_c) * p_c_;
  if (h_sigma) p_c_ += std::sqrt(p.c_c * (2.0 - p.c_c) * p.mu_eff) * step_w;

  Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < mu; ++i) {
    const auto col = steps.col(static_cast<Eigen::Index>(i));
    rank_mu += p.weights[i] * (col * col.transpose());
  }
  const double decay = 1.0 - p.c_1 - p.c_mu + (h_sigma ? 0.0 : p.c_1 * p.c_c * (2.0 - p.c_c));
  cov_ = decay * cov_ + p.c_1 * (p_c_ * p_c_.transpose()) + p.c_mu * rank_mu;
  cov_ = 0.5 * (cov_ + cov_.transpose());

  sigma_ *= std::exp((p.c_sigma / p.d_sigma) * (norm_ps / p.chi_n - 1.0));
  ++generation_;
  decompose();
  candidates_.clear();
  internal_samples_.clear();
}

void Optimizer::decompose() {
  const auto n = cov_.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov_);
  if (solver.info() != Eigen::Success || !solver.eigenvalues().allFinite()) {
    events_.push_back({generation_, "covariance_reset", "eigendecomposition failed; C reset to identity"});
    cov_ = Eigen::MatrixXd::Identity(n, n);
    eig_vectors_ = Eigen::MatrixXd::Identity(n, n);
    eig_values_ = Eigen::VectorXd::Ones(n);
    return;
  }
  eig_vectors_ = solver.eigenvectors();
  eig_values_ = solver.eigenvalues();
  if (eig_values_.minCoeff() < kEigenFloor) {
    events_.push_back({generation_, "eigen_floor",
                       "min eigenvalue " + std::to_string(eig_values_.minCoeff()) + " floored to 1e-14"});
    eig_values_ = eig_values_.cwiseMax(kEigenFloor);
    cov_ = eig_vectors_ * eig_values_.asDiagonal() * eig_vectors_.transpose();
    cov_ = 0.5 * (cov_ + cov_.transpose());
  }
}

Result minimize(const Objective& objective, const Config& config) {
  Optimizer opt(config);
  Result result;
  std::vector<double> values(config.population);
  for (std::size_t g = 0; g < config.max_generations; ++g) {
    const auto& candidates = opt.ask();
    for (std::size_t i = 0; i < candidates.size(); ++i) values[i] = objective(candidates[i]);
    result.evaluations += candidates.size();
    const double gen_best = *std::min_element(values.begin(), values.end());
    const double gen_mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    opt.tell(values);
    result.history.push_back({g, gen_best, gen_mean, opt.sigma(), opt.best_value()});
    if (config.target && gen_best <= *config.target) {
      result.reached_target = true;
      break;
    }
  }
  result.best_point = opt.best_point();
  result.best_value = opt.best_value();
  result.events = opt.events();
  result.parameters = opt.parameters();
  return result;
}

}  // namespace stormforge::cmaes
