#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stormforge::cmaes {

struct Config {
  std::size_t dimension = 0;
  std::size_t population = 15;
  std::size_t parents = 0;  // 0 selects population / 2
  // Initial step size as a fraction of each box width.
  double sigma0 = 0.3;
  std::vector<double> lower;
  std::vector<double> upper;
  // Starting mean in box coordinates; empty selects the box centre.
  std::vector<double> initial_mean;
  std::size_t max_generations = 60;
  std::optional<double> target;
  std::uint64_t seed = 0;

  std::size_t parent_count() const noexcept { return parents == 0 ? population / 2 : parents; }
  void validate() const;  // throws kInvalidArgument
};

// Canonical strategy parameters as functions of (n, lambda, mu).
struct StrategyParameters {
  std::vector<double> weights;  // log-linear, normalized to sum 1
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;

  static StrategyParameters defaults(std::size_t n, std::size_t lambda, std::size_t mu);
};

struct Event {
  std::size_t generation = 0;
  std::string kind;  // "eigen_floor" | "covariance_reset"
  std::string detail;
};

// Logistic map between the unconstrained search space and the box.
struct BoxTransform {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::VectorXd to_box(const Eigen::VectorXd& internal) const;
  Eigen::VectorXd to_internal(const Eigen::VectorXd& box) const;
};

// Ask/tell CMA-ES with rank-one + rank-mu covariance updates and cumulative
// step-size adaptation, run in the unconstrained space behind BoxTransform.
class Optimizer {
 public:
  explicit Optimizer(const Config& config);

  // Samples `population` candidates in box coordinates. Calling ask twice
  // without tell resamples from the same distribution.
  const std::vector<Eigen::VectorXd>& ask();

  // One finite value per candidate of the last ask(); only their order is used
  // for the distribution update. Errors: kNonFiniteObjective, kInvalidArgument.
  void tell(std::span<const double> values);

  std::size_t generation() const noexcept { return generation_; }
  double sigma() const noexcept { return sigma_; }
  const Eigen::VectorXd& internal_mean() const noexcept { return mean_; }
  Eigen::VectorXd mean() const { return box_.to_box(mean_); }
  const Eigen::MatrixXd& covariance() const noexcept { return cov_; }
  const Eigen::VectorXd& path_sigma() const noexcept { return p_sigma_; }
  const Eigen::VectorXd& path_c() const noexcept { return p_c_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eig_values_; }
  const Eigen::VectorXd& best_point() const noexcept { return best_point_; }
  double best_value() const noexcept { return best_value_; }
  const StrategyParameters& parameters() const noexcept { return params_; }
  const std::vector<Event>& events() const noexcept { return events_; }
  const Config& config() const noexcept { return config_; }

 private:
  void decompose();

  Config config_;
  StrategyParameters params_;
  BoxTransform box_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};

  Eigen::VectorXd mean_;
  double sigma_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd eig_vectors_;
  Eigen::VectorXd eig_values_;
  Eigen::VectorXd p_sigma_;
  Eigen::VectorXd p_c_;
  std::size_t generation_ = 0;

  std::vector<Eigen::VectorXd> internal_samples_;
  std::vector<Eigen::VectorXd> candidates_;

  Eigen::VectorXd best_point_;
  double best_value_;
  std::vector<Event> events_;
};

struct GenerationRecord {
  std::size_t generation = 0;
  double best = 0.0;         // best value in this generation
  double mean = 0.0;         // mean value in this generation
  double sigma = 0.0;        // step size after the update
  double best_so_far = 0.0;
};

struct Result {
  Eigen::VectorXd best_point;
  double best_value = 0.0;
  std::size_t evaluations = 0;
  bool reached_target = false;
  std::vector<GenerationRecord> history;
  std::vector<Event> events;
  StrategyParameters parameters;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Runs ask/tell until max_generations or until a generation's best value is
// <= target.
Result minimize(const Objective& objective, const Config& config);

}  // namespace stormforge::cmaes
