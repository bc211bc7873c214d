#ifndef EPIPLAN_RL_COMMON_HPP_
#define EPIPLAN_RL_COMMON_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "epiplan/mlp.hpp"
#include "epiplan/rng.hpp"

namespace epiplan {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

// delta_t = r_t + gamma*V_{t+1}*(1-done_t) - V_t
// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1}
// values has the same length as rewards; bootstrap_value stands in for
// V_{t+1} at the sequence end.
GaeResult compute_gae(std::span<const double> rewards,
                      std::span<const double> values,
                      std::span<const double> dones, double bootstrap_value,
                      double gamma, double lambda);

// PPO's clipped surrogate, -mean(min(rho*A, clip(rho,1-c,1+c)*A)).
double clipped_surrogate_loss(std::span<const double> ratios,
                              std::span<const double> advantages,
                              double clip_coef);

// In-place (x - mean)/(sample_std + 1e-8).
void normalize_advantages(std::span<double> advantages);

// Fixed-size on-policy storage; columns are steps.
struct Rollout {
  Eigen::MatrixXd observations;
  Eigen::MatrixXd actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<double> dones;
  double bootstrap_value = 0.0;

  Rollout(int obs_dim, int act_dim, int n_steps)
      : observations(obs_dim, n_steps),
        actions(act_dim, n_steps),
        log_probs(n_steps),
        values(n_steps),
        rewards(n_steps),
        dones(n_steps) {}
  int size() const { return static_cast<int>(log_probs.size()); }
};

// Ring buffer of off-policy transitions with seeded uniform sampling
// (with replacement). Memory grows with use, bounded by capacity.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim);

  void insert(std::span<const double> obs, std::span<const double> action,
              double reward, std::span<const double> next_obs, bool done);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  struct Batch {
    Eigen::MatrixXd obs;       // obs_dim x batch
    Eigen::MatrixXd actions;   // act_dim x batch
    Eigen::MatrixXd next_obs;  // obs_dim x batch
    Eigen::VectorXd rewards;
    Eigen::VectorXd dones;
  };
  Batch sample(int batch_size, Rng& rng) const;

  // For inspection in tests: the i-th stored transition in insertion order.
  double reward_at(std::size_t i) const;

 private:
  std::size_t slot_for(std::size_t logical_index) const;

  std::size_t capacity_;
  int obs_dim_;
  int act_dim_;
  std::vector<double> obs_, actions_, next_obs_, rewards_, dones_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;  // slot the next insert writes to
};

// theta_target <- tau*theta + (1-tau)*theta_target.
void polyak_update(const Mlp& online, Mlp& target, double tau);

// --- Gaussian policy heads ---------------------------------------------

// Unsquashed diagonal Gaussian (PPO): the raw sample is returned and the
// environment clamps it.
double diag_gaussian_log_prob(const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& log_std,
                              const Eigen::VectorXd& action);
Eigen::VectorXd diag_gaussian_sample(const Eigen::VectorXd& mean,
                                     const Eigen::VectorXd& log_std, Rng& rng);
double diag_gaussian_entropy(const Eigen::VectorXd& log_std);

// Tanh-squashed Gaussian rescaled to [0,1] (SAC). log_prob carries the
// squash Jacobian sum(log(1-tanh(u)^2)) and the affine rescale term.
struct SquashedSample {
  Eigen::VectorXd action;  // in [0,1]
  Eigen::VectorXd u;       // pre-squash Gaussian draw
  Eigen::VectorXd eps;     // reparameterization noise
  double log_prob = 0.0;
};

constexpr double kSacLogStdMin = -20.0;
constexpr double kSacLogStdMax = 2.0;

SquashedSample squashed_gaussian_sample(const Eigen::VectorXd& mean,
                                        const Eigen::VectorXd& log_std,
                                        Rng& rng);
// log-density of the pre-squash draw u under (mean, log_std), with squash
// and rescale corrections applied.
double squashed_gaussian_log_prob(const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& log_std,
                                  const Eigen::VectorXd& u);
// Same, for an action already in (0,1); inverts the squash.
double squashed_gaussian_log_prob_of_action(const Eigen::VectorXd& mean,
                                            const Eigen::VectorXd& log_std,
                                            const Eigen::VectorXd& action);
// Deterministic evaluation-mode action: squash(mean).
Eigen::VectorXd squashed_mean_action(const Eigen::VectorXd& mean);

// Numerically stable log(1 - tanh(u)^2).
double log_one_minus_tanh_sq(double u);

}  // namespace epiplan

#endif  // EPIPLAN_RL_COMMON_HPP_
