#include "epiplan/rl_common.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace epiplan {

namespace {
constexpr double kLogTwoPi = 1.8378770664093453;  // log(2*pi)
constexpr double kLogTwo = 0.6931471805599453;

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}
}  // namespace

GaeResult compute_gae(std::span<const double> rewards,
                      std::span<const double> values,
                      std::span<const double> dones, double bootstrap_value,
                      double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw std::invalid_argument("compute_gae: length mismatch");
  }
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double last_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double not_done = 1.0 - dones[i];
    const double next_value = i + 1 < n ? values[i + 1] : bootstrap_value;
    const double delta = rewards[i] + gamma * next_value * not_done - values[i];
    last_adv = delta + gamma * lambda * not_done * last_adv;
    out.advantages[i] = last_adv;
    out.returns[i] = last_adv + values[i];
  }
  return out;
}

double clipped_surrogate_loss(std::span<const double> ratios,
                              std::span<const double> advantages,
                              double clip_coef) {
  if (ratios.size() != advantages.size() || ratios.empty()) {
    throw std::invalid_argument("clipped_surrogate_loss: bad inputs");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const double clipped =
        std::clamp(ratios[i], 1.0 - clip_coef, 1.0 + clip_coef);
    sum += std::min(ratios[i] * advantages[i], clipped * advantages[i]);
  }
  return -sum / static_cast<double>(ratios.size());
}

void normalize_advantages(std::span<double> advantages) {
  const auto n = static_cast<double>(advantages.size());
  if (n < 2) return;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= n;
  double sq = 0.0;
  for (double a : advantages) sq += (a - mean) * (a - mean);
  const double std = std::sqrt(sq / (n - 1.0));
  for (double& a : advantages) a = (a - mean) / (std + 1e-8);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (capacity == 0) {
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  }
}

void ReplayBuffer::insert(std::span<const double> obs,
                          std::span<const double> action, double reward,
                          std::span<const double> next_obs, bool done) {
  if (static_cast<int>(obs.size()) != obs_dim_ ||
      static_cast<int>(action.size()) != act_dim_ ||
      static_cast<int>(next_obs.size()) != obs_dim_) {
    throw std::invalid_argument("ReplayBuffer::insert: dimension mismatch");
  }
  const std::size_t slot = next_;
  if (size_ < capacity_) {
    obs_.resize(obs_.size() + obs_dim_);
    actions_.resize(actions_.size() + act_dim_);
    next_obs_.resize(next_obs_.size() + obs_dim_);
    rewards_.resize(rewards_.size() + 1);
    dones_.resize(dones_.size() + 1);
    ++size_;
  }
  std::copy(obs.begin(), obs.end(), obs_.begin() + slot * obs_dim_);
  std::copy(action.begin(), action.end(), actions_.begin() + slot * act_dim_);
  std::copy(next_obs.begin(), next_obs.end(),
            next_obs_.begin() + slot * obs_dim_);
  rewards_[slot] = reward;
  dones_[slot] = done ? 1.0 : 0.0;
  next_ = (next_ + 1) % capacity_;
}

std::size_t ReplayBuffer::slot_for(std::size_t logical_index) const {
  // When full, slot `next_` holds the oldest transition.
  if (size_ < capacity_) return logical_index;
  return (next_ + logical_index) % capacity_;
}

ReplayBuffer::Batch ReplayBuffer::sample(int batch_size, Rng& rng) const {
  if (size_ == 0) {
    throw std::logic_error("ReplayBuffer::sample: buffer is empty");
  }
  Batch batch;
  batch.obs.resize(obs_dim_, batch_size);
  batch.actions.resize(act_dim_, batch_size);
  batch.next_obs.resize(obs_dim_, batch_size);
  batch.rewards.resize(batch_size);
  batch.dones.resize(batch_size);
  for (int k = 0; k < batch_size; ++k) {
    const std::size_t slot = slot_for(rng.uniform_index(size_));
    for (int i = 0; i < obs_dim_; ++i) {
      batch.obs(i, k) = obs_[slot * obs_dim_ + i];
      batch.next_obs(i, k) = next_obs_[slot * obs_dim_ + i];
    }
    for (int i = 0; i < act_dim_; ++i) {
      batch.actions(i, k) = actions_[slot * act_dim_ + i];
    }
    batch.rewards(k) = rewards_[slot];
    batch.dones(k) = dones_[slot];
  }
  return batch;
}

double ReplayBuffer::reward_at(std::size_t i) const {
  if (i >= size_) {
    throw std::out_of_range("ReplayBuffer::reward_at");
  }
  return rewards_[slot_for(i)];
}

void polyak_update(const Mlp& online, Mlp& target, double tau) {
  if (online.layers.size() != target.layers.size()) {
    throw std::invalid_argument("polyak_update: mismatched networks");
  }
  for (std::size_t l = 0; l < online.layers.size(); ++l) {
    target.layers[l].w =
        tau * online.layers[l].w + (1.0 - tau) * target.layers[l].w;
    target.layers[l].b =
        tau * online.layers[l].b + (1.0 - tau) * target.layers[l].b;
  }
}

double diag_gaussian_log_prob(const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& log_std,
                              const Eigen::VectorXd& action) {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double sd = std::exp(log_std(i));
    const double z = (action(i) - mean(i)) / sd;
    lp += -log_std(i) - 0.5 * kLogTwoPi - 0.5 * z * z;
  }
  return lp;
}

Eigen::VectorXd diag_gaussian_sample(const Eigen::VectorXd& mean,
                                     const Eigen::VectorXd& log_std,
                                     Rng& rng) {
  Eigen::VectorXd action(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double sd = std::exp(log_std(i));
    if (!std::isfinite(sd)) {
      throw std::runtime_error("diag_gaussian_sample: non-finite std");
    }
    action(i) = mean(i) + sd * rng.normal();
  }
  return action;
}

double diag_gaussian_entropy(const Eigen::VectorXd& log_std) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < log_std.size(); ++i) {
    h += log_std(i) + 0.5 * (kLogTwoPi + 1.0);
  }
  return h;
}

double log_one_minus_tanh_sq(double u) {
  // log(1 - tanh(u)^2) = 2*(log 2 - u - softplus(-2u))
  return 2.0 * (kLogTwo - u - softplus(-2.0 * u));
}

SquashedSample squashed_gaussian_sample(const Eigen::VectorXd& mean,
                                        const Eigen::VectorXd& log_std,
                                        Rng& rng) {
  SquashedSample s;
  const auto d = mean.size();
  s.eps.resize(d);
  s.u.resize(d);
  s.action.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double sd = std::exp(log_std(i));
    if (!std::isfinite(sd)) {
      throw std::runtime_error("squashed_gaussian_sample: non-finite std");
    }
    s.eps(i) = rng.normal();
    s.u(i) = mean(i) + sd * s.eps(i);
    s.action(i) = 0.5 * (std::tanh(s.u(i)) + 1.0);
  }
  s.log_prob = squashed_gaussian_log_prob(mean, log_std, s.u);
  return s;
}

double squashed_gaussian_log_prob(const Eigen::VectorXd& mean,
                                  const Eigen::VectorXd& log_std,
                                  const Eigen::VectorXd& u) {
  double lp = diag_gaussian_log_prob(mean, log_std, u);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    // a = 0.5*(tanh(u)+1), so |da/du| = 0.5*(1 - tanh(u)^2)
    lp -= log_one_minus_tanh_sq(u(i)) + std::log(0.5);
  }
  return lp;
}

double squashed_gaussian_log_prob_of_action(const Eigen::VectorXd& mean,
                                            const Eigen::VectorXd& log_std,
                                            const Eigen::VectorXd& action) {
  Eigen::VectorXd u(action.size());
  for (Eigen::Index i = 0; i < action.size(); ++i) {
    const double t = std::clamp(2.0 * action(i) - 1.0, -1.0 + 1e-12, 1.0 - 1e-12);
    u(i) = std::atanh(t);
  }
  return squashed_gaussian_log_prob(mean, log_std, u);
}

Eigen::VectorXd squashed_mean_action(const Eigen::VectorXd& mean) {
  Eigen::VectorXd a(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    a(i) = 0.5 * (std::tanh(mean(i)) + 1.0);
  }
  return a;
}

}  // namespace epiplan
