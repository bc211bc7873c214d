#ifndef EPIPLAN_STATS_HPP_
#define EPIPLAN_STATS_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

namespace epiplan {

// Streaming per-component mean/variance (Welford). Variance is M2/count.
class RunningStats {
 public:
  RunningStats() = default;
  explicit RunningStats(int dim)
      : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void update(std::span<const double> x);
  void update(double x) { update(std::span<const double>(&x, 1)); }

  // z-score (x - mean)/(sd + eps); zero until two samples have been seen.
  std::vector<double> normalize(std::span<const double> x,
                                double eps = 1e-8) const;
  double normalize(double x, double eps = 1e-8) const {
    return normalize(std::span<const double>(&x, 1), eps)[0];
  }

  std::int64_t count() const { return count_; }
  int dim() const { return static_cast<int>(mean_.size()); }
  const std::vector<double>& mean() const { return mean_; }
  std::vector<double> variance() const;

  nlohmann::json to_json() const;
  static RunningStats from_json(const nlohmann::json& j);

 private:
  std::int64_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

}  // namespace epiplan

#endif  // EPIPLAN_STATS_HPP_
