#include "epiplan/stats.hpp"

#include <cassert>
#include <stdexcept>

namespace epiplan {

void RunningStats::update(std::span<const double> x) {
  if (mean_.empty()) {
    mean_.assign(x.size(), 0.0);
    m2_.assign(x.size(), 0.0);
  }
  if (x.size() != mean_.size()) {
    throw std::invalid_argument("RunningStats: dimension mismatch");
  }
  ++count_;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double delta = x[i] - mean_[i];
    mean_[i] += delta / static_cast<double>(count_);
    m2_[i] += delta * (x[i] - mean_[i]);
  }
}

std::vector<double> RunningStats::normalize(std::span<const double> x,
                                            double eps) const {
  std::vector<double> out(x.size(), 0.0);
  if (count_ < 2 || x.size() != mean_.size()) {
    return out;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double sd = std::sqrt(m2_[i] / static_cast<double>(count_));
    out[i] = (x[i] - mean_[i]) / (sd + eps);
  }
  return out;
}

std::vector<double> RunningStats::variance() const {
  std::vector<double> var(mean_.size(), 0.0);
  if (count_ > 0) {
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      var[i] = m2_[i] / static_cast<double>(count_);
    }
  }
  return var;
}

nlohmann::json RunningStats::to_json() const {
  return {{"count", count_}, {"mean", mean_}, {"m2", m2_}};
}

RunningStats RunningStats::from_json(const nlohmann::json& j) {
  RunningStats s;
  s.count_ = j.at("count").get<std::int64_t>();
  s.mean_ = j.at("mean").get<std::vector<double>>();
  s.m2_ = j.at("m2").get<std::vector<double>>();
  return s;
}

}  // namespace epiplan
