#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace egi {

struct TraceRow {
  long iteration = 0;
  Eigen::VectorXd mean;  // weighted mean (optimizers) or ensemble mean (samplers)
  double v_mean = 0.0;
  double spread = 0.0;  // max pairwise distance
  double accept_rate = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
  std::vector<std::pair<std::string, std::string>> config_snapshot;
  std::vector<TraceRow> rows;
  std::vector<Eigen::VectorXd> final_ensemble;
  std::vector<Eigen::VectorXd> samples;  // pooled post-burn-in states (samplers)
  bool empty_sample_pool = false;
  double duration_seconds = 0.0;  // informational only, never serialized
  std::string abort_reason;       // empty on success
  long abort_iteration = -1;
};

inline double ensemble_spread(const std::vector<Eigen::VectorXd>& points) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      s = std::max(s, (points[i] - points[j]).norm());
  return s;
}

}  // namespace egi
