#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace egi {

// All stochastic code draws through these helpers so that algorithms with a
// shared consumption schedule (e.g. CBO vs EGI-CBO with kappa=0, or EGI-MALA
// vs an exact-gradient MALA oracle) reproduce each other draw for draw.
using Rng = std::mt19937_64;

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline double standard_uniform(Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline Eigen::VectorXd normal_vector(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline Eigen::VectorXd uniform_vector(Rng& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

}  // namespace egi
