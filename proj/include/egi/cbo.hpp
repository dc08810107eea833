#pragma once

// Consensus-based optimization, vanilla and gradient-augmented, as
// Euler-Maruyama iterations over an interacting ensemble.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "egi/core.hpp"
#include "egi/errors.hpp"
#include "egi/potentials.hpp"
#include "egi/record.hpp"
#include "egi/rng.hpp"

namespace egi {

enum class NoiseMode { norm_proportional, component_wise };

struct CboConfig {
  double alpha = 100.0;  // weight sharpness (the beta of the SDE formulation)
  double lambda_drift = 1.0;
  double sigma = 0.0;
  double kappa = 0.0;  // gradient strength; 0 disables EGI
  double xi = 0.0;
  double gamma = 1.0;
  double tau = 0.01;
  long n_iters = 1;
  NoiseMode noise_mode = NoiseMode::norm_proportional;
  bool extrapolate = false;
  std::uint64_t seed = 0;
};

struct OptState {
  std::vector<Eigen::VectorXd> ensemble;
  Eigen::VectorXd values;
  Eigen::VectorXd weighted_mean;
  Eigen::VectorXd unweighted_mean;
  long iteration = 0;
};

// Shift-stabilized softmin weights, w_j = exp(-alpha (V_j - min V)) / sum.
inline Eigen::VectorXd softmin_weights(const Eigen::VectorXd& values, double alpha) {
  const double vmin = values.minCoeff();
  Eigen::VectorXd w = (-alpha * (values.array() - vmin)).exp();
  return w / w.sum();
}

inline Eigen::VectorXd weighted_mean(const std::vector<Eigen::VectorXd>& points,
                                     const Eigen::VectorXd& values, double alpha) {
  const Eigen::VectorXd w = softmin_weights(values, alpha);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(points.front().size());
  for (std::size_t j = 0; j < points.size(); ++j)
    m += w[static_cast<Eigen::Index>(j)] * points[j];
  return m;
}

inline Eigen::VectorXd unweighted_mean(const std::vector<Eigen::VectorXd>& points) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(points.front().size());
  for (const auto& p : points) m += p;
  return m / static_cast<double>(points.size());
}

inline OptState make_opt_state(const Potential& potential,
                               std::vector<Eigen::VectorXd> ensemble,
                               double alpha) {
  OptState st;
  st.values.resize(static_cast<Eigen::Index>(ensemble.size()));
  for (std::size_t j = 0; j < ensemble.size(); ++j)
    st.values[static_cast<Eigen::Index>(j)] = potential(ensemble[j]);
  st.ensemble = std::move(ensemble);
  st.weighted_mean = weighted_mean(st.ensemble, st.values, alpha);
  st.unweighted_mean = unweighted_mean(st.ensemble);
  return st;
}

namespace detail {

// EGI at an external reference over {reference} u ensemble; a fully collapsed
// ensemble yields the zero estimate (terminal state of the dynamics).
inline DerivativeEstimate egi_at_reference(const std::vector<Eigen::VectorXd>& points,
                                           const Eigen::VectorXd& values,
                                           const Eigen::VectorXd& reference,
                                           double reference_value, double xi,
                                           double gamma) {
  EvaluatedEnsemble ens{points, values};
  EgiConfig cfg;
  cfg.xi = xi;
  cfg.gamma = gamma;
  try {
    return infer_lsq(build_design_system(ens, reference, reference_value, cfg));
  } catch (const DegenerateEnsemble&) {
    const Eigen::Index d = reference.size();
    DerivativeEstimate zero;
    zero.grad_coeffs = Eigen::VectorXd::Zero(1);
    zero.hess_coeffs = Eigen::VectorXd::Zero(1);
    zero.directions = Eigen::MatrixXd::Zero(d, 1);
    zero.reference = reference;
    zero.reference_value = reference_value;
    return zero;
  }
}

inline OptState cbo_step_impl(const OptState& state, const CboConfig& cfg,
                              const Potential& potential, Rng& rng, bool use_egi) {
  const Eigen::Index d = potential.dim;
  const std::size_t J = state.ensemble.size();

  DerivativeEstimate est;
  const bool gradient_term = use_egi && cfg.kappa != 0.0;
  if (gradient_term) {
    const double v_mean = potential(state.unweighted_mean);
    est = egi_at_reference(state.ensemble, state.values, state.unweighted_mean,
                           v_mean, cfg.xi, cfg.gamma);
  }

  OptState next;
  next.ensemble.resize(J);
  next.values.resize(static_cast<Eigen::Index>(J));
  for (std::size_t j = 0; j < J; ++j) {
    const Eigen::VectorXd& x = state.ensemble[j];
    const Eigen::VectorXd dev = x - state.weighted_mean;
    const Eigen::VectorXd w = normal_vector(rng, d);
    Eigen::VectorXd noise;
    switch (cfg.noise_mode) {
      case NoiseMode::norm_proportional:
        noise = cfg.sigma * dev.norm() * w;
        break;
      case NoiseMode::component_wise:
        noise = cfg.sigma * dev.cwiseProduct(w);
        break;
    }
    Eigen::VectorXd xn = x - cfg.tau * cfg.lambda_drift * dev + std::sqrt(cfg.tau) * noise;
    if (gradient_term) {
      const Eigen::VectorXd g = cfg.extrapolate ? est.extrapolate_gradient(x)
                                                : est.gradient();
      xn -= cfg.tau * cfg.kappa * g;
    }
    if (!xn.allFinite())
      throw NonFiniteState("non-finite coordinate in member " + std::to_string(j) +
                           " at iteration " + std::to_string(state.iteration + 1));
    next.ensemble[j] = std::move(xn);
    next.values[static_cast<Eigen::Index>(j)] = potential(next.ensemble[j]);
  }
  next.weighted_mean = weighted_mean(next.ensemble, next.values, cfg.alpha);
  next.unweighted_mean = unweighted_mean(next.ensemble);
  next.iteration = state.iteration + 1;
  return next;
}

}  // namespace detail

inline OptState cbo_step(const OptState& state, const CboConfig& cfg,
                         const Potential& potential, Rng& rng) {
  return detail::cbo_step_impl(state, cfg, potential, rng, /*use_egi=*/false);
}

inline OptState egi_cbo_step(const OptState& state, const CboConfig& cfg,
                             const Potential& potential, Rng& rng) {
  return detail::cbo_step_impl(state, cfg, potential, rng, /*use_egi=*/true);
}

inline RunRecord run_optimizer(const Potential& potential,
                               const std::vector<Eigen::VectorXd>& init,
                               const CboConfig& cfg, long trace_every,
                               bool use_egi = true) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  Rng rng(cfg.seed);
  OptState st = make_opt_state(potential, init, cfg.alpha);

  auto record = [&](const OptState& s) {
    TraceRow row;
    row.iteration = s.iteration;
    row.mean = s.weighted_mean;
    row.v_mean = potential(s.weighted_mean);
    row.spread = ensemble_spread(s.ensemble);
    rec.rows.push_back(std::move(row));
  };
  record(st);

  for (long n = 1; n <= cfg.n_iters; ++n) {
    try {
      st = detail::cbo_step_impl(st, cfg, potential, rng, use_egi);
    } catch (const std::exception& e) {
      rec.abort_reason = e.what();
      rec.abort_iteration = n;
      break;
    }
    if (trace_every > 0 && n % trace_every == 0) record(st);
  }
  rec.final_ensemble = st.ensemble;
  rec.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace egi
