#pragma once

// Langevin-family samplers driven by ensemble-inferred gradients: unadjusted
// coupled Langevin (EGI-LS), Metropolis-adjusted with rejected-proposal memory
// (EGI-MALA), gradient-free ALDI (EKS as the correction-off variant), and its
// EGI-augmented forms.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "egi/core.hpp"
#include "egi/errors.hpp"
#include "egi/potentials.hpp"
#include "egi/record.hpp"
#include "egi/rng.hpp"

namespace egi {

enum class SamplerMethod { egi_ls, egi_mala, aldi_gradfree, egi_aldi, egi_aldi_extra };

struct SamplerConfig {
  SamplerMethod method = SamplerMethod::egi_ls;
  double step = 0.01;  // h or tau
  long n_iters = 1;
  double xi = 0.0;
  double gamma = 1.0;
  bool aldi_correction = true;  // off reproduces the EKS variant
  std::uint64_t seed = 0;
};

struct InverseProblemSpec {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> forward;
  Eigen::VectorXd data;
  Eigen::MatrixXd noise_cov;
  Eigen::VectorXd prior_mean;
  Eigen::MatrixXd prior_cov;

  double potential(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd r = data - forward(x);
    const Eigen::VectorXd p = x - prior_mean;
    return 0.5 * r.dot(noise_cov.ldlt().solve(r)) +
           0.5 * p.dot(prior_cov.ldlt().solve(p));
  }
};

struct SamplerState {
  std::vector<Eigen::VectorXd> ensemble;
  Eigen::VectorXd values;
  // EGI-MALA only: previous iterates or rejected proposals, with their values.
  std::vector<Eigen::VectorXd> memory;
  Eigen::VectorXd memory_values;
  long iteration = 0;
  std::vector<long> accept_count;
};

inline SamplerState make_sampler_state(
    const std::function<double(const Eigen::VectorXd&)>& potential,
    std::vector<Eigen::VectorXd> ensemble) {
  SamplerState st;
  st.values.resize(static_cast<Eigen::Index>(ensemble.size()));
  for (std::size_t j = 0; j < ensemble.size(); ++j)
    st.values[static_cast<Eigen::Index>(j)] = potential(ensemble[j]);
  st.ensemble = std::move(ensemble);
  st.accept_count.assign(st.ensemble.size(), 0);
  return st;
}

namespace detail {

// Gradient at ensemble member j; a degenerate system yields zero.
inline Eigen::VectorXd egi_gradient_at_member(const std::vector<Eigen::VectorXd>& points,
                                              const Eigen::VectorXd& values,
                                              Eigen::Index j, double xi, double gamma) {
  EvaluatedEnsemble ens{points, values};
  EgiConfig cfg;
  cfg.xi = xi;
  cfg.gamma = gamma;
  try {
    return infer_lsq(build_design_system(ens, j, cfg)).gradient();
  } catch (const DegenerateEnsemble&) {
    return Eigen::VectorXd::Zero(points[static_cast<std::size_t>(j)].size());
  }
}

inline void check_finite(const Eigen::VectorXd& x, std::size_t j, long iteration) {
  if (!x.allFinite())
    throw NonFiniteState("non-finite coordinate in member " + std::to_string(j) +
                         " at iteration " + std::to_string(iteration));
}

struct AldiGeometry {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov_root;  // d x J factor, columns (x^j - mean)/sqrt(J)
  Eigen::MatrixXd cov;       // d x d
};

inline AldiGeometry aldi_geometry(const std::vector<Eigen::VectorXd>& points) {
  const Eigen::Index d = points.front().size();
  const Eigen::Index J = static_cast<Eigen::Index>(points.size());
  AldiGeometry g;
  g.mean = Eigen::VectorXd::Zero(d);
  for (const auto& p : points) g.mean += p;
  g.mean /= static_cast<double>(J);
  g.cov_root.resize(d, J);
  for (Eigen::Index j = 0; j < J; ++j)
    g.cov_root.col(j) = (points[static_cast<std::size_t>(j)] - g.mean) /
                        std::sqrt(static_cast<double>(J));
  g.cov = g.cov_root * g.cov_root.transpose();
  return g;
}

// Shared ALDI-form Euler-Maruyama update given per-member drift gradients
// already preconditioned decisions made by the caller.
inline SamplerState aldi_update(const SamplerState& state, const SamplerConfig& cfg,
                                const std::function<double(const Eigen::VectorXd&)>& potential,
                                const AldiGeometry& geom,
                                const std::vector<Eigen::VectorXd>& drift, Rng& rng) {
  const Eigen::Index d = state.ensemble.front().size();
  const Eigen::Index J = static_cast<Eigen::Index>(state.ensemble.size());
  const double tau = cfg.step;
  const double corr = cfg.aldi_correction
                          ? (static_cast<double>(d) + 1.0) / static_cast<double>(J)
                          : 0.0;
  SamplerState next;
  next.ensemble.resize(state.ensemble.size());
  next.values.resize(J);
  for (Eigen::Index j = 0; j < J; ++j) {
    const auto& x = state.ensemble[static_cast<std::size_t>(j)];
    const Eigen::VectorXd w = normal_vector(rng, J);
    Eigen::VectorXd xn = x + tau * drift[static_cast<std::size_t>(j)] +
                         tau * corr * (x - geom.mean) +
                         std::sqrt(2.0 * tau) * (geom.cov_root * w);
    check_finite(xn, static_cast<std::size_t>(j), state.iteration + 1);
    next.values[j] = potential(xn);
    next.ensemble[static_cast<std::size_t>(j)] = std::move(xn);
  }
  next.iteration = state.iteration + 1;
  next.accept_count = state.accept_count;
  return next;
}

}  // namespace detail

inline SamplerState egi_ls_step(const SamplerState& state, const SamplerConfig& cfg,
                                const Potential& potential, Rng& rng) {
  const std::size_t J = state.ensemble.size();
  const Eigen::Index d = potential.dim;
  const double h = cfg.step;

  std::vector<Eigen::VectorXd> grads(J);
  for (std::size_t j = 0; j < J; ++j)
    grads[j] = detail::egi_gradient_at_member(state.ensemble, state.values,
                                              static_cast<Eigen::Index>(j), cfg.xi,
                                              cfg.gamma);
  SamplerState next;
  next.ensemble.resize(J);
  next.values.resize(static_cast<Eigen::Index>(J));
  for (std::size_t j = 0; j < J; ++j) {
    const Eigen::VectorXd w = normal_vector(rng, d);
    Eigen::VectorXd xn =
        state.ensemble[j] - h * grads[j] + std::sqrt(2.0 * h) * w;
    detail::check_finite(xn, j, state.iteration + 1);
    next.values[static_cast<Eigen::Index>(j)] = potential(xn);
    next.ensemble[j] = std::move(xn);
  }
  next.iteration = state.iteration + 1;
  next.accept_count = state.accept_count;
  return next;
}

inline SamplerState egi_mala_step(const SamplerState& state, const SamplerConfig& cfg,
                                  const Potential& potential, Rng& rng) {
  const std::size_t J = state.ensemble.size();
  const Eigen::Index d = potential.dim;
  const double tau = cfg.step;

  // Gradients at current points, from the ensemble augmented by the memory
  // points once those exist.
  std::vector<Eigen::VectorXd> aug_points = state.ensemble;
  Eigen::VectorXd aug_values = state.values;
  if (state.iteration >= 1 && !state.memory.empty()) {
    aug_points.insert(aug_points.end(), state.memory.begin(), state.memory.end());
    aug_values.conservativeResize(aug_values.size() + state.memory_values.size());
    aug_values.tail(state.memory_values.size()) = state.memory_values;
  }
  std::vector<Eigen::VectorXd> grads(J);
  for (std::size_t j = 0; j < J; ++j)
    grads[j] = detail::egi_gradient_at_member(aug_points, aug_values,
                                              static_cast<Eigen::Index>(j), cfg.xi,
                                              cfg.gamma);

  std::vector<Eigen::VectorXd> props(J);
  Eigen::VectorXd prop_values(static_cast<Eigen::Index>(J));
  for (std::size_t j = 0; j < J; ++j) {
    const Eigen::VectorXd w = normal_vector(rng, d);
    props[j] = state.ensemble[j] - tau * grads[j] + std::sqrt(2.0 * tau) * w;
    prop_values[static_cast<Eigen::Index>(j)] = potential(props[j]);
  }

  // Gradients at the proposals, from the proposal ensemble alone (members with
  // non-finite value are dropped from the data).
  std::vector<Eigen::VectorXd> finite_props;
  std::vector<double> finite_prop_values;
  for (std::size_t j = 0; j < J; ++j)
    if (std::isfinite(prop_values[static_cast<Eigen::Index>(j)])) {
      finite_props.push_back(props[j]);
      finite_prop_values.push_back(prop_values[static_cast<Eigen::Index>(j)]);
    }
  std::vector<Eigen::VectorXd> prop_grads(J, Eigen::VectorXd::Zero(d));
  for (std::size_t j = 0; j < J; ++j) {
    if (!std::isfinite(prop_values[static_cast<Eigen::Index>(j)])) continue;
    EvaluatedEnsemble ens{finite_props,
                          Eigen::Map<const Eigen::VectorXd>(
                              finite_prop_values.data(),
                              static_cast<Eigen::Index>(finite_prop_values.size()))};
    EgiConfig ecfg;
    ecfg.xi = cfg.xi;
    ecfg.gamma = cfg.gamma;
    try {
      prop_grads[j] = infer_lsq(build_design_system(
                                    ens, props[j],
                                    prop_values[static_cast<Eigen::Index>(j)], ecfg))
                          .gradient();
    } catch (const DegenerateEnsemble&) {
      // zero gradient
    }
  }

  SamplerState next;
  next.ensemble.resize(J);
  next.values.resize(static_cast<Eigen::Index>(J));
  next.memory.resize(J);
  next.memory_values.resize(static_cast<Eigen::Index>(J));
  next.accept_count = state.accept_count;
  for (std::size_t j = 0; j < J; ++j) {
    const Eigen::Index ji = static_cast<Eigen::Index>(j);
    const double log_q_fwd =
        -(props[j] - (state.ensemble[j] - tau * grads[j])).squaredNorm() / (4.0 * tau);
    const double log_q_bwd =
        -(state.ensemble[j] - (props[j] - tau * prop_grads[j])).squaredNorm() /
        (4.0 * tau);
    double log_alpha;
    if (!std::isfinite(prop_values[ji]))
      log_alpha = -std::numeric_limits<double>::infinity();
    else
      log_alpha = -prop_values[ji] + state.values[ji] + log_q_bwd - log_q_fwd;
    const double u = standard_uniform(rng);
    if (std::log(u) <= log_alpha) {
      next.ensemble[j] = props[j];
      next.values[ji] = prop_values[ji];
      next.memory[j] = state.ensemble[j];
      next.memory_values[ji] = state.values[ji];
      ++next.accept_count[j];
    } else {
      next.ensemble[j] = state.ensemble[j];
      next.values[ji] = state.values[ji];
      next.memory[j] = props[j];
      // A non-finite proposal value cannot serve as EGI data; remember the
      // previous iterate instead.
      if (std::isfinite(prop_values[ji])) {
        next.memory_values[ji] = prop_values[ji];
      } else {
        next.memory[j] = state.ensemble[j];
        next.memory_values[ji] = state.values[ji];
      }
    }
  }
  next.iteration = state.iteration + 1;
  return next;
}

inline SamplerState aldi_gradfree_step(const SamplerState& state,
                                       const SamplerConfig& cfg,
                                       const InverseProblemSpec& problem, Rng& rng) {
  const std::size_t J = state.ensemble.size();
  const auto geom = detail::aldi_geometry(state.ensemble);

  std::vector<Eigen::VectorXd> gvals(J);
  Eigen::VectorXd gbar = Eigen::VectorXd::Zero(problem.data.size());
  for (std::size_t j = 0; j < J; ++j) {
    gvals[j] = problem.forward(state.ensemble[j]);
    gbar += gvals[j];
  }
  gbar /= static_cast<double>(J);

  const Eigen::Index d = state.ensemble.front().size();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(d, problem.data.size());
  for (std::size_t j = 0; j < J; ++j)
    D += (state.ensemble[j] - geom.mean) * (gvals[j] - gbar).transpose();
  D /= static_cast<double>(J);

  const Eigen::LDLT<Eigen::MatrixXd> noise_ldlt(problem.noise_cov);
  const Eigen::LDLT<Eigen::MatrixXd> prior_ldlt(problem.prior_cov);
  std::vector<Eigen::VectorXd> drift(J);
  for (std::size_t j = 0; j < J; ++j)
    drift[j] = -(D * noise_ldlt.solve(gvals[j] - problem.data) +
                 geom.cov * prior_ldlt.solve(state.ensemble[j] - problem.prior_mean));

  auto potential = [&problem](const Eigen::VectorXd& x) { return problem.potential(x); };
  return detail::aldi_update(state, cfg, potential, geom, drift, rng);
}

inline SamplerState egi_aldi_step(const SamplerState& state, const SamplerConfig& cfg,
                                  const Potential& potential, Rng& rng) {
  const std::size_t J = state.ensemble.size();
  const auto geom = detail::aldi_geometry(state.ensemble);

  // Gradient in each particle, over the ensemble augmented by the mean.
  std::vector<Eigen::VectorXd> aug_points = state.ensemble;
  aug_points.push_back(geom.mean);
  Eigen::VectorXd aug_values(state.values.size() + 1);
  aug_values.head(state.values.size()) = state.values;
  aug_values[state.values.size()] = potential(geom.mean);

  std::vector<Eigen::VectorXd> drift(J);
  for (std::size_t j = 0; j < J; ++j) {
    const Eigen::VectorXd g = detail::egi_gradient_at_member(
        aug_points, aug_values, static_cast<Eigen::Index>(j), cfg.xi, cfg.gamma);
    drift[j] = -(geom.cov * g);
  }
  auto eval = [&potential](const Eigen::VectorXd& x) { return potential(x); };
  return detail::aldi_update(state, cfg, eval, geom, drift, rng);
}

inline SamplerState egi_aldi_extra_step(const SamplerState& state,
                                        const SamplerConfig& cfg,
                                        const Potential& potential, Rng& rng) {
  const std::size_t J = state.ensemble.size();
  const auto geom = detail::aldi_geometry(state.ensemble);

  // One solve at the mean, extrapolated to every particle.
  EvaluatedEnsemble ens{state.ensemble, state.values};
  EgiConfig ecfg;
  ecfg.xi = cfg.xi;
  ecfg.gamma = cfg.gamma;
  std::vector<Eigen::VectorXd> drift(J);
  try {
    const DerivativeEstimate est =
        infer_lsq(build_design_system(ens, geom.mean, potential(geom.mean), ecfg));
    for (std::size_t j = 0; j < J; ++j)
      drift[j] = -(geom.cov * est.extrapolate_gradient(state.ensemble[j]));
  } catch (const DegenerateEnsemble&) {
    for (std::size_t j = 0; j < J; ++j)
      drift[j] = Eigen::VectorXd::Zero(state.ensemble.front().size());
  }
  auto eval = [&potential](const Eigen::VectorXd& x) { return potential(x); };
  return detail::aldi_update(state, cfg, eval, geom, drift, rng);
}

inline RunRecord run_sampler(const Potential* potential,
                             const InverseProblemSpec* problem,
                             const std::vector<Eigen::VectorXd>& init,
                             const SamplerConfig& cfg, long burn_in,
                             long trace_every) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.method == SamplerMethod::aldi_gradfree) {
    if (problem == nullptr)
      throw ValidationError("aldi_gradfree requires an inverse problem spec");
  } else if (potential == nullptr) {
    throw ValidationError("sampler requires a potential");
  }
  auto eval = [&](const Eigen::VectorXd& x) {
    return cfg.method == SamplerMethod::aldi_gradfree ? problem->potential(x)
                                                      : potential->eval(x);
  };

  RunRecord rec;
  Rng rng(cfg.seed);
  SamplerState st = make_sampler_state(eval, init);
  const long J = static_cast<long>(init.size());

  auto record = [&](const SamplerState& s) {
    TraceRow row;
    row.iteration = s.iteration;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(init.front().size());
    for (const auto& p : s.ensemble) m += p;
    m /= static_cast<double>(s.ensemble.size());
    row.mean = m;
    row.v_mean = eval(m);
    row.spread = ensemble_spread(s.ensemble);
    if (cfg.method == SamplerMethod::egi_mala && s.iteration > 0) {
      long acc = 0;
      for (long a : s.accept_count) acc += a;
      row.accept_rate = static_cast<double>(acc) /
                        (static_cast<double>(J) * static_cast<double>(s.iteration));
    }
    rec.rows.push_back(std::move(row));
  };
  record(st);

  for (long n = 1; n <= cfg.n_iters; ++n) {
    try {
      switch (cfg.method) {
        case SamplerMethod::egi_ls:
          st = egi_ls_step(st, cfg, *potential, rng);
          break;
        case SamplerMethod::egi_mala:
          st = egi_mala_step(st, cfg, *potential, rng);
          break;
        case SamplerMethod::aldi_gradfree:
          st = aldi_gradfree_step(st, cfg, *problem, rng);
          break;
        case SamplerMethod::egi_aldi:
          st = egi_aldi_step(st, cfg, *potential, rng);
          break;
        case SamplerMethod::egi_aldi_extra:
          st = egi_aldi_extra_step(st, cfg, *potential, rng);
          break;
      }
    } catch (const std::exception& e) {
      rec.abort_reason = e.what();
      rec.abort_iteration = n;
      break;
    }
    if (n > burn_in)
      for (const auto& p : st.ensemble) rec.samples.push_back(p);
    if (trace_every > 0 && n % trace_every == 0) record(st);
  }
  rec.final_ensemble = st.ensemble;
  rec.empty_sample_pool = rec.samples.empty();
  rec.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace egi
