#pragma once

// Derivative inference from pointwise ensemble evaluations of a scalar
// potential.  An ensemble {x^i, V(x^i)} is turned into a whitened linear
// system for gradient/Hessian coefficients over the normalized deviation
// directions, solved either by minimum-norm least squares or by a Gaussian
// posterior update.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "egi/errors.hpp"
#include "egi/rng.hpp"

namespace egi {

struct EvaluatedEnsemble {
  std::vector<Eigen::VectorXd> points;
  Eigen::VectorXd values;

  Eigen::Index size() const { return static_cast<Eigen::Index>(points.size()); }
  Eigen::Index dim() const { return points.empty() ? 0 : points.front().size(); }

  void validate() const {
    if (size() < 2) throw DegenerateEnsemble("ensemble needs at least 2 members");
    if (values.size() != size())
      throw DimensionMismatch("points/values length mismatch");
    const Eigen::Index d = dim();
    if (d < 1) throw DimensionMismatch("points must have dimension >= 1");
    for (const auto& p : points)
      if (p.size() != d) throw DimensionMismatch("inconsistent point dimensions");
    for (Eigen::Index i = 0; i < values.size(); ++i)
      if (!std::isfinite(values[i]))
        throw NonFiniteValue("non-finite potential value at member " + std::to_string(i));
  }
};

struct EgiConfig {
  double gamma = 1.0;
  double xi = 0.0;
  // Members closer to the reference than this are dropped; unset means
  // 1e-12 * (1 + |reference|).
  std::optional<double> dup_tolerance;
  // Open question in the noise model: treat Gamma as a covariance (default,
  // Kalman update taken literally) or square it first.
  bool bayes_gamma_squared = false;

  double effective_dup_tolerance(const Eigen::VectorXd& reference) const {
    return dup_tolerance.value_or(1e-12 * (1.0 + reference.norm()));
  }
};

// The whitened linear system y = A u + Gamma eps built around one reference
// point.  A = [X^T Z, (X^T Z)^{.2} / 2] with X raw deviations and Z their
// normalized directions.
struct DesignSystem {
  Eigen::MatrixXd A;           // (m) x (2m)
  Eigen::VectorXd y;           // m
  Eigen::VectorXd gamma_diag;  // m, entries gamma^2 (|dev|^3/6 + xi)
  Eigen::MatrixXd directions;  // d x m, unit columns
  Eigen::MatrixXd deviations;  // d x m
  Eigen::VectorXd reference;
  double reference_value = 0.0;
  std::vector<Eigen::Index> kept_indices;

  Eigen::Index n_kept() const { return y.size(); }
  Eigen::Index dim() const { return reference.size(); }
};

struct DerivativeEstimate {
  Eigen::VectorXd grad_coeffs;  // u^1, length m
  Eigen::VectorXd hess_coeffs;  // u^2, length m
  Eigen::MatrixXd directions;   // d x m
  Eigen::VectorXd reference;
  double reference_value = 0.0;

  Eigen::VectorXd gradient() const { return directions * grad_coeffs; }

  // H v = sum_k u^2_k z_k <z_k, v>, without forming the d x d matrix.
  Eigen::VectorXd hessian_matvec(const Eigen::VectorXd& v) const {
    if (v.size() != reference.size())
      throw DimensionMismatch("hessian_matvec: bad vector dimension");
    return directions * hess_coeffs.cwiseProduct(directions.transpose() * v);
  }

  Eigen::MatrixXd hessian_matrix() const {
    return directions * hess_coeffs.asDiagonal() * directions.transpose();
  }

  Eigen::VectorXd extrapolate_gradient(const Eigen::VectorXd& x) const {
    if (x.size() != reference.size())
      throw DimensionMismatch("extrapolate_gradient: bad point dimension");
    return gradient() + hessian_matvec(x - reference);
  }

  double surrogate_value(const Eigen::VectorXd& x) const {
    if (x.size() != reference.size())
      throw DimensionMismatch("surrogate_value: bad point dimension");
    const Eigen::VectorXd dx = x - reference;
    return reference_value + gradient().dot(dx) + 0.5 * dx.dot(hessian_matvec(dx));
  }
};

struct DerivativePosterior {
  Eigen::VectorXd mean;        // 2m
  Eigen::MatrixXd covariance;  // 2m x 2m
  Eigen::MatrixXd directions;  // d x m
  Eigen::VectorXd reference;
  double reference_value = 0.0;

  Eigen::Index n_kept() const { return directions.cols(); }

  // Gaussian posterior, so the MAP estimate is the mean.
  DerivativeEstimate map_estimate() const {
    const Eigen::Index m = n_kept();
    return DerivativeEstimate{mean.head(m), mean.tail(m), directions, reference,
                              reference_value};
  }
};

namespace detail {

inline DesignSystem build_design_system_impl(const EvaluatedEnsemble& ensemble,
                                             const Eigen::VectorXd& reference,
                                             double reference_value,
                                             std::optional<Eigen::Index> skip_index,
                                             const EgiConfig& config) {
  ensemble.validate();
  if (reference.size() != ensemble.dim())
    throw DimensionMismatch("reference dimension differs from ensemble");
  const double tol = config.effective_dup_tolerance(reference);

  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < ensemble.size(); ++i) {
    if (skip_index && i == *skip_index) continue;
    if ((ensemble.points[i] - reference).norm() < tol) continue;
    kept.push_back(i);
  }
  if (kept.empty())
    throw DegenerateEnsemble("no ensemble member survives duplicate filtering");

  const Eigen::Index d = ensemble.dim();
  const Eigen::Index m = static_cast<Eigen::Index>(kept.size());

  DesignSystem sys;
  sys.deviations.resize(d, m);
  sys.directions.resize(d, m);
  sys.y.resize(m);
  sys.gamma_diag.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::VectorXd dev = ensemble.points[kept[k]] - reference;
    const double nrm = dev.norm();
    sys.deviations.col(k) = dev;
    sys.directions.col(k) = dev / nrm;
    sys.y[k] = ensemble.values[kept[k]] - reference_value;
    sys.gamma_diag[k] =
        config.gamma * config.gamma * (nrm * nrm * nrm / 6.0 + config.xi);
  }
  const Eigen::MatrixXd B = sys.deviations.transpose() * sys.directions;
  sys.A.resize(m, 2 * m);
  sys.A.leftCols(m) = B;
  sys.A.rightCols(m) = 0.5 * B.cwiseProduct(B);
  sys.reference = reference;
  sys.reference_value = reference_value;
  sys.kept_indices = std::move(kept);
  return sys;
}

}  // namespace detail

inline DesignSystem build_design_system(const EvaluatedEnsemble& ensemble,
                                        Eigen::Index reference_index,
                                        const EgiConfig& config) {
  if (reference_index < 0 || reference_index >= ensemble.size())
    throw DimensionMismatch("reference index out of range");
  return detail::build_design_system_impl(ensemble, ensemble.points[reference_index],
                                          ensemble.values[reference_index],
                                          reference_index, config);
}

// Reference external to the ensemble, e.g. EGI at the ensemble mean over
// {mean} u {x^i}.
inline DesignSystem build_design_system(const EvaluatedEnsemble& ensemble,
                                        const Eigen::VectorXd& reference_point,
                                        double reference_value,
                                        const EgiConfig& config) {
  if (!std::isfinite(reference_value))
    throw NonFiniteValue("non-finite reference value");
  return detail::build_design_system_impl(ensemble, reference_point, reference_value,
                                          std::nullopt, config);
}

// Minimum-norm least squares solution of the Gamma-whitened system.
inline DerivativeEstimate infer_lsq(const DesignSystem& system) {
  const Eigen::Index m = system.n_kept();
  for (Eigen::Index i = 0; i < m; ++i)
    if (system.gamma_diag[i] == 0.0)
      throw SingularWhitening("zero Gamma entry at row " + std::to_string(i));
  const Eigen::VectorXd inv = system.gamma_diag.cwiseInverse();
  const Eigen::MatrixXd Aw = inv.asDiagonal() * system.A;
  const Eigen::VectorXd yw = inv.cwiseProduct(system.y);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Aw);
  const Eigen::VectorXd u = cod.solve(yw);
  return DerivativeEstimate{u.head(m), u.tail(m), system.directions, system.reference,
                            system.reference_value};
}

// Gaussian posterior on the coefficients, K = Sigma A^T (Gamma + A Sigma A^T)^-1.
inline DerivativePosterior infer_bayes(const DesignSystem& system,
                                       const Eigen::MatrixXd& prior_covariance,
                                       bool gamma_squared = false) {
  const Eigen::Index m = system.n_kept();
  if (prior_covariance.rows() != 2 * m || prior_covariance.cols() != 2 * m)
    throw DimensionMismatch("prior covariance must be 2(J-1) x 2(J-1)");
  Eigen::VectorXd noise = system.gamma_diag;
  if (gamma_squared) noise = noise.cwiseProduct(noise);

  const Eigen::MatrixXd& A = system.A;
  Eigen::MatrixXd innovation = A * prior_covariance * A.transpose();
  innovation.diagonal() += noise;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(innovation);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw SingularInnovation("Gamma + A Sigma A^T is not positive definite");
  const Eigen::MatrixXd K = prior_covariance * A.transpose() * ldlt.solve(
                                Eigen::MatrixXd::Identity(m, m));

  DerivativePosterior post;
  post.mean = K * system.y;
  Eigen::MatrixXd cov = prior_covariance - K * A * prior_covariance;
  post.covariance = 0.5 * (cov + cov.transpose());  // enforce symmetry
  post.directions = system.directions;
  post.reference = system.reference;
  post.reference_value = system.reference_value;
  return post;
}

inline std::vector<DerivativeEstimate> sample_posterior(
    const DerivativePosterior& posterior, Eigen::Index n_samples,
    std::uint64_t rng_seed) {
  if (n_samples < 1) throw DimensionMismatch("need n_samples >= 1");
  const Eigen::Index m = posterior.n_kept();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(posterior.covariance);
  const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd root =
      eig.eigenvectors() * lam.cwiseSqrt().asDiagonal();

  Rng rng(rng_seed);
  std::vector<DerivativeEstimate> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (Eigen::Index n = 0; n < n_samples; ++n) {
    const Eigen::VectorXd u =
        posterior.mean + root * normal_vector(rng, posterior.mean.size());
    out.push_back(DerivativeEstimate{u.head(m), u.tail(m), posterior.directions,
                                     posterior.reference, posterior.reference_value});
  }
  return out;
}

}  // namespace egi
