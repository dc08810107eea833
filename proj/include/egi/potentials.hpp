#pragma once

// Benchmark potentials with analytic derivatives for oracle testing, plus the
// 2d non-Gaussian Bayesian posterior potential.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "egi/errors.hpp"

namespace egi {

struct Potential {
  std::string name;
  Eigen::Index dim = 0;
  std::function<double(const Eigen::VectorXd&)> eval;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> exact_gradient;  // may be empty
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> exact_hessian;   // may be empty
  std::vector<std::pair<Eigen::VectorXd, double>> known_minima;
  // Per-coordinate benchmark box used for randomized testing and as the
  // default initialization region.
  Eigen::VectorXd domain_lo;
  Eigen::VectorXd domain_hi;

  double operator()(const Eigen::VectorXd& x) const { return eval(x); }
};

inline Eigen::VectorXd finite_difference_gradient(const Potential& p,
                                                  const Eigen::VectorXd& x,
                                                  double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + step;
    const double fp = p.eval(xp);
    xp[i] = xi - step;
    const double fm = p.eval(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

namespace detail {

inline Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace detail

inline Potential make_potential(const std::string& name, Eigen::Index dim) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  constexpr double pi = std::numbers::pi;

  Potential p;
  p.name = name;
  p.dim = dim;

  if (name == "rastrigin1d_variant") {
    if (dim != 1) throw BadDimension("rastrigin1d_variant is 1d");
    p.eval = [](const VectorXd& x) {
      return x[0] * x[0] + 3.0 * (1.0 - std::cos(2.0 * pi * x[0]));
    };
    p.exact_gradient = [](const VectorXd& x) {
      VectorXd g(1);
      g[0] = 2.0 * x[0] + 6.0 * pi * std::sin(2.0 * pi * x[0]);
      return g;
    };
    p.exact_hessian = [](const VectorXd& x) {
      MatrixXd h(1, 1);
      h(0, 0) = 2.0 + 12.0 * pi * pi * std::cos(2.0 * pi * x[0]);
      return h;
    };
    p.known_minima = {{VectorXd::Zero(1), 0.0}};
    p.domain_lo = VectorXd::Constant(1, -4.0);
    p.domain_hi = VectorXd::Constant(1, -1.0);
  } else if (name == "rastrigin2d") {
    if (dim != 2) throw BadDimension("rastrigin2d is 2d");
    p.eval = [](const VectorXd& x) {
      return 20.0 + x[0] * x[0] - 10.0 * std::cos(2.0 * pi * x[0]) + x[1] * x[1] -
             10.0 * std::cos(2.0 * pi * x[1]);
    };
    p.exact_gradient = [](const VectorXd& x) {
      VectorXd g(2);
      for (int i = 0; i < 2; ++i)
        g[i] = 2.0 * x[i] + 20.0 * pi * std::sin(2.0 * pi * x[i]);
      return g;
    };
    p.exact_hessian = [](const VectorXd& x) {
      MatrixXd h = MatrixXd::Zero(2, 2);
      for (int i = 0; i < 2; ++i)
        h(i, i) = 2.0 + 40.0 * pi * pi * std::cos(2.0 * pi * x[i]);
      return h;
    };
    p.known_minima = {{VectorXd::Zero(2), 0.0}};
    p.domain_lo = VectorXd::Constant(2, -4.0);
    p.domain_hi = VectorXd::Constant(2, -1.0);
  } else if (name == "himmelblau") {
    if (dim != 2) throw BadDimension("himmelblau is 2d");
    p.eval = [](const VectorXd& x) {
      const double a = x[0] * x[0] + x[1] - 11.0;
      const double b = x[0] + x[1] * x[1] - 7.0;
      return a * a + b * b;
    };
    p.exact_gradient = [](const VectorXd& x) {
      const double a = x[0] * x[0] + x[1] - 11.0;
      const double b = x[0] + x[1] * x[1] - 7.0;
      VectorXd g(2);
      g[0] = 4.0 * a * x[0] + 2.0 * b;
      g[1] = 2.0 * a + 4.0 * b * x[1];
      return g;
    };
    p.exact_hessian = [](const VectorXd& x) {
      const double a = x[0] * x[0] + x[1] - 11.0;
      const double b = x[0] + x[1] * x[1] - 7.0;
      MatrixXd h(2, 2);
      h(0, 0) = 4.0 * a + 8.0 * x[0] * x[0] + 2.0;
      h(0, 1) = 4.0 * x[0] + 4.0 * x[1];
      h(1, 0) = h(0, 1);
      h(1, 1) = 2.0 + 4.0 * b + 8.0 * x[1] * x[1];
      return h;
    };
    p.known_minima = {
        {detail::vec2(3.0, 2.0), 0.0},
        {detail::vec2(-2.805118086952745, 3.131312518250573), 0.0},
        {detail::vec2(-3.779310253377747, -3.283185991286170), 0.0},
        {detail::vec2(3.584428340330492, -1.848126526964404), 0.0},
    };
    p.domain_lo = VectorXd::Constant(2, -5.0);
    p.domain_hi = VectorXd::Constant(2, 5.0);
  } else if (name == "shifted_quadratic") {
    if (dim < 1) throw BadDimension("shifted_quadratic needs dim >= 1");
    p.eval = [dim](const VectorXd& x) {
      return 0.5 * (x - VectorXd::Ones(dim)).squaredNorm();
    };
    p.exact_gradient = [dim](const VectorXd& x) -> VectorXd {
      return x - VectorXd::Ones(dim);
    };
    p.exact_hessian = [dim](const VectorXd&) -> MatrixXd {
      return MatrixXd::Identity(dim, dim);
    };
    p.known_minima = {{VectorXd::Ones(dim), 0.0}};
    p.domain_lo = VectorXd::Constant(dim, -4.0);
    p.domain_hi = VectorXd::Constant(dim, -1.0);
  } else if (name == "quartic_norm") {
    if (dim < 1) throw BadDimension("quartic_norm needs dim >= 1");
    p.eval = [](const VectorXd& x) {
      const double s = x.squaredNorm();
      return s * s;
    };
    p.exact_gradient = [](const VectorXd& x) -> VectorXd {
      return 4.0 * x.squaredNorm() * x;
    };
    p.exact_hessian = [dim](const VectorXd& x) -> MatrixXd {
      return 8.0 * x * x.transpose() +
             4.0 * x.squaredNorm() * MatrixXd::Identity(dim, dim);
    };
    p.known_minima = {{VectorXd::Zero(dim), 0.0}};
    p.domain_lo = VectorXd::Constant(dim, -4.0);
    p.domain_hi = VectorXd::Constant(dim, -1.0);
  } else if (name == "banana_posterior") {
    if (dim != 2) throw BadDimension("banana_posterior is 2d");
    // y = 0, noise std 1/2, prior N(0, 4 I):
    //   V(x) = 2 ((x2-2)^2 - (x1-3.5) - 1)^2 + |x|^2 / 8
    auto forward = [](const VectorXd& x) {
      return (x[1] - 2.0) * (x[1] - 2.0) - (x[0] - 3.5) - 1.0;
    };
    p.eval = [forward](const VectorXd& x) {
      const double a = forward(x);
      return 2.0 * a * a + x.squaredNorm() / 8.0;
    };
    p.exact_gradient = [forward](const VectorXd& x) {
      const double a = forward(x);
      VectorXd g(2);
      g[0] = 4.0 * a * (-1.0) + x[0] / 4.0;
      g[1] = 4.0 * a * 2.0 * (x[1] - 2.0) + x[1] / 4.0;
      return g;
    };
    p.exact_hessian = [forward](const VectorXd& x) {
      const double a = forward(x);
      VectorXd da(2);
      da << -1.0, 2.0 * (x[1] - 2.0);
      MatrixXd h = 4.0 * da * da.transpose();
      h(1, 1) += 8.0 * a;
      h += 0.25 * MatrixXd::Identity(2, 2);
      return h;
    };
    p.domain_lo = VectorXd::Constant(2, -4.0);
    p.domain_hi = VectorXd::Constant(2, 4.0);
  } else {
    throw UnknownPotential("unknown potential: " + name);
  }
  return p;
}

}  // namespace egi
