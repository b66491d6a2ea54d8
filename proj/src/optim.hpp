#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

// Small dense quasi-Newton minimizer shared by the variance and speed fits.
// Gradients are central differences with a relative step of 1e-6; the
// objective may return +infinity for infeasible points, which the Armijo
// backtracking line search treats as "no progress".

namespace windemos::detail {

struct MinimizeResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

using Objective = std::function<double(const std::vector<double>&)>;

inline std::vector<double> numeric_gradient(const Objective& f, const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> g(n, 0.0);
  std::vector<double> xp = x;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline MinimizeResult minimize_bfgs(const Objective& f, std::vector<double> x0,
                                    int max_iters = 500, double grad_tol = 1e-8) {
  const std::size_t n = x0.size();
  MinimizeResult out;
  out.x = x0;
  out.value = f(x0);
  if (!std::isfinite(out.value)) return out;

  std::vector<double> x = x0;
  double fx = out.value;
  std::vector<double> g = numeric_gradient(f, x);

  // Inverse Hessian approximation, dense row-major.
  std::vector<double> h(n * n, 0.0);
  auto reset_h = [&] {
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
  };
  reset_h();

  auto inf_norm = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
  };

  for (int iter = 0; iter < max_iters; ++iter) {
    out.iterations = iter;
    if (inf_norm(g) < grad_tol * std::max(1.0, std::abs(fx))) {
      out.converged = true;
      break;
    }

    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d[i] -= h[i * n + j] * g[j];
    }
    double dg = 0.0;
    for (std::size_t i = 0; i < n; ++i) dg += d[i] * g[i];
    if (!(dg < 0.0)) {  // not a descent direction; restart from steepest descent
      reset_h();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      dg = 0.0;
      for (std::size_t i = 0; i < n; ++i) dg += d[i] * g[i];
      if (!(dg < 0.0)) {
        out.converged = true;  // gradient numerically zero
        break;
      }
    }

    double t = 1.0;
    double fnew = std::numeric_limits<double>::infinity();
    std::vector<double> xnew(n);
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      for (std::size_t i = 0; i < n; ++i) xnew[i] = x[i] + t * d[i];
      fnew = f(xnew);
      if (std::isfinite(fnew) && fnew <= fx + 1e-4 * t * dg) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      out.converged = inf_norm(g) < 1e-4 * std::max(1.0, std::abs(fx));
      break;
    }

    std::vector<double> gnew = numeric_gradient(f, xnew);
    std::vector<double> s(n), y(n);
    double sy = 0.0, ss = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xnew[i] - x[i];
      y[i] = gnew[i] - g[i];
      sy += s[i] * y[i];
      ss += s[i] * s[i];
      yy += y[i] * y[i];
    }
    if (sy > 1e-12 * std::sqrt(ss * yy)) {
      // H <- (I - s y'/sy) H (I - y s'/sy) + s s'/sy
      std::vector<double> hy(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) hy[i] += h[i * n + j] * y[j];
      }
      double yhy = 0.0;
      for (std::size_t i = 0; i < n; ++i) yhy += y[i] * hy[i];
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          h[i * n + j] += ((sy + yhy) * s[i] * s[j]) / (sy * sy) -
                          (hy[i] * s[j] + s[i] * hy[j]) / sy;
        }
      }
    }

    x = xnew;
    fx = fnew;
    g = std::move(gnew);
    if (fx < out.value) {
      out.value = fx;
      out.x = x;
    }
  }
  if (fx < out.value) {
    out.value = fx;
    out.x = x;
  }
  return out;
}

}  // namespace windemos::detail
