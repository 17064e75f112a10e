#include "forgevqe/optimizer.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace fvqe {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct LineSearchResult {
  bool ok = false;
  double alpha = 0.0;
  double value = 0.0;
  std::vector<double> x;
  std::vector<double> grad;
};

}  // namespace

MinimizeResult minimize_bfgs(
    const std::function<double(const std::vector<double>&, std::vector<double>&)>& objective,
    std::vector<double> x0, const MinimizeOptions& options) {
  const std::size_t n = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);

  std::vector<double> grad(n, 0.0);
  int evals = 0;
  auto eval = [&](const std::vector<double>& x, std::vector<double>& g) {
    ++evals;
    return objective(x, g);
  };
  double fx = eval(res.x, grad);

  // Inverse Hessian approximation, dense row-major.
  std::vector<double> hinv(n * n, 0.0);
  auto reset_h = [&] {
    std::fill(hinv.begin(), hinv.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = 1.0;
  };
  reset_h();
  bool first_update = true;

  const double c1 = 1e-4, c2 = 0.9;
  auto line_search = [&](const std::vector<double>& p, double f0,
                         double d0) -> LineSearchResult {
    LineSearchResult out;
    std::vector<double> xt(n), gt(n);
    auto phi = [&](double a) {
      for (std::size_t i = 0; i < n; ++i) xt[i] = res.x[i] + a * p[i];
      out.value = eval(xt, gt);
      return out.value;
    };
    auto accept = [&](double a) {
      out.ok = true;
      out.alpha = a;
      out.x = xt;
      out.grad = gt;
    };

    double a_lo = 0.0, f_lo = f0, d_lo = d0;
    double a_hi = 0.0, d_hi = 0.0;
    double a_prev = 0.0, f_prev = f0, d_prev = d0;
    double a = 1.0;
    bool bracketed = false;
    for (int it = 0; it < 30 && !bracketed; ++it) {
      const double fv = phi(a);
      const double d = dot(gt, p);
      if (fv > f0 + c1 * a * d0 || (it > 0 && fv >= f_prev)) {
        a_lo = a_prev;
        f_lo = f_prev;
        d_lo = d_prev;
        a_hi = a;
        d_hi = d;
        bracketed = true;
        break;
      }
      if (std::abs(d) <= -c2 * d0) {
        accept(a);
        return out;
      }
      if (d >= 0.0) {
        a_lo = a;
        f_lo = fv;
        d_lo = d;
        a_hi = a_prev;
        d_hi = d_prev;
        bracketed = true;
        break;
      }
      a_prev = a;
      f_prev = fv;
      d_prev = d;
      a *= 2.0;
      if (a > 1e6) break;
    }
    if (!bracketed) return out;

    for (int it = 0; it < 50; ++it) {
      // Secant step on the directional derivative (exact for quadratics),
      // safeguarded by bisection.
      double trial = 0.0;
      const double denom = d_lo - d_hi;
      if (std::abs(denom) > 1e-30) trial = a_lo + d_lo * (a_hi - a_lo) / denom;
      const double lo = std::min(a_lo, a_hi), hi = std::max(a_lo, a_hi);
      const double margin = 0.1 * (hi - lo);
      if (!(trial > lo + margin && trial < hi - margin)) trial = 0.5 * (a_lo + a_hi);
      a = trial;
      const double fv = phi(a);
      const double d = dot(gt, p);
      if (fv > f0 + c1 * a * d0 || fv >= f_lo) {
        a_hi = a;
        d_hi = d;
      } else {
        if (std::abs(d) <= -c2 * d0) {
          accept(a);
          return out;
        }
        if (d * (a_hi - a_lo) >= 0.0) {
          a_hi = a_lo;
          d_hi = d_lo;
        }
        a_lo = a;
        f_lo = fv;
        d_lo = d;
      }
      if (std::abs(a_hi - a_lo) < 1e-14 * std::max(1.0, std::abs(a_lo))) {
        if (fv <= f0 + c1 * a * d0) {
          accept(a);
          return out;
        }
        break;
      }
    }
    return out;
  };

  std::vector<double> p(n), s(n), y(n), hg(n), hy(n);
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    if (inf_norm(grad) < options.grad_tolerance) {
      res.converged = true;
      res.stop_reason = "gradient";
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += hinv[i * n + j] * grad[j];
      p[i] = -acc;
    }
    double d0 = dot(p, grad);
    if (d0 > -1e-16) {
      reset_h();
      first_update = true;
      for (std::size_t i = 0; i < n; ++i) p[i] = -grad[i];
      d0 = dot(p, grad);
      if (d0 > -1e-16) {
        res.converged = true;
        res.stop_reason = "gradient";
        break;
      }
    }

    LineSearchResult ls = line_search(p, fx, d0);
    if (!ls.ok) {
      // Retry once along steepest descent before giving up.
      reset_h();
      first_update = true;
      for (std::size_t i = 0; i < n; ++i) p[i] = -grad[i];
      d0 = dot(p, grad);
      ls = line_search(p, fx, d0);
      if (!ls.ok) {
        res.stop_reason = "line_search";
        break;
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      s[i] = ls.x[i] - res.x[i];
      y[i] = ls.grad[i] - grad[i];
    }
    const double rel_change = std::abs(fx - ls.value) / std::max(1.0, std::abs(fx));
    res.x = ls.x;
    const double f_old = fx;
    fx = ls.value;
    grad = ls.grad;
    (void)f_old;
    if (rel_change < options.energy_rel_tolerance) {
      res.converged = true;
      res.stop_reason = "energy";
      ++res.iterations;
      break;
    }

    const double sy = dot(s, y);
    if (sy > 1e-14) {
      if (first_update) {
        const double yy = dot(y, y);
        if (yy > 0.0) {
          const double scale = sy / yy;
          std::fill(hinv.begin(), hinv.end(), 0.0);
          for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = scale;
        }
        first_update = false;
      }
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += hinv[i * n + j] * y[j];
        hy[i] = acc;
      }
      const double yhy = dot(y, hy);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          hinv[i * n + j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (s[i] * hy[j] + hy[i] * s[j]);
        }
      }
    }
  }
  if (res.stop_reason.empty()) res.stop_reason = "max_iterations";
  res.value = fx;
  res.evaluations = evals;
  return res;
}

}  // namespace fvqe
