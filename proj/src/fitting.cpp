#include "qmem/fitting.hpp"

#include <algorithm>
#include <cmath>

namespace qmem {

namespace {

// Gaussian elimination with partial pivoting; a is row-major n x n, b length n.
bool solve_linear(std::vector<double> a, std::vector<double> b,
                  std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    if (std::fabs(a[piv * n + col]) < 1e-300) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
    x[r] = s / a[r * n + r];
  }
  return true;
}

bool invert_matrix(std::vector<double> a, std::size_t n, std::vector<double>& inv) {
  inv.assign(n * n, 0.0);
  std::vector<double> col(n), e(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    if (!solve_linear(a, e, col)) return false;
    for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
  }
  return true;
}

double cost_of(const std::vector<double>& r) {
  double c = 0.0;
  for (double v : r) c += v * v;
  return c;
}

void clamp_params(std::vector<double>& p, const FitOptions& opt) {
  if (!opt.lower.empty())
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::max(p[i], opt.lower[i]);
  if (!opt.upper.empty())
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::min(p[i], opt.upper[i]);
}

}  // namespace

FitResult fit_least_squares(const ResidualFn& f, std::vector<double> p0,
                            std::size_t n_residuals, const FitOptions& opt) {
  const std::size_t k = p0.size();
  if (k == 0 || n_residuals < k)
    throw std::invalid_argument("fit needs at least as many residuals as parameters");
  if ((!opt.lower.empty() && opt.lower.size() != k) ||
      (!opt.upper.empty() && opt.upper.size() != k))
    throw std::invalid_argument("bound vectors must match the parameter count");

  const std::vector<double> ref = p0;  // finite-difference scale reference
  clamp_params(p0, opt);

  std::vector<double> p = p0, r(n_residuals), rtrial(n_residuals);
  f(p, r);
  double cost = cost_of(r);

  FitResult best;
  best.params = p;
  double best_cost = cost;
  best.rms = std::sqrt(cost / static_cast<double>(n_residuals));

  double lambda = opt.lambda0;
  std::vector<double> jac(n_residuals * k), rp(n_residuals), rm(n_residuals);
  std::vector<double> jtj(k * k), jtr(k), step, ptrial;

  int it = 0;
  bool converged = false;
  for (; it < opt.max_iter; ++it) {
    for (std::size_t j = 0; j < k; ++j) {
      double h = 1e-6 * (std::fabs(p[j]) + 1e-3 * (std::fabs(ref[j]) + 1.0));
      std::vector<double> pp = p, pm = p;
      pp[j] += h;
      pm[j] -= h;
      f(pp, rp);
      f(pm, rm);
      double inv2h = 0.5 / h;
      for (std::size_t i = 0; i < n_residuals; ++i)
        jac[i * k + j] = (rp[i] - rm[i]) * inv2h;
    }
    for (std::size_t a = 0; a < k; ++a) {
      jtr[a] = 0.0;
      for (std::size_t b = a; b < k; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n_residuals; ++i)
          s += jac[i * k + a] * jac[i * k + b];
        jtj[a * k + b] = jtj[b * k + a] = s;
      }
      for (std::size_t i = 0; i < n_residuals; ++i) jtr[a] += jac[i * k + a] * r[i];
    }

    bool improved = false;
    for (int tries = 0; tries < 60; ++tries) {
      std::vector<double> m = jtj;
      for (std::size_t a = 0; a < k; ++a)
        m[a * k + a] += lambda * std::max(jtj[a * k + a], 1e-30);
      std::vector<double> rhs(k);
      for (std::size_t a = 0; a < k; ++a) rhs[a] = -jtr[a];
      if (!solve_linear(m, rhs, step)) {
        lambda *= 10.0;
        continue;
      }
      ptrial = p;
      for (std::size_t a = 0; a < k; ++a) ptrial[a] += step[a];
      clamp_params(ptrial, opt);
      f(ptrial, rtrial);
      double ctrial = cost_of(rtrial);
      if (ctrial < cost) {
        double drop = cost - ctrial;
        p = ptrial;
        r = rtrial;
        cost = ctrial;
        lambda = std::max(lambda / 3.0, 1e-14);
        improved = true;
        if (cost <= 1e-300 || drop <= opt.ftol * std::max(cost, 1e-300))
          converged = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e14) break;
    }

    if (cost < best_cost) {
      best_cost = cost;
      best.params = p;
      best.rms = std::sqrt(cost / static_cast<double>(n_residuals));
    }
    if (converged) break;
    if (!improved) {
      // gradient is numerically flat at this scale: treat tiny cost as done
      if (cost / static_cast<double>(n_residuals) < 1e-28) {
        converged = true;
        break;
      }
      best.iterations = it + 1;
      throw FitError("fit stalled before meeting the convergence tolerance", best);
    }
  }

  FitResult out;
  out.params = p;
  out.rms = std::sqrt(cost / static_cast<double>(n_residuals));
  out.iterations = it + 1;
  out.converged = converged || it < opt.max_iter;
  if (!out.converged)
    throw FitError("fit hit the iteration limit before converging", out);

  // covariance of the linearized problem at the solution
  if (n_residuals > k) {
    std::vector<double> inv;
    if (invert_matrix(jtj, k, inv)) {
      double s2 = cost / static_cast<double>(n_residuals - k);
      for (double& v : inv) v *= s2;
      out.covariance = std::move(inv);
    }
  }
  return out;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("linear fit needs >= 2 matched points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  double mx = sx / n, my = sy / n, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("linear fit needs spread in x");
  LinearFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = y[i] - (out.intercept + out.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  out.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
  return out;
}

PowerLawFit power_law_fit(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("power-law fit needs strictly positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  LinearFit lin = linear_fit(lx, ly);
  PowerLawFit out;
  out.coefficient = std::exp(lin.intercept);
  out.exponent = lin.slope;
  out.r2 = lin.r2;
  return out;
}

}  // namespace qmem
