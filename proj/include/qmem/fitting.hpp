#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmem {

struct FitOptions {
  int max_iter = 300;
  double ftol = 1e-14;        // relative cost decrease treated as converged
  double lambda0 = 1e-3;
  std::vector<double> lower;  // box bounds; empty means unbounded
  std::vector<double> upper;
};

struct FitResult {
  std::vector<double> params;
  std::vector<double> covariance;  // row-major k x k, from linearized fit
  double rms = 0.0;                // sqrt(cost / n_residuals)
  int iterations = 0;
  bool converged = false;
};

// Thrown when the optimizer stalls; carries the best point reached.
struct FitError : std::runtime_error {
  FitResult best;
  FitError(const std::string& what, FitResult b)
      : std::runtime_error(what), best(std::move(b)) {}
};

// Residual callback fills r (size fixed at n_residuals) for parameter vector p.
using ResidualFn =
    std::function<void(const std::vector<double>&, std::vector<double>&)>;

// Damped least squares with numeric Jacobian and optional box constraints.
FitResult fit_least_squares(const ResidualFn& f, std::vector<double> p0,
                            std::size_t n_residuals, const FitOptions& opt = {});

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct PowerLawFit {
  double coefficient = 0.0;
  double exponent = 0.0;
  double r2 = 0.0;  // on log-log axes
};

// y = c * x^p via regression on logarithms; requires positive data.
PowerLawFit power_law_fit(std::span<const double> x, std::span<const double> y);

}  // namespace qmem
