#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "toeplista/complex_array.hpp"
#include "toeplista/harmonic_model.hpp"

namespace toeplista {

struct SolverConfig {
  /// Regularization weight; default_lambda() is used when unset.
  std::optional<double> lambda;
  std::size_t max_iter = 1000;
  /// Stop once the relative changes of both the objective and the iterate fall below this.
  double tol = 1e-10;
  bool record_trace = false;
  /// Step size 1/L; estimated from the dictionary when unset.
  std::optional<double> lipschitz;
};

struct SolverResult {
  ComplexArray x_hat;
  std::size_t iterations_run = 0;
  std::vector<double> objective_trace;
  bool converged = false;
  double lambda = 0.0;
  double lipschitz = 0.0;
};

/// 0.5 ||y - Phi x||^2 + lambda sum |x_i|.
double objective(const Dictionary& d, const ComplexArray& x, const ComplexArray& y, double lambda);

/// 0.1 * ||Phi^H y||_inf.
double default_lambda(const Dictionary& d, const ComplexArray& y);

/// Largest eigenvalue of Phi^H Phi with the default power-iteration settings.
double dictionary_lipschitz(const Dictionary& d);

/// One proximal-gradient step from x.
ComplexArray ista_step(const Dictionary& d, const ComplexArray& y, const ComplexArray& x, double lambda,
                       double lipschitz);

SolverResult ista(const Dictionary& d, const ComplexArray& y, const SolverConfig& cfg);
SolverResult fista(const Dictionary& d, const ComplexArray& y, const SolverConfig& cfg);

}  // namespace toeplista
