#include "toeplista/solvers.hpp"

#include <cmath>
#include <limits>

namespace toeplista {

namespace {

double residual_half_sq(const ComplexArray& y, const ComplexArray& phi_x) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dr = y.re()[i] - phi_x.re()[i];
    const double di = y.im()[i] - phi_x.im()[i];
    s += dr * dr + di * di;
  }
  return 0.5 * s;
}

// x <- S_{lambda/L}(x + Phi^H (y - Phi x) / L) given the cached product Phi x.
ComplexArray prox_grad(const Dictionary& d, const ComplexArray& y, const ComplexArray& x,
                       const ComplexArray& phi_x, double lambda, double lip) {
  const ComplexArray grad = d.apply_adjoint(y - phi_x);
  ComplexArray z = x;
  const double step = 1.0 / lip;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z.re()[i] += step * grad.re()[i];
    z.im()[i] += step * grad.im()[i];
  }
  return soft_threshold(z, Threshold(lambda * step));
}

// Converged once both the objective and the iterate stop moving, relative to
// their size. The iterate test makes a converged point an ISTA fixed point to
// within tol; an objective test alone only bounds the step by about sqrt(tol).
bool stalled(double prev, double cur, const ComplexArray& x_prev, const ComplexArray& x, double tol) {
  const double scale = std::max(std::abs(prev), std::abs(cur));
  if (std::abs(prev - cur) > tol * scale) return false;
  double step = 0.0;
  double size = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dr = x.re()[i] - x_prev.re()[i];
    const double di = x.im()[i] - x_prev.im()[i];
    step += dr * dr + di * di;
    size += x.re()[i] * x.re()[i] + x.im()[i] * x.im()[i];
  }
  return step <= tol * tol * size;
}

struct Setup {
  double lambda;
  double lip;
};

Setup prepare(const Dictionary& d, const ComplexArray& y, const SolverConfig& cfg) {
  if (y.size() != d.rows()) throw DimensionError("solver: observation length must equal N");
  if (cfg.max_iter == 0) throw std::invalid_argument("solver: max_iter must be at least 1");
  if (!(cfg.tol >= 0.0)) throw std::invalid_argument("solver: tol must be non-negative");
  const double lambda = cfg.lambda ? *cfg.lambda : default_lambda(d, y);
  if (!(lambda >= 0.0)) throw std::invalid_argument("solver: lambda must be non-negative");
  const double lip = cfg.lipschitz ? *cfg.lipschitz : dictionary_lipschitz(d);
  if (!(lip > 0.0)) throw std::invalid_argument("solver: Lipschitz constant must be positive");
  return {lambda, lip};
}

}  // namespace

double objective(const Dictionary& d, const ComplexArray& x, const ComplexArray& y, double lambda) {
  if (x.size() != d.cols() || y.size() != d.rows()) throw DimensionError("objective: shape mismatch");
  return residual_half_sq(y, d.apply(x)) + lambda * l1_norm(x);
}

double default_lambda(const Dictionary& d, const ComplexArray& y) {
  return 0.1 * max_abs(d.apply_adjoint(y));
}

double dictionary_lipschitz(const Dictionary& d) { return lipschitz_constant(d.matrix()).value; }

ComplexArray ista_step(const Dictionary& d, const ComplexArray& y, const ComplexArray& x, double lambda,
                       double lipschitz) {
  return prox_grad(d, y, x, d.apply(x), lambda, lipschitz);
}

SolverResult ista(const Dictionary& d, const ComplexArray& y, const SolverConfig& cfg) {
  const auto [lambda, lip] = prepare(d, y, cfg);
  SolverResult res;
  res.lambda = lambda;
  res.lipschitz = lip;
  ComplexArray x(d.cols());
  ComplexArray phi_x(d.rows());
  double f_prev = residual_half_sq(y, phi_x);
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    ComplexArray x_next = prox_grad(d, y, x, phi_x, lambda, lip);
    phi_x = d.apply(x_next);
    const double f = residual_half_sq(y, phi_x) + lambda * l1_norm(x_next);
    if (!std::isfinite(f)) throw NumericError("ista: non-finite iterate", it);
    if (cfg.record_trace) res.objective_trace.push_back(f);
    res.iterations_run = it;
    const bool done = stalled(f_prev, f, x, x_next, cfg.tol);
    x = std::move(x_next);
    if (done) {
      res.converged = true;
      break;
    }
    f_prev = f;
  }
  res.x_hat = std::move(x);
  return res;
}

SolverResult fista(const Dictionary& d, const ComplexArray& y, const SolverConfig& cfg) {
  const auto [lambda, lip] = prepare(d, y, cfg);
  SolverResult res;
  res.lambda = lambda;
  res.lipschitz = lip;
  ComplexArray x(d.cols());
  ComplexArray phi_x(d.rows());
  ComplexArray v = x;
  ComplexArray phi_v = phi_x;
  double t = 1.0;
  double f_prev = residual_half_sq(y, phi_x);
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    ComplexArray x_next = prox_grad(d, y, v, phi_v, lambda, lip);
    ComplexArray phi_next = d.apply(x_next);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    // Momentum point and its image, using linearity of Phi.
    v = x_next + cplx(beta) * (x_next - x);
    phi_v = phi_next + cplx(beta) * (phi_next - phi_x);
    const double f = residual_half_sq(y, phi_next) + lambda * l1_norm(x_next);
    if (!std::isfinite(f)) throw NumericError("fista: non-finite iterate", it);
    if (cfg.record_trace) res.objective_trace.push_back(f);
    res.iterations_run = it;
    const bool done = stalled(f_prev, f, x, x_next, cfg.tol);
    x = std::move(x_next);
    phi_x = std::move(phi_next);
    t = t_next;
    if (done) {
      res.converged = true;
      break;
    }
    f_prev = f;
  }
  res.x_hat = std::move(x);
  return res;
}

}  // namespace toeplista
