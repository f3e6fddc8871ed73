#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "toeplista/bench.hpp"

namespace toeplista {

double nmse_metric(const ComplexArray& x_hat, const ComplexArray& x_true) {
  if (x_hat.size() != x_true.size()) throw DimensionError("nmse_metric: length mismatch");
  const double den = norm(x_true);
  if (den == 0.0) throw std::domain_error("nmse_metric: zero ground truth");
  return norm(x_true - x_hat) / den;
}

std::vector<std::size_t> top_k_indices(const ComplexArray& x, std::size_t k) {
  if (k > x.size()) throw std::invalid_argument("top_k_indices: k exceeds length");
  std::vector<double> mag(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mag[i] = std::hypot(x.re()[i], x.im()[i]);
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto by_magnitude = [&](std::size_t a, std::size_t b) { return mag[a] > mag[b] || (mag[a] == mag[b] && a < b); };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), by_magnitude);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double hit_rate_metric(const ComplexArray& x_hat, const ComplexArray& x_true, std::size_t k) {
  return hit_rate_metric(x_hat, x_true, k, GridShape::one_d(x_true.size()), false);
}

double hit_rate_metric(const ComplexArray& x_hat, const ComplexArray& x_true, std::size_t k, const GridShape& grid,
                       bool tolerant) {
  if (k == 0) throw std::invalid_argument("hit_rate_metric: K must be positive");
  if (x_hat.size() != x_true.size() || x_true.size() != grid.total()) {
    throw DimensionError("hit_rate_metric: length mismatch");
  }
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < x_true.size(); ++i) {
    if (x_true.re()[i] != 0.0 || x_true.im()[i] != 0.0) support.push_back(i);
  }
  if (support.size() != k) throw std::invalid_argument("hit_rate_metric: truth must have exactly K nonzeros");
  const auto top = top_k_indices(x_hat, k);
  const auto near = [&](std::size_t a, std::size_t b) {
    const auto d1 = static_cast<long long>(a / grid.m2) - static_cast<long long>(b / grid.m2);
    const auto d2 = static_cast<long long>(a % grid.m2) - static_cast<long long>(b % grid.m2);
    return std::llabs(d1) <= 1 && std::llabs(d2) <= 1;
  };
  std::size_t hits = 0;
  for (auto s : support) {
    const bool hit = tolerant ? std::any_of(top.begin(), top.end(), [&](std::size_t t) { return near(s, t); })
                              : std::binary_search(top.begin(), top.end(), s);
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Ista:
      return "ISTA";
    case Method::Fista:
      return "FISTA";
    case Method::Lista:
      return "LISTA";
    case Method::ConvLista:
      return "ConvLISTA";
    case Method::ListaToeplitz:
      return "LISTA-Toeplitz";
  }
  throw std::invalid_argument("unknown method tag");
}

Method method_from_string(const std::string& name) {
  std::string s;
  for (char c : name) {
    if (c != '-' && c != '_') s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (s == "ista") return Method::Ista;
  if (s == "fista") return Method::Fista;
  if (s == "lista") return Method::Lista;
  if (s == "convlista") return Method::ConvLista;
  if (s == "listatoeplitz" || s == "toeplitz") return Method::ListaToeplitz;
  throw std::invalid_argument("unknown method: " + name);
}

bool is_learned(Method m) { return m == Method::Lista || m == Method::ConvLista || m == Method::ListaToeplitz; }

Architecture method_architecture(Method m, const GridShape& grid) {
  switch (m) {
    case Method::Lista:
      return Architecture::Lista;
    case Method::ConvLista:
      return Architecture::ConvLista;
    case Method::ListaToeplitz:
      return grid.is_2d() ? Architecture::Toeplitz2D : Architecture::Toeplitz1D;
    default:
      throw std::invalid_argument(to_string(m) + " is not a learned method");
  }
}

double noise_variance(double noise_db) { return std::pow(10.0, noise_db / 10.0); }

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 10);
  return {buf, res.ptr};
}

}  // namespace toeplista
