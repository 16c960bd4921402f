#include "crowdlab/rank1.hpp"

#include <cmath>

#include "crowdlab/error.hpp"

namespace crowdlab {

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

Rank1 rank1_factorize(const Matrix& a, double tol, int max_iters) {
  const std::size_t n_rows = a.rows();
  const std::size_t n_cols = a.cols();
  if (n_rows == 0 || n_cols == 0) throw Error("rank-1 factorization of an empty matrix");

  bool any = false;
  for (double x : a.data())
    if (x != 0.0) { any = true; break; }
  if (!any) throw Error("rank-1 factorization of an all-zero matrix");

  std::vector<double> v(n_cols, 1.0 / std::sqrt(static_cast<double>(n_cols)));
  std::vector<double> av(n_rows), next(n_cols);

  Rank1 out;
  for (int it = 0; it < max_iters; ++it) {
    ++out.iterations;
    for (std::size_t r = 0; r < n_rows; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < n_cols; ++c) s += a(r, c) * v[c];
      av[r] = s;
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < n_rows; ++r) s += a(r, c) * av[r];
      next[c] = s;
    }
    const double norm = norm2(next);
    if (norm == 0.0) throw Error("power iteration collapsed to zero");
    for (double& x : next) x /= norm;
    double delta = 0.0;
    for (std::size_t c = 0; c < n_cols; ++c) {
      const double d = next[c] - v[c];
      delta += d * d;
    }
    v = next;
    if (std::sqrt(delta) < tol) {
      out.converged = true;
      break;
    }
  }

  for (std::size_t r = 0; r < n_rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n_cols; ++c) s += a(r, c) * v[c];
    av[r] = s;
  }
  out.sigma = norm2(av);
  if (out.sigma == 0.0) throw Error("zero leading singular value");

  const double scale = std::sqrt(out.sigma);
  out.row.resize(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) out.row[r] = av[r] / out.sigma * scale;
  out.col.resize(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) out.col[c] = v[c] * scale;
  return out;
}

}  // namespace crowdlab
