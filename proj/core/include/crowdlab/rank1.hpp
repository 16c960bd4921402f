#ifndef CROWDLAB_RANK1_HPP_
#define CROWDLAB_RANK1_HPP_

#include <vector>

#include "crowdlab/matrix.hpp"

namespace crowdlab {

// Leading singular triple of a nonnegative matrix, split as A ~ row * col^T
// with row = u1 * sqrt(sigma1) and col = v1 * sqrt(sigma1). Both factors are
// nonnegative for nonnegative input.
struct Rank1 {
  std::vector<double> row;
  std::vector<double> col;
  double sigma = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Power iteration on A^T A starting from the uniform vector; stops when the
// iterate moves less than `tol` in the 2-norm or after `max_iters` rounds
// (then converged = false and the best iterate is returned). An all-zero
// matrix is an error.
Rank1 rank1_factorize(const Matrix& a, double tol = 1e-10, int max_iters = 1000);

}  // namespace crowdlab

#endif  // CROWDLAB_RANK1_HPP_
