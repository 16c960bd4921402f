#ifndef CROWDLAB_MATRIX_HPP_
#define CROWDLAB_MATRIX_HPP_

#include <cstddef>
#include <vector>

namespace crowdlab {

// Minimal dense row-major matrix. Enough for confusion matrices and the
// agreement matrices handed to the rank-1 factorizer; not a linear algebra
// library.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

}  // namespace crowdlab

#endif  // CROWDLAB_MATRIX_HPP_
