#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace genst::toy {

// Dense row-major matrix of doubles. Vectors are 1×n tensors.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  const double* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }
  double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }

  void zero() { std::fill(v.begin(), v.end(), 0.0); }
  size_t size() const { return v.size(); }
};

// out = a * b, where a is [m×k] and b is [k×n]. i-k-j loop order.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  assert(a.cols == b.rows);
  Tensor out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    double* out_row = out.row(i);
    const double* a_row = a.row(i);
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a_row[k];
      if (aik == 0.0) continue;
      const double* b_row = b.row(k);
      for (int j = 0; j < b.cols; ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

// out += a^T * b, where a is [m×k] and b is [m×n]; out is [k×n].
inline void add_matmul_at_b(Tensor& out, const Tensor& a, const Tensor& b) {
  assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  for (int m = 0; m < a.rows; ++m) {
    const double* a_row = a.row(m);
    const double* b_row = b.row(m);
    for (int k = 0; k < a.cols; ++k) {
      const double amk = a_row[k];
      if (amk == 0.0) continue;
      double* out_row = out.row(k);
      for (int j = 0; j < b.cols; ++j) out_row[j] += amk * b_row[j];
    }
  }
}

// out += a * b^T, where a is [m×n] and b is [k×n]; out is [m×k].
inline void add_matmul_a_bt(Tensor& out, const Tensor& a, const Tensor& b) {
  assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* a_row = a.row(i);
    double* out_row = out.row(i);
    for (int k = 0; k < b.rows; ++k) {
      const double* b_row = b.row(k);
      double acc = 0.0;
      for (int j = 0; j < a.cols; ++j) acc += a_row[j] * b_row[j];
      out_row[k] += acc;
    }
  }
}

}  // namespace genst::toy
