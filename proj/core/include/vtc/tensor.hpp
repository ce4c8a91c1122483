#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vtc/error.hpp"

namespace vtc {

// Dense row-major tensor of doubles, rank 1..3.  All model arithmetic runs
// in double; float32 appears only at the storage/serialization boundary.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, double v);
  static Tensor from_vec(std::vector<int> s, std::vector<double> v);

  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  int64_t numel() const;

  double& at(int i) { return data[static_cast<size_t>(i)]; }
  double at(int i) const { return data[static_cast<size_t>(i)]; }
  double& at(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
  double at(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }
  double& at(int b, int i, int j) {
    return data[(static_cast<size_t>(b) * shape[1] + i) * shape[2] + j];
  }
  double at(int b, int i, int j) const {
    return data[(static_cast<size_t>(b) * shape[1] + i) * shape[2] + j];
  }

  // Pointer to row i of a 2-D tensor, or to matrix b of a 3-D tensor.
  double* row_ptr(int i) { return data.data() + static_cast<size_t>(i) * shape.back(); }
  const double* row_ptr(int i) const {
    return data.data() + static_cast<size_t>(i) * shape.back();
  }
  double* mat_ptr(int b) {
    return data.data() + static_cast<size_t>(b) * shape[1] * shape[2];
  }
  const double* mat_ptr(int b) const {
    return data.data() + static_cast<size_t>(b) * shape[1] * shape[2];
  }
};

std::string shape_str(const std::vector<int>& s);
bool same_shape(const Tensor& a, const Tensor& b);
void require_shape(const Tensor& t, const std::vector<int>& s, const std::string& what);

// Raw GEMM kernels on row-major buffers.  When `accumulate` is set the
// product is added onto C instead of overwriting it.
void gemm(const double* a, const double* b, double* c, int m, int k, int n,
          bool accumulate = false);
// C[m,n] = A[m,k] * B[n,k]^T
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate = false);
// C[m,n] = A[k,m]^T * B[k,n]
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate = false);

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// [m,k] x [n,k]^T -> [m,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);

}  // namespace vtc
