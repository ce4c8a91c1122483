#include "vtc/tensor.hpp"

#include <Eigen/Dense>

#include <sstream>

namespace vtc {

namespace {
using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

int64_t count(const std::vector<int>& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  if (shape.empty() || shape.size() > 3)
    throw ShapeError("tensor rank must be 1..3, got " + shape_str(shape));
  for (int d : shape)
    if (d <= 0) throw ShapeError("non-positive tensor dimension in " + shape_str(shape));
  data.assign(static_cast<size_t>(count(shape)), 0.0);
}

Tensor Tensor::full(std::vector<int> s, double v) {
  Tensor t(std::move(s));
  std::fill(t.data.begin(), t.data.end(), v);
  return t;
}

Tensor Tensor::from_vec(std::vector<int> s, std::vector<double> v) {
  Tensor t(std::move(s));
  if (static_cast<int64_t>(v.size()) != t.numel())
    throw ShapeError("from_vec: " + std::to_string(v.size()) + " values for shape " +
                     shape_str(t.shape));
  t.data = std::move(v);
  return t;
}

int64_t Tensor::numel() const { return count(shape); }

std::string shape_str(const std::vector<int>& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

void require_shape(const Tensor& t, const std::vector<int>& s, const std::string& what) {
  if (t.shape != s)
    throw ShapeError(what + ": expected shape " + shape_str(s) + ", got " +
                     shape_str(t.shape));
}

void gemm(const double* a, const double* b, double* c, int m, int k, int n,
          bool accumulate) {
  CMap A(a, m, k), B(b, k, n);
  MMap C(c, m, n);
  if (accumulate)
    C.noalias() += A * B;
  else
    C.noalias() = A * B;
}

void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
  CMap A(a, m, k), B(b, n, k);
  MMap C(c, m, n);
  if (accumulate)
    C.noalias() += A * B.transpose();
  else
    C.noalias() = A * B.transpose();
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
  CMap A(a, k, m), B(b, k, n);
  MMap C(c, m, n);
  if (accumulate)
    C.noalias() += A.transpose() * B;
  else
    C.noalias() = A.transpose() * B;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape) + " x " +
                     shape_str(b.shape));
  Tensor c({a.dim(0), b.dim(1)});
  gemm(a.data.data(), b.data.data(), c.data.data(), a.dim(0), a.dim(1), b.dim(1));
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(1))
    throw ShapeError("matmul_nt: incompatible shapes " + shape_str(a.shape) + " x " +
                     shape_str(b.shape) + "^T");
  Tensor c({a.dim(0), b.dim(0)});
  gemm_nt(a.data.data(), b.data.data(), c.data.data(), a.dim(0), a.dim(1), b.dim(0));
  return c;
}

}  // namespace vtc
