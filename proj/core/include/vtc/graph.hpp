#pragma once

#include <functional>
#include <vector>

#include "vtc/tensor.hpp"

namespace vtc {

// Reverse-mode autodiff tape.  Ops append nodes; backward() replays the
// tape in reverse, accumulating into per-node grad tensors.  One Graph per
// forward pass; graphs are independent, so concurrent readers of a shared
// parameter set each build their own.
class Graph {
 public:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> back;  // empty for leaves
  };

  int leaf(Tensor v);

  const Tensor& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }
  Tensor& grad_mut(int id) { return nodes_[static_cast<size_t>(id)].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // elementwise / broadcast
  int add(int a, int b);
  int add_rowvec(int x, int b);   // x:[R,N] or [B,S,N], b:[N]
  int add_rowmat(int x, int m);   // x:[B,S,N], m:[S,N] broadcast over batch
  int scale(int x, double c);
  int scale_by_exp(int x, int s);  // x * exp(s), s scalar var

  // linear algebra
  int matmul(int a, int b);     // [m,k] x [k,n]
  int matmul_nt(int a, int b);  // [m,k] x [n,k]^T
  int linear(int x, int w, int b);  // x:[R,K] or [B,S,K]; w:[K,N]; b:[N] or -1

  // normalization / activation
  int layer_norm(int x, int gain, int bias, double eps = 1e-5);
  int gelu(int x);
  int l2norm_rows(int x);

  // fused multi-head self-attention over x:[B,S,D]
  int attention(int x, int heads, int wq, int bq, int wk, int bk, int wv, int bv,
                int wo, int bo, bool causal);

  // sequence surgery
  int prepend_rows(int x, int p);        // x:[B,S,D], p:[P,D] -> [B,P+S,D]
  int replace_front_rows(int x, int p);  // overwrite rows [0,P) of each batch item
  int gather_rows(int table, const std::vector<int>& ids);  // [V,D] -> [R,D]
  int select_row(int x, int row);                           // [B,S,D] -> [B,D]
  int select_rows(int x, const std::vector<int>& rows);     // per-batch row index
  int reshape(int x, std::vector<int> shape);
  int mean_group_rows(int x, int group);  // [G*T,N] -> [G,N]

  // loss
  int ce_mean(int logits, const std::vector<int>& targets);

  void backward(int id);

 private:
  int push(Tensor v, std::function<void()> back = {});
  std::vector<Node> nodes_;
};

}  // namespace vtc
