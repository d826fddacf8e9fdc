#pragma once

#include <Eigen/Dense>
#include <vector>

#include "icorr/common.hpp"

namespace icorr::ad {

// Reverse-mode autodiff over dense matrices. A Tape owns the node values
// and gradients for one computation; handles (Ref) index into it. Scalars
// are 1x1 matrices.
struct Ref {
  int i = -1;
  bool valid() const { return i >= 0; }
};

class Tape {
 public:
  Ref constant(const Eigen::MatrixXd& v);
  // Leaf whose gradient is accumulated and can be read back after backward().
  Ref leaf(const Eigen::MatrixXd& v);

  const Eigen::MatrixXd& val(Ref r) const { return nodes_[r.i].val; }
  const Eigen::MatrixXd& grad(Ref r) const { return nodes_[r.i].grad; }

  Ref add(Ref a, Ref b);
  Ref sub(Ref a, Ref b);
  Ref mul(Ref a, Ref b);               // elementwise
  Ref cmul(Ref a, const Eigen::MatrixXd& c);  // elementwise by constant
  Ref affine(Ref a, double scale, double shift);
  Ref matmul(Ref a, Ref b);
  Ref add_row(Ref a, Ref row);         // broadcast a 1xC row over rows of a
  Ref transpose(Ref a);
  Ref leaky_relu(Ref a, double slope);
  Ref sigmoid(Ref a);
  Ref tanh(Ref a);
  // Row-wise max over columns -> Nx1; gradient routed to the argmax entry,
  // ties broken by lowest column index.
  Ref rowmax(Ref a, std::vector<int>* argmax = nullptr);
  // Column-wise max over rows -> 1xC (max-pool over a point set).
  Ref colmax(Ref a, std::vector<int>* argmax = nullptr);
  Ref gather_rows(Ref a, std::vector<int> idx);
  Ref slice_cols(Ref a, int c0, int n);
  Ref hcat(Ref a, Ref b);
  Ref vcat(const std::vector<Ref>& parts);
  Ref repeat_row(Ref row, int n);
  Ref scale_all(Ref a, Ref s);         // multiply all entries by a 1x1 node
  Ref sum(Ref a);                      // 1x1
  Ref sumsq(Ref a);                    // 1x1, sum of squared entries
  // Per-row L2 norms -> Nx1. Rows with norm < eps get zero gradient.
  Ref rownorm(Ref a, double eps = 1e-12);
  Ref rowdot(Ref a, Ref b);            // Nx1 of per-row dot products
  // Rows scaled to unit length; rows with norm < eps pass through as zero.
  Ref normalize_rows(Ref a, double eps = 1e-12);

  // Seeds root (must be 1x1) with gradient 1 and runs the reverse sweep.
  void backward(Ref root);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Eigen::MatrixXd val;
    Eigen::MatrixXd grad;
    // Inputs + closure; empty for leaves/constants.
    std::function<void(Tape&)> back;
  };
  int push(Eigen::MatrixXd v, std::function<void(Tape&)> back);
  Eigen::MatrixXd& grad_mut(Ref r) { return nodes_[r.i].grad; }
  std::vector<Node> nodes_;
};

}  // namespace icorr::ad
