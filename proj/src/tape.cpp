#include "icorr/tape.hpp"

#include <cmath>
#include <memory>

namespace icorr::ad {

int Tape::push(Eigen::MatrixXd v, std::function<void(Tape&)> back) {
  Node n;
  n.grad = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  n.val = std::move(v);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Ref Tape::constant(const Eigen::MatrixXd& v) { return {push(v, nullptr)}; }
Ref Tape::leaf(const Eigen::MatrixXd& v) { return {push(v, nullptr)}; }

Ref Tape::add(Ref a, Ref b) {
  Ref out{push(val(a) + val(b), nullptr)};
  nodes_[out.i].back = [a, b, out](Tape& t) {
    t.grad_mut(a) += t.grad(out);
    t.grad_mut(b) += t.grad(out);
  };
  return out;
}

Ref Tape::sub(Ref a, Ref b) {
  Ref out{push(val(a) - val(b), nullptr)};
  nodes_[out.i].back = [a, b, out](Tape& t) {
    t.grad_mut(a) += t.grad(out);
    t.grad_mut(b) -= t.grad(out);
  };
  return out;
}

Ref Tape::mul(Ref a, Ref b) {
  Ref out{push(val(a).cwiseProduct(val(b)), nullptr)};
  nodes_[out.i].back = [a, b, out](Tape& t) {
    t.grad_mut(a) += t.grad(out).cwiseProduct(t.val(b));
    t.grad_mut(b) += t.grad(out).cwiseProduct(t.val(a));
  };
  return out;
}

Ref Tape::cmul(Ref a, const Eigen::MatrixXd& c) {
  Ref out{push(val(a).cwiseProduct(c), nullptr)};
  nodes_[out.i].back = [a, c, out](Tape& t) { t.grad_mut(a) += t.grad(out).cwiseProduct(c); };
  return out;
}

Ref Tape::affine(Ref a, double scale, double shift) {
  Ref out{push((val(a).array() * scale + shift).matrix(), nullptr)};
  nodes_[out.i].back = [a, scale, out](Tape& t) { t.grad_mut(a) += scale * t.grad(out); };
  return out;
}

Ref Tape::matmul(Ref a, Ref b) {
  Ref out{push(val(a) * val(b), nullptr)};
  nodes_[out.i].back = [a, b, out](Tape& t) {
    t.grad_mut(a) += t.grad(out) * t.val(b).transpose();
    t.grad_mut(b) += t.val(a).transpose() * t.grad(out);
  };
  return out;
}

Ref Tape::add_row(Ref a, Ref row) {
  Ref out{push(val(a).rowwise() + val(row).row(0), nullptr)};
  nodes_[out.i].back = [a, row, out](Tape& t) {
    t.grad_mut(a) += t.grad(out);
    t.grad_mut(row) += t.grad(out).colwise().sum();
  };
  return out;
}

Ref Tape::transpose(Ref a) {
  Ref out{push(val(a).transpose(), nullptr)};
  nodes_[out.i].back = [a, out](Tape& t) { t.grad_mut(a) += t.grad(out).transpose(); };
  return out;
}

Ref Tape::leaky_relu(Ref a, double slope) {
  Eigen::MatrixXd mask = (val(a).array() > 0.0).select(Eigen::MatrixXd::Ones(val(a).rows(), val(a).cols()),
                                                       Eigen::MatrixXd::Constant(val(a).rows(), val(a).cols(), slope));
  Ref out{push(val(a).cwiseProduct(mask), nullptr)};
  nodes_[out.i].back = [a, mask, out](Tape& t) { t.grad_mut(a) += t.grad(out).cwiseProduct(mask); };
  return out;
}

Ref Tape::sigmoid(Ref a) {
  Eigen::MatrixXd s = (1.0 / (1.0 + (-val(a).array()).exp())).matrix();
  Ref out{push(s, nullptr)};
  nodes_[out.i].back = [a, out](Tape& t) {
    const Eigen::MatrixXd& s = t.val(out);
    t.grad_mut(a) += t.grad(out).cwiseProduct((s.array() * (1.0 - s.array())).matrix());
  };
  return out;
}

Ref Tape::tanh(Ref a) {
  Ref out{push(val(a).array().tanh().matrix(), nullptr)};
  nodes_[out.i].back = [a, out](Tape& t) {
    const Eigen::MatrixXd& y = t.val(out);
    t.grad_mut(a) += t.grad(out).cwiseProduct((1.0 - y.array().square()).matrix());
  };
  return out;
}

Ref Tape::rowmax(Ref a, std::vector<int>* argmax) {
  const Eigen::MatrixXd& v = val(a);
  Eigen::MatrixXd out(v.rows(), 1);
  auto idx = std::make_shared<std::vector<int>>(v.rows());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < v.cols(); ++c)
      if (v(r, c) > v(r, best)) best = static_cast<int>(c);  // strict: lowest index wins ties
    (*idx)[r] = best;
    out(r, 0) = v(r, best);
  }
  if (argmax) *argmax = *idx;
  Ref o{push(out, nullptr)};
  nodes_[o.i].back = [a, idx, o](Tape& t) {
    Eigen::MatrixXd& g = t.grad_mut(a);
    const Eigen::MatrixXd& go = t.grad(o);
    for (Eigen::Index r = 0; r < go.rows(); ++r) g(r, (*idx)[r]) += go(r, 0);
  };
  return o;
}

Ref Tape::colmax(Ref a, std::vector<int>* argmax) {
  const Eigen::MatrixXd& v = val(a);
  Eigen::MatrixXd out(1, v.cols());
  auto idx = std::make_shared<std::vector<int>>(v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    int best = 0;
    for (Eigen::Index r = 1; r < v.rows(); ++r)
      if (v(r, c) > v(best, c)) best = static_cast<int>(r);
    (*idx)[c] = best;
    out(0, c) = v(best, c);
  }
  if (argmax) *argmax = *idx;
  Ref o{push(out, nullptr)};
  nodes_[o.i].back = [a, idx, o](Tape& t) {
    Eigen::MatrixXd& g = t.grad_mut(a);
    const Eigen::MatrixXd& go = t.grad(o);
    for (Eigen::Index c = 0; c < go.cols(); ++c) g((*idx)[c], c) += go(0, c);
  };
  return o;
}

Ref Tape::gather_rows(Ref a, std::vector<int> idx) {
  const Eigen::MatrixXd& v = val(a);
  Eigen::MatrixXd out(idx.size(), v.cols());
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= v.rows()) throw DataError("gather_rows: index out of range");
    out.row(r) = v.row(idx[r]);
  }
  auto ix = std::make_shared<std::vector<int>>(std::move(idx));
  Ref o{push(out, nullptr)};
  nodes_[o.i].back = [a, ix, o](Tape& t) {
    Eigen::MatrixXd& g = t.grad_mut(a);
    const Eigen::MatrixXd& go = t.grad(o);
    for (Eigen::Index r = 0; r < go.rows(); ++r) g.row((*ix)[r]) += go.row(r);
  };
  return o;
}

Ref Tape::slice_cols(Ref a, int c0, int n) {
  Ref out{push(val(a).middleCols(c0, n), nullptr)};
  nodes_[out.i].back = [a, c0, n, out](Tape& t) {
    t.grad_mut(a).middleCols(c0, n) += t.grad(out);
  };
  return out;
}

Ref Tape::hcat(Ref a, Ref b) {
  Eigen::MatrixXd out(val(a).rows(), val(a).cols() + val(b).cols());
  out << val(a), val(b);
  Ref o{push(out, nullptr)};
  int ca = static_cast<int>(val(a).cols());
  nodes_[o.i].back = [a, b, ca, o](Tape& t) {
    t.grad_mut(a) += t.grad(o).leftCols(ca);
    t.grad_mut(b) += t.grad(o).rightCols(t.grad(o).cols() - ca);
  };
  return o;
}

Ref Tape::vcat(const std::vector<Ref>& parts) {
  Eigen::Index rows = 0, cols = val(parts.front()).cols();
  for (Ref p : parts) rows += val(p).rows();
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index at = 0;
  for (Ref p : parts) {
    out.middleRows(at, val(p).rows()) = val(p);
    at += val(p).rows();
  }
  auto ps = std::make_shared<std::vector<Ref>>(parts);
  Ref o{push(out, nullptr)};
  nodes_[o.i].back = [ps, o](Tape& t) {
    Eigen::Index at = 0;
    for (Ref p : *ps) {
      Eigen::Index r = t.val(p).rows();
      t.grad_mut(p) += t.grad(o).middleRows(at, r);
      at += r;
    }
  };
  return o;
}

Ref Tape::repeat_row(Ref row, int n) {
  Ref out{push(val(row).row(0).replicate(n, 1), nullptr)};
  nodes_[out.i].back = [row, out](Tape& t) {
    t.grad_mut(row) += t.grad(out).colwise().sum();
  };
  return out;
}

Ref Tape::scale_all(Ref a, Ref s) {
  double sv = val(s)(0, 0);
  Ref out{push(val(a) * sv, nullptr)};
  nodes_[out.i].back = [a, s, sv, out](Tape& t) {
    t.grad_mut(a) += sv * t.grad(out);
    t.grad_mut(s)(0, 0) += (t.grad(out).cwiseProduct(t.val(a))).sum();
  };
  return out;
}

Ref Tape::sum(Ref a) {
  Eigen::MatrixXd s(1, 1);
  s(0, 0) = val(a).sum();
  Ref out{push(s, nullptr)};
  nodes_[out.i].back = [a, out](Tape& t) {
    t.grad_mut(a).array() += t.grad(out)(0, 0);
  };
  return out;
}

Ref Tape::sumsq(Ref a) {
  Eigen::MatrixXd s(1, 1);
  s(0, 0) = val(a).squaredNorm();
  Ref out{push(s, nullptr)};
  nodes_[out.i].back = [a, out](Tape& t) {
    t.grad_mut(a) += 2.0 * t.grad(out)(0, 0) * t.val(a);
  };
  return out;
}

Ref Tape::rownorm(Ref a, double eps) {
  const Eigen::MatrixXd& v = val(a);
  Eigen::MatrixXd out(v.rows(), 1);
  for (Eigen::Index r = 0; r < v.rows(); ++r) out(r, 0) = v.row(r).norm();
  Ref o{push(out, nullptr)};
  nodes_[o.i].back = [a, eps, o](Tape& t) {
    const Eigen::MatrixXd& v = t.val(a);
    const Eigen::MatrixXd& nv = t.val(o);
    const Eigen::MatrixXd& go = t.grad(o);
    Eigen::MatrixXd& g = t.grad_mut(a);
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      if (nv(r, 0) < eps) continue;  // subgradient 0 at the kink
      g.row(r) += (go(r, 0) / nv(r, 0)) * v.row(r);
    }
  };
  return o;
}

Ref Tape::rowdot(Ref a, Ref b) {
  const Eigen::MatrixXd& va = val(a);
  const Eigen::MatrixXd& vb = val(b);
  Eigen::MatrixXd out(va.rows(), 1);
  for (Eigen::Index r = 0; r < va.rows(); ++r) out(r, 0) = va.row(r).dot(vb.row(r));
  Ref o{push(out, nullptr)};
  nodes_[o.i].back = [a, b, o](Tape& t) {
    const Eigen::MatrixXd& go = t.grad(o);
    for (Eigen::Index r = 0; r < go.rows(); ++r) {
      t.grad_mut(a).row(r) += go(r, 0) * t.val(b).row(r);
      t.grad_mut(b).row(r) += go(r, 0) * t.val(a).row(r);
    }
  };
  return o;
}

Ref Tape::normalize_rows(Ref a, double eps) {
  const Eigen::MatrixXd& v = val(a);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    double n = v.row(r).norm();
    if (n >= eps) out.row(r) = v.row(r) / n;
  }
  Ref o{push(out, nullptr)};
  nodes_[o.i].back = [a, eps, o](Tape& t) {
    const Eigen::MatrixXd& v = t.val(a);
    const Eigen::MatrixXd& u = t.val(o);
    const Eigen::MatrixXd& go = t.grad(o);
    Eigen::MatrixXd& g = t.grad_mut(a);
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      double n = v.row(r).norm();
      if (n < eps) continue;
      // d(u)/da = (I - u u^T) / n
      Eigen::VectorXd gr = go.row(r).transpose();
      Eigen::VectorXd ur = u.row(r).transpose();
      g.row(r) += ((gr - ur * (ur.dot(gr))) / n).transpose();
    }
  };
  return o;
}

void Tape::backward(Ref root) {
  if (val(root).rows() != 1 || val(root).cols() != 1)
    throw DataError("backward: root must be a scalar node");
  for (auto& n : nodes_) n.grad.setZero();
  nodes_[root.i].grad(0, 0) = 1.0;
  for (int i = root.i; i >= 0; --i) {
    if (nodes_[i].back && nodes_[i].grad.cwiseAbs().sum() != 0.0) nodes_[i].back(*this);
  }
}

}  // namespace icorr::ad
