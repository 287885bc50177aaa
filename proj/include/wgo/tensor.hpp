#pragma once

// Dense f64 tensors with reverse-mode automatic differentiation.
//
// A Tensor is an immutable row-major array. Operations on tensors are
// recorded on a Tape when any input is attached to one; Tape::backward
// then produces gradients for every watched leaf. Broadcasting follows
// trailing-dimension alignment. Everything is double precision.

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wgo::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

class Tape;

class Tensor {
 public:
  Tensor() : Tensor(Shape{}, {0.0}) {}
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape{}, {v}); }
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_->size(); }
  std::span<const double> data() const { return {data_->data(), data_->size()}; }
  double item() const;
  double at(std::size_t i) const { return (*data_)[i]; }
  double at(std::size_t i, std::size_t j) const;

  bool requires_grad() const { return requires_grad_; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

  // Value copy detached from any tape.
  Tensor detached() const;

 private:
  friend class Tape;
  friend Tensor record_op(const char* name, int kind,
                          const std::vector<Tensor>& inputs, Shape out_shape,
                          std::vector<double> out, std::vector<Tensor> saved,
                          std::vector<std::size_t> iattr);
  std::shared_ptr<const std::vector<double>> data_;
  Shape shape_;
  Tape* tape_ = nullptr;
  int node_ = -1;
  bool requires_grad_ = false;
};

// Gradients keyed by tape node id, produced by Tape::backward.
class GradMap {
 public:
  // Gradient of the loss with respect to a watched tensor.
  const Tensor& wrt(const Tensor& t) const;
  bool has(const Tensor& t) const;

 private:
  friend class Tape;
  std::map<int, Tensor> by_node_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Returns an alias of `leaf` that is attached to this tape as a
  // differentiable input.
  Tensor watch(const Tensor& leaf);

  // Reverse pass from a scalar loss recorded on this tape. The tape is
  // consumed: calling backward twice is an error.
  GradMap backward(const Tensor& loss);

  std::size_t n_nodes() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  friend Tensor record_unary(const char* name, int kind, const Tensor& x,
                             Shape out_shape, std::vector<double> out,
                             std::vector<Tensor> saved,
                             std::vector<std::size_t> iattr);
  friend Tensor record_op(const char* name, int kind,
                          const std::vector<Tensor>& inputs, Shape out_shape,
                          std::vector<double> out, std::vector<Tensor> saved,
                          std::vector<std::size_t> iattr);

  struct Node {
    int kind;
    std::vector<int> inputs;        // node ids; -1 for constants
    std::vector<Tensor> saved;      // values needed by the backward rule
    std::vector<std::size_t> iattr; // op-specific attributes (axes, extents…)
    Shape out_shape;
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// ---- forward operations -------------------------------------------------
// Binary elementwise ops broadcast with trailing-dimension alignment.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);  // 2-D only
Tensor broadcast_to(const Tensor& a, const Shape& shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor sum(const Tensor& a);
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, std::size_t axis);
Tensor max(const Tensor& a, std::size_t axis);  // ties route to first index
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);     // domain error for negative input
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);    // domain error for negative input
Tensor reciprocal(const Tensor& a);
Tensor transpose(const Tensor& a);  // 2-D
Tensor slice(const Tensor& a, const std::vector<std::size_t>& start,
             const std::vector<std::size_t>& extent);
Tensor reshape(const Tensor& a, Shape shape);

// Convenience wrappers built from the ops above.
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);
Tensor divide(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);

// Max over coordinates of |analytic - central difference| /
// (|analytic| + |cd| + 1e-12). f must evaluate to a scalar tensor; it is
// called with a tape for the analytic gradient and with nullptr for the
// finite-difference probes. step must lie in (0, 1e-2].
double grad_check(const std::function<Tensor(Tape*, const Tensor&)>& f,
                  const Tensor& x, double step);

}  // namespace wgo::num
