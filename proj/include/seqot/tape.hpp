#ifndef SEQOT_TAPE_HPP
#define SEQOT_TAPE_HPP

#include "seqot/common.hpp"

namespace seqot {

// A named parameter block with a gradient accumulator of the same shape.
struct Tensor {
  std::string name;
  Matrix value;
  Matrix grad;

  Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

// Reverse-mode tape over vector-valued nodes. Construction order is the
// topological order, so backward is a single reverse sweep. Node slots and
// their buffers are reused across clear() calls.
class Tape {
 public:
  using Var = int;

  void clear();

  Var leaf(const Vector& v);
  Var embed(Tensor& table, int row);          // row of the table, as a column
  Var affine(Tensor& w, Var x, Tensor* bias); // w * x (+ bias)
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                      // elementwise
  Var scale(Var a, double s);
  Var sigmoid(Var a);
  Var tanh(Var a);

  // scalar (1-dim) nodes
  Var log_softmax_pick(Var logits, int index);
  Var sum_scalars(const std::vector<Var>& terms);
  Var add_scaled(Var a, Var b, double coeff);  // a + coeff * b, scalars

  // sum_ij plan_ij * (1 - cos(ref_i, gen_j) - penalty_ij), with the plan and
  // penalty held constant. Gradients flow into both feature sets.
  Var transport_cosine_cost(const std::vector<Var>& ref_vars,
                            const std::vector<Var>& gen_vars,
                            const Matrix& plan, const Matrix* penalty);

  const Vector& value(Var v) const { return node(v).val; }
  double scalar(Var v) const;
  size_t size() const { return live_; }

  // Reverse sweep from a scalar root seeded with `seed`. Parameter gradients
  // accumulate into Tensor::grad; they are not cleared here.
  void backward(Var root, double seed = 1.0);

 private:
  enum class Op {
    leaf,
    embed,
    affine,
    add,
    sub,
    mul,
    scale,
    sigmoid,
    tanh_fn,
    lsm_pick,
    sum_list,
    add_scaled,
    transport
  };

  struct Node {
    Op op = Op::leaf;
    int a = -1;
    int b = -1;
    int index = 0;       // embed row / pick index / aux slot
    double coeff = 0.0;
    Tensor* w = nullptr;
    Tensor* bias = nullptr;
    Vector val;
    Vector grad;
  };

  struct TransportAux {
    Matrix plan;              // effective weights (clamp-inactive mask applied)
    std::vector<int> ref_vars;
    std::vector<int> gen_vars;
    Matrix ref_hat, gen_hat;  // unit feature rows
    Vector ref_norm, gen_norm;
    Matrix cosine;            // clamped cosines
  };

  struct ListAux {
    std::vector<int> vars;
  };

  Node& node(Var v) { return nodes_[static_cast<size_t>(v)]; }
  const Node& node(Var v) const { return nodes_[static_cast<size_t>(v)]; }
  Node& fresh(Var& id);

  std::vector<Node> nodes_;
  size_t live_ = 0;
  std::vector<TransportAux> transport_aux_;
  size_t live_transport_ = 0;
  std::vector<ListAux> list_aux_;
  size_t live_list_ = 0;
};

}  // namespace seqot

#endif  // SEQOT_TAPE_HPP
