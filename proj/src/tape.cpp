#include "seqot/tape.hpp"

#include <cmath>

namespace seqot {

void Tape::clear() {
  live_ = 0;
  live_transport_ = 0;
  live_list_ = 0;
}

Tape::Node& Tape::fresh(Var& id) {
  if (live_ == nodes_.size()) nodes_.emplace_back();
  id = static_cast<Var>(live_++);
  Node& n = nodes_[static_cast<size_t>(id)];
  n.op = Op::leaf;
  n.a = n.b = -1;
  n.index = 0;
  n.coeff = 0.0;
  n.w = n.bias = nullptr;
  return n;
}

Tape::Var Tape::leaf(const Vector& v) {
  Var id;
  Node& n = fresh(id);
  n.val = v;
  return id;
}

Tape::Var Tape::embed(Tensor& table, int row) {
  if (row < 0 || row >= table.value.rows())
    throw std::invalid_argument("tape: embedding row out of range");
  Var id;
  Node& n = fresh(id);
  n.op = Op::embed;
  n.index = row;
  n.w = &table;
  n.val = table.value.row(row).transpose();
  return id;
}

// fresh() may grow the node vector; inputs are only dereferenced afterwards

Tape::Var Tape::affine(Tensor& w, Var x, Tensor* bias) {
  Var id;
  Node& n = fresh(id);
  n.op = Op::affine;
  n.a = x;
  n.w = &w;
  n.bias = bias;
  n.val.noalias() = w.value * node(x).val;
  if (bias) n.val += bias->value.col(0);
  return id;
}

Tape::Var Tape::add(Var a, Var b) {
  Var id;
  Node& n = fresh(id);
  n.op = Op::add;
  n.a = a;
  n.b = b;
  n.val = node(a).val + node(b).val;
  return id;
}

Tape::Var Tape::sub(Var a, Var b) {
  Var id;
  Node& n = fresh(id);
  n.op = Op::sub;
  n.a = a;
  n.b = b;
  n.val = node(a).val - node(b).val;
  return id;
}

Tape::Var Tape::mul(Var a, Var b) {
  Var id;
  Node& n = fresh(id);
  n.op = Op::mul;
  n.a = a;
  n.b = b;
  n.val = node(a).val.cwiseProduct(node(b).val);
  return id;
}

Tape::Var Tape::scale(Var a, double s) {
  Var id;
  Node& n = fresh(id);
  n.op = Op::scale;
  n.a = a;
  n.coeff = s;
  n.val = s * node(a).val;
  return id;
}

Tape::Var Tape::sigmoid(Var a) {
  Var id;
  Node& n = fresh(id);
  n.op = Op::sigmoid;
  n.a = a;
  n.val = (1.0 / (1.0 + (-node(a).val.array()).exp())).matrix();
  return id;
}

Tape::Var Tape::tanh(Var a) {
  Var id;
  Node& n = fresh(id);
  n.op = Op::tanh_fn;
  n.a = a;
  n.val = node(a).val.array().tanh().matrix();
  return id;
}

Tape::Var Tape::log_softmax_pick(Var logits, int index) {
  const Vector& lv = node(logits).val;
  if (index < 0 || index >= lv.size())
    throw std::invalid_argument("tape: pick index out of range");
  Var id;
  const double lse = log_sum_exp(lv);
  Node& n = fresh(id);
  n.op = Op::lsm_pick;
  n.a = logits;
  n.index = index;
  n.val.resize(1);
  n.val[0] = node(logits).val[index] - lse;
  return id;
}

Tape::Var Tape::sum_scalars(const std::vector<Var>& terms) {
  double total = 0.0;
  for (Var t : terms) total += scalar(t);
  if (live_list_ == list_aux_.size()) list_aux_.emplace_back();
  const int slot = static_cast<int>(live_list_++);
  list_aux_[static_cast<size_t>(slot)].vars = terms;

  Var id;
  Node& n = fresh(id);
  n.op = Op::sum_list;
  n.index = slot;
  n.val.resize(1);
  n.val[0] = total;
  return id;
}

Tape::Var Tape::add_scaled(Var a, Var b, double coeff) {
  const double va = scalar(a);
  const double vb = scalar(b);
  Var id;
  Node& n = fresh(id);
  n.op = Op::add_scaled;
  n.a = a;
  n.b = b;
  n.coeff = coeff;
  n.val.resize(1);
  n.val[0] = va + coeff * vb;
  return id;
}

double Tape::scalar(Var v) const {
  const Vector& val = node(v).val;
  if (val.size() != 1) throw std::invalid_argument("tape: expected scalar node");
  return val[0];
}

Tape::Var Tape::transport_cosine_cost(const std::vector<Var>& ref_vars,
                                      const std::vector<Var>& gen_vars,
                                      const Matrix& plan,
                                      const Matrix* penalty) {
  const Eigen::Index t = static_cast<Eigen::Index>(ref_vars.size());
  const Eigen::Index tp = static_cast<Eigen::Index>(gen_vars.size());
  if (t == 0 || tp == 0)
    throw std::invalid_argument("transport cost: empty feature set");
  if (plan.rows() != t || plan.cols() != tp)
    throw std::invalid_argument("transport cost: plan shape mismatch");
  if (penalty && (penalty->rows() != t || penalty->cols() != tp))
    throw std::invalid_argument("transport cost: penalty shape mismatch");

  const Eigen::Index dim = node(ref_vars[0]).val.size();
  if (live_transport_ == transport_aux_.size()) transport_aux_.emplace_back();
  const int slot = static_cast<int>(live_transport_++);
  TransportAux& aux = transport_aux_[static_cast<size_t>(slot)];
  aux.ref_vars = ref_vars;
  aux.gen_vars = gen_vars;
  aux.ref_hat.resize(t, dim);
  aux.gen_hat.resize(tp, dim);
  aux.ref_norm.resize(t);
  aux.gen_norm.resize(tp);

  for (Eigen::Index i = 0; i < t; ++i) {
    const Vector& v = node(ref_vars[static_cast<size_t>(i)]).val;
    if (v.size() != dim)
      throw std::invalid_argument("transport cost: ragged feature dims");
    const double norm = v.norm();
    if (!(norm > 0.0))
      throw std::invalid_argument("transport cost: zero-norm reference feature");
    aux.ref_norm[i] = norm;
    aux.ref_hat.row(i) = v.transpose() / norm;
  }
  for (Eigen::Index j = 0; j < tp; ++j) {
    const Vector& v = node(gen_vars[static_cast<size_t>(j)]).val;
    if (v.size() != dim)
      throw std::invalid_argument("transport cost: ragged feature dims");
    const double norm = v.norm();
    if (!(norm > 0.0))
      throw std::invalid_argument("transport cost: zero-norm generated feature");
    aux.gen_norm[j] = norm;
    aux.gen_hat.row(j) = v.transpose() / norm;
  }

  Matrix raw = aux.ref_hat * aux.gen_hat.transpose();
  aux.cosine = raw.cwiseMax(-1.0).cwiseMin(1.0);
  // drop clamp-saturated pairs from the gradient path
  aux.plan = plan;
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < tp; ++j)
      if (raw(i, j) < -1.0 || raw(i, j) > 1.0) aux.plan(i, j) = 0.0;

  double value = plan.sum() - plan.cwiseProduct(aux.cosine).sum();
  if (penalty) value -= plan.cwiseProduct(*penalty).sum();

  Var id;
  Node& n = fresh(id);
  n.op = Op::transport;
  n.index = slot;
  n.val.resize(1);
  n.val[0] = value;
  return id;
}

void Tape::backward(Var root, double seed) {
  if (root < 0 || static_cast<size_t>(root) >= live_)
    throw std::invalid_argument("tape: bad backward root");
  if (node(root).val.size() != 1)
    throw std::invalid_argument("tape: backward root must be scalar");
  for (size_t i = 0; i <= static_cast<size_t>(root); ++i) {
    Node& n = nodes_[i];
    if (!n.val.allFinite())
      throw std::runtime_error("tape: non-finite forward value");
    if (n.grad.size() != n.val.size()) n.grad.resize(n.val.size());
    n.grad.setZero();
  }
  node(root).grad[0] = seed;

  for (int v = root; v >= 0; --v) {
    Node& n = node(v);
    const Vector& g = n.grad;
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::embed:
        n.w->grad.row(n.index) += g.transpose();
        break;
      case Op::affine: {
        node(n.a).grad.noalias() += n.w->value.transpose() * g;
        n.w->grad.noalias() += g * node(n.a).val.transpose();
        if (n.bias) n.bias->grad.col(0) += g;
        break;
      }
      case Op::add:
        node(n.a).grad += g;
        node(n.b).grad += g;
        break;
      case Op::sub:
        node(n.a).grad += g;
        node(n.b).grad -= g;
        break;
      case Op::mul:
        node(n.a).grad += g.cwiseProduct(node(n.b).val);
        node(n.b).grad += g.cwiseProduct(node(n.a).val);
        break;
      case Op::scale:
        node(n.a).grad += n.coeff * g;
        break;
      case Op::sigmoid:
        node(n.a).grad.array() +=
            g.array() * n.val.array() * (1.0 - n.val.array());
        break;
      case Op::tanh_fn:
        node(n.a).grad.array() += g.array() * (1.0 - n.val.array().square());
        break;
      case Op::lsm_pick: {
        const Vector probs = softmax(node(n.a).val);
        node(n.a).grad -= g[0] * probs;
        node(n.a).grad[n.index] += g[0];
        break;
      }
      case Op::sum_list: {
        const ListAux& aux = list_aux_[static_cast<size_t>(n.index)];
        for (int t : aux.vars) node(t).grad[0] += g[0];
        break;
      }
      case Op::add_scaled:
        node(n.a).grad[0] += g[0];
        node(n.b).grad[0] += n.coeff * g[0];
        break;
      case Op::transport: {
        const TransportAux& aux = transport_aux_[static_cast<size_t>(n.index)];
        const double gs = g[0];
        // d(1 - cos)/d ref_i = (cos_ij * rhat_i - ghat_j) / |ref_i|, summed
        // over j with plan weights; symmetric for the generated side.
        const Matrix weighted_cos = aux.plan.cwiseProduct(aux.cosine);
        const Matrix plan_gen = aux.plan * aux.gen_hat;       // T x d
        const Matrix plan_ref = aux.plan.transpose() * aux.ref_hat;  // T' x d
        const Vector row_wcos = weighted_cos.rowwise().sum();
        const Vector col_wcos = weighted_cos.colwise().sum().transpose();
        for (size_t i = 0; i < aux.ref_vars.size(); ++i) {
          const Eigen::Index ii = static_cast<Eigen::Index>(i);
          node(aux.ref_vars[i]).grad +=
              (gs / aux.ref_norm[ii]) *
              (row_wcos[ii] * aux.ref_hat.row(ii) - plan_gen.row(ii))
                  .transpose();
        }
        for (size_t j = 0; j < aux.gen_vars.size(); ++j) {
          const Eigen::Index jj = static_cast<Eigen::Index>(j);
          node(aux.gen_vars[j]).grad +=
              (gs / aux.gen_norm[jj]) *
              (col_wcos[jj] * aux.gen_hat.row(jj) - plan_ref.row(jj))
                  .transpose();
        }
        break;
      }
    }
  }
}

}  // namespace seqot
