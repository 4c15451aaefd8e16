#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "anav/numcore.hpp"

namespace anav::nc {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
                              "x" + std::to_string(a.cols()) + " vs " +
                              std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("Var: empty handle");
  return tape_->node(*this).value;
}

double Var::item() const {
  const Tensor& t = value();
  if (t.size() != 1) throw std::logic_error("Var::item: not a scalar");
  return t[0];
}

bool Var::valid() const {
  return tape_ != nullptr && generation_ == tape_->generation_ && id_ >= 0 &&
         id_ < static_cast<int>(tape_->nodes_.size());
}

Tape::Tape(const ParameterSet& params) : params_(&params) { nodes_.reserve(1024); }

void Tape::check(Var v) const {
  if (v.tape_ != this) throw std::logic_error("Tape: variable belongs to another tape");
  if (v.generation_ != generation_ || v.id_ < 0 || v.id_ >= static_cast<int>(nodes_.size())) {
    throw std::logic_error("Tape: stale variable (tape was cleared)");
  }
}

const Tape::Node& Tape::node(Var v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id_)];
}

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1, generation_);
}

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
  ++generation_;
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(std::span<const double> values) {
  return constant(Tensor::vector(std::vector<double>(values.begin(), values.end())));
}

Var Tape::zeros(int n) { return constant(Tensor::zeros(n)); }

Var Tape::param(ParamId id) {
  if (auto it = param_nodes_.find(id); it != param_nodes_.end()) {
    return Var(this, it->second, generation_);
  }
  Node n;
  n.op = Op::Param;
  n.param = id;
  n.needs_grad = true;
  n.value = (*params_)[id].value;
  Var v = push(std::move(n));
  param_nodes_.emplace(id, v.id_);
  return v;
}

Var Tape::matvec(Var w, Var x) {
  const Tensor& W = node(w).value;
  const Tensor& X = node(x).value;
  if (!X.is_vector() || W.cols() != X.rows()) shape_error("matvec", W, X);
  Node n;
  n.op = Op::MatVec;
  n.a = w.id_;
  n.b = x.id_;
  n.needs_grad = node(w).needs_grad || node(x).needs_grad;
  n.value = Tensor::zeros(W.rows());
  const int rows = W.rows();
  const int cols = W.cols();
  const double* wp = W.values().data();
  const double* xp = X.values().data();
  double* yp = n.value.values().data();
  for (int r = 0; r < rows; ++r) {
    const double* row = wp + static_cast<std::ptrdiff_t>(r) * cols;
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += row[c] * xp[c];
    yp[r] = acc;
  }
  return push(std::move(n));
}

Var Tape::matvec_t(Var m, Var w) {
  const Tensor& M = node(m).value;
  const Tensor& W = node(w).value;
  if (!W.is_vector() || M.rows() != W.rows()) shape_error("matvec_t", M, W);
  Node n;
  n.op = Op::MatVecT;
  n.a = m.id_;
  n.b = w.id_;
  n.needs_grad = node(m).needs_grad || node(w).needs_grad;
  n.value = Tensor::zeros(M.cols());
  const int rows = M.rows();
  const int cols = M.cols();
  for (int r = 0; r < rows; ++r) {
    const double wr = W[r];
    for (int c = 0; c < cols; ++c) n.value[c] += M.at(r, c) * wr;
  }
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (!A.same_shape(B)) shape_error("add", A, B);
  Node n;
  n.op = Op::Add;
  n.a = a.id_;
  n.b = b.id_;
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  n.value = A;
  for (int i = 0; i < A.size(); ++i) n.value[i] += B[i];
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (!A.same_shape(B)) shape_error("sub", A, B);
  Node n;
  n.op = Op::Sub;
  n.a = a.id_;
  n.b = b.id_;
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  n.value = A;
  for (int i = 0; i < A.size(); ++i) n.value[i] -= B[i];
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (!A.same_shape(B)) shape_error("mul", A, B);
  Node n;
  n.op = Op::Mul;
  n.a = a.id_;
  n.b = b.id_;
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  n.value = A;
  for (int i = 0; i < A.size(); ++i) n.value[i] *= B[i];
  return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
  Node n;
  n.op = Op::Scale;
  n.a = a.id_;
  n.scalar = c;
  n.needs_grad = node(a).needs_grad;
  n.value = node(a).value;
  for (double& v : n.value.values()) v *= c;
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.op = Op::Sigmoid;
  n.a = a.id_;
  n.needs_grad = node(a).needs_grad;
  n.value = node(a).value;
  for (double& v : n.value.values()) v = sigmoid_scalar(v);
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::Tanh;
  n.a = a.id_;
  n.needs_grad = node(a).needs_grad;
  n.value = node(a).value;
  for (double& v : n.value.values()) v = std::tanh(v);
  return push(std::move(n));
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  Node n;
  n.op = Op::Concat;
  int total = 0;
  for (Var p : parts) {
    const Node& pn = node(p);
    if (!pn.value.is_vector()) throw std::invalid_argument("concat: inputs must be vectors");
    total += pn.value.size();
    n.needs_grad = n.needs_grad || pn.needs_grad;
    n.args.push_back(p.id_);
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(total));
  for (Var p : parts) {
    const auto vals = node(p).value.values();
    out.insert(out.end(), vals.begin(), vals.end());
  }
  n.value = Tensor::vector(std::move(out));
  return push(std::move(n));
}

Var Tape::slice(Var a, int offset, int length) {
  const Tensor& A = node(a).value;
  if (!A.is_vector() || offset < 0 || length < 0 || offset + length > A.size()) {
    throw std::invalid_argument("slice: out of range");
  }
  Node n;
  n.op = Op::Slice;
  n.a = a.id_;
  n.offset = offset;
  n.needs_grad = node(a).needs_grad;
  const auto vals = A.values();
  n.value = Tensor::vector(std::vector<double>(vals.begin() + offset,
                                               vals.begin() + offset + length));
  return push(std::move(n));
}

Var Tape::dot(Var a, Var b) {
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (!A.same_shape(B)) shape_error("dot", A, B);
  Node n;
  n.op = Op::Dot;
  n.a = a.id_;
  n.b = b.id_;
  n.needs_grad = node(a).needs_grad || node(b).needs_grad;
  double acc = 0.0;
  for (int i = 0; i < A.size(); ++i) acc += A[i] * B[i];
  n.value = Tensor::vector({acc});
  return push(std::move(n));
}

Var Tape::stack(std::span<const Var> rows) {
  if (rows.empty()) throw std::invalid_argument("stack: no rows");
  const int d = node(rows[0]).value.size();
  Node n;
  n.op = Op::Stack;
  std::vector<double> out;
  out.reserve(rows.size() * static_cast<std::size_t>(d));
  for (Var r : rows) {
    const Node& rn = node(r);
    if (!rn.value.is_vector() || rn.value.size() != d) {
      throw std::invalid_argument("stack: rows must be vectors of equal length");
    }
    n.needs_grad = n.needs_grad || rn.needs_grad;
    n.args.push_back(r.id_);
    out.insert(out.end(), rn.value.values().begin(), rn.value.values().end());
  }
  n.value = Tensor(static_cast<int>(rows.size()), d, std::move(out));
  return push(std::move(n));
}

Var Tape::softmax(Var z) {
  const Tensor& Z = node(z).value;
  if (Z.size() == 0) throw std::invalid_argument("softmax: empty input");
  Node n;
  n.op = Op::Softmax;
  n.a = z.id_;
  n.needs_grad = node(z).needs_grad;
  n.value = Z;
  const double mx = *std::max_element(Z.values().begin(), Z.values().end());
  double total = 0.0;
  for (double& v : n.value.values()) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : n.value.values()) v /= total;
  return push(std::move(n));
}

Var Tape::log_softmax(Var z) {
  const Tensor& Z = node(z).value;
  if (Z.size() == 0) throw std::invalid_argument("log_softmax: empty input");
  Node n;
  n.op = Op::LogSoftmax;
  n.a = z.id_;
  n.needs_grad = node(z).needs_grad;
  const double mx = *std::max_element(Z.values().begin(), Z.values().end());
  double total = 0.0;
  for (double v : Z.values()) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  n.value = Z;
  for (double& v : n.value.values()) v -= lse;
  return push(std::move(n));
}

Var Tape::select(Var z, std::span<const int> indices) {
  const Tensor& Z = node(z).value;
  if (!Z.is_vector() || indices.empty()) throw std::invalid_argument("select: bad input");
  Node n;
  n.op = Op::Select;
  n.a = z.id_;
  n.needs_grad = node(z).needs_grad;
  std::vector<double> out;
  out.reserve(indices.size());
  for (int idx : indices) {
    if (idx < 0 || idx >= Z.size()) throw std::invalid_argument("select: index out of range");
    out.push_back(Z[idx]);
    n.args.push_back(idx);
  }
  n.value = Tensor::vector(std::move(out));
  return push(std::move(n));
}

Var Tape::pick(Var z, int index) {
  const int idx[1] = {index};
  return select(z, idx);
}

Var Tape::sum(Var a) {
  Node n;
  n.op = Op::Sum;
  n.a = a.id_;
  n.needs_grad = node(a).needs_grad;
  double acc = 0.0;
  for (double v : node(a).value.values()) acc += v;
  n.value = Tensor::vector({acc});
  return push(std::move(n));
}

Var Tape::square(Var a) {
  Node n;
  n.op = Op::Square;
  n.a = a.id_;
  n.needs_grad = node(a).needs_grad;
  n.value = node(a).value;
  for (double& v : n.value.values()) v *= v;
  return push(std::move(n));
}

Var Tape::detach(Var a) { return constant(node(a).value); }

void Tape::backward(Var loss, std::vector<Tensor>& grads) {
  if (grads.size() != static_cast<std::size_t>(params_->size())) {
    throw std::invalid_argument("backward: gradient buffer count mismatch");
  }
  run_backward(loss, [&grads](ParamId id, const Tensor& g) {
    Tensor& dst = grads[static_cast<std::size_t>(id)];
    for (int i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

void Tape::backward(Var loss, ParameterSet& params) {
  if (&params != params_) throw std::invalid_argument("backward: foreign parameter set");
  run_backward(loss, [&params](ParamId id, const Tensor& g) {
    Tensor& dst = params[id].grad;
    for (int i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

void Tape::run_backward(Var loss, const std::function<void(ParamId, const Tensor&)>& sink) {
  check(loss);
  if (nodes_[static_cast<std::size_t>(loss.id_)].value.size() != 1) {
    throw std::logic_error("backward: loss must be a scalar");
  }
  auto grad_of = [this](int id) -> Tensor& {
    Node& nd = nodes_[static_cast<std::size_t>(id)];
    if (nd.grad.size() != nd.value.size()) nd.grad = Tensor(nd.value.rows(), nd.value.cols());
    return nd.grad;
  };
  grad_of(loss.id_)[0] = 1.0;

  for (int id = loss.id_; id >= 0; --id) {
    Node& nd = nodes_[static_cast<std::size_t>(id)];
    if (!nd.needs_grad || nd.grad.size() == 0) continue;
    const Tensor& g = nd.grad;
    auto wants = [this](int i) { return nodes_[static_cast<std::size_t>(i)].needs_grad; };

    switch (nd.op) {
      case Op::Constant:
        break;
      case Op::Param:
        sink(nd.param, g);
        break;
      case Op::MatVec: {
        const Tensor& W = nodes_[static_cast<std::size_t>(nd.a)].value;
        const Tensor& X = nodes_[static_cast<std::size_t>(nd.b)].value;
        const int rows = W.rows();
        const int cols = W.cols();
        if (wants(nd.a)) {
          Tensor& gw = grad_of(nd.a);
          double* gwp = gw.values().data();
          const double* xp = X.values().data();
          for (int r = 0; r < rows; ++r) {
            const double gr = g[r];
            if (gr == 0.0) continue;
            double* row = gwp + static_cast<std::ptrdiff_t>(r) * cols;
            for (int c = 0; c < cols; ++c) row[c] += gr * xp[c];
          }
        }
        if (wants(nd.b)) {
          Tensor& gx = grad_of(nd.b);
          const double* wp = W.values().data();
          double* gxp = gx.values().data();
          for (int r = 0; r < rows; ++r) {
            const double gr = g[r];
            if (gr == 0.0) continue;
            const double* row = wp + static_cast<std::ptrdiff_t>(r) * cols;
            for (int c = 0; c < cols; ++c) gxp[c] += row[c] * gr;
          }
        }
        break;
      }
      case Op::MatVecT: {
        const Tensor& M = nodes_[static_cast<std::size_t>(nd.a)].value;
        const Tensor& W = nodes_[static_cast<std::size_t>(nd.b)].value;
        if (wants(nd.a)) {
          Tensor& gm = grad_of(nd.a);
          for (int r = 0; r < M.rows(); ++r)
            for (int c = 0; c < M.cols(); ++c) gm.at(r, c) += W[r] * g[c];
        }
        if (wants(nd.b)) {
          Tensor& gw = grad_of(nd.b);
          for (int r = 0; r < M.rows(); ++r) {
            double acc = 0.0;
            for (int c = 0; c < M.cols(); ++c) acc += M.at(r, c) * g[c];
            gw[r] += acc;
          }
        }
        break;
      }
      case Op::Add:
      case Op::Sub: {
        const double sign = nd.op == Op::Add ? 1.0 : -1.0;
        if (wants(nd.a)) {
          Tensor& ga = grad_of(nd.a);
          for (int i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (wants(nd.b)) {
          Tensor& gb = grad_of(nd.b);
          for (int i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
        }
        break;
      }
      case Op::Mul: {
        const Tensor& A = nodes_[static_cast<std::size_t>(nd.a)].value;
        const Tensor& B = nodes_[static_cast<std::size_t>(nd.b)].value;
        if (wants(nd.a)) {
          Tensor& ga = grad_of(nd.a);
          for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
        }
        if (wants(nd.b)) {
          Tensor& gb = grad_of(nd.b);
          for (int i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
        }
        break;
      }
      case Op::Scale: {
        Tensor& ga = grad_of(nd.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += nd.scalar * g[i];
        break;
      }
      case Op::Sigmoid: {
        Tensor& ga = grad_of(nd.a);
        for (int i = 0; i < g.size(); ++i) {
          const double y = nd.value[i];
          ga[i] += g[i] * y * (1.0 - y);
        }
        break;
      }
      case Op::Tanh: {
        Tensor& ga = grad_of(nd.a);
        for (int i = 0; i < g.size(); ++i) {
          const double y = nd.value[i];
          ga[i] += g[i] * (1.0 - y * y);
        }
        break;
      }
      case Op::Concat: {
        int off = 0;
        for (int arg : nd.args) {
          const int len = nodes_[static_cast<std::size_t>(arg)].value.size();
          if (wants(arg)) {
            Tensor& ga = grad_of(arg);
            for (int i = 0; i < len; ++i) ga[i] += g[off + i];
          }
          off += len;
        }
        break;
      }
      case Op::Slice: {
        Tensor& ga = grad_of(nd.a);
        for (int i = 0; i < g.size(); ++i) ga[nd.offset + i] += g[i];
        break;
      }
      case Op::Dot: {
        const Tensor& A = nodes_[static_cast<std::size_t>(nd.a)].value;
        const Tensor& B = nodes_[static_cast<std::size_t>(nd.b)].value;
        const double g0 = g[0];
        if (wants(nd.a)) {
          Tensor& ga = grad_of(nd.a);
          for (int i = 0; i < A.size(); ++i) ga[i] += g0 * B[i];
        }
        if (wants(nd.b)) {
          Tensor& gb = grad_of(nd.b);
          for (int i = 0; i < B.size(); ++i) gb[i] += g0 * A[i];
        }
        break;
      }
      case Op::Stack: {
        const int d = nd.value.cols();
        for (std::size_t k = 0; k < nd.args.size(); ++k) {
          const int arg = nd.args[k];
          if (!wants(arg)) continue;
          Tensor& ga = grad_of(arg);
          for (int i = 0; i < d; ++i) ga[i] += g[static_cast<int>(k) * d + i];
        }
        break;
      }
      case Op::Softmax: {
        double gy = 0.0;
        for (int i = 0; i < g.size(); ++i) gy += g[i] * nd.value[i];
        Tensor& ga = grad_of(nd.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += nd.value[i] * (g[i] - gy);
        break;
      }
      case Op::LogSoftmax: {
        double gsum = 0.0;
        for (int i = 0; i < g.size(); ++i) gsum += g[i];
        Tensor& ga = grad_of(nd.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] - std::exp(nd.value[i]) * gsum;
        break;
      }
      case Op::Select: {
        Tensor& ga = grad_of(nd.a);
        for (std::size_t i = 0; i < nd.args.size(); ++i) {
          ga[nd.args[i]] += g[static_cast<int>(i)];
        }
        break;
      }
      case Op::Sum: {
        Tensor& ga = grad_of(nd.a);
        for (int i = 0; i < ga.size(); ++i) ga[i] += g[0];
        break;
      }
      case Op::Square: {
        const Tensor& A = nodes_[static_cast<std::size_t>(nd.a)].value;
        Tensor& ga = grad_of(nd.a);
        for (int i = 0; i < g.size(); ++i) ga[i] += 2.0 * A[i] * g[i];
        break;
      }
    }
  }
  clear();
}

Var linear(Var w, Var x) { return w.tape()->matvec(w, x); }

Var softmax(Var z) { return z.tape()->softmax(z); }

Attention attend(Var features, Var query, Var w) {
  Tape& t = *features.tape();
  if (features.value().rows() == 0) throw std::invalid_argument("attend: empty feature set");
  const Var projected = t.matvec(w, query);
  const Var logits = t.matvec(features, projected);
  const Var weights = t.softmax(logits);
  return {t.matvec_t(features, weights), weights};
}

LstmState lstm_step(Var w, Var b, Var input, const LstmState& state) {
  Tape& t = *w.tape();
  const int hidden = state.h.size();
  if (state.c.size() != hidden || w.value().rows() != 4 * hidden ||
      w.value().cols() != input.size() + hidden || b.size() != 4 * hidden) {
    throw std::invalid_argument("lstm_step: shape mismatch");
  }
  const Var parts[2] = {input, state.h};
  const Var z = t.add(t.matvec(w, t.concat(parts)), b);
  const Var in_gate = t.sigmoid(t.slice(z, 0, hidden));
  const Var forget_gate = t.sigmoid(t.slice(z, hidden, hidden));
  const Var candidate = t.tanh(t.slice(z, 2 * hidden, hidden));
  const Var out_gate = t.sigmoid(t.slice(z, 3 * hidden, hidden));
  const Var c = t.add(t.mul(forget_gate, state.c), t.mul(in_gate, candidate));
  const Var h = t.mul(out_gate, t.tanh(c));
  return {h, c};
}

}  // namespace anav::nc
