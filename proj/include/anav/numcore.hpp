#pragma once

// Minimal reverse-mode differentiable core: dense 64-bit vectors/matrices,
// a recording tape, named parameters with gradient buffers, clipped SGD and a
// central-difference gradient checker.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace anav::nc {

/// Row-major dense tensor. A vector is a tensor with one column.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols);
  Tensor(int rows, int cols, std::vector<double> values);

  static Tensor vector(std::vector<double> values);
  static Tensor zeros(int n) { return Tensor(n, 1); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return static_cast<int>(data_.size()); }
  bool is_vector() const { return cols_ == 1; }

  double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }
  double& at(int r, int c) { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r * cols_ + c)]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& storage() const { return data_; }

  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

using ParamId = int;

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Ordered collection of uniquely named parameters.
class ParameterSet {
 public:
  ParamId add(std::string name, int rows, int cols);
  ParamId id(std::string_view name) const;
  bool contains(std::string_view name) const;

  Parameter& operator[](ParamId id) { return params_.at(static_cast<std::size_t>(id)); }
  const Parameter& operator[](ParamId id) const {
    return params_.at(static_cast<std::size_t>(id));
  }
  int size() const { return static_cast<int>(params_.size()); }
  std::size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  /// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) with fan_in = cols; seeded.
  void init_uniform(std::uint64_t seed);
  void zero_grad();
  /// Fresh zeroed gradient buffers shaped like the parameters.
  std::vector<Tensor> make_gradients() const;
  void add_gradients(std::span<const Tensor> grads, double scale = 1.0);
  double grad_norm() const;

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, ParamId> index_;
};

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  int size() const { return value().size(); }
  double item() const;
  bool valid() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id, std::uint64_t generation)
      : tape_(tape), id_(id), generation_(generation) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
  std::uint64_t generation_ = 0;
};

/// Records a forward computation and replays it backwards.
///
/// A tape is confined to one thread. Parameter values are read from the
/// ParameterSet given at construction, which must outlive the tape and stay
/// unchanged while recording.
class Tape {
 public:
  explicit Tape(const ParameterSet& params);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  const ParameterSet& parameters() const { return *params_; }

  Var constant(Tensor value);
  Var constant(std::span<const double> values);
  Var zeros(int n);
  Var param(ParamId id);
  Var param(std::string_view name) { return param(params_->id(name)); }

  // Operations. All inputs must live on this tape.
  Var matvec(Var w, Var x);          // W x
  Var matvec_t(Var m, Var w);        // M^T w
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);             // elementwise
  Var scale(Var a, double c);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var concat(std::span<const Var> parts);
  Var slice(Var a, int offset, int length);
  Var dot(Var a, Var b);
  Var stack(std::span<const Var> rows);  // K vectors of equal length -> K x d
  Var softmax(Var z);
  Var log_softmax(Var z);
  Var select(Var z, std::span<const int> indices);
  Var pick(Var z, int index);
  Var sum(Var a);
  Var square(Var a);                 // elementwise
  Var detach(Var a);

  /// Accumulates d(loss)/d(param) into `grads` (indexed by ParamId) and clears
  /// the tape. Throws std::logic_error if `loss` is stale (for example after a
  /// previous backward) or not a scalar.
  void backward(Var loss, std::vector<Tensor>& grads);
  /// Same, accumulating into each Parameter::grad.
  void backward(Var loss, ParameterSet& params);

  void clear();
  std::size_t node_count() const { return nodes_.size(); }

 private:
  friend class Var;

  enum class Op : std::uint8_t {
    Constant, Param, MatVec, MatVecT, Add, Sub, Mul, Scale, Sigmoid, Tanh,
    Concat, Slice, Dot, Stack, Softmax, LogSoftmax, Select, Sum, Square
  };

  struct Node {
    Op op = Op::Constant;
    bool needs_grad = false;
    int a = -1;
    int b = -1;
    int offset = 0;
    double scalar = 0.0;
    ParamId param = -1;
    std::vector<int> args;
    Tensor value;
    Tensor grad;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void check(Var v) const;
  void run_backward(Var loss, const std::function<void(ParamId, const Tensor&)>& sink);

  const ParameterSet* params_;
  std::vector<Node> nodes_;
  std::unordered_map<ParamId, int> param_nodes_;
  std::uint64_t generation_ = 1;
};

// Free-function spellings for the common operations.
inline Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
inline Var operator*(double c, Var a) { return a.tape()->scale(a, c); }

Var linear(Var w, Var x);
Var softmax(Var z);

struct Attention {
  Var context;
  Var weights;
};

/// alpha_k = softmax_k(f_k^T W h), context = sum_k alpha_k f_k.
/// `features` is the K x d matrix of stacked f_k; W is d x |h|.
Attention attend(Var features, Var query, Var w);

struct LstmState {
  Var h;
  Var c;
};

/// One LSTM step with gates packed as [input, forget, candidate, output]:
/// z = W [x; h] + b, W is 4H x (|x| + H).
LstmState lstm_step(Var w, Var b, Var input, const LstmState& state);

/// Clipped SGD: g is rescaled so that its global norm is at most clip_norm
/// (clip_norm <= 0 disables clipping), then theta -= lr * g. Gradients are
/// zeroed afterwards. Returns the pre-clipping gradient norm.
double sgd_update(ParameterSet& params, double lr, double clip_norm);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  int worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

using ScalarFn = std::function<Var(Tape&)>;

/// Max over parameter entries of |analytic - central difference| /
/// max(1e-5, |analytic|, |central difference|). The floor sits above the
/// roundoff of central differences at eps = 1e-5 on losses built from long
/// recurrent chains (about 1e-10 absolute). When `only` is non-empty just
/// those parameters are perturbed.
GradCheckResult grad_check(ParameterSet& params, const ScalarFn& f, double eps = 1e-5,
                           std::span<const ParamId> only = {});

// Checkpoint file: {"name": {"shape": [rows, cols], "values": [...]}, ...}.
void save_checkpoint(const ParameterSet& params, const std::string& path);
/// Loads values into an already-shaped ParameterSet; throws on unknown or
/// missing names and on shape mismatches.
void load_checkpoint(ParameterSet& params, const std::string& path);

}  // namespace anav::nc
