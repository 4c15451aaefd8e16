#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "anav/numcore.hpp"
#include "anav/rng.hpp"

namespace anav::nc {

ParamId ParameterSet::add(std::string name, int rows, int cols) {
  if (name.empty()) throw std::invalid_argument("ParameterSet: empty name");
  if (index_.contains(name)) throw std::invalid_argument("ParameterSet: duplicate name " + name);
  const ParamId id = size();
  index_.emplace(name, id);
  params_.push_back(Parameter{std::move(name), Tensor(rows, cols), Tensor(rows, cols)});
  return id;
}

ParamId ParameterSet::id(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("ParameterSet: unknown parameter " + std::string(name));
  return it->second;
}

bool ParameterSet::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParameterSet::init_uniform(std::uint64_t seed) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Rng rng(Rng::derive(seed, i));
    Parameter& p = params_[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, p.value.cols())));
    for (double& v : p.value.values()) v = rng.uniform(-bound, bound);
  }
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::vector<Tensor> ParameterSet::make_gradients() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p.value.rows(), p.value.cols());
  return out;
}

void ParameterSet::add_gradients(std::span<const Tensor> grads, double scale) {
  if (grads.size() != params_.size()) throw std::invalid_argument("add_gradients: count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& dst = params_[i].grad;
    const Tensor& src = grads[i];
    if (!dst.same_shape(src)) throw std::invalid_argument("add_gradients: shape mismatch");
    for (int j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

double ParameterSet::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_)
    for (double g : p.grad.values()) sq += g * g;
  return std::sqrt(sq);
}

double sgd_update(ParameterSet& params, double lr, double clip_norm) {
  const double norm = params.grad_norm();
  double factor = 1.0;
  if (clip_norm > 0.0 && norm > clip_norm) factor = clip_norm / norm;
  for (auto& p : params) {
    for (int i = 0; i < p.value.size(); ++i) p.value[i] -= lr * factor * p.grad[i];
  }
  params.zero_grad();
  return norm;
}

void save_checkpoint(const ParameterSet& params, const std::string& path) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& p : params) {
    doc[p.name] = {{"shape", {p.value.rows(), p.value.cols()}}, {"values", p.value.storage()}};
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << doc.dump() << '\n';
}

void load_checkpoint(ParameterSet& params, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  const nlohmann::json doc = nlohmann::json::parse(in);
  if (!doc.is_object()) throw std::runtime_error("load_checkpoint: expected an object");
  for (const auto& [name, entry] : doc.items()) {
    if (!params.contains(name)) throw std::runtime_error("load_checkpoint: unknown parameter " + name);
    Parameter& p = params[params.id(name)];
    const auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape.size() != 2 || shape[0] != p.value.rows() || shape[1] != p.value.cols()) {
      throw std::runtime_error("load_checkpoint: shape mismatch for " + name);
    }
    auto values = entry.at("values").get<std::vector<double>>();
    if (values.size() != static_cast<std::size_t>(p.value.size())) {
      throw std::runtime_error("load_checkpoint: value count mismatch for " + name);
    }
    p.value = Tensor(shape[0], shape[1], std::move(values));
  }
  for (const auto& p : params) {
    if (!doc.contains(p.name)) throw std::runtime_error("load_checkpoint: missing parameter " + p.name);
  }
}

}  // namespace anav::nc
