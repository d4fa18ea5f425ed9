#include "jdatt/params.hpp"

#include <stdexcept>

namespace jdatt {

ad::Var ParamBag::add(const std::string& name, Tensor init) {
  for (const auto& [n, v] : entries_)
    if (n == name) throw std::invalid_argument("duplicate parameter name: " + name);
  ad::Var v = ad::make_param(std::move(init));
  entries_.emplace_back(name, v);
  return v;
}

ad::Var ParamBag::get(const std::string& name) const {
  for (const auto& [n, v] : entries_)
    if (n == name) return v;
  throw std::runtime_error("missing parameter: " + name);
}

void ParamBag::set_trainable(bool trainable) {
  for (auto& [n, v] : entries_) v->requires_grad = trainable;
}

void ParamBag::zero_grads() {
  for (auto& [n, v] : entries_)
    if (v->grad.numel() > 0) v->grad.fill(0.0);
}

int64_t ParamBag::count() const {
  int64_t total = 0;
  for (const auto& [n, v] : entries_) total += v->value.numel();
  return total;
}

std::vector<std::pair<std::string, Tensor>> ParamBag::state() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(entries_.size());
  for (const auto& [n, v] : entries_) out.emplace_back(n, v->value);
  return out;
}

void ParamBag::load_state(const std::vector<std::pair<std::string, Tensor>>& state) {
  if (state.size() != entries_.size()) throw std::runtime_error("parameter state size mismatch");
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (state[i].first != entries_[i].first)
      throw std::runtime_error("parameter name mismatch: " + state[i].first + " vs " + entries_[i].first);
    if (!(state[i].second.shape() == entries_[i].second->value.shape()))
      throw std::runtime_error("parameter shape mismatch for " + state[i].first);
    entries_[i].second->value = state[i].second;
  }
}

}  // namespace jdatt
