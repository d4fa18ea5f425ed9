#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jdatt/autodiff.hpp"

namespace jdatt {

/// Ordered collection of named trainable tensors. Creation order defines the
/// checkpoint order.
class ParamBag {
public:
  ad::Var add(const std::string& name, Tensor init);
  ad::Var get(const std::string& name) const;
  const std::vector<std::pair<std::string, ad::Var>>& entries() const { return entries_; }

  void set_trainable(bool trainable);
  void zero_grads();
  int64_t count() const;

  std::vector<std::pair<std::string, Tensor>> state() const;
  void load_state(const std::vector<std::pair<std::string, Tensor>>& state);

private:
  std::vector<std::pair<std::string, ad::Var>> entries_;
};

}  // namespace jdatt
