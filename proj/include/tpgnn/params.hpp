#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tpgnn/tensor.hpp"

namespace tpgnn {

using ParamId = std::size_t;

/// Ordered collection of named trainable tensors.
class ParamStore {
 public:
  ParamId add(std::string name, Tensor init);

  std::size_t size() const { return values_.size(); }
  Tensor& operator[](ParamId id) { return values_[id]; }
  const Tensor& operator[](ParamId id) const { return values_[id]; }
  const std::string& name(ParamId id) const { return names_[id]; }

  // Throws UsageError for unknown names.
  ParamId find(const std::string& name) const;
  std::size_t scalar_count() const;

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

/// One gradient tensor per parameter, aligned with a ParamStore.
using GradMap = std::vector<Tensor>;

GradMap zero_grads(const ParamStore& params);

}  // namespace tpgnn
