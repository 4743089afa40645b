#include "tpgnn/params.hpp"

#include <algorithm>

#include "tpgnn/errors.hpp"

namespace tpgnn {

ParamId ParamStore::add(std::string name, Tensor init) {
  if (std::find(names_.begin(), names_.end(), name) != names_.end()) {
    throw UsageError("duplicate parameter name: " + name);
  }
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return values_.size() - 1;
}

ParamId ParamStore::find(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw UsageError("unknown parameter: " + name);
  return static_cast<ParamId>(it - names_.begin());
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : values_) n += t.size();
  return n;
}

GradMap zero_grads(const ParamStore& params) {
  GradMap grads;
  grads.reserve(params.size());
  for (ParamId i = 0; i < params.size(); ++i) grads.emplace_back(params[i].rows(), params[i].cols());
  return grads;
}

}  // namespace tpgnn
