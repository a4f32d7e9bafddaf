#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "piig/tensor.hpp"

namespace piig {

struct NamedParam {
  std::string name;
  Tensor tensor;  // aliases the network's parameter storage
};

struct NetworkParams {
  std::vector<NamedParam> items;

  void add(std::string name, const Tensor& t) {
    items.push_back({std::move(name), t});
  }
  void extend(const NetworkParams& other) {
    items.insert(items.end(), other.items.begin(), other.items.end());
  }
  Tensor* find(std::string_view name) {
    for (auto& it : items)
      if (it.name == name) return &it.tensor;
    return nullptr;
  }
  std::int64_t total_size() const {
    std::int64_t n = 0;
    for (const auto& it : items) n += it.tensor.numel();
    return n;
  }
};

inline void zero_grads(NetworkParams& p) {
  for (auto& it : p.items) it.tensor.zero_grad();
}

}  // namespace piig
