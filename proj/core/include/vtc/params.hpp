#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vtc/tensor.hpp"

namespace vtc {

// Named parameter arrays.  Storage is float32 (the serialization dtype);
// all arithmetic widens to double at the point of use.
class ParameterStore {
 public:
  struct Entry {
    std::vector<int> shape;
    std::vector<float> values;
  };

  void add(const std::string& name, std::vector<int> shape);
  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  const Entry& entry(const std::string& name) const;
  Entry& entry_mut(const std::string& name);
  const std::vector<int>& shape(const std::string& name) const;
  int64_t numel(const std::string& name) const;
  std::vector<std::string> names() const;  // sorted
  int64_t total_numel() const;

  Tensor as_tensor(const std::string& name) const;      // widen
  void assign(const std::string& name, const Tensor& t);  // narrow

  bool operator==(const ParameterStore& other) const;

 private:
  std::map<std::string, Entry> entries_;
};

// Total classification of parameter names into trainable / frozen.
struct FreezeMask {
  std::function<bool(const std::string&)> trainable;

  std::vector<std::string> trainable_names(const ParameterStore& params) const;
  int64_t trainable_count(const ParameterStore& params) const;
};

}  // namespace vtc
