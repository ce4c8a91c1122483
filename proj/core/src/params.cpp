#include "vtc/params.hpp"

#include <cstring>

#include "vtc/error.hpp"

namespace vtc {

void ParameterStore::add(const std::string& name, std::vector<int> shape) {
  if (entries_.count(name))
    throw DuplicateParameter("parameter '" + name + "' already registered");
  int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("parameter '" + name + "': bad shape");
    n *= d;
  }
  Entry e;
  e.shape = std::move(shape);
  e.values.assign(static_cast<size_t>(n), 0.0f);
  entries_.emplace(name, std::move(e));
}

const ParameterStore::Entry& ParameterStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return it->second;
}

ParameterStore::Entry& ParameterStore::entry_mut(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return it->second;
}

const std::vector<int>& ParameterStore::shape(const std::string& name) const {
  return entry(name).shape;
}

int64_t ParameterStore::numel(const std::string& name) const {
  return static_cast<int64_t>(entry(name).values.size());
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& kv : entries_) out.push_back(kv.first);
  return out;  // std::map iteration is already sorted
}

int64_t ParameterStore::total_numel() const {
  int64_t n = 0;
  for (const auto& kv : entries_) n += static_cast<int64_t>(kv.second.values.size());
  return n;
}

Tensor ParameterStore::as_tensor(const std::string& name) const {
  const Entry& e = entry(name);
  Tensor t(e.shape);
  for (size_t i = 0; i < e.values.size(); ++i) t.data[i] = static_cast<double>(e.values[i]);
  return t;
}

void ParameterStore::assign(const std::string& name, const Tensor& t) {
  Entry& e = entry_mut(name);
  if (t.shape != e.shape)
    throw ShapeError("assign '" + name + "': shape " + shape_str(t.shape) +
                     " != " + shape_str(e.shape));
  for (size_t i = 0; i < e.values.size(); ++i)
    e.values[i] = static_cast<float>(t.data[i]);
}

bool ParameterStore::operator==(const ParameterStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  for (; a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.shape != b->second.shape) return false;
    const auto& va = a->second.values;
    const auto& vb = b->second.values;
    if (va.size() != vb.size()) return false;
    // bitwise comparison, so NaN payloads and signed zeros count too
    if (std::memcmp(va.data(), vb.data(), va.size() * sizeof(float)) != 0) return false;
  }
  return true;
}

std::vector<std::string> FreezeMask::trainable_names(const ParameterStore& params) const {
  std::vector<std::string> out;
  for (const std::string& n : params.names())
    if (trainable(n)) out.push_back(n);
  return out;
}

int64_t FreezeMask::trainable_count(const ParameterStore& params) const {
  int64_t n = 0;
  for (const std::string& name : params.names())
    if (trainable(name)) n += params.numel(name);
  return n;
}

}  // namespace vtc
