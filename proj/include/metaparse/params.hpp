#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "metaparse/tensor.hpp"

namespace metaparse {

/// Learning-rate group. `encoder` is the contextual encoder stack (the part
/// that gets its own, smaller rates and is frozen during the first
/// pre-training epoch); `decoder` is everything on top of it.
enum class ParamGroup : std::uint8_t { encoder, decoder };

inline const char* to_string(ParamGroup g) { return g == ParamGroup::encoder ? "encoder" : "decoder"; }

struct GroupRates {
  double encoder = 0;
  double decoder = 0;

  double operator[](ParamGroup g) const { return g == ParamGroup::encoder ? encoder : decoder; }
  GroupRates scaled(double f) const { return {encoder * f, decoder * f}; }
  static GroupRates uniform(double lr) { return {lr, lr}; }
};

struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::decoder;
  Tensor value;
};

/// Gradients aligned index-by-index with a ParamSet.
using Gradients = std::vector<Tensor>;

class ParamSet {
 public:
  ParamSet() = default;

  std::size_t add(std::string name, ParamGroup group, Tensor value) {
    for (const auto& p : params_)
      if (p.name == name) throw Error("duplicate parameter name '" + name + "'");
    params_.push_back(Parameter{std::move(name), group, std::move(value)});
    return params_.size() - 1;
  }

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return i;
    throw Error("unknown parameter '" + name + "'");
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  Gradients zero_gradients() const {
    Gradients g;
    g.reserve(params_.size());
    for (const auto& p : params_) g.push_back(p.value.zeros_like());
    return g;
  }

  bool all_finite() const {
    for (const auto& p : params_)
      if (!p.value.all_finite()) return false;
    return true;
  }

  /// FNV-1a over names, shapes and the exact bit patterns of all values.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
      }
    };
    for (const auto& p : params_) {
      mix(p.name.data(), p.name.size());
      for (auto d : p.value.shape()) mix(&d, sizeof d);
      mix(p.value.values().data(), p.value.size() * sizeof(real));
    }
    return h;
  }

  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].name != b[i].name || a[i].group != b[i].group || !(a[i].value == b[i].value)) return false;
    return true;
  }

 private:
  std::vector<Parameter> params_;
};

inline void require_aligned(const ParamSet& params, const Gradients& grads, const char* what) {
  if (params.size() != grads.size()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    require_same_shape(params[i].value, grads[i], what);
}

/// a += b, elementwise over aligned gradient lists.
inline void accumulate(Gradients& a, const Gradients& b) {
  if (a.size() != b.size()) throw ShapeError("accumulate: gradient list length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    require_same_shape(a[i], b[i], "accumulate");
    auto& av = a[i].values();
    const auto& bv = b[i].values();
    for (std::size_t j = 0; j < av.size(); ++j) av[j] += bv[j];
  }
}

}  // namespace metaparse
