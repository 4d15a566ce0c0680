#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "metaparse/tensor.hpp"

namespace metaparse {

/// Bidirectional string <-> dense id map. Ids are assigned in insertion order.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(const std::vector<std::string>& items) {
    for (const auto& s : items) add(s);
  }

  int add(const std::string& s) {
    auto [it, inserted] = ids_.try_emplace(s, static_cast<int>(items_.size()));
    if (inserted) items_.push_back(s);
    return it->second;
  }

  /// Id of `s`, or -1.
  int find(const std::string& s) const {
    auto it = ids_.find(s);
    return it == ids_.end() ? -1 : it->second;
  }

  int id(const std::string& s) const {
    int i = find(s);
    if (i < 0) throw DataError("unknown vocabulary item '" + s + "'");
    return i;
  }

  const std::string& item(int id) const { return items_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return items_.size(); }
  const std::vector<std::string>& items() const { return items_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.items_ == b.items_; }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> items_;
};

}  // namespace metaparse
