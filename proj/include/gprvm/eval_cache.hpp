#pragma once

#include <cstdint>
#include <list>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gprvm/canonical.hpp"
#include "gprvm/expr.hpp"

namespace gprvm {

// LRU-memoized feature evaluation over a fixed input matrix. The cache is
// keyed per dataset: one cache per trial, inputs never change.
//
// Counters: a miss is one feature evaluation (NFE) and node_count * N node
// evaluations, whether or not the result is finite. Hits cost nothing.
class EvalCache {
 public:
  explicit EvalCache(Eigen::MatrixXd inputs, std::size_t capacity = 100000)
      : inputs_(std::move(inputs)), capacity_(capacity < 1 ? 1 : capacity) {}

  std::optional<Eigen::VectorXd> evaluate(const CanonicalExpr& ce) {
    auto bucket = index_.find(ce.hash);
    if (bucket != index_.end()) {
      for (auto it : bucket->second) {
        if (it->key == ce.key) {
          lru_.splice(lru_.begin(), lru_, it);  // refresh recency
          return it->value;
        }
      }
    }
    // miss
    std::optional<Eigen::VectorXd> value = gprvm::evaluate(ce.expr, inputs_);
    ++feature_evals_;
    node_evals_ += static_cast<std::uint64_t>(ce.node_count) *
                   static_cast<std::uint64_t>(inputs_.rows());
    lru_.push_front(Entry{ce.hash, ce.key, value});
    index_[ce.hash].push_back(lru_.begin());
    if (lru_.size() > capacity_) evict();
    return value;
  }

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  std::size_t size() const { return lru_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t feature_evals() const { return feature_evals_; }
  std::uint64_t node_evals() const { return node_evals_; }

 private:
  struct Entry {
    std::uint64_t hash;
    std::string key;
    std::optional<Eigen::VectorXd> value;
  };
  using List = std::list<Entry>;

  void evict() {
    auto last = std::prev(lru_.end());
    auto bucket = index_.find(last->hash);
    auto& vec = bucket->second;
    for (std::size_t i = 0; i < vec.size(); ++i) {
      if (vec[i] == last) {
        vec[i] = vec.back();
        vec.pop_back();
        break;
      }
    }
    if (vec.empty()) index_.erase(bucket);
    lru_.pop_back();
  }

  Eigen::MatrixXd inputs_;
  std::size_t capacity_;
  List lru_;  // front = most recently used
  std::unordered_map<std::uint64_t, std::vector<List::iterator>> index_;
  std::uint64_t feature_evals_ = 0;
  std::uint64_t node_evals_ = 0;
};

}  // namespace gprvm
