#pragma once

#include <cstddef>
#include <vector>

namespace tbdx {

/// Dinic's max-flow on a directed graph with double capacities. Built for
/// the s-t cuts behind the segmenter: solve() runs to completion, after
/// which the minimum cut is read off via residual reachability from the
/// source.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t nodes);

  /// Adds a directed edge and its reverse in one call.
  void add_edge(std::size_t from, std::size_t to, double cap, double rev_cap = 0.0);

  /// Returns the maximum flow value from source to sink.
  double solve(std::size_t source, std::size_t sink);

  /// After solve(): true when the node is on the source side of the cut,
  /// i.e. reachable from the source through edges with residual capacity.
  bool in_source_side(std::size_t node) const;

 private:
  struct Edge {
    std::size_t to;
    std::size_t rev;  // index of the paired edge in adj_[to]
    double cap;
  };

  bool build_levels(std::size_t source, std::size_t sink);
  double push(std::size_t node, std::size_t sink, double limit);

  std::vector<std::vector<Edge>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
};

}  // namespace tbdx
