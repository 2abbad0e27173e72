#include "tbdx/maxflow.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "tbdx/errors.hpp"

namespace tbdx {

namespace {
// Residual capacities below this are treated as exhausted; keeps the level
// graph from cycling on floating-point dust.
constexpr double kResidualFloor = 1e-12;
}  // namespace

MaxFlow::MaxFlow(std::size_t nodes) : adj_(nodes), level_(nodes), next_(nodes) {}

void MaxFlow::add_edge(std::size_t from, std::size_t to, double cap, double rev_cap) {
  if (from >= adj_.size() || to >= adj_.size()) throw ArgumentError("edge endpoint out of range");
  if (cap < 0.0 || rev_cap < 0.0) throw ArgumentError("edge capacities must be nonnegative");
  adj_[from].push_back(Edge{to, adj_[to].size(), cap});
  adj_[to].push_back(Edge{from, adj_[from].size() - 1, rev_cap});
}

bool MaxFlow::build_levels(std::size_t source, std::size_t sink) {
  std::fill(level_.begin(), level_.end(), -1);
  std::deque<std::size_t> queue{source};
  level_[source] = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (const Edge& e : adj_[u]) {
      if (e.cap > kResidualFloor && level_[e.to] < 0) {
        level_[e.to] = level_[u] + 1;
        queue.push_back(e.to);
      }
    }
  }
  return level_[sink] >= 0;
}

double MaxFlow::push(std::size_t node, std::size_t sink, double limit) {
  if (node == sink) return limit;
  for (std::size_t& i = next_[node]; i < adj_[node].size(); ++i) {
    Edge& e = adj_[node][i];
    if (e.cap <= kResidualFloor || level_[e.to] != level_[node] + 1) continue;
    const double sent = push(e.to, sink, std::min(limit, e.cap));
    if (sent <= 0.0) continue;
    e.cap -= sent;
    adj_[e.to][e.rev].cap += sent;
    return sent;
  }
  return 0.0;
}

double MaxFlow::solve(std::size_t source, std::size_t sink) {
  if (source >= adj_.size() || sink >= adj_.size() || source == sink) {
    throw ArgumentError("bad source/sink");
  }
  double total = 0.0;
  while (build_levels(source, sink)) {
    std::fill(next_.begin(), next_.end(), 0);
    while (true) {
      const double sent = push(source, sink, std::numeric_limits<double>::infinity());
      if (sent <= 0.0) break;
      total += sent;
    }
  }
  return total;
}

bool MaxFlow::in_source_side(std::size_t node) const {
  if (node >= adj_.size()) throw ArgumentError("node out of range");
  return level_[node] >= 0;  // the final BFS failed to reach the sink
}

}  // namespace tbdx
