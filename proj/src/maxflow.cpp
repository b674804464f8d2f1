#include "mercbo/maxflow.hpp"

#include "mercbo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace mercbo {

FlowNetwork::FlowNetwork(std::size_t node_count, std::size_t source, std::size_t sink, double saturation_tol)
    : adjacency_(node_count), source_(source), sink_(sink), tol_(saturation_tol) {
  if (source >= node_count || sink >= node_count || source == sink) {
    throw InvalidConfiguration("flow network: invalid source/sink");
  }
}

void FlowNetwork::add_arc(std::size_t from, std::size_t to, double capacity) {
  if (from >= node_count() || to >= node_count() || from == to) throw InvalidConfiguration("flow network: invalid arc");
  if (to == source_ || from == sink_) throw InvalidConfiguration("flow network: arcs into source or out of sink are not allowed");
  if (!(capacity >= 0.0) || !std::isfinite(capacity)) {
    throw InvalidConfiguration("flow network: capacity must be finite and non-negative, got " + std::to_string(capacity));
  }
  if (capacity == 0.0) return;
  max_capacity_ = std::max(max_capacity_, capacity);
  adjacency_[from].push_back({to, adjacency_[to].size(), capacity});
  adjacency_[to].push_back({from, adjacency_[from].size() - 1, 0.0});
}

bool FlowNetwork::build_levels() {
  const double eps = tolerance();
  level_.assign(node_count(), -1);
  std::queue<std::size_t> queue;
  level_[source_] = 0;
  queue.push(source_);
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop();
    for (const auto& arc : adjacency_[u]) {
      if (arc.residual > eps && level_[arc.to] < 0) {
        level_[arc.to] = level_[u] + 1;
        queue.push(arc.to);
      }
    }
  }
  return level_[sink_] >= 0;
}

double FlowNetwork::push(std::size_t node, double limit) {
  if (node == sink_) return limit;
  const double eps = tolerance();
  for (auto& i = next_arc_[node]; i < adjacency_[node].size(); ++i) {
    auto& arc = adjacency_[node][i];
    if (arc.residual <= eps || level_[arc.to] != level_[node] + 1) continue;
    const double pushed = push(arc.to, std::min(limit, arc.residual));
    if (pushed > 0.0) {
      arc.residual -= pushed;
      adjacency_[arc.to][arc.reverse].residual += pushed;
      return pushed;
    }
  }
  return 0.0;
}

double FlowNetwork::max_flow() {
  double total = 0.0;
  while (build_levels()) {
    next_arc_.assign(node_count(), 0);
    while (true) {
      const double pushed = push(source_, std::numeric_limits<double>::infinity());
      if (pushed <= 0.0) break;
      total += pushed;
    }
  }
  return total;
}

std::vector<bool> FlowNetwork::source_side() const {
  const double eps = tolerance();
  std::vector<bool> seen(node_count(), false);
  std::vector<std::size_t> stack{source_};
  seen[source_] = true;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (const auto& arc : adjacency_[u]) {
      if (arc.residual > eps && !seen[arc.to]) {
        seen[arc.to] = true;
        stack.push_back(arc.to);
      }
    }
  }
  return seen;
}

}  // namespace mercbo
