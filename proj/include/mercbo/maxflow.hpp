#pragma once

#include <cstddef>
#include <vector>

namespace mercbo {

// Directed s-t network with real capacities, solved with Dinic's algorithm
// (O(V^2 E), strongly polynomial). Residual capacities at or below the
// saturation tolerance count as saturated.
class FlowNetwork {
 public:
  FlowNetwork(std::size_t node_count, std::size_t source, std::size_t sink, double saturation_tol = 1e-12);

  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t source() const { return source_; }
  std::size_t sink() const { return sink_; }

  // Arcs into the source or out of the sink are rejected, as are negative
  // capacities. Zero-capacity arcs are dropped.
  void add_arc(std::size_t from, std::size_t to, double capacity);

  double max_flow();

  // Nodes reachable from the source in the residual network after max_flow():
  // the smallest source side among all minimum cuts.
  std::vector<bool> source_side() const;

 private:
  struct Arc {
    std::size_t to;
    std::size_t reverse;
    double residual;
  };

  bool build_levels();
  double push(std::size_t node, double limit);
  double tolerance() const { return tol_ * (max_capacity_ > 1.0 ? max_capacity_ : 1.0); }

  std::vector<std::vector<Arc>> adjacency_;
  std::vector<int> level_;
  std::vector<std::size_t> next_arc_;
  std::size_t source_;
  std::size_t sink_;
  double tol_;
  double max_capacity_ = 0.0;
};

}  // namespace mercbo
