#pragma once

// Internal shortest-path utilities shared by the certificate and solver code.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "otcert/number.hpp"

namespace otcert::detail {

template <class T>
struct Arc {
  std::size_t from;
  std::size_t to;
  T weight;
};

template <class T>
struct ShortestPaths {
  std::vector<ExtReal<T>> dist;  // +inf when unreachable
  std::vector<std::ptrdiff_t> pred;
  std::optional<std::vector<std::size_t>> negative_cycle;  // nodes in arc order
};

/// Label-correcting shortest paths. `init` gives starting labels (all zero
/// emulates a virtual source joined to every node). Relaxations must improve
/// by more than the mode tolerance. A reachable negative cycle is returned in
/// arc order; distances are then meaningless.
template <class T>
ShortestPaths<T> bellman_ford(std::size_t n, const std::vector<Arc<T>>& arcs, std::vector<ExtReal<T>> init) {
  ShortestPaths<T> out{std::move(init), std::vector<std::ptrdiff_t>(n, -1), std::nullopt};
  auto& d = out.dist;
  std::ptrdiff_t last = -1;
  for (std::size_t pass = 0; pass <= n; ++pass) {
    last = -1;
    for (const auto& a : arcs) {
      if (!d[a.from].is_finite()) continue;
      T cand = d[a.from].value() + a.weight;
      if (!d[a.to].is_finite() || definitely_less(cand, d[a.to].value())) {
        d[a.to] = ExtReal<T>(cand);
        out.pred[a.to] = static_cast<std::ptrdiff_t>(a.from);
        last = static_cast<std::ptrdiff_t>(a.to);
      }
    }
    if (last < 0) return out;
  }
  // Still relaxing after n passes: walk back n steps to land on the cycle.
  std::size_t v = static_cast<std::size_t>(last);
  for (std::size_t i = 0; i < n; ++i) v = static_cast<std::size_t>(out.pred[v]);
  std::vector<std::size_t> cycle{v};
  for (std::size_t u = static_cast<std::size_t>(out.pred[v]); u != v; u = static_cast<std::size_t>(out.pred[u]))
    cycle.push_back(u);
  std::reverse(cycle.begin(), cycle.end());
  out.negative_cycle = std::move(cycle);
  return out;
}

/// Rotates a cycle so its smallest node comes first.
inline std::vector<std::size_t> rotate_to_min(std::vector<std::size_t> cycle) {
  auto it = std::min_element(cycle.begin(), cycle.end());
  std::rotate(cycle.begin(), it, cycle.end());
  return cycle;
}

/// Strongly connected components (Tarjan). Returns component id per node;
/// ids are in reverse topological order of the condensation.
std::vector<std::size_t> strong_components(const std::vector<std::vector<std::size_t>>& adj, std::size_t& count);

/// Nodes reachable from `start` (including itself).
std::vector<bool> reachable_from(const std::vector<std::vector<std::size_t>>& adj, std::size_t start);

}  // namespace otcert::detail
