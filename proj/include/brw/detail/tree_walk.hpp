#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <limits>
#include <vector>

#include "brw/engine.hpp"

namespace brw::detail {

template <class Node>
struct TreeWorkspace {
  std::vector<Node> current;
  std::vector<Node> next;
};

struct NoObserver {
  template <class N>
  void operator()(const N&) const noexcept {}
};

// Breadth-first walk holding one generation at a time. Rep provides
//   Node, double position(const Node&), Expansion expand(RandomStream&, const Node&, std::vector<Node>&).
template <class Rep, class Observer = NoObserver>
TreeStats walk_tree(const Rep& rep, const typename Rep::Node& root, const SimCaps& caps,
                    const StopRule& stop, RandomStream& rng, TreeWorkspace<typename Rep::Node>& ws,
                    Observer&& observe = {}) {
  TreeStats st;
  st.progeny = 1;
  st.max_displacement = rep.position(root);
  st.max_decoration = -std::numeric_limits<double>::infinity();
  ws.current.clear();
  ws.next.clear();
  ws.current.push_back(root);
  std::int64_t gen = 0;
  while (!ws.current.empty()) {
    if (gen >= caps.max_depth) {
      st.truncated = true;
      break;
    }
    for (const auto& v : ws.current) {
      observe(v);
      const std::size_t before = ws.next.size();
      const Expansion e = rep.expand(rng, v, ws.next);
      const double x = rep.position(v);
      st.total_weight += e.weight;
      st.max_decoration = std::max(st.max_decoration, x + e.lambda);
      for (std::size_t i = before; i < ws.next.size(); ++i)
        st.max_displacement = std::max(st.max_displacement, rep.position(ws.next[i]));
      if (e.count > 0) {
        st.progeny += static_cast<std::uint64_t>(e.count);
        st.depth = gen + 1;
      }
      if (st.max_decoration > stop.level && st.total_weight >= stop.min_weight) {
        st.stopped = true;
        return st;
      }
      if (st.progeny > caps.max_nodes) {
        st.truncated = true;
        return st;
      }
    }
    std::swap(ws.current, ws.next);
    ws.next.clear();
    ++gen;
  }
  return st;
}

inline constexpr std::uint64_t kBlockSize = 1024;

// Runs fn(begin, end) on fixed blocks of tree indices. Block boundaries do not
// depend on the worker count and results come back in block order, so any
// ordered reduction over them is reproducible bit for bit.
template <class Acc, class Fn>
std::vector<Acc> map_blocks_serial(std::uint64_t n, Fn&& fn) {
  const std::uint64_t nb = (n + kBlockSize - 1) / kBlockSize;
  std::vector<Acc> out(nb);
  for (std::uint64_t b = 0; b < nb; ++b) out[b] = fn(b * kBlockSize, std::min(n, (b + 1) * kBlockSize));
  return out;
}

template <class Acc, class Fn>
std::vector<Acc> map_blocks_parallel(std::uint64_t n, int workers, Fn&& fn) {
  const std::int64_t nb = static_cast<std::int64_t>((n + kBlockSize - 1) / kBlockSize);
  std::vector<Acc> out(static_cast<std::size_t>(nb));
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::int64_t b = 0; b < nb; ++b) {
    try {
      const auto ub = static_cast<std::uint64_t>(b);
      out[ub] = fn(ub * kBlockSize, std::min(n, (ub + 1) * kBlockSize));
    } catch (...) {
#pragma omp critical(brw_block_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

template <class Acc, class Fn>
std::vector<Acc> map_blocks(std::uint64_t n, int workers, Fn&& fn) {
  if (workers <= 1) return map_blocks_serial<Acc>(n, std::forward<Fn>(fn));
  return map_blocks_parallel<Acc>(n, workers, std::forward<Fn>(fn));
}

}  // namespace brw::detail
