#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "g2s/errors.hpp"
#include "g2s/graph.hpp"
#include "g2s/tensor.hpp"

namespace g2s {

enum class Family { sp_s, sp_l, sdp_dag, sdp_dcg, sdp_seq, babi19 };

inline Family parse_family(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return c == '_' ? '-' : std::tolower(c); });
  if (s == "sp-s") return Family::sp_s;
  if (s == "sp-l") return Family::sp_l;
  if (s == "sdp-dag") return Family::sdp_dag;
  if (s == "sdp-dcg") return Family::sdp_dcg;
  if (s == "sdp-seq") return Family::sdp_seq;
  if (s == "babi19" || s == "babi-19") return Family::babi19;
  throw ArgumentError("unknown dataset family: " + s);
}

inline std::string to_string(Family f) {
  switch (f) {
    case Family::sp_s: return "sp-s";
    case Family::sp_l: return "sp-l";
    case Family::sdp_dag: return "sdp-dag";
    case Family::sdp_dcg: return "sdp-dcg";
    case Family::sdp_seq: return "sdp-seq";
    case Family::babi19: return "babi19";
  }
  return "?";
}

struct DatasetSpec {
  Family family = Family::sp_s;
  std::size_t graph_size = 5;
  std::size_t min_path_len = 2;
  std::size_t train = 1000;
  std::size_t dev = 1000;
  std::size_t test = 1000;
  std::uint64_t seed = 1;
  // Random-graph out-degree is drawn uniformly from [min_out_degree, max_out_degree].
  std::size_t min_out_degree = 1;
  std::size_t max_out_degree = 3;

  void validate() const {
    if (train == 0 || dev == 0 || test == 0) throw ArgumentError("dataset split sizes must be positive");
    if (min_path_len < 2) throw ArgumentError("min_path_len must be at least 2");
    if (graph_size < min_path_len + 1) throw ArgumentError("graph_size must exceed min_path_len");
    if (min_out_degree < 1 || max_out_degree < min_out_degree) throw ArgumentError("bad out-degree range");
  }

  static DatasetSpec sp_s() { return {Family::sp_s, 5, 2, 1000, 1000, 1000, 1}; }
  static DatasetSpec sp_l() { return {Family::sp_l, 100, 4, 1000, 1000, 1000, 1}; }
  static DatasetSpec sdp(Family f) { return {f, 100, 4, 8000, 1000, 1000, 1}; }
  static DatasetSpec babi19() { return {Family::babi19, 5, 2, 1000, 1000, 1000, 1}; }
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> dev;
  std::vector<Sample> test;
};

/// Bare directed topology: node count plus edges (no attributes).
struct Topology {
  std::size_t nodes = 0;
  std::vector<Edge> edges;
};

inline std::vector<std::vector<NodeId>> adjacency(const Topology& t) {
  std::vector<std::vector<NodeId>> adj(t.nodes);
  for (const Edge& e : t.edges) adj[e.src].push_back(e.dst);
  return adj;
}

/// BFS from `src` counting shortest paths (saturating at 2).
struct ShortestPaths {
  std::vector<std::size_t> dist;   // npos when unreachable
  std::vector<std::size_t> count;  // 0, 1 or 2 (= "two or more")
  std::vector<NodeId> parent;      // some shortest-path predecessor
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

inline ShortestPaths bfs_count(const std::vector<std::vector<NodeId>>& adj, NodeId src) {
  const std::size_t n = adj.size();
  ShortestPaths sp{std::vector<std::size_t>(n, ShortestPaths::npos), std::vector<std::size_t>(n, 0),
                   std::vector<NodeId>(n, ShortestPaths::npos)};
  std::deque<NodeId> queue{src};
  sp.dist[src] = 0;
  sp.count[src] = 1;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId w : adj[u]) {
      if (sp.dist[w] == ShortestPaths::npos) {
        sp.dist[w] = sp.dist[u] + 1;
        sp.count[w] = sp.count[u];
        sp.parent[w] = u;
        queue.push_back(w);
      } else if (sp.dist[w] == sp.dist[u] + 1) {
        sp.count[w] = std::min<std::size_t>(2, sp.count[w] + sp.count[u]);
      }
    }
  }
  return sp;
}

/// The unique shortest path a -> b (inclusive), or nothing when b is
/// unreachable or several shortest paths exist.
inline std::optional<std::vector<NodeId>> unique_shortest_path(const std::vector<std::vector<NodeId>>& adj, NodeId a,
                                                               NodeId b) {
  const ShortestPaths sp = bfs_count(adj, a);
  if (sp.dist[b] == ShortestPaths::npos || sp.count[b] != 1) return std::nullopt;
  std::vector<NodeId> path{b};
  while (path.back() != a) path.push_back(sp.parent[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

inline bool has_directed_cycle(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::size_t> indeg(n, 0);
  std::vector<std::vector<NodeId>> adj(n);
  for (const Edge& e : edges) {
    adj[e.src].push_back(e.dst);
    ++indeg[e.dst];
  }
  std::vector<NodeId> ready;
  for (NodeId v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  std::size_t seen = 0;
  while (!ready.empty()) {
    const NodeId u = ready.back();
    ready.pop_back();
    ++seen;
    for (NodeId w : adj[u])
      if (--indeg[w] == 0) ready.push_back(w);
  }
  return seen != n;
}

namespace detail {

inline std::vector<NodeId> random_order(std::size_t n, Rng& rng) {
  std::vector<NodeId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  return order;
}

// Each node draws an out-degree and that many distinct targets from `pool(v)`.
template <class Pool>
Topology random_edges(std::size_t n, const DatasetSpec& spec, Rng& rng, Pool&& pool) {
  Topology t{n, {}};
  for (NodeId v = 0; v < n; ++v) {
    std::vector<NodeId> candidates = pool(v);
    const std::size_t want = spec.min_out_degree + rng.below(spec.max_out_degree - spec.min_out_degree + 1);
    const std::size_t take = std::min(want, candidates.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(candidates[i], candidates[i + rng.below(candidates.size() - i)]);
      t.edges.push_back({v, candidates[i]});
    }
  }
  return t;
}

}  // namespace detail

/// Random topology for a shortest-path family.
///
/// SP/DCG: every node points to 1-3 random other nodes (out-degree >= 1
/// everywhere forces a directed cycle). DAG: the same, restricted to nodes
/// later in a random topological order. SEQ: one directed line through a
/// random node order.
inline Topology random_topology(const DatasetSpec& spec, Rng& rng) {
  const std::size_t n = spec.graph_size;
  switch (spec.family) {
    case Family::sp_s:
    case Family::sp_l:
    case Family::sdp_dcg:
      return detail::random_edges(n, spec, rng, [n](NodeId v) {
        std::vector<NodeId> c;
        for (NodeId u = 0; u < n; ++u)
          if (u != v) c.push_back(u);
        return c;
      });
    case Family::sdp_dag: {
      const std::vector<NodeId> order = detail::random_order(n, rng);
      std::vector<std::size_t> pos(n);
      for (std::size_t i = 0; i < n; ++i) pos[order[i]] = i;
      return detail::random_edges(n, spec, rng, [&](NodeId v) {
        return std::vector<NodeId>(order.begin() + static_cast<std::ptrdiff_t>(pos[v]) + 1, order.end());
      });
    }
    case Family::sdp_seq: {
      const std::vector<NodeId> order = detail::random_order(n, rng);
      Topology t{n, {}};
      for (std::size_t i = 0; i + 1 < n; ++i) t.edges.push_back({order[i], order[i + 1]});
      return t;
    }
    case Family::babi19: break;
  }
  throw ArgumentError("random_topology does not handle " + to_string(spec.family));
}

/// Path sample over `topo`: nodes carry their id as attribute, the endpoints
/// carry [START, id] and [END, id]; the target is the id sequence of the
/// unique shortest path, endpoints included.
inline std::optional<Sample> make_path_sample(const Topology& topo, NodeId a, NodeId b, std::size_t min_len) {
  if (a == b) return std::nullopt;
  auto path = unique_shortest_path(adjacency(topo), a, b);
  if (!path || path->size() - 1 < min_len) return std::nullopt;
  std::vector<Attr> attrs(topo.nodes);
  for (NodeId v = 0; v < topo.nodes; ++v) attrs[v] = {std::to_string(v)};
  attrs[a] = {"START", std::to_string(a)};
  attrs[b] = {"END", std::to_string(b)};
  Sample s{DirectedGraph(std::move(attrs), topo.edges), std::make_pair(a, b), {}};
  for (NodeId v : *path) s.target.push_back(std::to_string(v));
  return s;
}

inline constexpr std::size_t kMaxGenerationRetries = 10000;

/// One shortest-path sample: topologies and (A, B) pairs are redrawn until
/// A reaches B along exactly one shortest path of at least min_path_len edges.
inline Sample generate_sdp_sample(const DatasetSpec& spec, Rng& rng) {
  constexpr std::size_t kPairsPerGraph = 20;
  std::size_t tries = 0;
  while (tries < kMaxGenerationRetries) {
    const Topology topo = random_topology(spec, rng);
    for (std::size_t p = 0; p < kPairsPerGraph && tries < kMaxGenerationRetries; ++p, ++tries) {
      const NodeId a = rng.below(topo.nodes);
      const NodeId b = rng.below(topo.nodes);
      if (auto s = make_path_sample(topo, a, b, spec.min_path_len)) return *s;
    }
  }
  throw GenerationError("no unique shortest path of length >= " + std::to_string(spec.min_path_len) + " after " +
                        std::to_string(kMaxGenerationRetries) + " attempts on " + to_string(spec.family) +
                        " graphs of size " + std::to_string(spec.graph_size) + "; try a larger graph");
}

inline std::vector<Sample> generate_sdp(const DatasetSpec& spec, std::size_t count, Rng& rng) {
  spec.validate();
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_sdp_sample(spec, rng));
  return out;
}

// ---- bAbI-19-style path finding ---------------------------------------------

inline const std::array<std::string, 4>& direction_tokens() {
  static const std::array<std::string, 4> d{"n", "s", "e", "w"};
  return d;
}

inline std::string opposite_direction(const std::string& d) {
  if (d == "n") return "s";
  if (d == "s") return "n";
  if (d == "e") return "w";
  if (d == "w") return "e";
  throw ArgumentError("not a direction: " + d);
}

/// Path-finding sample from a place graph with direction-labeled edges.
/// Places keep their id as attribute except the endpoints (START / END);
/// labeled edges become edge nodes. The target is the label sequence along
/// the unique shortest path a -> b.
inline std::optional<Sample> make_babi_sample(const LabeledGraph& places, NodeId a, NodeId b, std::size_t min_len) {
  if (a == b) return std::nullopt;
  std::vector<std::vector<NodeId>> adj(places.attrs.size());
  std::map<std::pair<NodeId, NodeId>, std::string> label;
  for (const auto& e : places.edges) {
    adj[e.src].push_back(e.dst);
    label[{e.src, e.dst}] = e.label;
  }
  auto path = unique_shortest_path(adj, a, b);
  if (!path || path->size() - 1 < min_len) return std::nullopt;
  LabeledGraph g = places;
  g.attrs[a] = {"START"};
  g.attrs[b] = {"END"};
  Sample s{transform_labeled_edges(g), std::make_pair(a, b), {}};
  for (std::size_t i = 0; i + 1 < path->size(); ++i) s.target.push_back(label.at({(*path)[i], (*path)[i + 1]}));
  return s;
}

struct BabiOptions {
  std::size_t places = 5;
  std::size_t min_path_len = 2;
  // Chance of stating a relation between grid-adjacent places beyond the tree.
  double extra_relation_prob = 0.3;
};

/// Random place layout on a grid: places are attached one by one to a free
/// cell next to an existing place; every stated relation adds both directed
/// edges with opposite labels. Place ids are shuffled and statement order is
/// random.
inline LabeledGraph random_place_graph(const BabiOptions& opt, Rng& rng) {
  static const std::array<std::pair<int, int>, 4> delta{{{0, 1}, {0, -1}, {1, 0}, {-1, 0}}};  // n s e w
  std::vector<std::pair<int, int>> cell{{0, 0}};
  std::map<std::pair<int, int>, std::size_t> at{{{0, 0}, 0}};
  std::set<std::pair<std::size_t, std::size_t>> related;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> rel;  // (from, to, dir of `to` seen from `from`)
  while (cell.size() < opt.places) {
    const std::size_t base = rng.below(cell.size());
    const std::size_t d = rng.below(4);
    const std::pair<int, int> c{cell[base].first + delta[d].first, cell[base].second + delta[d].second};
    if (at.count(c)) continue;
    at[c] = cell.size();
    related.insert({std::min(base, cell.size()), std::max(base, cell.size())});
    rel.emplace_back(base, cell.size(), d);
    cell.push_back(c);
  }
  for (std::size_t p = 0; p < cell.size(); ++p) {
    for (std::size_t d = 0; d < 4; d += 2) {  // look north and east only, each pair once
      const std::pair<int, int> c{cell[p].first + delta[d].first, cell[p].second + delta[d].second};
      auto it = at.find(c);
      if (it == at.end()) continue;
      const std::size_t q = it->second;
      if (related.count({std::min(p, q), std::max(p, q)})) continue;
      if (rng.uniform() < opt.extra_relation_prob) {
        related.insert({std::min(p, q), std::max(p, q)});
        rel.emplace_back(p, q, d);
      }
    }
  }
  const std::vector<NodeId> id = detail::random_order(cell.size(), rng);
  LabeledGraph g;
  g.attrs.resize(cell.size());
  for (std::size_t p = 0; p < cell.size(); ++p) g.attrs[id[p]] = {std::to_string(id[p])};
  rng.shuffle(rel);
  for (const auto& [from, to, d] : rel) {
    const std::string& lab = direction_tokens()[d];
    g.edges.push_back({id[from], id[to], lab});
    g.edges.push_back({id[to], id[from], opposite_direction(lab)});
  }
  return g;
}

inline Sample generate_babi19_sample(const BabiOptions& opt, Rng& rng, LabeledGraph* places_out = nullptr) {
  constexpr std::size_t kPairsPerGraph = 20;
  std::size_t tries = 0;
  while (tries < kMaxGenerationRetries) {
    const LabeledGraph places = random_place_graph(opt, rng);
    for (std::size_t p = 0; p < kPairsPerGraph && tries < kMaxGenerationRetries; ++p, ++tries) {
      const NodeId a = rng.below(places.attrs.size());
      const NodeId b = rng.below(places.attrs.size());
      if (auto s = make_babi_sample(places, a, b, opt.min_path_len)) {
        if (places_out) *places_out = places;
        return *s;
      }
    }
  }
  throw GenerationError("no path-finding pair found after " + std::to_string(kMaxGenerationRetries) +
                        " attempts; try more places");
}

inline std::vector<Sample> generate_babi19(std::size_t count, Rng& rng, const BabiOptions& opt = {}) {
  if (count < 1) throw ArgumentError("count must be at least 1");
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_babi19_sample(opt, rng));
  return out;
}

/// Train/dev/test triple. Each split draws from its own stream derived from
/// the dataset seed.
inline Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  const Rng master(spec.seed);
  Dataset d;
  std::array<std::pair<std::vector<Sample>*, std::size_t>, 3> splits{
      {{&d.train, spec.train}, {&d.dev, spec.dev}, {&d.test, spec.test}}};
  for (std::size_t i = 0; i < splits.size(); ++i) {
    Rng rng = master.derive(i);
    if (spec.family == Family::babi19) {
      BabiOptions opt;
      opt.places = spec.graph_size;
      opt.min_path_len = spec.min_path_len;
      *splits[i].first = generate_babi19(splits[i].second, rng, opt);
    } else {
      *splits[i].first = generate_sdp(spec, splits[i].second, rng);
    }
  }
  return d;
}

}  // namespace g2s
