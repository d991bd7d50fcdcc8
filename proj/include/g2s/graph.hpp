#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "g2s/errors.hpp"
#include "g2s/tensor.hpp"

namespace g2s {

using NodeId = std::size_t;

/// A node's text attribute: one token, or a short token sequence.
using Attr = std::vector<std::string>;

struct Edge {
  NodeId src;
  NodeId dst;
  friend bool operator==(const Edge&, const Edge&) = default;
};

inline const std::string kSuperToken = "<SUPER>";

/// Immutable directed graph with dense node ids 0..V-1.
///
/// Forward neighbors of v are the nodes v directs to, backward neighbors
/// the nodes that direct to v; both lists follow edge insertion order.
/// Self-loops and duplicate edges are rejected.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  DirectedGraph(std::vector<Attr> attrs, std::vector<Edge> edges)
      : attrs_(std::move(attrs)), edges_(std::move(edges)), fwd_(attrs_.size()), bwd_(attrs_.size()) {
    for (std::size_t v = 0; v < attrs_.size(); ++v) {
      if (attrs_[v].empty()) throw ValidationError("node " + std::to_string(v) + " has an empty attribute");
    }
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const Edge& e : edges_) {
      if (e.src >= attrs_.size() || e.dst >= attrs_.size()) {
        throw ValidationError("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                              ") references a missing node");
      }
      if (e.src == e.dst) throw ValidationError("self-loop on node " + std::to_string(e.src));
      if (!seen.emplace(e.src, e.dst).second) {
        throw ValidationError("duplicate edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) + ")");
      }
      fwd_[e.src].push_back(e.dst);
      bwd_[e.dst].push_back(e.src);
    }
  }

  std::size_t num_nodes() const noexcept { return attrs_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  const Attr& attr(NodeId v) const {
    check(v);
    return attrs_[v];
  }
  const std::vector<Attr>& attrs() const noexcept { return attrs_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  const std::vector<NodeId>& forward(NodeId v) const {
    check(v);
    return fwd_[v];
  }
  const std::vector<NodeId>& backward(NodeId v) const {
    check(v);
    return bwd_[v];
  }

  friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
    return a.attrs_ == b.attrs_ && a.edges_ == b.edges_;
  }

 private:
  void check(NodeId v) const {
    if (v >= attrs_.size()) {
      throw ArgumentError("node id " + std::to_string(v) + " out of range for graph with " +
                          std::to_string(attrs_.size()) + " nodes");
    }
  }

  std::vector<Attr> attrs_;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> fwd_;
  std::vector<std::vector<NodeId>> bwd_;
};

inline const std::vector<NodeId>& forward_neighbors(const DirectedGraph& g, NodeId v) { return g.forward(v); }
inline const std::vector<NodeId>& backward_neighbors(const DirectedGraph& g, NodeId v) { return g.backward(v); }

struct LabeledEdge {
  NodeId src;
  NodeId dst;
  std::string label;
};

/// Graph whose edges carry a text label; only exists before conversion.
struct LabeledGraph {
  std::vector<Attr> attrs;
  std::vector<LabeledEdge> edges;
};

/// Replaces each labeled edge (u, v, l) by a fresh node w with attribute l and
/// edges (u, w), (w, v). Edge nodes are appended in edge order after the
/// original nodes.
inline DirectedGraph transform_labeled_edges(const LabeledGraph& g) {
  std::vector<Attr> attrs = g.attrs;
  std::vector<Edge> edges;
  edges.reserve(2 * g.edges.size());
  for (const LabeledEdge& e : g.edges) {
    const NodeId w = attrs.size();
    attrs.push_back(Attr{e.label});
    edges.push_back({e.src, w});
    edges.push_back({w, e.dst});
  }
  return DirectedGraph(std::move(attrs), std::move(edges));
}

/// Appends a node with attribute "<SUPER>" that every original node directs to.
inline std::pair<DirectedGraph, NodeId> add_supernode(const DirectedGraph& g) {
  std::vector<Attr> attrs = g.attrs();
  std::vector<Edge> edges = g.edges();
  const NodeId s = attrs.size();
  attrs.push_back(Attr{kSuperToken});
  for (NodeId v = 0; v < s; ++v) edges.push_back({v, s});
  return {DirectedGraph(std::move(attrs), std::move(edges)), s};
}

/// Uniform sample of `cap` neighbors without replacement, kept in input order.
/// Lists no longer than `cap` come back unchanged.
inline std::vector<NodeId> sample_neighbors(std::span<const NodeId> nbrs, std::size_t cap, Rng& rng) {
  if (cap < 1) throw ArgumentError("neighbor sampling cap must be at least 1");
  if (nbrs.size() <= cap) return {nbrs.begin(), nbrs.end()};
  std::vector<std::size_t> pos(nbrs.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + rng.below(pos.size() - i);
    std::swap(pos[i], pos[j]);
  }
  pos.resize(cap);
  std::sort(pos.begin(), pos.end());
  std::vector<NodeId> out;
  out.reserve(cap);
  for (std::size_t p : pos) out.push_back(nbrs[p]);
  return out;
}

/// One (graph, target sequence) pair.
struct Sample {
  DirectedGraph graph;
  std::optional<std::pair<NodeId, NodeId>> markers;
  std::vector<std::string> target;

  friend bool operator==(const Sample&, const Sample&) = default;
};

inline void validate_sample(const Sample& s) {
  if (s.target.empty()) throw ValidationError("sample target is empty");
  if (s.markers) {
    const auto [a, b] = *s.markers;
    if (a >= s.graph.num_nodes() || b >= s.graph.num_nodes()) {
      throw ValidationError("marker id out of range");
    }
  }
}

// ---- JSON lines ------------------------------------------------------------

inline nlohmann::json sample_to_json(const Sample& s) {
  nlohmann::json nodes = nlohmann::json::array();
  for (NodeId v = 0; v < s.graph.num_nodes(); ++v) {
    const Attr& a = s.graph.attr(v);
    nlohmann::json attr = a.size() == 1 ? nlohmann::json(a[0]) : nlohmann::json(a);
    nodes.push_back({{"id", v}, {"attr", std::move(attr)}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : s.graph.edges()) edges.push_back({e.src, e.dst});
  nlohmann::json j;
  j["nodes"] = std::move(nodes);
  j["edges"] = std::move(edges);
  if (s.markers) j["markers"] = {s.markers->first, s.markers->second};
  j["target"] = s.target;
  return j;
}

inline std::string serialize_sample(const Sample& s) { return sample_to_json(s).dump(); }

/// Parses one JSONL record. `line_no` is only used in error messages.
inline Sample parse_sample(const std::string& line, std::size_t line_no = 1) {
  const std::string where = "line " + std::to_string(line_no) + ": ";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(where + "malformed JSON (" + e.what() + ")", line_no);
  }
  std::vector<Attr> attrs;
  std::vector<Edge> edges;
  Sample s;
  try {
    if (!j.is_object() || !j.contains("nodes") || !j.contains("edges") || !j.contains("target")) {
      throw ParseError(where + "record needs \"nodes\", \"edges\" and \"target\"", line_no);
    }
    const auto& nodes = j.at("nodes");
    if (!nodes.is_array()) throw ParseError(where + "\"nodes\" must be an array", line_no);
    attrs.resize(nodes.size());
    std::vector<bool> filled(nodes.size(), false);
    for (const auto& n : nodes) {
      const auto id = n.at("id").get<std::size_t>();
      if (id >= nodes.size() || filled[id]) {
        throw ValidationError(where + "node ids must be exactly 0..V-1 without repeats");
      }
      const auto& a = n.at("attr");
      attrs[id] = a.is_string() ? Attr{a.get<std::string>()} : a.get<Attr>();
      filled[id] = true;
    }
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError(where + "edge must be a [src, dst] pair", line_no);
      edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
    }
    if (j.contains("markers") && !j.at("markers").is_null()) {
      const auto& m = j.at("markers");
      if (!m.is_array() || m.size() != 2) throw ParseError(where + "markers must be a pair", line_no);
      s.markers = std::make_pair(m[0].get<std::size_t>(), m[1].get<std::size_t>());
    }
    s.target = j.at("target").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + "bad field (" + e.what() + ")", line_no);
  }
  try {
    s.graph = DirectedGraph(std::move(attrs), std::move(edges));
    validate_sample(s);
  } catch (const ValidationError& e) {
    throw ValidationError(where + e.what());
  }
  return s;
}

inline std::vector<Sample> read_samples(std::istream& in) {
  std::vector<Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_sample(line, line_no));
  }
  return out;
}

inline std::vector<Sample> parse_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open graph file: " + path);
  return read_samples(in);
}

inline void write_samples(std::ostream& out, std::span<const Sample> samples) {
  for (const Sample& s : samples) out << serialize_sample(s) << '\n';
}

inline void write_graph_file(const std::string& path, std::span<const Sample> samples) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write graph file: " + path);
  write_samples(out, samples);
}

}  // namespace g2s
