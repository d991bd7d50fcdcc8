#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "g2s/encoder.hpp"
#include "g2s/model.hpp"
#include "gradcheck.hpp"

using namespace g2s;

namespace {

using Row = std::vector<double>;

struct Fixture {
  Vocabulary vocab;
  EncoderConfig cfg;
  ParamSet params;

  explicit Fixture(EncoderConfig c, std::uint64_t seed = 3) : cfg(c) {
    std::vector<std::string> toks{"a", "b", "c", "d", "e", "f", "g", "h"};
    for (int i = 0; i < 30; ++i) toks.push_back(std::to_string(i));
    vocab = Vocabulary::from_tokens(toks);
    Rng rng(seed);
    add_encoder_params(params, cfg, vocab.size(), 5, rng);
    // Nonzero biases so every bias path is exercised by the oracles.
    Rng brng(seed + 100);
    for (auto& e : params.entries())
      if (e.name.ends_with(".b"))
        for (double& x : e.value.data) x = brng.uniform(-0.3, 0.3);
  }

  Tensor z(const DirectedGraph& g, std::uint64_t seed = 0) {
    Tape tape(false);
    Rng rng(seed);
    return encode_nodes(tape, g, vocab, params, cfg, rng).z.value();
  }

  Row embed_row(const std::string& tok) const {
    const Tensor& e = params.get("embed");
    const std::size_t id = vocab.id(tok);
    return Row(e.data.begin() + static_cast<std::ptrdiff_t>(id * e.cols()),
               e.data.begin() + static_cast<std::ptrdiff_t>((id + 1) * e.cols()));
  }
};

EncoderConfig small_config(AggregatorKind agg = AggregatorKind::mean, std::size_t hops = 2) {
  EncoderConfig c;
  c.feat_dim = 3;
  c.hidden_dim = 4;
  c.hops = hops;
  c.aggregator = agg;
  return c;
}

// x [1,in] * W [in,out], computed by plain loops.
Row vec_mat(const Row& x, const Tensor& w) {
  Row out(w.cols(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] += x[i] * w(i, j);
  return out;
}

Row relu(Row x) {
  for (double& v : x) v = std::max(v, 0.0);
  return x;
}

Row concat(const Row& a, const Row& b) {
  Row out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Row row_of(const Tensor& t, std::size_t r) {
  return Row(t.data.begin() + static_cast<std::ptrdiff_t>(r * t.cols()),
             t.data.begin() + static_cast<std::ptrdiff_t>((r + 1) * t.cols()));
}

Row add_vec(Row a, const Tensor& b) {
  for (std::size_t j = 0; j < a.size(); ++j) a[j] += b.data[j];
  return a;
}

DirectedGraph random_graph(Rng& rng, std::size_t n, double density) {
  std::vector<Attr> attrs;
  const char* toks[] = {"a", "b", "c", "d", "e", "f", "g", "h"};
  for (std::size_t v = 0; v < n; ++v) {
    Attr a{toks[rng.below(8)]};
    if (rng.uniform() < 0.3) a.push_back(toks[rng.below(8)]);
    attrs.push_back(a);
  }
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (u != v && rng.uniform() < density) edges.push_back({u, v});
  return DirectedGraph(attrs, edges);
}

// Directed hop distance from v following `fwd` edges (or reversed ones).
std::vector<std::size_t> distances(const DirectedGraph& g, NodeId v, bool fwd) {
  std::vector<std::size_t> dist(g.num_nodes(), static_cast<std::size_t>(-1));
  std::deque<NodeId> q{v};
  dist[v] = 0;
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop_front();
    for (NodeId w : fwd ? g.forward(u) : g.backward(u)) {
      if (dist[w] != static_cast<std::size_t>(-1)) continue;
      dist[w] = dist[u] + 1;
      q.push_back(w);
    }
  }
  return dist;
}

}  // namespace

TEST(InitNodeFeatures, SingleTokenIsEmbeddingRow) {
  Fixture f(small_config());
  Tape tape(false);
  DirectedGraph g({{"5"}}, {});
  const Tensor a = init_node_features(tape, g, f.vocab, f.params, f.cfg).value();
  EXPECT_EQ(a.data, f.embed_row("5"));
}

TEST(InitNodeFeatures, MeanOfDuplicatesEqualsSingleToken) {
  Fixture f(small_config());
  Tape tape(false);
  DirectedGraph g({{"a", "a"}, {"a"}}, {});
  const Tensor a = init_node_features(tape, g, f.vocab, f.params, f.cfg).value();
  EXPECT_EQ(row_of(a, 0), row_of(a, 1));
}

TEST(InitNodeFeatures, MeanMatchesScalarLoop) {
  Fixture f(small_config());
  Tape tape(false);
  DirectedGraph g({{"a", "b"}}, {});
  const Tensor a = init_node_features(tape, g, f.vocab, f.params, f.cfg).value();
  const Row ra = f.embed_row("a"), rb = f.embed_row("b");
  for (std::size_t j = 0; j < ra.size(); ++j) EXPECT_DOUBLE_EQ(a.data[j], (ra[j] + rb[j]) / 2);
}

TEST(InitNodeFeatures, UnknownTokensMapToUnk) {
  Fixture f(small_config());
  Tape tape(false);
  DirectedGraph g({{"never-seen"}}, {});
  const Tensor a = init_node_features(tape, g, f.vocab, f.params, f.cfg).value();
  EXPECT_EQ(a.data, f.embed_row("<UNK>"));
}

TEST(InitNodeFeatures, LstmModeRunsOverTokens) {
  EncoderConfig c = small_config();
  c.feature_mode = FeatureMode::lstm;
  Fixture f(c);
  Tape tape(false);
  DirectedGraph g({{"a", "b"}, {"b", "a"}}, {});
  const Tensor a = init_node_features(tape, g, f.vocab, f.params, f.cfg).value();
  EXPECT_NE(row_of(a, 0), row_of(a, 1));
}

TEST(Aggregate, MeanOfTwoRows) {
  Fixture f(small_config());
  Tape tape(false);
  Rng rng(0);
  std::vector<Var> reps{tape.constant(Tensor::row({1, 3})), tape.constant(Tensor::row({3, 1}))};
  EXPECT_EQ(aggregate(reps, AggregatorKind::mean, 1, Direction::fwd, f.params, f.cfg, rng).value().data,
            (Row{2, 2}));
}

TEST(Aggregate, PoolingSingletonIsDenseOutput) {
  Fixture f(small_config(AggregatorKind::pooling));
  Tape tape(false);
  Rng rng(0);
  const Row h{0.2, -0.4, 0.9};
  std::vector<Var> reps{tape.constant(Tensor(Shape{1, 3}, h))};
  const Tensor& out = aggregate(reps, AggregatorKind::pooling, 1, Direction::fwd, f.params, f.cfg, rng).value();
  const Row expect = relu(add_vec(vec_mat(h, f.params.get("enc.hop1.fwd.pool.W")), f.params.get("enc.hop1.fwd.pool.b")));
  EXPECT_EQ(out.data, expect);
}

TEST(Aggregate, MeanAndPoolingArePermutationInvariant) {
  for (AggregatorKind kind : {AggregatorKind::mean, AggregatorKind::pooling}) {
    Fixture f(small_config(kind));
    Rng data(31);
    for (int trial = 0; trial < 100; ++trial) {
      Tape tape(false);
      Rng rng(0);
      std::vector<Var> reps;
      const std::size_t n = 1 + data.below(7);
      for (std::size_t i = 0; i < n; ++i) reps.push_back(tape.constant(uniform_tensor(Shape{1, 3}, 2.0, data)));
      const Row base = aggregate(reps, kind, 1, Direction::bwd, f.params, f.cfg, rng).value().data;
      data.shuffle(reps);
      EXPECT_EQ(aggregate(reps, kind, 1, Direction::bwd, f.params, f.cfg, rng).value().data, base);
    }
  }
}

TEST(Aggregate, EmptyListIsArgumentError) {
  Fixture f(small_config());
  Rng rng(0);
  std::vector<Var> none;
  EXPECT_THROW(aggregate(none, AggregatorKind::mean, 1, Direction::fwd, f.params, f.cfg, rng), ArgumentError);
}

TEST(Aggregate, LstmDependsOnlyOnSeed) {
  Fixture f(small_config(AggregatorKind::lstm));
  Tape tape(false);
  Rng data(5);
  std::vector<Var> reps;
  for (int i = 0; i < 5; ++i) reps.push_back(tape.constant(uniform_tensor(Shape{1, 3}, 1.0, data)));
  Rng r1(9);
  const Row base = aggregate(reps, AggregatorKind::lstm, 1, Direction::fwd, f.params, f.cfg, r1).value().data;
  std::reverse(reps.begin(), reps.end());
  Rng r2(9);
  EXPECT_EQ(aggregate(reps, AggregatorKind::lstm, 1, Direction::fwd, f.params, f.cfg, r2).value().data, base);
}

TEST(EncodeNodes, IsolatedNodeMatchesScalarLoop) {
  Fixture f(small_config(AggregatorKind::mean, 3));
  DirectedGraph g({{"c"}}, {});
  const Tensor z = f.z(g);
  Row expect;
  for (const char* dir : {"fwd", "bwd"}) {
    Row h = f.embed_row("c");
    for (int k = 1; k <= 3; ++k) {
      const Tensor& w = f.params.get("enc.hop" + std::to_string(k) + "." + dir + ".W");
      h = relu(vec_mat(concat(h, Row(h.size(), 0.0)), w));
    }
    expect = concat(expect, h);
  }
  ASSERT_EQ(z.data.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(z.data[i], expect[i], 1e-14);
}

TEST(EncodeNodes, TwoNodeDataflow) {
  Fixture f(small_config(AggregatorKind::mean, 1));
  DirectedGraph g({{"a"}, {"b"}}, {{0, 1}});
  const Tensor z = f.z(g);
  const Row a0 = f.embed_row("a"), a1 = f.embed_row("b");
  const Tensor& wf = f.params.get("enc.hop1.fwd.W");
  const Tensor& wb = f.params.get("enc.hop1.bwd.W");
  // Node 1's forward neighborhood is empty; node 0's forward neighbor is 1.
  const Row fwd0 = relu(vec_mat(concat(a0, a1), wf));
  const Row fwd1 = relu(vec_mat(concat(a1, Row(3, 0.0)), wf));
  // Node 1 is directed to by node 0, so its backward aggregate is a_0.
  const Row bwd0 = relu(vec_mat(concat(a0, Row(3, 0.0)), wb));
  const Row bwd1 = relu(vec_mat(concat(a1, a0), wb));
  const Row r0 = row_of(z, 0), r1 = row_of(z, 1);
  const Row e0 = concat(fwd0, bwd0), e1 = concat(fwd1, bwd1);
  for (std::size_t i = 0; i < e0.size(); ++i) {
    EXPECT_NEAR(r0[i], e0[i], 1e-14);
    EXPECT_NEAR(r1[i], e1[i], 1e-14);
  }
}

TEST(EncodeNodes, HopsPastTenReuseHopTenParameters) {
  EncoderConfig c = small_config(AggregatorKind::pooling, 12);
  Fixture f(c);
  for (Direction d : {Direction::fwd, Direction::bwd}) {
    EXPECT_EQ(c.hop_prefix(11, d), c.hop_prefix(10, d));
    EXPECT_EQ(c.hop_prefix(12, d), c.hop_prefix(10, d));
    EXPECT_EQ(&f.params.get(c.hop_prefix(12, d) + ".W"), &f.params.get("enc.hop10." + std::string(d == Direction::fwd ? "fwd" : "bwd") + ".W"));
  }
  EXPECT_FALSE(f.params.contains("enc.hop11.fwd.W"));
  std::size_t hop_weights = 0;
  for (const auto& e : f.params.entries())
    if (e.name.starts_with("enc.hop") && e.name.ends_with(".W") && e.name.find("pool") == std::string::npos)
      ++hop_weights;
  EXPECT_EQ(hop_weights, 20u);
  // A hop-12 encoding runs and differs from a hop-10 one.
  Rng rng(2);
  DirectedGraph g = random_graph(rng, 6, 0.3);
  const Tensor z12 = f.z(g);
  f.cfg.hops = 10;
  EXPECT_NE(f.z(g).data, z12.data);
}

TEST(EncodeNodes, SharedDirectionWeightsUseOneParameterSet) {
  EncoderConfig c = small_config();
  c.share_direction_weights = true;
  Fixture f(c);
  EXPECT_TRUE(f.params.contains("enc.hop1.shared.W"));
  EXPECT_FALSE(f.params.contains("enc.hop1.fwd.W"));
}

TEST(EncodeNodes, PermutingEdgeOrderIsBitIdentical) {
  for (AggregatorKind kind : {AggregatorKind::mean, AggregatorKind::pooling}) {
    Fixture f(small_config(kind, 3));
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
      DirectedGraph g = random_graph(rng, 8, 0.35);
      std::vector<Edge> edges = g.edges();
      rng.shuffle(edges);
      DirectedGraph h(g.attrs(), edges);
      EXPECT_EQ(f.z(g).data, f.z(h).data);
    }
  }
}

TEST(EncodeNodes, LstmAggregatorReproducibleUnderFixedSeed) {
  Fixture f(small_config(AggregatorKind::lstm, 2));
  Rng rng(6);
  DirectedGraph g = random_graph(rng, 7, 0.4);
  EXPECT_EQ(f.z(g, 17).data, f.z(g, 17).data);
}

TEST(EncodeNodes, LocalityBeyondKHops) {
  for (AggregatorKind kind : {AggregatorKind::mean, AggregatorKind::pooling, AggregatorKind::lstm}) {
    const std::size_t K = 2;
    Fixture f(small_config(kind, K));
    Rng rng(55);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
      DirectedGraph g = random_graph(rng, 12, 0.1);
      const NodeId v = rng.below(g.num_nodes());
      const auto df = distances(g, v, true), db = distances(g, v, false);
      std::vector<NodeId> far;
      for (NodeId u = 0; u < g.num_nodes(); ++u)
        if (df[u] > K && db[u] > K) far.push_back(u);
      if (far.size() < 2) continue;
      // Re-attribute one far node and add an edge between two far nodes.
      std::vector<Attr> attrs = g.attrs();
      attrs[far[0]] = {"h", "g"};
      std::vector<Edge> edges = g.edges();
      if (std::find(edges.begin(), edges.end(), Edge{far[0], far[1]}) == edges.end()) edges.push_back({far[0], far[1]});
      DirectedGraph edited(attrs, edges);
      // The LSTM aggregator consumes one draw per non-empty neighborhood, so
      // only the deterministic aggregators can be compared under edits that
      // add neighborhoods; for LSTM the edit is attribute-only.
      if (kind == AggregatorKind::lstm) edited = DirectedGraph(attrs, g.edges());
      EXPECT_EQ(row_of(f.z(g), v), row_of(f.z(edited), v)) << to_string(kind);
      ++checked;
    }
    EXPECT_GT(checked, 10);
  }
}

TEST(EncodeNodes, BiDirectionReducesToForwardOnly) {
  EncoderConfig bi = small_config(AggregatorKind::mean, 3);
  Fixture f(bi);
  EncoderConfig fwd = bi;
  fwd.direction = DirectionMode::fwd;
  Rng rng(8);
  DirectedGraph g = random_graph(rng, 7, 0.3);
  Tape t1(false), t2(false);
  Rng r1(0), r2(0);
  const Tensor zb = encode_nodes(t1, g, f.vocab, f.params, bi, r1).z.value();
  const Tensor zf = encode_nodes(t2, g, f.vocab, f.params, fwd, r2).z.value();
  ASSERT_EQ(zf.cols() * 2, zb.cols());
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    for (std::size_t j = 0; j < zf.cols(); ++j) EXPECT_EQ(zb(v, j), zf(v, j));
  // Zeroed backward parameters leave a zero backward half.
  for (auto& e : f.params.entries())
    if (e.name.find(".bwd.") != std::string::npos) std::fill(e.value.data.begin(), e.value.data.end(), 0.0);
  const Tensor zz = f.z(g);
  for (NodeId v = 0; v < g.num_nodes(); ++v)
    for (std::size_t j = 0; j < zf.cols(); ++j) {
      EXPECT_EQ(zz(v, j), zf(v, j));
      EXPECT_EQ(zz(v, zf.cols() + j), 0.0);
    }
}

TEST(GraphEmbeddingPooling, SingleNodeIsDenseOutput) {
  Fixture f(small_config());
  DirectedGraph g({{"a"}}, {});
  Tape tape(false);
  Rng rng(0);
  NodeEmbeddings z = encode_nodes(tape, g, f.vocab, f.params, f.cfg, rng);
  const Row out = graph_embedding_pooling(z, f.params, f.cfg).vec.value().data;
  EXPECT_EQ(out, relu(add_vec(vec_mat(z.z.value().data, f.params.get("enc.graph.W")), f.params.get("enc.graph.b"))));
}

TEST(GraphEmbeddingPooling, DuplicateRowLeavesMaxUnchanged) {
  Fixture f(small_config());
  Rng rng(4);
  Tape tape(false);
  Tensor z = uniform_tensor(Shape{4, 8}, 1.0, rng);
  const Row base = graph_embedding_pooling({tape.constant(z)}, f.params, f.cfg).vec.value().data;
  Tensor dup(Shape{5, 8});
  std::copy(z.data.begin(), z.data.end(), dup.data.begin());
  std::copy(z.data.begin() + 8, z.data.begin() + 16, dup.data.begin() + 32);
  EXPECT_EQ(graph_embedding_pooling({tape.constant(dup)}, f.params, f.cfg).vec.value().data, base);
}

TEST(GraphEmbeddingPooling, MatchesScalarLoopForAllPoolKinds) {
  Rng rng(5);
  for (PoolKind kind : {PoolKind::max, PoolKind::min, PoolKind::avg}) {
    EncoderConfig c = small_config();
    c.pool = kind;
    Fixture f(c);
    Tape tape(false);
    Tensor z = uniform_tensor(Shape{5, 8}, 1.0, rng);
    const Row out = graph_embedding_pooling({tape.constant(z)}, f.params, f.cfg).vec.value().data;
    std::vector<Row> dense;
    for (std::size_t r = 0; r < 5; ++r)
      dense.push_back(relu(add_vec(vec_mat(row_of(z, r), f.params.get("enc.graph.W")), f.params.get("enc.graph.b"))));
    for (std::size_t j = 0; j < out.size(); ++j) {
      double expect = dense[0][j];
      for (std::size_t r = 1; r < 5; ++r) {
        if (kind == PoolKind::max) expect = std::max(expect, dense[r][j]);
        if (kind == PoolKind::min) expect = std::min(expect, dense[r][j]);
        if (kind == PoolKind::avg) expect += dense[r][j];
      }
      if (kind == PoolKind::avg) expect /= 5;
      EXPECT_NEAR(out[j], expect, 1e-14);
    }
  }
}

TEST(GraphEmbeddingSupernode, SingleNodeMatchesScalarLoop) {
  EncoderConfig c = small_config(AggregatorKind::mean, 2);
  c.graph_embedding = GraphEmbeddingKind::supernode;
  Fixture f(c);
  DirectedGraph g({{"d"}}, {});
  Tape tape(false);
  Rng rng(0);
  const Row got = graph_embedding_supernode(tape, g, f.vocab, f.params, f.cfg, rng).vec.value().data;
  // Node 0 -> supernode s. Forward: s has no out-neighbors, 0 has s.
  // Backward: s has 0, node 0 has none.
  const Row a0 = f.embed_row("d"), as = f.embed_row("<SUPER>");
  Row expect;
  for (const char* dir : {"fwd", "bwd"}) {
    const bool fwd = std::string(dir) == "fwd";
    Row h0 = a0, hs = as;
    for (int k = 1; k <= 2; ++k) {
      const Tensor& w = f.params.get("enc.hop" + std::to_string(k) + "." + dir + ".W");
      const Row zero(h0.size(), 0.0);
      const Row n0 = relu(vec_mat(concat(h0, fwd ? hs : zero), w));
      const Row ns = relu(vec_mat(concat(hs, fwd ? zero : h0), w));
      h0 = n0;
      hs = ns;
    }
    expect = concat(expect, hs);
  }
  ASSERT_EQ(got.size(), expect.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expect[i], 1e-14);
}

TEST(GraphEmbeddingSupernode, ShapeIsOneRowOfNodeDim) {
  EncoderConfig c = small_config(AggregatorKind::pooling, 3);
  c.graph_embedding = GraphEmbeddingKind::supernode;
  Fixture f(c);
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    DirectedGraph g = random_graph(rng, 1 + rng.below(9), 0.3);
    Tape tape(false);
    Rng r(0);
    EncodedGraph enc = encode_graph(tape, g, f.vocab, f.params, f.cfg, r);
    EXPECT_EQ(enc.graph.vec.value().shape, (Shape{1, c.node_dim()}));
    EXPECT_EQ(enc.nodes.z.rows(), g.num_nodes());
  }
}

TEST(GraphEmbeddingSupernode, OriginalNodesChangeOnlyThroughSupernodeEdges) {
  Fixture f(small_config(AggregatorKind::mean, 2));
  DirectedGraph g({{"a"}, {"b"}, {"c"}}, {{0, 1}, {1, 2}});
  auto [aug, s] = add_supernode(g);
  const Tensor plain = f.z(g);
  const Tensor with = f.z(aug);
  const std::size_t d = f.cfg.hidden_dim;
  // The supernode directs to nobody, so backward halves are untouched.
  for (NodeId v = 0; v < 3; ++v)
    for (std::size_t j = 0; j < d; ++j) EXPECT_EQ(with(v, d + j), plain(v, d + j));
  // Forward halves see the supernode as an extra forward neighbor. Removing
  // only the supernode edges again restores the plain encoding.
  bool any_diff = false;
  for (NodeId v = 0; v < 3; ++v)
    for (std::size_t j = 0; j < d; ++j) any_diff = any_diff || with(v, j) != plain(v, j);
  EXPECT_TRUE(any_diff);
  std::vector<Attr> attrs = aug.attrs();
  DirectedGraph stripped(attrs, g.edges());
  const Tensor back = f.z(stripped);
  for (NodeId v = 0; v < 3; ++v)
    for (std::size_t j = 0; j < 2 * d; ++j) EXPECT_EQ(back(v, j), plain(v, j));
}

TEST(EncoderGradients, EveryAttributeTokenReceivesGradient) {
  ModelConfig mc;
  mc.encoder = small_config(AggregatorKind::mean, 2);
  mc.decoder.hidden_dim = 5;
  mc.decoder.attn_dim = 4;
  DirectedGraph g({{"START", "a"}, {"b"}, {"c", "d"}, {"END", "e"}}, {{0, 1}, {1, 2}, {2, 3}, {3, 1}});
  Sample s{g, std::make_pair(NodeId{0}, NodeId{3}), {"a", "b", "e"}};
  std::vector<Sample> all{s};
  Model m(mc, build_vocabulary(all), 11);
  Tape tape;
  Rng rng(1);
  backward(m.loss(tape, s, rng, false), m.params());
  const Tensor& e = m.params().get("embed");
  for (const Attr& a : g.attrs())
    for (const auto& tok : a) {
      const std::size_t id = m.vocab().id(tok);
      double mag = 0;
      for (std::size_t j = 0; j < e.cols(); ++j) mag += std::abs(e.grad[id * e.cols() + j]);
      EXPECT_GT(mag, 0.0) << tok;
    }
}

// Full-model gradients through every encoder variant on a 3-node graph.
TEST(EncoderGradients, MatchFiniteDifferencesForEveryVariant) {
  struct Variant {
    AggregatorKind agg;
    GraphEmbeddingKind ge;
    FeatureMode feat;
  };
  const Variant variants[] = {
      {AggregatorKind::mean, GraphEmbeddingKind::pooling, FeatureMode::mean},
      {AggregatorKind::pooling, GraphEmbeddingKind::pooling, FeatureMode::mean},
      {AggregatorKind::lstm, GraphEmbeddingKind::pooling, FeatureMode::lstm},
      {AggregatorKind::mean, GraphEmbeddingKind::supernode, FeatureMode::mean},
  };
  DirectedGraph g({{"START", "0"}, {"1"}, {"END", "2"}}, {{0, 1}, {1, 2}, {2, 0}});
  Sample s{g, std::make_pair(NodeId{0}, NodeId{2}), {"0", "2"}};
  std::vector<Sample> all{s};
  for (const Variant& var : variants) {
    ModelConfig mc;
    mc.encoder.feat_dim = 3;
    mc.encoder.hidden_dim = 3;
    mc.encoder.hops = 2;
    mc.encoder.aggregator = var.agg;
    mc.encoder.graph_embedding = var.ge;
    mc.encoder.feature_mode = var.feat;
    mc.decoder.hidden_dim = 4;
    mc.decoder.attn_dim = 3;
    Model m(mc, build_vocabulary(all), 42);
    Rng brng(5);
    for (auto& e : m.params().entries())
      if (e.name.ends_with(".b"))
        for (double& x : e.value.data) x = brng.uniform(-0.3, 0.3);
    auto loss = [&] {
      Rng rng(7);
      Tape t(false);
      return m.loss(t, s, rng, true).value().item();
    };
    {
      Rng rng(7);
      Tape t;
      backward(m.loss(t, s, rng, true), m.params());
    }
    const auto worst = gradcheck::worst_gradient(m.params(), loss);
    EXPECT_LT(worst.rel_error, 1e-6) << to_string(var.agg) << "/" << to_string(var.ge) << ": " << worst.param << "["
                                     << worst.index << "] analytic " << worst.analytic << " numeric "
                                     << worst.numeric;
  }
}
