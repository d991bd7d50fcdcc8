#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "g2s/errors.hpp"
#include "g2s/graph.hpp"
#include "g2s/tensor.hpp"

namespace g2s {

struct SqlCondition {
  std::string column;
  std::string op;     // "=", ">" or "<"
  std::string value;  // placeholder token, e.g. "val0"

  friend bool operator==(const SqlCondition&, const SqlCondition&) = default;
};

struct SqlQuery {
  std::string select_column;
  std::optional<std::string> aggregation;  // count, max, min, sum, avg
  std::vector<SqlCondition> conditions;
  std::vector<std::string> logic;  // connective between consecutive conditions ("and")

  friend bool operator==(const SqlQuery&, const SqlQuery&) = default;
};

inline const std::array<std::string, 5>& sql_aggregations() {
  static const std::array<std::string, 5> a{"count", "max", "min", "sum", "avg"};
  return a;
}

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct SqlToken {
  enum Kind { word, number, string, symbol, end } kind;
  std::string text;  // words lowercased; strings without quotes
  std::size_t pos;
};

inline std::string describe(const SqlToken& t) {
  switch (t.kind) {
    case SqlToken::end: return "end of input";
    case SqlToken::string: return "string '" + t.text + "'";
    default: return "'" + t.text + "'";
  }
}

class SqlParser {
 public:
  explicit SqlParser(std::string_view text) : text_(text) { tokenize(); }

  SqlQuery parse() {
    SqlQuery q;
    expect_word("select");
    const SqlToken first = take_column({"column name", "aggregation function"});
    if (is_symbol("(")) {
      if (std::find(sql_aggregations().begin(), sql_aggregations().end(), first.text) == sql_aggregations().end()) {
        throw ParseError("unknown aggregation function '" + first.text + "' at byte " + std::to_string(first.pos) +
                             "; expected one of {count, max, min, sum, avg}",
                         first.pos);
      }
      ++i_;
      q.aggregation = first.text;
      q.select_column = take_column({"column name"}).text;
      expect_symbol(")");
    } else {
      q.select_column = first.text;
    }
    if (is_word("where")) {
      ++i_;
      q.conditions.push_back(condition());
      while (is_word("and")) {
        ++i_;
        q.logic.push_back("and");
        q.conditions.push_back(condition());
      }
      if (at().kind != SqlToken::end) fail({"AND", "end of input"});
    } else if (at().kind != SqlToken::end) {
      fail(q.aggregation ? std::vector<std::string>{"WHERE", "end of input"}
                         : std::vector<std::string>{"(", "WHERE", "end of input"});
    }
    return q;
  }

 private:
  void tokenize() {
    std::size_t p = 0;
    while (p < text_.size()) {
      const char c = text_[p];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++p;
      } else if (ident_start(c)) {
        const std::size_t s = p;
        while (p < text_.size() && ident_char(text_[p])) ++p;
        toks_.push_back({SqlToken::word, lower(text_.substr(s, p - s)), s});
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 ((c == '-' || c == '.') && p + 1 < text_.size() &&
                  std::isdigit(static_cast<unsigned char>(text_[p + 1])))) {
        const std::size_t s = p;
        ++p;
        while (p < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[p])) || text_[p] == '.')) ++p;
        toks_.push_back({SqlToken::number, std::string(text_.substr(s, p - s)), s});
      } else if (c == '\'' || c == '"') {
        const std::size_t s = p;
        const std::size_t close = text_.find(c, p + 1);
        if (close == std::string_view::npos) throw ParseError("unterminated string literal at byte " + std::to_string(s), s);
        toks_.push_back({SqlToken::string, lower(text_.substr(s + 1, close - s - 1)), s});
        p = close + 1;
      } else if (c == '(' || c == ')' || c == '=' || c == '>' || c == '<') {
        toks_.push_back({SqlToken::symbol, std::string(1, c), p});
        ++p;
      } else {
        throw ParseError("unexpected character '" + std::string(1, c) + "' at byte " + std::to_string(p), p);
      }
    }
    toks_.push_back({SqlToken::end, "", text_.size()});
  }

  const SqlToken& at() const { return toks_[i_]; }
  bool is_word(std::string_view w) const { return at().kind == SqlToken::word && at().text == w; }
  bool is_symbol(std::string_view s) const { return at().kind == SqlToken::symbol && at().text == s; }

  [[noreturn]] void fail(const std::vector<std::string>& expected) const {
    std::string set;
    for (std::size_t k = 0; k < expected.size(); ++k) set += (k ? ", " : "") + expected[k];
    throw ParseError("expected one of {" + set + "} at byte " + std::to_string(at().pos) + ", found " + describe(at()),
                     at().pos);
  }

  void expect_word(std::string_view w) {
    if (!is_word(w)) fail({upper(w)});
    ++i_;
  }

  void expect_symbol(std::string_view s) {
    if (!is_symbol(s)) fail({std::string(s)});
    ++i_;
  }

  static std::string upper(std::string_view w) {
    std::string out(w);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
  }

  static bool reserved(const std::string& w) { return w == "select" || w == "where" || w == "and"; }

  SqlToken take_column(const std::vector<std::string>& expected) {
    if (at().kind != SqlToken::word || reserved(at().text)) fail(expected);
    return toks_[i_++];
  }

  SqlCondition condition() {
    SqlCondition c;
    c.column = take_column({"column name"}).text;
    if (!(is_symbol("=") || is_symbol(">") || is_symbol("<"))) fail({"=", ">", "<"});
    c.op = toks_[i_++].text;
    const SqlToken& v = at();
    if (v.kind == SqlToken::end || v.kind == SqlToken::symbol || (v.kind == SqlToken::word && reserved(v.text))) {
      fail({"value"});
    }
    ++i_;
    c.value = placeholder(v.text);
    return c;
  }

  std::string placeholder(const std::string& literal) {
    auto it = values_.find(literal);
    if (it != values_.end()) return it->second;
    const std::string p = "val" + std::to_string(values_.size());
    values_.emplace(literal, p);
    return p;
  }

  std::string_view text_;
  std::vector<SqlToken> toks_;
  std::size_t i_ = 0;
  std::map<std::string, std::string> values_;
};

}  // namespace detail

/// Parses `SELECT [agg(]col[)] [WHERE col op val (AND col op val)*]`.
///
/// Keywords are case-insensitive, identifiers and values are lowercased, and
/// each distinct value literal becomes a placeholder val0, val1, ... in order
/// of first appearance. Errors carry the byte offset of the offending token.
inline SqlQuery parse_sql(std::string_view text) { return detail::SqlParser(text).parse(); }

/// Canonical text form; parse_sql(print_sql(q)) == q.
inline std::string print_sql(const SqlQuery& q) {
  std::string s = "SELECT ";
  s += q.aggregation ? *q.aggregation + "(" + q.select_column + ")" : q.select_column;
  for (std::size_t i = 0; i < q.conditions.size(); ++i) {
    s += i == 0 ? " WHERE " : " AND ";
    const SqlCondition& c = q.conditions[i];
    s += c.column + " " + c.op + " " + c.value;
  }
  return s;
}

inline constexpr std::string_view kSqlSeparator = "<sep>";

/// Template sequence: select [agg] <sep> column [where cond (<sep> cond)*],
/// each condition spelled as column, op, value.
inline std::vector<std::string> sql_to_sequence(const SqlQuery& q) {
  std::vector<std::string> out{"select"};
  if (q.aggregation) out.push_back(*q.aggregation);
  out.emplace_back(kSqlSeparator);
  out.push_back(q.select_column);
  for (std::size_t i = 0; i < q.conditions.size(); ++i) {
    out.emplace_back(i == 0 ? "where" : kSqlSeparator);
    out.push_back(q.conditions[i].column);
    out.push_back(q.conditions[i].op);
    out.push_back(q.conditions[i].value);
  }
  return out;
}

/// Query graph.
///
/// Nodes, in order: select, the selected column, one column node per
/// condition, the aggregation node, constraint nodes ("<op><value>", one per
/// distinct text), then one node per logical operator. Edges: select ->
/// selected column, aggregation -> selected column, condition column ->
/// its constraint, select -> each logical operator -> the condition columns
/// it joins. A lone condition has no operator node; its column hangs off the
/// select node directly. Every node but the aggregation is reachable from
/// select.
inline DirectedGraph sql_to_graph(const SqlQuery& q) {
  std::vector<Attr> attrs{{"select"}, {q.select_column}};
  std::vector<Edge> edges{{0, 1}};
  std::vector<NodeId> cond_col;
  for (const auto& c : q.conditions) {
    cond_col.push_back(attrs.size());
    attrs.push_back({c.column});
  }
  if (q.aggregation) {
    edges.push_back({attrs.size(), 1});
    attrs.push_back({*q.aggregation});
  }
  std::map<std::string, NodeId> constraint;
  for (std::size_t i = 0; i < q.conditions.size(); ++i) {
    const std::string text = q.conditions[i].op + q.conditions[i].value;
    auto it = constraint.find(text);
    if (it == constraint.end()) {
      it = constraint.emplace(text, attrs.size()).first;
      attrs.push_back({text});
    }
    edges.push_back({cond_col[i], it->second});
  }
  if (q.conditions.size() == 1) {
    edges.push_back({0, cond_col[0]});
  } else if (q.conditions.size() > 1) {
    // All connectives are AND, so one operator node covers every condition.
    const NodeId op = attrs.size();
    attrs.push_back({q.logic.empty() ? std::string("and") : q.logic.front()});
    edges.push_back({0, op});
    for (NodeId c : cond_col) edges.push_back({op, c});
  }
  return DirectedGraph(std::move(attrs), std::move(edges));
}

/// The template sequence as an edgeless graph: same tokens, no structure.
inline DirectedGraph sequence_as_edgeless_graph(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw ArgumentError("empty token sequence");
  std::vector<Attr> attrs;
  for (const auto& t : tokens) attrs.push_back({t});
  return DirectedGraph(std::move(attrs), {});
}

// ---- synthetic SQL -> description corpus -----------------------------------

inline const std::vector<std::string>& sql_columns() {
  static const std::vector<std::string> c{"company", "assets",  "sales",   "profits", "country", "year",
                                          "rank",    "name",    "team",    "score",   "points",  "position",
                                          "player",  "college", "city",    "state",   "height",  "weight",
                                          "games",   "wins"};
  return c;
}

struct SqlCorpusOptions {
  std::size_t max_conditions = 3;
  double aggregation_prob = 0.5;
};

/// Random query: distinct columns, conditions ordered by column name, values
/// drawn from a small placeholder pool and renumbered by first appearance.
inline SqlQuery random_sql_query(Rng& rng, const SqlCorpusOptions& opt = {}) {
  const auto& cols = sql_columns();
  std::vector<std::size_t> idx(cols.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  SqlQuery q;
  q.select_column = cols[idx[0]];
  if (rng.uniform() < opt.aggregation_prob) q.aggregation = sql_aggregations()[rng.below(sql_aggregations().size())];
  const std::size_t n = rng.below(opt.max_conditions + 1);
  std::vector<std::string> cond_cols;
  for (std::size_t i = 0; i < n; ++i) cond_cols.push_back(cols[idx[1 + i]]);
  std::sort(cond_cols.begin(), cond_cols.end());
  static const std::array<std::string, 3> ops{"=", ">", "<"};
  std::map<std::size_t, std::string> renumber;
  for (const auto& c : cond_cols) {
    const std::size_t raw = rng.below(n);
    auto it = renumber.find(raw);
    if (it == renumber.end()) it = renumber.emplace(raw, "val" + std::to_string(renumber.size())).first;
    q.conditions.push_back({c, ops[rng.below(ops.size())], it->second});
  }
  if (n > 1) q.logic.assign(n - 1, "and");
  return q;
}

/// Fixed-template English question for a query.
inline std::vector<std::string> describe_sql(const SqlQuery& q) {
  std::vector<std::string> out;
  if (!q.aggregation) {
    out = {"what", "is", "the", q.select_column};
  } else if (*q.aggregation == "count") {
    out = {"how", "many", q.select_column};
  } else {
    static const std::map<std::string, std::string> adj{
        {"max", "highest"}, {"min", "lowest"}, {"sum", "total"}, {"avg", "average"}};
    out = {"what", "is", "the", adj.at(*q.aggregation), q.select_column};
  }
  for (std::size_t i = 0; i < q.conditions.size(); ++i) {
    const SqlCondition& c = q.conditions[i];
    out.emplace_back(i == 0 ? "when" : "and");
    out.push_back(c.column);
    out.emplace_back("is");
    if (c.op == "=") {
      out.emplace_back("equal");
      out.emplace_back("to");
    } else {
      out.emplace_back(c.op == ">" ? "greater" : "less");
      out.emplace_back("than");
    }
    out.push_back(c.value);
  }
  out.emplace_back("?");
  return out;
}

/// Graph -> description samples, or the edgeless template-sequence graph when
/// `edgeless_sequence` is set.
inline std::vector<Sample> sql_samples(std::span<const SqlQuery> queries, bool edgeless_sequence = false) {
  std::vector<Sample> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    DirectedGraph g = edgeless_sequence ? sequence_as_edgeless_graph(sql_to_sequence(q)) : sql_to_graph(q);
    out.push_back(Sample{std::move(g), std::nullopt, describe_sql(q)});
  }
  return out;
}

inline std::vector<SqlQuery> random_sql_queries(std::size_t count, Rng& rng, const SqlCorpusOptions& opt = {}) {
  std::vector<SqlQuery> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_sql_query(rng, opt));
  return out;
}

}  // namespace g2s
