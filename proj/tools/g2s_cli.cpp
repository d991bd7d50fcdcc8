// Command-line front end: dataset generation, training, evaluation,
// inference and SQL conversion.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "g2s/g2s.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kSplits[] = {"train", "dev", "test"};

fs::path split_path(const fs::path& dir, const std::string& split) { return dir / (split + ".jsonl"); }

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw g2s::ArgumentError("cannot write " + p.string());
  return out;
}

std::string join(const std::vector<std::string>& toks) {
  std::string s;
  for (std::size_t i = 0; i < toks.size(); ++i) s += (i ? " " : "") + toks[i];
  return s;
}

// ---- gen-data ---------------------------------------------------------------

struct GenOptions {
  std::string family = "sp-s";
  std::uint64_t seed = 1;
  std::string out;
  std::optional<std::size_t> graph_size, min_path_len, train, dev, test;
  std::size_t min_degree = 1;
  std::size_t max_degree = 3;
  std::size_t max_conditions = 3;
};

void write_split_files(const fs::path& dir, const g2s::Dataset& d) {
  const std::vector<const std::vector<g2s::Sample>*> parts{&d.train, &d.dev, &d.test};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::ofstream out = open_out(split_path(dir, kSplits[i]));
    g2s::write_samples(out, *parts[i]);
  }
}

int gen_data(const GenOptions& o) {
  const fs::path dir(o.out);
  json manifest{{"family", o.family}, {"seed", o.seed}, {"files", {"train.jsonl", "dev.jsonl", "test.jsonl"}}};
  if (o.family == "sql") {
    // Synthetic SQL -> English question corpus.
    g2s::SqlCorpusOptions copt;
    copt.max_conditions = o.max_conditions;
    const std::size_t counts[] = {o.train.value_or(500), o.dev.value_or(100), o.test.value_or(100)};
    const g2s::Rng master(o.seed);
    g2s::Dataset d;
    std::vector<g2s::Sample>* parts[] = {&d.train, &d.dev, &d.test};
    std::ofstream sql_out = open_out(dir / "queries.sql");
    for (std::size_t i = 0; i < 3; ++i) {
      g2s::Rng rng = master.derive(i);
      const auto qs = g2s::random_sql_queries(counts[i], rng, copt);
      *parts[i] = g2s::sql_samples(qs);
      for (const auto& q : qs) sql_out << g2s::print_sql(q) << '\n';
    }
    write_split_files(dir, d);
    manifest["counts"] = {counts[0], counts[1], counts[2]};
    manifest["max_conditions"] = o.max_conditions;
  } else {
    const g2s::Family fam = g2s::parse_family(o.family);
    g2s::DatasetSpec spec;
    switch (fam) {
      case g2s::Family::sp_s: spec = g2s::DatasetSpec::sp_s(); break;
      case g2s::Family::sp_l: spec = g2s::DatasetSpec::sp_l(); break;
      case g2s::Family::babi19: spec = g2s::DatasetSpec::babi19(); break;
      default: spec = g2s::DatasetSpec::sdp(fam); break;
    }
    spec.seed = o.seed;
    if (o.graph_size) spec.graph_size = *o.graph_size;
    if (o.min_path_len) spec.min_path_len = *o.min_path_len;
    if (o.train) spec.train = *o.train;
    if (o.dev) spec.dev = *o.dev;
    if (o.test) spec.test = *o.test;
    spec.min_out_degree = o.min_degree;
    spec.max_out_degree = o.max_degree;
    write_split_files(dir, g2s::generate_dataset(spec));
    manifest["family"] = g2s::to_string(fam);
    manifest["graph_size"] = spec.graph_size;
    manifest["min_path_len"] = spec.min_path_len;
    manifest["counts"] = {spec.train, spec.dev, spec.test};
    manifest["out_degree"] = {spec.min_out_degree, spec.max_out_degree};
  }
  open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
  std::cerr << "wrote " << (dir / "{train,dev,test}.jsonl").string() << " and manifest.json\n";
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::string config;
  std::string out;
  std::string log;
  std::optional<std::size_t> max_epochs;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

g2s::TrainConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw g2s::ArgumentError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw g2s::ArgumentError("config " + path + " is not valid JSON: " + e.what());
  }
  return j.get<g2s::TrainConfig>();
}

int train(const TrainOptions& o) {
  const fs::path dir(o.data);
  g2s::TrainConfig cfg = load_config(o.config);
  if (o.max_epochs) cfg.max_epochs = *o.max_epochs;
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  const auto train_set = g2s::parse_graph_file(split_path(dir, "train").string());
  const auto dev_set = g2s::parse_graph_file(split_path(dir, "dev").string());
  const fs::path ckpt = o.out.empty() ? dir / "model.ckpt" : fs::path(o.out);
  const fs::path log_path = o.log.empty() ? dir / "metrics.jsonl" : fs::path(o.log);
  std::ofstream log = open_out(log_path);
  const auto result = g2s::train(cfg, train_set, dev_set, [&](const g2s::EpochLog& e) {
    log << json(e).dump() << '\n' << std::flush;
    if (!o.quiet) {
      std::cerr << "epoch " << e.epoch << "  loss " << std::fixed << std::setprecision(4) << e.train_loss << "  dev "
                << e.dev_metric << "  " << std::setprecision(1) << e.wall_time << "s\n";
      std::cerr.unsetf(std::ios::floatfield);
    }
  });
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  g2s::save_checkpoint(ckpt.string(), result.best);
  std::cerr << "stopped (" << result.stop_reason << "); best dev " << result.best.best_dev_metric << " at epoch "
            << result.best.epoch << "; checkpoint " << ckpt.string() << "\n";
  return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalOptions {
  std::string data;
  std::string checkpoint;
  std::vector<std::string> splits{"test"};
  std::optional<std::size_t> beam;
};

int eval(const EvalOptions& o) {
  const fs::path dir(o.data);
  const fs::path ckpt_path = o.checkpoint.empty() ? dir / "model.ckpt" : fs::path(o.checkpoint);
  const g2s::Checkpoint ck = g2s::load_checkpoint(ckpt_path.string());
  const g2s::Model model = ck.model();
  const std::size_t beam = o.beam.value_or(ck.config.beam);
  const bool bleu = ck.config.task == g2s::Task::bleu;
  std::cout << std::left << std::setw(8) << "split" << std::setw(10) << "samples" << std::setw(16) << "path_accuracy";
  if (bleu) std::cout << "bleu4";
  std::cout << '\n';
  for (const auto& split : o.splits) {
    const auto samples = g2s::parse_graph_file(split_path(dir, split).string());
    if (samples.empty()) throw g2s::ArgumentError("split " + split + " is empty");
    const auto preds = g2s::decode_all(model, samples, beam, ck.max_decode_len ? ck.max_decode_len : g2s::default_max_len(samples));
    std::vector<g2s::TokenSeq> refs;
    for (const auto& s : samples) refs.push_back(s.target);
    std::cout << std::setw(8) << split << std::setw(10) << samples.size() << std::setw(16) << std::fixed
              << std::setprecision(4) << g2s::exact_match_rate(preds, refs);
    if (bleu) std::cout << g2s::bleu4(preds, refs);
    std::cout << '\n';
  }
  return 0;
}

// ---- infer ------------------------------------------------------------------

struct InferOptions {
  std::string checkpoint;
  std::string graphs;
  std::string out;
  std::optional<std::size_t> beam;
  std::size_t max_len = 0;
};

int infer(const InferOptions& o) {
  const g2s::Checkpoint ck = g2s::load_checkpoint(o.checkpoint);
  const g2s::Model model = ck.model();
  const auto samples = g2s::parse_graph_file(o.graphs);
  std::ofstream file;
  if (!o.out.empty()) file = open_out(o.out);
  std::ostream& out = o.out.empty() ? std::cout : file;
  const std::size_t max_len = o.max_len ? o.max_len : ck.max_decode_len ? ck.max_decode_len : 100;
  for (const auto& s : samples) out << join(model.decode(s.graph, o.beam.value_or(ck.config.beam), max_len)) << '\n';
  return 0;
}

// ---- convert-sql ------------------------------------------------------------

struct ConvertOptions {
  std::string input = "-";
  std::string graphs;
  std::string sequences;
  std::string target = "sequence";
};

int convert_sql(const ConvertOptions& o) {
  std::ifstream file;
  if (o.input != "-") {
    file.open(o.input);
    if (!file) throw g2s::ArgumentError("cannot open SQL input: " + o.input);
  }
  std::istream& in = o.input == "-" ? std::cin : file;
  std::ofstream graph_file, seq_file;
  if (!o.graphs.empty()) graph_file = open_out(o.graphs);
  if (!o.sequences.empty()) seq_file = open_out(o.sequences);
  // With no output files the graph records go to stdout.
  std::ostream* graph_out = !o.graphs.empty() ? &graph_file : (o.sequences.empty() ? &std::cout : nullptr);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    g2s::SqlQuery q;
    try {
      q = g2s::parse_sql(line);
    } catch (const g2s::ParseError& e) {
      throw g2s::ParseError("line " + std::to_string(line_no) + ": " + e.what(), e.position());
    }
    const auto seq = g2s::sql_to_sequence(q);
    if (graph_out) {
      const g2s::Sample s{g2s::sql_to_graph(q), std::nullopt, o.target == "description" ? g2s::describe_sql(q) : seq};
      *graph_out << g2s::serialize_sample(s) << '\n';
    }
    if (!o.sequences.empty()) seq_file << join(seq) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-to-sequence toolkit"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenOptions gen;
  auto* g = app.add_subcommand("gen-data", "Generate a train/dev/test dataset and manifest");
  g->add_option("--family", gen.family, "sp-s, sp-l, sdp-dag, sdp-dcg, sdp-seq, babi19 or sql")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--graph-size", gen.graph_size, "Nodes per graph (places for babi19)");
  g->add_option("--min-path-len", gen.min_path_len, "Minimum shortest-path length in edges");
  g->add_option("--train", gen.train);
  g->add_option("--dev", gen.dev);
  g->add_option("--test", gen.test);
  g->add_option("--min-degree", gen.min_degree, "Minimum random out-degree")->capture_default_str();
  g->add_option("--max-degree", gen.max_degree, "Maximum random out-degree")->capture_default_str();
  g->add_option("--max-conditions", gen.max_conditions, "Most WHERE conditions (sql family)")->capture_default_str();

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a model; writes a checkpoint and a per-epoch metric log");
  t->add_option("--data", tr.data, "Dataset directory with train.jsonl and dev.jsonl")->required();
  t->add_option("--config", tr.config, "JSON training config");
  t->add_option("--out", tr.out, "Checkpoint path (default <data>/model.ckpt)");
  t->add_option("--log", tr.log, "Metric log path (default <data>/metrics.jsonl)");
  t->add_option("--max-epochs", tr.max_epochs);
  t->add_option("--seed", tr.seed);
  t->add_flag("--quiet", tr.quiet, "No per-epoch progress on stderr");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Print a metric table for dataset splits");
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint (default <data>/model.ckpt)");
  e->add_option("--split", ev.splits, "Splits to evaluate")->capture_default_str();
  e->add_option("--beam", ev.beam, "Beam width (default from the checkpoint config)");

  InferOptions inf;
  auto* i = app.add_subcommand("infer", "Decode every graph of a graph file");
  i->add_option("--checkpoint", inf.checkpoint)->required();
  i->add_option("--graphs", inf.graphs, "Graph JSONL file")->required();
  i->add_option("--out", inf.out, "Output file (default stdout)");
  i->add_option("--beam", inf.beam);
  i->add_option("--max-len", inf.max_len, "Decode length limit (default: the one stored at training time)");

  ConvertOptions cv;
  auto* c = app.add_subcommand("convert-sql", "Convert SQL lines to graph records and/or template sequences");
  c->add_option("--input", cv.input, "SQL file, one query per line ('-' for stdin)")->capture_default_str();
  c->add_option("--graphs", cv.graphs, "Graph JSONL output");
  c->add_option("--sequences", cv.sequences, "Template sequence output, one per line");
  c->add_option("--target", cv.target, "Graph record target: sequence or description")
      ->check(CLI::IsMember({"sequence", "description"}))
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (g->parsed()) return gen_data(gen);
    if (t->parsed()) return train(tr);
    if (e->parsed()) return eval(ev);
    if (i->parsed()) return infer(inf);
    if (c->parsed()) return convert_sql(cv);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 1;
}
