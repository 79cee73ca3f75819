// ltt: corpus ingestion, training, evaluation, sampling and inspection.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "ltt/ast.hpp"
#include "ltt/error.hpp"
#include "ltt/evaluation.hpp"
#include "ltt/minilang.hpp"
#include "ltt/models.hpp"
#include "ltt/sampler.hpp"

namespace fs = std::filesystem;
using namespace ltt;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---- ingest --------------------------------------------------------------

struct IngestArgs {
  std::string src;
  std::string out;
};

int run_ingest(const IngestArgs& a) {
  const auto files = minilang::read_source_dir(a.src);
  if (files.empty()) throw DataError("no .ml0 files under " + a.src);
  std::vector<Tree> trees;
  std::vector<std::string> sources;
  int failures = 0;
  for (const auto& f : files) {
    try {
      Tree t = minilang::parse(f.text);
      if (t.node(t.root()).children.empty()) throw ParseError("empty program");
      trees.push_back(std::move(t));
      sources.push_back(fs::relative(f.path, a.src).generic_string());
    } catch (const ParseError& e) {
      ++failures;
      std::cerr << "parse failure: " << f.path << ": " << e.what() << "\n";
    }
  }
  write_corpus(a.out, trees);
  std::string listing;
  for (const auto& s : sources) listing += s + "\n";
  write_file(a.out + ".sources", listing);
  std::cout << "ingested " << trees.size() << " programs, " << failures << " failures\n";
  return kOk;
}

// ---- split ---------------------------------------------------------------

struct SplitArgs {
  std::string corpus;
  std::string fractions = "0.7,0.1,0.2";
  std::uint64_t seed = 1;
  std::string prefix;
  std::string authors;
};

int run_split(const SplitArgs& a) {
  std::vector<double> f;
  for (const auto& s : split_list(a.fractions, ',')) {
    try {
      f.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw UsageError("bad fraction '" + s + "'");
    }
  }
  if (f.size() != 3) throw UsageError("--fractions needs three values (train,valid,test)");
  for (double v : f) {
    if (v < 0) throw UsageError("fractions must be non-negative");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) throw UsageError("fractions must sum to 1");

  const auto trees = read_corpus(a.corpus);
  const std::size_t n = trees.size();
  std::vector<int> assignment(n, 2);

  // Groups of programs that must land in the same split.
  std::vector<std::vector<std::size_t>> groups;
  if (!a.authors.empty()) {
    const auto sources = split_list(read_file(a.corpus + ".sources"), '\n');
    if (sources.size() != n) throw DataError(a.corpus + ".sources does not match the corpus");
    std::map<std::string, std::string> author_of;
    for (const auto& line : split_list(read_file(a.authors), '\n')) {
      auto tab = line.find('\t');
      if (tab == std::string::npos) throw DataError("bad author line: " + line);
      author_of[line.substr(0, tab)] = line.substr(tab + 1);
    }
    std::map<std::string, std::vector<std::size_t>> by_author;
    for (std::size_t i = 0; i < n; ++i) {
      auto it = author_of.find(sources[i]);
      by_author[it == author_of.end() ? "?" + sources[i] : it->second].push_back(i);
    }
    for (auto& [name, ids] : by_author) groups.push_back(std::move(ids));
  } else {
    for (std::size_t i = 0; i < n; ++i) groups.push_back({i});
  }
  std::mt19937_64 rng(a.seed);
  shuffle_in_place(groups, rng);
  const std::size_t n_train = static_cast<std::size_t>(std::llround(f[0] * n));
  const std::size_t n_valid = static_cast<std::size_t>(std::llround(f[1] * n));
  std::size_t placed = 0;
  for (const auto& g : groups) {
    const int split = placed < n_train ? 0 : placed < n_train + n_valid ? 1 : 2;
    for (std::size_t i : g) assignment[i] = split;
    placed += g.size();
  }
  const char* names[3] = {"train", "valid", "test"};
  for (int s = 0; s < 3; ++s) {
    std::vector<Tree> part;
    for (std::size_t i = 0; i < n; ++i) {
      if (assignment[i] == s) part.push_back(trees[i]);
    }
    write_corpus(a.prefix + "." + names[s] + ".asts.jsonl", part);
    std::cout << names[s] << ": " << part.size() << "\n";
  }
  return kOk;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string variant;
  std::string train;
  std::string valid;
  std::vector<std::string> universe;
  std::string config;
  std::string out;
  std::string history;
  bool checkpoint = false;
  std::optional<int> dim, epochs, latent_states;
  std::optional<std::uint64_t> seed;
  std::optional<double> pi, alpha;
  bool nce = false;
};

int run_train(const TrainArgs& a) {
  TrainConfig config;
  bool latent_from_config = false;
  if (!a.config.empty()) {
    const std::string text = read_file(a.config);
    config = TrainConfig::from_text(text);
    latent_from_config = text.find("latent_states") != std::string::npos;
  }
  if (!a.variant.empty()) config.variant = a.variant;
  if (!is_known_variant(config.variant)) {
    throw UsageError("unknown variant '" + config.variant + "'");
  }
  if (a.dim) config.dim = *a.dim;
  if (a.epochs) config.epochs = *a.epochs;
  if (a.seed) config.seed = *a.seed;
  if (a.pi) config.pi = *a.pi;
  if (a.alpha) config.alpha = *a.alpha;
  if (a.nce) config.use_nce = true;
  if (a.latent_states) {
    config.latent_states = *a.latent_states;
  } else if (is_latent_variant(config.variant) && !latent_from_config) {
    config.latent_states = 32;
  }
  config.validate();

  const auto train = read_corpus(a.train);
  const auto valid = a.valid.empty() ? std::vector<Tree>{} : read_corpus(a.valid);
  std::vector<Tree> universe;
  for (const auto& u : a.universe) {
    auto more = read_corpus(u);
    universe.insert(universe.end(), std::make_move_iterator(more.begin()),
                    std::make_move_iterator(more.end()));
  }
  TrainSummary summary;
  AnyModel model = train_model(config, train, valid, universe, &summary);
  const bool keep_optimizer = a.checkpoint && model.is_tree_model() && !summary.optimizer.r.empty();
  save_model(model, a.out, keep_optimizer ? &summary.optimizer : nullptr);
  if (!a.history.empty()) {
    std::ostringstream os;
    os << "epoch\ttrain_nats\tvalid_bits_per_token\tpi\talpha\n";
    for (const auto& h : summary.history) {
      os << h.epoch << "\t" << h.train_nats << "\t" << h.valid_bits_per_token << "\t" << h.pi
         << "\t" << h.alpha << "\n";
    }
    write_file(a.history, os.str());
  }
  std::cout << "trained " << model.variant() << " on " << train.size() << " programs -> "
            << a.out << "\n";
  return kOk;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string corpus;
  std::string report;
  int threads = 0;
};

int run_eval(const EvalArgs& a) {
  const AnyModel model = load_model(a.model);
  const auto corpus = read_corpus(a.corpus);
  if (corpus.empty()) throw DataError("empty evaluation corpus " + a.corpus);
  const EvalReport report = eval_corpus(model, corpus, a.threads);
  if (!a.report.empty()) write_file(a.report, report.to_json());
  std::cout << report.to_table();
  if (!std::isfinite(report.total_bits)) {
    std::cerr << "error: non-finite log probability\n";
    return kNumeric;
  }
  return kOk;
}

// ---- sample --------------------------------------------------------------

struct SampleArgs {
  std::string model;
  std::string root = "CompilationUnit";
  int n = 1;
  std::uint64_t seed = 1;
  long max_expansions = 10000;
  std::string scope;
  std::string last_tokens;
  std::string ast_out;
};

int run_sample(const SampleArgs& a) {
  const AnyModel any = load_model(a.model);
  const LttModel& model = any.tree_model();
  SampleConfig cfg;
  auto root = NodeLabel::parse(a.root);
  if (!root) throw UsageError("unknown root kind '" + a.root + "'");
  cfg.root = *root;
  cfg.seed = a.seed;
  cfg.max_expansions = a.max_expansions;
  // --scope "int:n,int[]:arr": declaration order, most recent last.
  const auto vars = split_list(a.scope, ',');
  for (std::size_t i = 0; i < vars.size(); ++i) {
    auto colon = vars[i].rfind(':');
    if (colon == std::string::npos) throw UsageError("--scope entries look like type:name");
    VariableFeatureVector v;
    v.type = vars[i].substr(0, colon);
    v.identifier = vars[i].substr(colon + 1);
    v.decl_rank = static_cast<int>(vars.size() - 1 - i);
    v.assign_rank = v.decl_rank;
    cfg.initial_scope.push_back(v);
  }
  cfg.initial_last_tokens = split_list(a.last_tokens, ' ');
  if (cfg.initial_last_tokens.size() > static_cast<std::size_t>(kLastTokens)) {
    cfg.initial_last_tokens.erase(cfg.initial_last_tokens.begin(),
                                  cfg.initial_last_tokens.end() - kLastTokens);
  }
  cfg.validate();
  if (a.n < 1) throw UsageError("--n must be at least 1");
  std::mt19937_64 rng(cfg.seed);
  std::vector<Tree> trees;
  for (int i = 0; i < a.n; ++i) {
    SampleResult r = sample_program(model, cfg, rng);
    std::cout << r.text << "\n";
    trees.push_back(r.tree.without_annotations());
  }
  if (!a.ast_out.empty()) write_corpus(a.ast_out, trees);
  return kOk;
}

// ---- inspect -------------------------------------------------------------

struct InspectArgs {
  std::string model;
  std::string kind;
  int top = 5;
  std::string neighbors;
  int k = 5;
};

void print_neighbors(const ParamStore& params, const std::string& key, int k) {
  auto id = params.objects().find(key);
  if (!id) throw UsageError("no object '" + key + "' in the model vocabulary");
  auto norm = [&](int i) {
    double s = 0.0;
    for (double v : params.row(i)) s += v * v;
    return std::sqrt(s);
  };
  const double n0 = norm(*id);
  std::vector<std::pair<double, int>> sims;
  for (int i = 0; i < static_cast<int>(params.objects().size()); ++i) {
    if (i == *id) continue;
    double dot = 0.0;
    auto a = params.row(*id), b = params.row(i);
    for (std::size_t d = 0; d < a.size(); ++d) dot += a[d] * b[d];
    const double denom = n0 * norm(i);
    sims.push_back({denom > 0 ? dot / denom : 0.0, i});
  }
  std::stable_sort(sims.begin(), sims.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  std::cout << "nearest neighbors of " << key << ":\n";
  for (int i = 0; i < k && i < static_cast<int>(sims.size()); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%8.4f  ", sims[i].first);
    std::cout << "  " << buf << params.objects().key(sims[i].second) << "\n";
  }
}

int run_inspect(const InspectArgs& a) {
  const AnyModel any = load_model(a.model);
  std::cout << "variant " << any.variant() << "\n";
  if (const auto* m = std::get_if<LttModel>(&any.model)) {
    std::cout << "objects " << m->params.objects().size() << ", D = " << m->params.dim()
              << ", pi = " << m->smoothing.pi << ", alpha = " << m->smoothing.alpha << "\n";
    for (const auto& row : m->support.rows()) {
      if (!a.kind.empty() && row.parent.name() != a.kind) continue;
      std::vector<std::size_t> order(row.tuples.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](auto x, auto y) { return row.counts[x] > row.counts[y]; });
      std::cout << row.parent.name() << " (" << row.tuples.size() << " tuples, " << row.total
                << " observations)\n";
      for (int i = 0; i < a.top && i < static_cast<int>(order.size()); ++i) {
        std::cout << "  " << row.counts[order[i]] << "  " << row.tuples[order[i]] << "\n";
      }
    }
    if (!a.neighbors.empty()) print_neighbors(m->params, a.neighbors, a.k);
  } else if (const auto* m = std::get_if<LblNgramModel>(&any.model)) {
    std::cout << "vocabulary " << m->vocab.size() << "\n";
    if (!a.neighbors.empty()) print_neighbors(m->params, a.neighbors, a.k);
  } else if (const auto* m = std::get_if<LblHmmModel>(&any.model)) {
    std::cout << "vocabulary " << m->vocab.size() << ", states " << m->states() << "\n";
    if (!a.neighbors.empty()) print_neighbors(m->params, a.neighbors, a.k);
  } else if (const auto* m = std::get_if<NgramModel>(&any.model)) {
    std::cout << "vocabulary " << m->vocab.size() << ", contexts " << m->counts.size()
              << ", alpha = " << m->alpha << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-traversal language models for source code"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Parse a directory of .ml0 files into a corpus");
  c_ingest->add_option("src", ingest.src, "Source directory")->required();
  c_ingest->add_option("-o,--out", ingest.out, "Output .asts.jsonl file")->required();

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Seeded train/valid/test partition");
  c_split->add_option("corpus", split.corpus, "Corpus file")->required();
  c_split->add_option("--fractions", split.fractions, "train,valid,test fractions");
  c_split->add_option("--seed", split.seed, "Random seed");
  c_split->add_option("-o,--out-prefix", split.prefix, "Output prefix")->required();
  c_split->add_option("--authors", split.authors,
                      "path<TAB>author file; keeps each author's programs together");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a model variant");
  c_train->add_option("--variant", train.variant, "Model variant");
  c_train->add_option("--train", train.train, "Training corpus")->required();
  c_train->add_option("--valid", train.valid, "Validation corpus (grid search, early stopping)");
  c_train->add_option("--universe", train.universe, "Extra corpora whose tokens widen the vocabulary");
  c_train->add_option("--config", train.config, "key = value config file");
  c_train->add_option("-o,--out", train.out, "Model file")->required();
  c_train->add_option("--history", train.history, "Per-epoch statistics (TSV)");
  c_train->add_flag("--checkpoint", train.checkpoint, "Store optimizer accumulators");
  c_train->add_option("--dim", train.dim, "Embedding dimension");
  c_train->add_option("--epochs", train.epochs, "Training epochs");
  c_train->add_option("--seed", train.seed, "Random seed");
  c_train->add_option("--latent-states", train.latent_states, "Latent states K");
  c_train->add_option("--pi", train.pi, "Smoothing weight without validation data");
  c_train->add_option("--alpha", train.alpha, "Additive smoothing without validation data");
  c_train->add_flag("--nce", train.nce, "Train with noise-contrastive estimation");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Held-out log probability per token");
  c_eval->add_option("--model", eval.model, "Model file")->required();
  c_eval->add_option("--corpus", eval.corpus, "Corpus file")->required();
  c_eval->add_option("--report", eval.report, "Write the JSON report here");
  c_eval->add_option("--threads", eval.threads, "Worker threads (default: LTT_THREADS or 1)");

  SampleArgs sample;
  auto* c_sample = app.add_subcommand("sample", "Sample programs from a tree model");
  c_sample->add_option("--model", sample.model, "Model file")->required();
  c_sample->add_option("--root", sample.root, "Root node kind");
  c_sample->add_option("--n", sample.n, "Number of samples");
  c_sample->add_option("--seed", sample.seed, "Random seed");
  c_sample->add_option("--max-expansions", sample.max_expansions, "Expansion cap per sample");
  c_sample->add_option("--scope", sample.scope, "Initial scope, e.g. \"int:n,int[]:arr\"");
  c_sample->add_option("--last-tokens", sample.last_tokens, "Initial token history");
  c_sample->add_option("--ast-out", sample.ast_out, "Also write samples as a corpus file");

  InspectArgs inspect;
  auto* c_inspect = app.add_subcommand("inspect", "Support tables and embedding neighbors");
  c_inspect->add_option("--model", inspect.model, "Model file")->required();
  c_inspect->add_option("--kind", inspect.kind, "Only this parent kind");
  c_inspect->add_option("--top", inspect.top, "Tuples per kind");
  c_inspect->add_option("--neighbors", inspect.neighbors, "Object key, e.g. tok:i");
  c_inspect->add_option("--k", inspect.k, "Number of neighbors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*c_ingest) return run_ingest(ingest);
    if (*c_split) return run_split(split);
    if (*c_train) return run_train(train);
    if (*c_eval) return run_eval(eval);
    if (*c_sample) return run_sample(sample);
    if (*c_inspect) return run_inspect(inspect);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kData;
  } catch (const StructuralError& e) {
    std::cerr << "structural error: " << e.what() << "\n";
    return kData;
  } catch (const ModelingError& e) {
    std::cerr << "modeling error: " << e.what() << "\n";
    return kNumeric;
  } catch (const RejectionError& e) {
    std::cerr << "sampling rejected: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}
