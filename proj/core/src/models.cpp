#include "ltt/models.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ltt/error.hpp"

namespace ltt {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "LTTMODEL 1\n";
constexpr int kFormatVersion = 1;

std::string lbl_ngram_name(int order) { return "lbl-ngram" + std::to_string(order); }

int lbl_ngram_order(const std::string& variant) {
  const std::string prefix = "lbl-ngram";
  if (variant.rfind(prefix, 0) != 0 || variant.size() == prefix.size()) return 0;
  int n = 0;
  for (char c : variant.substr(prefix.size())) {
    if (c < '0' || c > '9') return 0;
    n = n * 10 + (c - '0');
  }
  return n;
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

class BlobWriter {
 public:
  void add(const std::string& name, const std::vector<double>& values) {
    index_[name] = {data_.size(), values.size()};
    data_.insert(data_.end(), values.begin(), values.end());
  }
  const json& index() const { return index_; }
  std::string bytes() const {
    std::string out;
    out.reserve(data_.size() * 8);
    for (double d : data_) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, 8);
      put_u64(out, bits);
    }
    return out;
  }

 private:
  std::vector<double> data_;
  json index_ = json::object();
};

class BlobReader {
 public:
  BlobReader(const json& index, std::string_view bytes) : index_(index), bytes_(bytes) {
    if (bytes.size() % 8 != 0) throw DataError("model file: truncated array section");
  }
  bool has(const std::string& name) const { return index_.contains(name); }
  std::vector<double> get(const std::string& name, std::size_t expected) const {
    if (!index_.contains(name)) throw DataError("model file: missing array " + name);
    const auto off = index_.at(name).at(0).get<std::size_t>();
    const auto count = index_.at(name).at(1).get<std::size_t>();
    if (count != expected) {
      throw DataError("model file: array " + name + " has " + std::to_string(count) +
                      " values, expected " + std::to_string(expected));
    }
    if ((off + count) * 8 > bytes_.size()) throw DataError("model file: array " + name + " out of range");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[(off + i) * 8 + b]))
                << (8 * b);
      }
      std::memcpy(&out[i], &bits, 8);
    }
    return out;
  }

 private:
  const json& index_;
  std::string_view bytes_;
};

json params_manifest(const ParamStore& p, BlobWriter& blob, const std::string& prefix) {
  blob.add(prefix + "R", p.r());
  blob.add(prefix + "b", p.b());
  blob.add(prefix + "Wcon", p.wcon());
  blob.add(prefix + "Wch", p.wch());
  return {{"dim", p.dim()},
          {"context_slots", p.context_slots()},
          {"children_slots", p.children_slots()},
          {"objects", p.objects().keys()}};
}

ParamStore params_from(const json& m, const BlobReader& blob, const std::string& prefix) {
  ParamStore p(m.at("dim").get<int>(), m.at("context_slots").get<int>(),
               m.at("children_slots").get<int>());
  for (const auto& key : m.at("objects")) p.objects().intern(key.get<std::string>());
  const std::size_t n = p.objects().size(), d = static_cast<std::size_t>(p.dim());
  p.r() = blob.get(prefix + "R", n * d);
  p.b() = blob.get(prefix + "b", n);
  p.wcon() = blob.get(prefix + "Wcon", std::size_t(p.context_slots()) * d);
  p.wch() = blob.get(prefix + "Wch", std::size_t(p.children_slots()) * d);
  return p;
}

json transitions_manifest(const TransitionModel& t, BlobWriter& blob) {
  blob.add("transition.prior_logits", t.prior_logits());
  blob.add("transition.logits", t.logits());
  return {{"states", t.states()}};
}

TransitionModel transitions_from(const json& m, const BlobReader& blob) {
  TransitionModel t(m.at("states").get<int>());
  const std::size_t K = static_cast<std::size_t>(t.states());
  t.prior_logits() = blob.get("transition.prior_logits", K);
  t.logits() = blob.get("transition.logits", K * K);
  t.refresh();
  return t;
}

json vocab_manifest(const TokenVocab& v) {
  return {{"words", v.words()}, {"counts", v.counts()}};
}

TokenVocab vocab_from(const json& m) {
  TokenVocab v;
  v.restore(m.at("words").get<std::vector<std::string>>(),
            m.at("counts").get<std::vector<long>>());
  return v;
}

NodeLabel label_from(const json& j) {
  auto label = NodeLabel::parse(j.get<std::string>());
  if (!label) throw DataError("model file: unknown node kind '" + j.get<std::string>() + "'");
  return *label;
}

json ltt_manifest(const LttModel& m, BlobWriter& blob) {
  json j;
  j["features"] = {{"hierarchy", m.features.hierarchy},
                   {"sequence", m.features.sequence},
                   {"scope", m.features.scope},
                   {"latent_states", m.features.latent_states}};
  j["parameterization"] =
      m.parameterization == Parameterization::Tabular ? "tabular" : "log-bilinear";
  j["smoothing"] = {{"pi", m.smoothing.pi}, {"alpha", m.smoothing.alpha}};
  j["params"] = params_manifest(m.params, blob, "");
  j["transitions"] = transitions_manifest(m.transitions, blob);
  json support = json::array();
  for (const auto& row : m.support.rows()) {
    support.push_back({{"parent", row.parent.name()}, {"tuples", row.tuples}, {"counts", row.counts}});
  }
  j["support"] = std::move(support);
  json stats = json::array();
  for (const auto& [label, s] : m.defaults.stats()) {
    stats.push_back({{"parent", label.name()},
                     {"tuples", s.tuples},
                     {"symbols", s.symbols},
                     {"token_only", s.token_only},
                     {"token_counts", s.token_counts},
                     {"symbol_counts", s.symbol_counts}});
  }
  j["defaults"] = {{"stats", std::move(stats)}, {"token_universe", m.defaults.token_universe()}};
  if (m.parameterization == Parameterization::Tabular) {
    std::vector<double> flat;
    for (const auto& row : m.tabular) {
      for (const auto& state : row) flat.insert(flat.end(), state.begin(), state.end());
    }
    blob.add("tabular", flat);
  }
  return j;
}

LttModel ltt_from(const json& j, const BlobReader& blob) {
  LttModel m;
  m.variant = j.at("variant").get<std::string>();
  const auto& f = j.at("features");
  m.features.hierarchy = f.at("hierarchy").get<bool>();
  m.features.sequence = f.at("sequence").get<bool>();
  m.features.scope = f.at("scope").get<bool>();
  m.features.latent_states = f.at("latent_states").get<int>();
  m.parameterization = j.at("parameterization").get<std::string>() == "tabular"
                           ? Parameterization::Tabular
                           : Parameterization::LogBilinear;
  m.smoothing = {j.at("smoothing").at("pi").get<double>(),
                 j.at("smoothing").at("alpha").get<double>()};
  m.params = params_from(j.at("params"), blob, "");
  m.transitions = transitions_from(j.at("transitions"), blob);
  for (const auto& row : j.at("support")) {
    const NodeLabel parent = label_from(row.at("parent"));
    const auto& tuples = row.at("tuples");
    const auto& counts = row.at("counts");
    if (tuples.size() != counts.size()) throw DataError("model file: support row shape mismatch");
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      m.support.observe(parent, tuples[i].get<std::string>(), counts[i].get<long>());
    }
  }
  std::map<NodeLabel, DefaultModel::Stats> stats;
  for (const auto& s : j.at("defaults").at("stats")) {
    DefaultModel::Stats st;
    st.tuples = s.at("tuples").get<long>();
    st.symbols = s.at("symbols").get<long>();
    st.token_only = s.at("token_only").get<bool>();
    st.token_counts = s.at("token_counts").get<std::map<std::string, long>>();
    st.symbol_counts = s.at("symbol_counts").get<std::map<std::string, long>>();
    stats[label_from(s.at("parent"))] = std::move(st);
  }
  m.defaults.restore(std::move(stats),
                     j.at("defaults").at("token_universe").get<std::set<std::string>>());
  if (m.parameterization == Parameterization::Tabular) {
    const std::size_t K = static_cast<std::size_t>(m.latent_states());
    std::size_t total = 0;
    for (const auto& row : m.support.rows()) total += row.tuples.size() * K;
    auto flat = blob.get("tabular", total);
    std::size_t pos = 0;
    for (const auto& row : m.support.rows()) {
      std::vector<std::vector<double>> states(K);
      for (auto& s : states) {
        s.assign(flat.begin() + pos, flat.begin() + pos + row.tuples.size());
        pos += row.tuples.size();
      }
      m.tabular.push_back(std::move(states));
    }
  }
  m.finalize_support();
  return m;
}

}  // namespace

std::string AnyModel::variant() const {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LttModel>) return m.variant;
        else if constexpr (std::is_same_v<T, NgramModel>) return "ngram" + std::to_string(m.order);
        else if constexpr (std::is_same_v<T, LblNgramModel>) return lbl_ngram_name(m.order);
        else return "lbl-hmm";
      },
      model);
}

const LttModel& AnyModel::tree_model() const {
  if (auto* m = std::get_if<LttModel>(&model)) return *m;
  throw ConfigError("variant " + variant() + " is a token-sequence model, not a tree model");
}

const std::vector<std::string>& known_variants() {
  static const std::vector<std::string> names = {
      "ngram2", "ngram3", "ngram4", "ngram5", "lbl-ngram10", "pcfg", "ltt0", "ltt-hi",
      "ltt-seq", "ltt-hiseq", "ltt-hiseq-scope", "ltt-latent", "lbl-hmm"};
  return names;
}

bool is_known_variant(const std::string& variant) {
  return ngram_order(variant) > 0 || lbl_ngram_order(variant) > 0 || variant == "pcfg" ||
         variant == "lbl-hmm" || is_ltt_variant(variant);
}

bool is_latent_variant(const std::string& variant) {
  return variant == "ltt-latent" || variant == "lbl-hmm";
}

AnyModel train_model(const TrainConfig& config, const std::vector<Tree>& train,
                     const std::vector<Tree>& valid, const std::vector<Tree>& universe,
                     TrainSummary* summary) {
  config.validate();
  const std::string& v = config.variant;
  if (!is_known_variant(v)) throw ConfigError("unknown model variant '" + v + "'");
  if (train.empty()) throw ConfigError("empty training corpus");
  TrainSummary local;
  TrainSummary& s = summary ? *summary : local;
  if (int n = ngram_order(v)) return {train_ngram(train, valid, n, config, universe)};
  if (int n = lbl_ngram_order(v)) return {train_lbl_ngram(train, valid, n, config, universe)};
  if (v == "pcfg") return {train_pcfg(train, valid, config, universe)};
  if (v == "lbl-hmm") {
    return {train_lbl_hmm(train, valid, config, universe, &s.forward_backward_calls)};
  }
  TrainResult r = train_ltt(train, valid, config, universe);
  s.best_epoch = r.best_epoch;
  s.forward_backward_calls = r.forward_backward_calls;
  s.history = std::move(r.history);
  s.optimizer = std::move(r.optimizer);
  return {std::move(r.model)};
}

std::string serialize_model(const AnyModel& any, const AdaGradState* optimizer) {
  BlobWriter blob;
  json j;
  j["format"] = "ltt-model";
  j["version"] = kFormatVersion;
  j["variant"] = any.variant();
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LttModel>) {
          j["family"] = "ltt";
          j["model"] = ltt_manifest(m, blob);
        } else if constexpr (std::is_same_v<T, NgramModel>) {
          j["family"] = "ngram";
          json counts = json::object();
          for (const auto& [ctx, c] : m.counts) counts[ctx] = {{"total", c.total}, {"next", c.next}};
          j["model"] = {{"order", m.order},
                        {"alpha", m.alpha},
                        {"vocab", vocab_manifest(m.vocab)},
                        {"counts", std::move(counts)}};
        } else if constexpr (std::is_same_v<T, LblNgramModel>) {
          j["family"] = "lbl-ngram";
          j["model"] = {{"order", m.order},
                        {"vocab", vocab_manifest(m.vocab)},
                        {"smoothing", {{"pi", m.smoothing.pi}, {"alpha", m.smoothing.alpha}}},
                        {"params", params_manifest(m.params, blob, "")}};
        } else {
          j["family"] = "lbl-hmm";
          j["model"] = {{"vocab", vocab_manifest(m.vocab)},
                        {"smoothing", {{"pi", m.smoothing.pi}, {"alpha", m.smoothing.alpha}}},
                        {"params", params_manifest(m.params, blob, "")},
                        {"transitions", transitions_manifest(m.transitions, blob)}};
        }
      },
      any.model);
  if (optimizer) {
    blob.add("adagrad.R", optimizer->r);
    blob.add("adagrad.b", optimizer->b);
    blob.add("adagrad.Wcon", optimizer->wcon);
    blob.add("adagrad.Wch", optimizer->wch);
  }
  j["arrays"] = blob.index();
  const std::string manifest = j.dump();
  std::string out(kMagic);
  put_u64(out, manifest.size());
  out += manifest;
  out += blob.bytes();
  return out;
}

AnyModel deserialize_model(const std::string& bytes) {
  if (bytes.compare(0, kMagic.size(), kMagic) != 0) {
    throw DataError("not a model file (bad magic)");
  }
  if (bytes.size() < kMagic.size() + 8) throw DataError("model file: truncated header");
  const std::uint64_t len = get_u64(bytes, kMagic.size());
  const std::size_t start = kMagic.size() + 8;
  if (len > bytes.size() - start) throw DataError("model file: truncated manifest");
  json j;
  try {
    j = json::parse(bytes.substr(start, len));
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: bad manifest: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kFormatVersion) {
      throw DataError("model file: unsupported version " + j.at("version").dump());
    }
    const std::string_view rest(bytes.data() + start + len, bytes.size() - start - len);
    BlobReader blob(j.at("arrays"), rest);
    const std::string family = j.at("family").get<std::string>();
    const json& m = j.at("model");
    if (family == "ltt") {
      json mm = m;
      mm["variant"] = j.at("variant");
      return {ltt_from(mm, blob)};
    }
    if (family == "ngram") {
      NgramModel n;
      n.order = m.at("order").get<int>();
      n.alpha = m.at("alpha").get<double>();
      n.vocab = vocab_from(m.at("vocab"));
      for (const auto& [ctx, c] : m.at("counts").items()) {
        NgramModel::Context context;
        context.total = c.at("total").get<long>();
        context.next = c.at("next").get<std::map<std::string, long>>();
        n.counts.emplace(ctx, std::move(context));
      }
      return {std::move(n)};
    }
    if (family == "lbl-ngram") {
      LblNgramModel n;
      n.order = m.at("order").get<int>();
      n.vocab = vocab_from(m.at("vocab"));
      n.smoothing = {m.at("smoothing").at("pi").get<double>(),
                     m.at("smoothing").at("alpha").get<double>()};
      n.params = params_from(m.at("params"), blob, "");
      return {std::move(n)};
    }
    if (family == "lbl-hmm") {
      LblHmmModel h;
      h.vocab = vocab_from(m.at("vocab"));
      h.smoothing = {m.at("smoothing").at("pi").get<double>(),
                     m.at("smoothing").at("alpha").get<double>()};
      h.params = params_from(m.at("params"), blob, "");
      h.transitions = transitions_from(m.at("transitions"), blob);
      return {std::move(h)};
    }
    throw DataError("model file: unknown model family '" + family + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: malformed manifest: ") + e.what());
  }
}

void save_model(const AnyModel& model, const std::string& path, const AdaGradState* optimizer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path);
  const std::string bytes = serialize_model(model, optimizer);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing model file " + path);
}

AnyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace ltt
