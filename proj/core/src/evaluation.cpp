#include "ltt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "ltt/context.hpp"
#include "ltt/error.hpp"

namespace ltt {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

ProgramScore score_ltt(const LttModel& model, const Tree& tree) {
  ProgramScore out;
  const PreparedTree prepared = model.prepare(tree);
  const auto labels = depth_first_productions(annotate_identifiers(tree));
  out.tokens = prepared.token_count;
  const std::size_t n = prepared.productions.size();
  const int K = model.latent_states();
  std::vector<double> bits(n);
  if (K == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      bits[i] = std::log2(model.smoothed_prob(prepared.productions[i], 0));
    }
  } else {
    std::vector<double> em(n * K);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < K; ++k) em[i * K + k] = std::log(model.smoothed_prob(prepared.productions[i], k));
    }
    auto fb = forward_backward(em, static_cast<int>(n), model.transitions);
    for (std::size_t i = 0; i < n; ++i) bits[i] = fb.log_conditionals[i] / kLn2;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.costs.push_back({labels[i].parent.name(), bits[i], prepared.productions[i].token_cost});
    out.bits += bits[i];
  }
  return out;
}

template <class M>
ProgramScore score_sequence(const M& model, const Tree& tree) {
  ProgramScore out;
  const auto seq = token_sequence(annotate_identifiers(tree));
  std::vector<std::string> texts;
  texts.reserve(seq.size());
  for (const auto& t : seq) texts.push_back(t.text);
  const auto bits = model.sequence_log2(texts);
  out.tokens = seq.size();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    out.costs.push_back({i < seq.size() ? seq[i].parent.name() : std::string("<end>"), bits[i], true});
    out.bits += bits[i];
  }
  return out;
}

}  // namespace

ProgramScore score_program(const AnyModel& any, const Tree& tree) {
  return std::visit(
      [&](const auto& m) -> ProgramScore {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LttModel>) return score_ltt(m, tree);
        else return score_sequence(m, tree);
      },
      any.model);
}

int env_threads() {
  const char* v = std::getenv("LTT_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min<long>(n, 256));
}

EvalReport eval_corpus(const AnyModel& model, const std::vector<Tree>& corpus, int threads) {
  if (threads <= 0) threads = env_threads();
  threads = std::max(1, std::min<int>(threads, static_cast<int>(corpus.size())));
  std::vector<ProgramScore> scores(corpus.size());
  if (threads == 1) {
    for (std::size_t i = 0; i < corpus.size(); ++i) scores[i] = score_program(model, corpus[i]);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < corpus.size(); i += threads) {
            scores[i] = score_program(model, corpus[i]);
          }
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  EvalReport r;
  r.variant = model.variant();
  std::map<std::string, KindBits> kinds;
  double ratio_sum = 0.0;
  for (const ProgramScore& s : scores) {
    ++r.program_count;
    r.token_count += static_cast<long>(s.tokens);
    r.total_bits += s.bits;
    if (s.tokens > 0) ratio_sum += s.bits / static_cast<double>(s.tokens);
    for (const PredictionCost& c : s.costs) {
      ++r.prediction_count;
      (c.token_cost ? r.token_bits : r.tree_bits) += c.bits;
      KindBits& k = kinds[c.kind];
      k.kind = c.kind;
      k.bits += c.bits;
      ++k.count;
    }
  }
  r.bits_per_token = r.token_count > 0 ? r.total_bits / static_cast<double>(r.token_count) : 0.0;
  r.mean_bits_per_token = r.program_count > 0 ? ratio_sum / static_cast<double>(r.program_count) : 0.0;
  for (auto& [name, k] : kinds) r.per_kind.push_back(k);
  std::stable_sort(r.per_kind.begin(), r.per_kind.end(),
                   [](const KindBits& a, const KindBits& b) { return a.bits < b.bits; });
  return r;
}

std::vector<BreakdownRow> breakdown_by_parent(const EvalReport& report) {
  std::vector<BreakdownRow> rows;
  for (const KindBits& k : report.per_kind) {
    const double pct = report.total_bits != 0.0 ? 100.0 * k.bits / report.total_bits : 0.0;
    rows.push_back({k.kind, pct, k.count});
  }
  return rows;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["variant"] = variant;
  j["totalBits"] = total_bits;
  j["bitsPerToken"] = bits_per_token;
  j["meanBitsPerToken"] = mean_bits_per_token;
  j["tokenBits"] = token_bits;
  j["treeBits"] = tree_bits;
  j["programCount"] = program_count;
  j["tokenCount"] = token_count;
  j["predictionCount"] = prediction_count;
  auto kinds = nlohmann::ordered_json::array();
  for (const auto& row : breakdown_by_parent(*this)) {
    const auto it = std::find_if(per_kind.begin(), per_kind.end(),
                                 [&](const KindBits& k) { return k.kind == row.kind; });
    kinds.push_back({{"kind", row.kind}, {"bits", it->bits}, {"count", row.count},
                     {"percent", row.percent}});
  }
  j["perParentKindBits"] = std::move(kinds);
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "variant            %s\n", variant.c_str());
  os << buf;
  std::snprintf(buf, sizeof buf, "programs           %ld\ntokens             %ld\n", program_count,
                token_count);
  os << buf;
  std::snprintf(buf, sizeof buf, "log2 prob          %.4f\n", total_bits);
  os << buf;
  std::snprintf(buf, sizeof buf, "bits/token         %.4f  (mean per program %.4f)\n",
                bits_per_token, mean_bits_per_token);
  os << buf;
  std::snprintf(buf, sizeof buf, "token / tree bits  %.4f / %.4f\n\n", token_bits, tree_bits);
  os << buf;
  std::snprintf(buf, sizeof buf, "%-28s %9s %8s\n", "parent kind", "share %", "count");
  os << buf;
  for (const auto& row : breakdown_by_parent(*this)) {
    std::snprintf(buf, sizeof buf, "%-28s %9.2f %8ld\n", row.kind.c_str(), row.percent, row.count);
    os << buf;
  }
  return os.str();
}

}  // namespace ltt
