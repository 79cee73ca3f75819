#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "ltt/baselines.hpp"
#include "ltt/evaluation.hpp"
#include "ltt/minilang.hpp"
#include "oracles.hpp"
#include "toy_data.hpp"

using namespace ltt;

namespace {

double total_log2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

std::vector<Tree> bundled_corpus() {
  std::vector<Tree> out;
  for (const auto& f : minilang::read_source_dir(LTT_CORPUS_DIR)) out.push_back(minilang::parse(f.text));
  return out;
}

}  // namespace

TEST(Ngram, BigramCountArithmetic) {
  NgramModel m;
  m.order = 2;
  m.alpha = 1.0;
  m.fit({{"a", "b", "a", "b"}});
  ASSERT_EQ(m.vocab.size(), 3u);
  EXPECT_NEAR(m.prob({"a"}, "b"), 0.6, 1e-15);
}

TEST(Ngram, LargeAlphaIsUniform) {
  NgramModel m;
  m.order = 3;
  m.alpha = 1e12;
  m.fit({{"x", "y", "z", "x"}});
  for (const auto& w : m.vocab.words()) EXPECT_NEAR(m.prob({"x", "y"}, w), 0.25, 1e-9);
}

TEST(Ngram, UnseenContextIsUniform) {
  NgramModel m;
  m.order = 2;
  m.alpha = 0.1;
  m.fit({{"a", "b"}});
  EXPECT_NEAR(m.prob({"b"}, "b"), (0 + 0.1) / (1 + 0.3), 1e-15);  // seen context "b" -> "<s>"
  EXPECT_NEAR(m.prob({"zz"}, "a"), 1.0 / 3.0, 1e-15);
}

TEST(Ngram, SequenceIncludesEndSymbol) {
  NgramModel m;
  m.order = 2;
  m.alpha = 1.0;
  m.fit({{"a", "b", "a", "b"}});
  auto bits = m.sequence_log2({"a", "b"});
  ASSERT_EQ(bits.size(), 3u);
  // <s> -> a seen once out of 1; a -> b twice of 2; b -> <s> once of 2.
  EXPECT_NEAR(bits[0], std::log2(2.0 / 4.0), 1e-12);
  EXPECT_NEAR(bits[1], std::log2(3.0 / 5.0), 1e-12);
  EXPECT_NEAR(bits[2], std::log2(2.0 / 5.0), 1e-12);
}

TEST(Ngram, DistributionSumsToOne) {
  NgramModel m;
  m.order = 3;
  m.alpha = 0.05;
  m.fit({{"a", "b", "c", "a", "b"}, {"c", "c"}});
  for (std::vector<std::string> ctx : {std::vector<std::string>{"a", "b"}, {"<s>", "<s>"}, {"q", "c"}}) {
    double s = 0;
    for (const auto& w : m.vocab.words()) s += m.prob(ctx, w);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Pcfg, SingleProductionHasZeroBits) {
  Tree t;
  int tok = t.add_token({"x", TokenKind::Identifier});
  t.set_root(t.add_node({NodeKind::IdentifierName, Annotation::None}, {Child::token(tok)}));
  TrainConfig cfg;
  cfg.variant = "pcfg";
  LttModel m = build_pcfg({t}, cfg);
  m.smoothing = {1.0, 1e-12};
  set_pcfg_tables(m, 1e-12);
  EXPECT_NEAR(score_program(AnyModel{m}, t).bits, 0.0, 1e-9);
}

TEST(Pcfg, TwoEquiprobableTuplesCostOneBit) {
  std::vector<Tree> trees{minilang::parse_statement("x = 1;"), minilang::parse_statement("x = 2;")};
  TrainConfig cfg;
  cfg.variant = "pcfg";
  LttModel m = build_pcfg(trees, cfg);
  m.smoothing = {1.0, 0.0};
  set_pcfg_tables(m, 0.0);
  auto score = score_program(AnyModel{m}, trees[0]);
  for (const auto& c : score.costs) {
    if (c.kind == "Literal") EXPECT_NEAR(c.bits, -1.0, 1e-12);
    else EXPECT_NEAR(c.bits, 0.0, 1e-12);
  }
}

TEST(Pcfg, BundledCorpusMatchesCountOracle) {
  const auto corpus = bundled_corpus();
  TrainConfig cfg;
  cfg.variant = "pcfg";
  const double alpha = 0.1;
  LttModel m = build_pcfg(corpus, cfg);
  m.smoothing = {1.0, alpha};
  set_pcfg_tables(m, alpha);

  std::map<std::string, std::map<std::string, long>> counts;
  std::function<void(const Tree&, int, std::vector<std::pair<std::string, std::string>>*)> walk =
      [&](const Tree& t, int id, std::vector<std::pair<std::string, std::string>>* out) {
        const Node& n = t.node(id);
        std::string key;
        for (const Child& c : n.children) {
          key += c.is_token() ? "T" + t.token(c.index).text : "N" + t.node(c.index).label.name();
          key += '\x1f';
        }
        if (out) out->emplace_back(n.label.name(), key);
        else ++counts[n.label.name()][key];
        for (const Child& c : n.children) {
          if (!c.is_token()) walk(t, c.index, out);
        }
      };
  // Plain grammar: identifier scope annotations do not split rows.
  for (const Tree& t : corpus) walk(t, t.root(), nullptr);
  std::map<std::string, long> totals;
  for (const auto& [parent, row] : counts) {
    for (const auto& [k, c] : row) totals[parent] += c;
  }
  double oracle_bits = 0.0;
  for (const Tree& t : corpus) {
    std::vector<std::pair<std::string, std::string>> prods;
    walk(t, t.root(), &prods);
    for (const auto& [parent, key] : prods) {
      const double c = static_cast<double>(counts[parent][key]);
      const double s = static_cast<double>(counts[parent].size());
      oracle_bits += std::log2((c + alpha) / (static_cast<double>(totals[parent]) + alpha * s));
    }
  }
  const double model_bits = eval_corpus(AnyModel{m}, corpus, 1).total_bits;
  EXPECT_NEAR(model_bits, oracle_bits, 1e-9 * std::abs(oracle_bits));
  EXPECT_NEAR(model_bits, oracle_bits, 1e-6);
}

TEST(LblNgram, ZeroParametersAreUniform) {
  std::vector<Tree> trees{minilang::parse("fn f() { return 1; }")};
  TrainConfig cfg;
  cfg.init_scale = 0.0;
  cfg.pi = 1.0;
  auto m = build_lbl_ngram(trees, 4, cfg);
  const double V = static_cast<double>(m.vocab.size());
  for (double b : m.sequence_log2(token_texts(trees[0]))) EXPECT_NEAR(b, -std::log2(V), 1e-12);
}

TEST(LblNgram, ContextPaddingUsesBoundary) {
  std::vector<Tree> trees{minilang::parse("fn f() { }")};
  TrainConfig cfg;
  auto m = build_lbl_ngram(trees, 3, cfg);
  auto ids = m.vocab.encode(token_texts(trees[0]));
  auto fs = m.context_features(ids, 0);
  ASSERT_EQ(fs.size(), 2u);
  EXPECT_EQ(fs[0].id, m.vocab.id(kBoundary));
  fs = m.context_features(ids, 2);
  EXPECT_EQ(fs[0].id, ids[1]);
  EXPECT_EQ(fs[1].id, ids[0]);
}

TEST(LblNgram, SequenceMatchesNaiveScoring) {
  std::vector<Tree> trees{minilang::parse("fn f(int a) { return a * a + 1; }")};
  TrainConfig cfg;
  cfg.init_scale = 0.7;
  cfg.dim = 3;
  cfg.pi = 0.8;
  cfg.alpha = 0.2;
  auto m = build_lbl_ngram(trees, 3, cfg);
  const auto texts = token_texts(trees[0]);
  const auto ids = m.vocab.encode(texts);
  const auto got = m.sequence_log2(texts);
  for (std::size_t pos = 0; pos < ids.size(); ++pos) {
    std::vector<ResolvedFeature> fs;
    for (int j = 0; j < 2; ++j) {
      const long prev = static_cast<long>(pos) - 1 - j;
      fs.push_back({j, prev < 0 ? m.vocab.id(kBoundary) : ids[prev]});
    }
    auto ctx = oracle::context(m.params, fs);
    std::vector<double> scores;
    for (std::size_t w = 0; w < m.vocab.size(); ++w) scores.push_back(oracle::score(m.params, ctx, static_cast<int>(w)));
    const double base = oracle::softmax(scores)[ids[pos]];
    const double uni = (m.vocab.counts()[ids[pos]] + 0.2) / (m.vocab.total() + 0.2 * m.vocab.size());
    EXPECT_NEAR(got[pos], std::log2(0.8 * base + 0.2 * uni), 1e-12);
  }
}

TEST(LblHmm, SingleStateEqualsLblUnigram) {
  std::vector<Tree> trees{minilang::parse("fn f(int a) { return a + 2; }")};
  TrainConfig cfg;
  cfg.init_scale = 0.5;
  cfg.dim = 4;
  auto hmm = build_lbl_hmm(trees, cfg);
  auto uni = build_lbl_ngram(trees, 1, cfg);
  uni.params = hmm.params;
  const auto texts = token_texts(trees[0]);
  auto a = hmm.sequence_log2(texts), b = uni.sequence_log2(texts);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(LblHmm, FiveTokenToyMatchesPathEnumeration) {
  std::vector<Tree> trees{toy::chain_tree({"a", "b", "c", "a", "d"})};
  TrainConfig cfg;
  cfg.init_scale = 0.8;
  cfg.dim = 3;
  cfg.latent_states = 3;
  cfg.pi = 0.9;
  cfg.alpha = 0.5;
  auto m = build_lbl_hmm(trees, cfg);
  m.transitions.logits() = {0.5, -0.2, 1.0, 0.0, 0.3, -1.0, 2.0, 0.1, 0.0};
  m.transitions.prior_logits() = {0.2, -0.3, 0.4};
  m.transitions.refresh();
  const std::vector<std::string> tokens{"a", "b", "c", "a", "d"};
  const auto ids = m.vocab.encode(tokens);
  const int K = 3, N = static_cast<int>(ids.size());
  std::vector<double> em(std::size_t(N) * K);
  for (int k = 0; k < K; ++k) {
    std::vector<ResolvedFeature> fs{{0, *m.params.objects().find(latent_key(k))}};
    auto ctx = oracle::context(m.params, fs);
    std::vector<double> scores;
    for (std::size_t w = 0; w < m.vocab.size(); ++w) scores.push_back(oracle::score(m.params, ctx, static_cast<int>(w)));
    auto probs = oracle::softmax(scores);
    for (int i = 0; i < N; ++i) {
      const double uni = (m.vocab.counts()[ids[i]] + 0.5) / (m.vocab.total() + 0.5 * m.vocab.size());
      em[i * K + k] = std::log(0.9 * probs[ids[i]] + 0.1 * uni);
    }
  }
  std::vector<double> prior(K), trans(std::size_t(K) * K);
  for (int k = 0; k < K; ++k) {
    prior[k] = std::log(m.transitions.prior(k));
    for (int j = 0; j < K; ++j) trans[k * K + j] = std::log(m.transitions.prob(k, j));
  }
  auto brute = oracle::brute_force_chain(em, N, K, prior, trans);
  EXPECT_NEAR(total_log2(m.sequence_log2(tokens)) * std::log(2.0), brute.log_likelihood, 1e-9);
}

TEST(Baselines, NgramOrderParsing) {
  EXPECT_EQ(ngram_order("ngram3"), 3);
  EXPECT_EQ(ngram_order("ngram"), 0);
  EXPECT_EQ(ngram_order("lbl-hmm"), 0);
}

TEST(Baselines, TokenSequenceCarriesParents) {
  auto seq = token_sequence(minilang::parse_statement("return x;"));
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq[0].parent.kind, NodeKind::ReturnStatement);
  EXPECT_EQ(seq[1].parent.kind, NodeKind::IdentifierName);
}
