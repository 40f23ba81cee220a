#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "themealign/corpus.hpp"
#include "themealign/rng.hpp"

namespace themealign {

// The three word-level roles.
inline constexpr int kBackground = 0;
inline constexpr int kDocSpecific = 1;
inline constexpr int kThemeSpecific = 2;
inline constexpr int kNumWTopics = 3;

struct WTopicHyper {
  double eta = 0.1;    // word-distribution smoothing, shared by all three roles
  double gamma = 1.0;  // per-paragraph role-mixture smoothing
  int iterations = 200;
  int burn_in = 100;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(eta > 0.0)) throw ValidationError("wtopic: eta must be > 0");
    if (!(gamma > 0.0)) throw ValidationError("wtopic: gamma must be > 0");
    if (burn_in < 0 || iterations < burn_in)
      throw ValidationError("wtopic: need iterations >= burn_in >= 0");
  }
};

// Frequency-derived role bias for one (word, document) pair, normalized to
// sum 1. Falls back to uniform when the word is absent from the tables.
inline std::array<double, 3> compute_g(int word, int doc, const FrequencyTables& tables) {
  const double p = static_cast<double>(tables.total_paragraphs);
  const double background =
      static_cast<double>(tables.paragraph_df.at(word)) / p;
  const double doc_specific =
      static_cast<double>(tables.doc_paragraph_count(doc, word)) /
      static_cast<double>(tables.paragraphs_in_doc.at(doc));
  const double theme = static_cast<double>(tables.document_df.at(word)) /
                       static_cast<double>(tables.total_documents) *
                       (1.0 - background);
  const double total = background + doc_specific + theme;
  if (total <= 0.0) return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  return {background / total, doc_specific / total, theme / total};
}

struct WTopicState {
  // Role of each token: assignments[doc][paragraph][position].
  std::vector<std::vector<std::vector<std::uint8_t>>> assignments;

  std::vector<long long> background_word_count;  // per word
  long long background_total = 0;
  std::vector<long long> theme_word_count;  // per word
  long long theme_total = 0;
  // Document-specific counts are per document; tokens of other documents
  // never touch them.
  std::vector<std::unordered_map<int, long long>> doc_word_count;
  std::vector<long long> doc_specific_total;
  // Role counts per paragraph: paragraph_role_count[doc][paragraph][role].
  std::vector<std::vector<std::array<long long, 3>>> paragraph_role_count;
  int vocab_size = 0;

  long long doc_word(int doc, int word) const {
    const auto& table = doc_word_count.at(doc);
    auto it = table.find(word);
    return it == table.end() ? 0 : it->second;
  }
};

// Collapsed conditional over the three roles for one token, given counts
// that already exclude it. paragraph_counts are the remaining role counts of
// the token's paragraph.
inline std::array<double, 3> wtopic_conditional(
    const WTopicState& state, const std::array<double, 3>& g, int word, int doc,
    const std::array<long long, 3>& paragraph_counts, const WTopicHyper& hyper) {
  const double w_eta = static_cast<double>(state.vocab_size) * hyper.eta;
  const double par_total = static_cast<double>(paragraph_counts[0] +
                                               paragraph_counts[1] +
                                               paragraph_counts[2]);
  std::array<double, 3> word_factor = {
      (static_cast<double>(state.background_word_count[word]) + hyper.eta) /
          (static_cast<double>(state.background_total) + w_eta),
      (static_cast<double>(state.doc_word(doc, word)) + hyper.eta) /
          (static_cast<double>(state.doc_specific_total[doc]) + w_eta),
      (static_cast<double>(state.theme_word_count[word]) + hyper.eta) /
          (static_cast<double>(state.theme_total) + w_eta)};
  std::array<double, 3> probs;
  double total = 0.0;
  for (int l = 0; l < kNumWTopics; ++l) {
    const double mix = (static_cast<double>(paragraph_counts[l]) + hyper.gamma) /
                       (par_total + kNumWTopics * hyper.gamma);
    probs[l] = g[l] * word_factor[l] * mix;
    total += probs[l];
  }
  for (double& v : probs) v /= total;
  return probs;
}

// Optional replacement for the frequency-derived bias, keyed (word, doc).
using GOverride = std::function<std::array<double, 3>(int word, int doc)>;

class WTopicSampler {
 public:
  WTopicSampler(const Corpus& corpus, const Vocabulary& vocab,
                const FrequencyTables& tables, const WTopicHyper& hyper,
                GOverride g_override = {})
      : hyper_(hyper), rng_(hyper.seed) {
    hyper_.validate();
    const int num_docs = static_cast<int>(corpus.size());
    token_ids_.resize(num_docs);
    g_.resize(num_docs);
    state_.assignments.resize(num_docs);
    state_.doc_word_count.resize(num_docs);
    state_.doc_specific_total.assign(num_docs, 0);
    state_.paragraph_role_count.resize(num_docs);
    state_.vocab_size = vocab.size();
    state_.background_word_count.assign(vocab.size(), 0);
    state_.theme_word_count.assign(vocab.size(), 0);
    for (int d = 0; d < num_docs; ++d) {
      const Document& doc = corpus.documents[d];
      token_ids_[d].resize(doc.paragraphs.size());
      g_[d].resize(doc.paragraphs.size());
      state_.assignments[d].resize(doc.paragraphs.size());
      state_.paragraph_role_count[d].assign(doc.paragraphs.size(), {0, 0, 0});
      for (std::size_t t = 0; t < doc.paragraphs.size(); ++t) {
        const auto& tokens = doc.paragraphs[t].tokens;
        token_ids_[d][t].reserve(tokens.size());
        g_[d][t].reserve(tokens.size());
        for (const auto& tok : tokens) {
          const int w = vocab.find(tok.surface);
          if (w < 0)
            throw ValidationError("sampler vocabulary is missing '" + tok.surface + "'");
          token_ids_[d][t].push_back(w);
          g_[d][t].push_back(g_override ? g_override(w, d) : compute_g(w, d, tables));
        }
        state_.assignments[d][t].assign(tokens.size(), 0);
      }
    }
  }

  // Draw every token's initial role from its bias triple.
  void initialize() {
    for (std::size_t d = 0; d < token_ids_.size(); ++d)
      for (std::size_t t = 0; t < token_ids_[d].size(); ++t)
        for (std::size_t i = 0; i < token_ids_[d][t].size(); ++i) {
          const int role = rng_.categorical(g_[d][t][i]);
          state_.assignments[d][t][i] = static_cast<std::uint8_t>(role);
          add_token(static_cast<int>(d), static_cast<int>(t), static_cast<int>(i), role);
        }
    initialized_ = true;
  }

  void sweep() {
    if (!initialized_) throw std::logic_error("sweep before initialize");
    for (std::size_t d = 0; d < token_ids_.size(); ++d)
      for (std::size_t t = 0; t < token_ids_[d].size(); ++t)
        for (std::size_t i = 0; i < token_ids_[d][t].size(); ++i) {
          const int old_role = state_.assignments[d][t][i];
          remove_token(static_cast<int>(d), static_cast<int>(t), static_cast<int>(i), old_role);
          const auto probs = wtopic_conditional(
              state_, g_[d][t][i], token_ids_[d][t][i], static_cast<int>(d),
              state_.paragraph_role_count[d][t], hyper_);
          const int role = rng_.categorical(probs);
          state_.assignments[d][t][i] = static_cast<std::uint8_t>(role);
          add_token(static_cast<int>(d), static_cast<int>(t), static_cast<int>(i), role);
        }
  }

  void run() {
    initialize();
    for (int it = 0; it < hyper_.iterations; ++it) sweep();
  }

  const WTopicState& state() const { return state_; }
  WTopicState take_state() { return std::move(state_); }
  const WTopicHyper& hyper() const { return hyper_; }

  // Exact integer recount of every table from the assignments.
  bool counts_consistent() const {
    WTopicState fresh;
    fresh.vocab_size = state_.vocab_size;
    fresh.background_word_count.assign(state_.vocab_size, 0);
    fresh.theme_word_count.assign(state_.vocab_size, 0);
    fresh.doc_word_count.resize(token_ids_.size());
    fresh.doc_specific_total.assign(token_ids_.size(), 0);
    fresh.paragraph_role_count.resize(token_ids_.size());
    for (std::size_t d = 0; d < token_ids_.size(); ++d) {
      fresh.paragraph_role_count[d].assign(token_ids_[d].size(), {0, 0, 0});
      for (std::size_t t = 0; t < token_ids_[d].size(); ++t)
        for (std::size_t i = 0; i < token_ids_[d][t].size(); ++i) {
          const int role = state_.assignments[d][t][i];
          const int w = token_ids_[d][t][i];
          ++fresh.paragraph_role_count[d][t][role];
          if (role == kBackground) {
            ++fresh.background_word_count[w];
            ++fresh.background_total;
          } else if (role == kDocSpecific) {
            ++fresh.doc_word_count[d][w];
            ++fresh.doc_specific_total[d];
          } else {
            ++fresh.theme_word_count[w];
            ++fresh.theme_total;
          }
        }
    }
    if (fresh.background_word_count != state_.background_word_count) return false;
    if (fresh.background_total != state_.background_total) return false;
    if (fresh.theme_word_count != state_.theme_word_count) return false;
    if (fresh.theme_total != state_.theme_total) return false;
    if (fresh.doc_specific_total != state_.doc_specific_total) return false;
    if (fresh.paragraph_role_count != state_.paragraph_role_count) return false;
    for (std::size_t d = 0; d < token_ids_.size(); ++d) {
      for (const auto& [w, n] : fresh.doc_word_count[d])
        if (state_.doc_word(static_cast<int>(d), w) != n) return false;
      for (const auto& [w, n] : state_.doc_word_count[d])
        if (n != 0 && fresh.doc_word_count[d].count(w) == 0) return false;
    }
    return true;
  }

  const std::vector<std::vector<std::vector<int>>>& token_ids() const { return token_ids_; }
  const std::array<double, 3>& g(int d, int t, int i) const { return g_[d][t][i]; }

 private:
  void add_token(int d, int t, int i, int role) {
    const int w = token_ids_[d][t][i];
    ++state_.paragraph_role_count[d][t][role];
    if (role == kBackground) {
      ++state_.background_word_count[w];
      ++state_.background_total;
    } else if (role == kDocSpecific) {
      ++state_.doc_word_count[d][w];
      ++state_.doc_specific_total[d];
    } else {
      ++state_.theme_word_count[w];
      ++state_.theme_total;
    }
  }

  void remove_token(int d, int t, int i, int role) {
    const int w = token_ids_[d][t][i];
    --state_.paragraph_role_count[d][t][role];
    if (role == kBackground) {
      --state_.background_word_count[w];
      --state_.background_total;
    } else if (role == kDocSpecific) {
      --state_.doc_word_count[d][w];
      --state_.doc_specific_total[d];
    } else {
      --state_.theme_word_count[w];
      --state_.theme_total;
    }
  }

  WTopicHyper hyper_;
  Rng rng_;
  std::vector<std::vector<std::vector<int>>> token_ids_;        // [d][t][i] vocab ids
  std::vector<std::vector<std::vector<std::array<double, 3>>>> g_;
  WTopicState state_;
  bool initialized_ = false;
};

inline WTopicState run_wtopic_sampler(const Corpus& corpus, const Vocabulary& vocab,
                                      const FrequencyTables& tables,
                                      const WTopicHyper& hyper) {
  WTopicSampler sampler(corpus, vocab, tables, hyper);
  sampler.run();
  return sampler.take_state();
}

struct RankedWord {
  std::string word;
  double probability = 0.0;
};

struct LanguageModels {
  std::vector<RankedWord> background;
  std::vector<std::vector<RankedWord>> document_specific;  // per document
  std::vector<RankedWord> theme_pool;
};

namespace detail {

inline std::vector<RankedWord> rank_words(
    const Vocabulary& vocab, double eta,
    const std::function<long long(int)>& count, long long total, int top_n) {
  const double denom = static_cast<double>(total) +
                       static_cast<double>(vocab.size()) * eta;
  std::vector<RankedWord> ranked;
  ranked.reserve(vocab.size());
  for (int w = 0; w < vocab.size(); ++w)
    ranked.push_back(
        {vocab.word(w), (static_cast<double>(count(w)) + eta) / denom});
  std::sort(ranked.begin(), ranked.end(), [](const RankedWord& a, const RankedWord& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.word < b.word;
  });
  if (top_n < static_cast<int>(ranked.size())) ranked.resize(top_n);
  return ranked;
}

}  // namespace detail

inline LanguageModels export_language_models(const WTopicState& state,
                                             const Vocabulary& vocab,
                                             const WTopicHyper& hyper, int top_n) {
  top_n = std::min(top_n, vocab.size());
  LanguageModels models;
  models.background = detail::rank_words(
      vocab, hyper.eta, [&](int w) { return state.background_word_count[w]; },
      state.background_total, top_n);
  models.theme_pool = detail::rank_words(
      vocab, hyper.eta, [&](int w) { return state.theme_word_count[w]; },
      state.theme_total, top_n);
  models.document_specific.resize(state.doc_word_count.size());
  for (std::size_t d = 0; d < state.doc_word_count.size(); ++d)
    models.document_specific[d] = detail::rank_words(
        vocab, hyper.eta,
        [&](int w) { return state.doc_word(static_cast<int>(d), w); },
        state.doc_specific_total[d], top_n);
  return models;
}

}  // namespace themealign
