#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "themealign/concept_annotator.hpp"
#include "themealign/corpus.hpp"
#include "themealign/lda2.hpp"
#include "themealign/rng.hpp"
#include "themealign/viterbi.hpp"

namespace themealign {

struct ThemeHyper {
  int num_topics = 10;   // K
  double beta = 0.01;    // topic-word smoothing
  double lambda = 5.0;   // document mixture smoothing
  double alpha = 0.01;   // transition smoothing
  double kappa = 1000.0; // self-transition bonus
  bool use_concept_boost = true;
  double boost_exponent = 1.0;
  bool viterbi_use_mixture = true;  // include the document mixture in emissions
  int iterations = 200;
  int burn_in = 100;
  std::uint64_t seed = 1;

  void validate() const {
    if (num_topics < 2) throw ValidationError("theme: need at least 2 topics");
    if (!(beta > 0.0) || !(lambda > 0.0) || !(alpha > 0.0))
      throw ValidationError("theme: smoothing parameters must be > 0");
    if (!(kappa >= 0.0)) throw ValidationError("theme: kappa must be >= 0");
    if (burn_in < 0 || iterations < burn_in)
      throw ValidationError("theme: need iterations >= burn_in >= 0");
  }
};

struct ThemeState {
  std::vector<std::vector<int>> topic_of;           // z[doc][paragraph]
  std::vector<std::vector<long long>> topic_word;   // [topic][word]
  std::vector<long long> topic_total;               // [topic]
  std::vector<std::vector<long long>> doc_topic;    // [doc][topic]
  std::vector<std::vector<long long>> transitions;  // [from][to], pooled over docs
  std::vector<long long> initial_counts;            // first-paragraph topics
  int vocab_size = 0;

  int num_topics() const { return static_cast<int>(topic_total.size()); }

  long long word_total(int word) const {
    long long total = 0;
    for (const auto& row : topic_word) total += row[word];
    return total;
  }

  static ThemeState empty(int num_topics, int num_docs, int vocab_size) {
    ThemeState s;
    s.topic_word.assign(num_topics, std::vector<long long>(vocab_size, 0));
    s.topic_total.assign(num_topics, 0);
    s.doc_topic.assign(num_docs, std::vector<long long>(num_topics, 0));
    s.transitions.assign(num_topics, std::vector<long long>(num_topics, 0));
    s.initial_counts.assign(num_topics, 0);
    s.topic_of.resize(num_docs);
    s.vocab_size = vocab_size;
    return s;
  }
};

// Sticky transition probability under the Dirichlet(alpha + kappa*delta) prior.
inline double transition_probability(int from, int to, const ThemeState& state,
                                     const ThemeHyper& hyper) {
  const int k = state.num_topics();
  long long row_total = 0;
  for (int x = 0; x < k; ++x) row_total += state.transitions[from][x];
  const double bonus = from == to ? hyper.kappa : 0.0;
  return (static_cast<double>(state.transitions[from][to]) + hyper.alpha + bonus) /
         (static_cast<double>(row_total) + k * hyper.alpha + hyper.kappa);
}

// Fast per-word neighbor lookup for the concept-relation boost. Only vocab
// entries that are concept ids with graph neighbors are indexed; everything
// else gets the neutral value 1.
class BoostIndex {
 public:
  BoostIndex(const Vocabulary& vocab, const RelationGraph& graph) {
    for (int w = 0; w < vocab.size(); ++w) {
      const std::string& surface = vocab.word(w);
      if (!is_concept_id(surface)) continue;
      const auto* nbrs = graph.neighbors(surface);
      if (!nbrs || nbrs->empty()) continue;
      Entry entry;
      for (const auto& [id, weight] : *nbrs) {
        int nw = vocab.find(id);
        if (nw >= 0)
          entry.neighbor_words.push_back(nw);
        else
          ++entry.out_of_vocab;
      }
      entries_.emplace(w, std::move(entry));
    }
  }

  // Mean, over graph neighbors, of the fraction of their assignments that
  // went to `topic`. Neighbors never assigned contribute 1/K.
  double value(int word, int topic, const ThemeState& state) const {
    auto it = entries_.find(word);
    if (it == entries_.end()) return 1.0;
    const Entry& entry = it->second;
    const double uniform = 1.0 / static_cast<double>(state.num_topics());
    double sum = static_cast<double>(entry.out_of_vocab) * uniform;
    for (int nw : entry.neighbor_words) {
      const long long total = state.word_total(nw);
      sum += total > 0
                 ? static_cast<double>(state.topic_word[topic][nw]) / static_cast<double>(total)
                 : uniform;
    }
    return sum / static_cast<double>(entry.neighbor_words.size() + entry.out_of_vocab);
  }

  bool indexed(int word) const { return entries_.count(word) > 0; }

 private:
  struct Entry {
    std::vector<int> neighbor_words;
    int out_of_vocab = 0;
  };
  std::unordered_map<int, Entry> entries_;
};

// Direct evaluation of the neighbor-vote boost; the sampler uses BoostIndex,
// which must agree with this.
inline double concept_boost(int word, int topic, const ThemeState& state,
                            const RelationGraph& graph, const Vocabulary& vocab) {
  const std::string& surface = vocab.word(word);
  if (!is_concept_id(surface)) return 1.0;
  const auto* nbrs = graph.neighbors(surface);
  if (!nbrs || nbrs->empty()) return 1.0;
  const double uniform = 1.0 / static_cast<double>(state.num_topics());
  double sum = 0.0;
  for (const auto& [id, weight] : *nbrs) {
    const int nw = vocab.find(id);
    if (nw < 0) {
      sum += uniform;
      continue;
    }
    const long long total = state.word_total(nw);
    sum += total > 0
               ? static_cast<double>(state.topic_word[topic][nw]) / static_cast<double>(total)
               : uniform;
  }
  return sum / static_cast<double>(nbrs->size());
}

// Collapsed conditional over topics for one paragraph whose contributions
// (mixture count, adjacent transitions, token counts) are already removed.
// prev_topic/next_topic are -1 at the document edges; the first paragraph
// uses the smoothed initial-state factor instead of an incoming transition.
inline std::vector<double> ttopic_conditional(
    const ThemeState& state, const ThemeHyper& hyper, int doc, int prev_topic,
    int next_topic, std::span<const int> theme_tokens,
    const BoostIndex* boost = nullptr) {
  const int k = state.num_topics();
  const double w_beta = static_cast<double>(state.vocab_size) * hyper.beta;

  long long doc_total = 0;
  for (int j = 0; j < k; ++j) doc_total += state.doc_topic[doc][j];
  long long init_total = 0;
  for (int j = 0; j < k; ++j) init_total += state.initial_counts[j];
  long long prev_row_total = 0;
  if (prev_topic >= 0)
    for (int j = 0; j < k; ++j) prev_row_total += state.transitions[prev_topic][j];

  std::vector<double> log_probs(k);
  for (int j = 0; j < k; ++j) {
    double lp = std::log(
        (static_cast<double>(state.doc_topic[doc][j]) + hyper.lambda) /
        (static_cast<double>(doc_total) + k * hyper.lambda));
    if (prev_topic >= 0) {
      const double bonus = prev_topic == j ? hyper.kappa : 0.0;
      lp += std::log(
          (static_cast<double>(state.transitions[prev_topic][j]) + hyper.alpha + bonus) /
          (static_cast<double>(prev_row_total) + k * hyper.alpha + hyper.kappa));
    } else {
      lp += std::log(
          (static_cast<double>(state.initial_counts[j]) + hyper.lambda) /
          (static_cast<double>(init_total) + k * hyper.lambda));
    }
    if (next_topic >= 0) {
      long long row_total = 0;
      for (int x = 0; x < k; ++x) row_total += state.transitions[j][x];
      const double bonus = j == next_topic ? hyper.kappa : 0.0;
      lp += std::log(
          (static_cast<double>(state.transitions[j][next_topic]) + hyper.alpha + bonus) /
          (static_cast<double>(row_total) + k * hyper.alpha + hyper.kappa));
    }
    // Token block: successive occurrences of a word see the counts its
    // earlier occurrences would have added under topic j.
    std::unordered_map<int, int> seen;
    int processed = 0;
    for (int w : theme_tokens) {
      const double numer =
          static_cast<double>(state.topic_word[j][w] + seen[w]) + hyper.beta;
      const double denom =
          static_cast<double>(state.topic_total[j] + processed) + w_beta;
      lp += std::log(numer / denom);
      ++seen[w];
      ++processed;
      if (boost) {
        const double s = boost->value(w, j, state);
        if (s > 0.0)
          lp += hyper.boost_exponent * std::log(s);
        else
          lp = -std::numeric_limits<double>::infinity();
      }
    }
    log_probs[j] = lp;
  }
  double max_lp = *std::max_element(log_probs.begin(), log_probs.end());
  std::vector<double> probs(k);
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    probs[j] = std::exp(log_probs[j] - max_lp);
    total += probs[j];
  }
  for (double& p : probs) p /= total;
  return probs;
}

struct ThemeDiagnostics {
  // Documents where no paragraph carries a theme-specific token; their topics
  // come from the transition and mixture factors alone.
  std::vector<std::string> docs_without_theme_tokens;
};

class ThemeSampler {
 public:
  ThemeSampler(const Corpus& corpus, const Vocabulary& vocab,
               const WTopicState& wstate, const ThemeHyper& hyper,
               const RelationGraph* graph = nullptr)
      : hyper_(hyper), rng_(hyper.seed) {
    hyper_.validate();
    const int num_docs = static_cast<int>(corpus.size());
    theme_tokens_.resize(num_docs);
    doc_ids_.reserve(num_docs);
    for (int d = 0; d < num_docs; ++d) {
      const Document& doc = corpus.documents[d];
      doc_ids_.push_back(doc.id);
      theme_tokens_[d].resize(doc.paragraphs.size());
      bool any = false;
      for (std::size_t t = 0; t < doc.paragraphs.size(); ++t) {
        const auto& tokens = doc.paragraphs[t].tokens;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
          if (wstate.assignments[d][t][i] != kThemeSpecific) continue;
          const int w = vocab.find(tokens[i].surface);
          if (w < 0)
            throw ValidationError("theme sampler vocabulary is missing '" +
                                  tokens[i].surface + "'");
          theme_tokens_[d][t].push_back(w);
          any = true;
        }
      }
      if (!any) diagnostics_.docs_without_theme_tokens.push_back(doc.id);
    }
    if (graph && hyper_.use_concept_boost)
      boost_ = std::make_unique<BoostIndex>(vocab, *graph);
    state_ = ThemeState::empty(hyper_.num_topics, num_docs, vocab.size());
  }

  // Seeds the count tables directly rather than via add_paragraph: that
  // helper touches both adjacent transition edges (its remove counterpart
  // must), which would count every interior edge twice here.
  void initialize() {
    for (std::size_t d = 0; d < theme_tokens_.size(); ++d) {
      state_.topic_of[d].resize(theme_tokens_[d].size());
      for (std::size_t t = 0; t < theme_tokens_[d].size(); ++t)
        state_.topic_of[d][t] = rng_.uniform_int(hyper_.num_topics);
      for (std::size_t t = 0; t < theme_tokens_[d].size(); ++t) {
        const int topic = state_.topic_of[d][t];
        ++state_.doc_topic[d][topic];
        if (t == 0)
          ++state_.initial_counts[topic];
        else
          ++state_.transitions[state_.topic_of[d][t - 1]][topic];
        for (int w : theme_tokens_[d][t]) {
          ++state_.topic_word[topic][w];
          ++state_.topic_total[topic];
        }
      }
    }
    initialized_ = true;
  }

  void sweep() {
    if (!initialized_) throw std::logic_error("sweep before initialize");
    for (std::size_t d = 0; d < theme_tokens_.size(); ++d) {
      const int last = static_cast<int>(theme_tokens_[d].size()) - 1;
      for (int t = 0; t <= last; ++t) {
        const int old_topic = state_.topic_of[d][t];
        remove_paragraph(static_cast<int>(d), t, old_topic);
        const int prev = t > 0 ? state_.topic_of[d][t - 1] : -1;
        const int next = t < last ? state_.topic_of[d][t + 1] : -1;
        const auto probs =
            ttopic_conditional(state_, hyper_, static_cast<int>(d), prev, next,
                               theme_tokens_[d][t], boost_.get());
        const int topic = rng_.categorical(probs);
        state_.topic_of[d][t] = topic;
        add_paragraph(static_cast<int>(d), t, topic);
      }
    }
  }

  void run() {
    initialize();
    for (int it = 0; it < hyper_.iterations; ++it) sweep();
  }

  const ThemeState& state() const { return state_; }
  ThemeState take_state() { return std::move(state_); }
  const ThemeHyper& hyper() const { return hyper_; }
  const ThemeDiagnostics& diagnostics() const { return diagnostics_; }
  const BoostIndex* boost_index() const { return boost_.get(); }
  const std::vector<std::vector<std::vector<int>>>& theme_tokens() const {
    return theme_tokens_;
  }

  // Exact recount from the per-paragraph assignments; every theme token is
  // counted under its paragraph's topic.
  bool counts_consistent() const {
    ThemeState fresh = ThemeState::empty(
        hyper_.num_topics, static_cast<int>(theme_tokens_.size()), state_.vocab_size);
    fresh.topic_of = state_.topic_of;
    for (std::size_t d = 0; d < theme_tokens_.size(); ++d)
      for (std::size_t t = 0; t < theme_tokens_[d].size(); ++t) {
        const int j = state_.topic_of[d][t];
        ++fresh.doc_topic[d][j];
        if (t == 0)
          ++fresh.initial_counts[j];
        else
          ++fresh.transitions[state_.topic_of[d][t - 1]][j];
        for (int w : theme_tokens_[d][t]) {
          ++fresh.topic_word[j][w];
          ++fresh.topic_total[j];
        }
      }
    return fresh.topic_word == state_.topic_word &&
           fresh.topic_total == state_.topic_total &&
           fresh.doc_topic == state_.doc_topic &&
           fresh.transitions == state_.transitions &&
           fresh.initial_counts == state_.initial_counts;
  }

 private:
  void add_paragraph(int d, int t, int topic) {
    ++state_.doc_topic[d][topic];
    if (t == 0)
      ++state_.initial_counts[topic];
    else
      ++state_.transitions[state_.topic_of[d][t - 1]][topic];
    const int last = static_cast<int>(theme_tokens_[d].size()) - 1;
    if (t < last) ++state_.transitions[topic][state_.topic_of[d][t + 1]];
    for (int w : theme_tokens_[d][t]) {
      ++state_.topic_word[topic][w];
      ++state_.topic_total[topic];
    }
  }

  void remove_paragraph(int d, int t, int topic) {
    --state_.doc_topic[d][topic];
    if (t == 0)
      --state_.initial_counts[topic];
    else
      --state_.transitions[state_.topic_of[d][t - 1]][topic];
    const int last = static_cast<int>(theme_tokens_[d].size()) - 1;
    if (t < last) --state_.transitions[topic][state_.topic_of[d][t + 1]];
    for (int w : theme_tokens_[d][t]) {
      --state_.topic_word[topic][w];
      --state_.topic_total[topic];
    }
  }

  ThemeHyper hyper_;
  Rng rng_;
  std::vector<std::vector<std::vector<int>>> theme_tokens_;  // [d][t] vocab ids
  std::vector<std::string> doc_ids_;
  std::unique_ptr<BoostIndex> boost_;
  ThemeState state_;
  ThemeDiagnostics diagnostics_;
  bool initialized_ = false;
};

inline ThemeState run_theme_sampler(const Corpus& corpus, const Vocabulary& vocab,
                                    const WTopicState& wstate, const ThemeHyper& hyper,
                                    const RelationGraph* graph = nullptr,
                                    ThemeDiagnostics* diagnostics = nullptr) {
  ThemeSampler sampler(corpus, vocab, wstate, hyper, graph);
  sampler.run();
  if (diagnostics) *diagnostics = sampler.diagnostics();
  return sampler.take_state();
}

inline std::vector<double> initial_log_distribution(const ThemeState& state,
                                                    const ThemeHyper& hyper) {
  const int k = state.num_topics();
  long long total = 0;
  for (int j = 0; j < k; ++j) total += state.initial_counts[j];
  std::vector<double> logs(k);
  for (int j = 0; j < k; ++j)
    logs[j] = std::log(
        (static_cast<double>(state.initial_counts[j]) + hyper.lambda) /
        (static_cast<double>(total) + k * hyper.lambda));
  return logs;
}

inline std::vector<std::vector<double>> transition_log_matrix(
    const ThemeState& state, const ThemeHyper& hyper) {
  const int k = state.num_topics();
  std::vector<std::vector<double>> logs(k, std::vector<double>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      logs[i][j] = std::log(transition_probability(i, j, state, hyper));
  return logs;
}

// Per-paragraph emission scores. A token id of -1 marks a word unseen at
// training time; it contributes the beta-smoothed floor. doc_topic_row may
// be null (unknown document: uniform mixture).
inline std::vector<std::vector<double>> theme_log_emissions(
    const std::vector<std::vector<int>>& theme_tokens,
    const std::vector<long long>* doc_topic_row, const ThemeState& state,
    const ThemeHyper& hyper, const BoostIndex* boost = nullptr) {
  const int k = state.num_topics();
  const double w_beta = static_cast<double>(state.vocab_size) * hyper.beta;
  std::vector<double> mixture(k, 0.0);
  if (hyper.viterbi_use_mixture) {
    long long total = 0;
    if (doc_topic_row)
      for (int j = 0; j < k; ++j) total += (*doc_topic_row)[j];
    for (int j = 0; j < k; ++j) {
      const double count = doc_topic_row ? static_cast<double>((*doc_topic_row)[j]) : 0.0;
      mixture[j] = std::log((count + hyper.lambda) /
                            (static_cast<double>(total) + k * hyper.lambda));
    }
  }
  std::vector<std::vector<double>> emissions(theme_tokens.size(),
                                             std::vector<double>(k, 0.0));
  for (std::size_t t = 0; t < theme_tokens.size(); ++t) {
    for (int j = 0; j < k; ++j) {
      double lp = mixture[j];
      for (int w : theme_tokens[t]) {
        const long long count = w >= 0 ? state.topic_word[j][w] : 0;
        lp += std::log((static_cast<double>(count) + hyper.beta) /
                       (static_cast<double>(state.topic_total[j]) + w_beta));
        if (boost && w >= 0) {
          const double s = boost->value(w, j, state);
          if (s > 0.0)
            lp += hyper.boost_exponent * std::log(s);
          else
            lp = -std::numeric_limits<double>::infinity();
        }
      }
      emissions[t][j] = lp;
    }
  }
  return emissions;
}

// Final topic assignment for one document: Viterbi over the trained HMM.
inline ViterbiResult viterbi_decode(const std::vector<std::vector<int>>& theme_tokens,
                                    const std::vector<long long>* doc_topic_row,
                                    const ThemeState& state, const ThemeHyper& hyper,
                                    const BoostIndex* boost = nullptr) {
  const auto init = initial_log_distribution(state, hyper);
  const auto trans = transition_log_matrix(state, hyper);
  const auto emit = theme_log_emissions(theme_tokens, doc_topic_row, state, hyper, boost);
  return viterbi_path(init, trans, emit);
}

// Score an arbitrary topic sequence under the same matrices Viterbi uses.
inline double decode_sequence_log_probability(
    std::span<const int> topics, const std::vector<std::vector<int>>& theme_tokens,
    const std::vector<long long>* doc_topic_row, const ThemeState& state,
    const ThemeHyper& hyper, const BoostIndex* boost = nullptr) {
  const auto init = initial_log_distribution(state, hyper);
  const auto trans = transition_log_matrix(state, hyper);
  const auto emit = theme_log_emissions(theme_tokens, doc_topic_row, state, hyper, boost);
  return sequence_log_probability(topics, init, trans, emit);
}

}  // namespace themealign
