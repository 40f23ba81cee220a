#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "themealign/corpus.hpp"

namespace themealign {

// Maximal run of contiguous paragraphs sharing one topic; [start, end] inclusive.
struct Segment {
  std::string doc_id;
  int topic = 0;
  int start = 0;
  int end = 0;

  bool operator==(const Segment&) const = default;
};

inline std::vector<Segment> form_segments(std::span<const int> topics,
                                          const std::string& doc_id = {}) {
  if (topics.empty()) throw ValidationError("form_segments: empty topic sequence");
  std::vector<Segment> segments;
  int start = 0;
  for (std::size_t t = 1; t <= topics.size(); ++t) {
    if (t == topics.size() || topics[t] != topics[start]) {
      segments.push_back({doc_id, topics[start], start, static_cast<int>(t) - 1});
      start = static_cast<int>(t);
    }
  }
  return segments;
}

inline std::vector<int> flatten_segments(const std::vector<Segment>& segments) {
  std::vector<int> topics;
  for (const Segment& s : segments)
    for (int t = s.start; t <= s.end; ++t) topics.push_back(s.topic);
  return topics;
}

struct AlignmentReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::string scope = "mono";
  std::vector<std::string> heading_labels;          // rows of overlap
  std::vector<std::string> topic_labels;            // columns of overlap
  std::vector<std::vector<long long>> overlap;      // overlap[h][k]
  long long labeled_paragraphs = 0;                 // Σ overlap
  long long excluded_without_heading = 0;           // assigned, no gold label
  long long excluded_without_topic = 0;             // gold label, no assignment
};

// Heading/topic overlap metrics. Keys are opaque paragraph identifiers; only
// paragraphs present in both maps are scored, the rest are counted as excluded.
inline AlignmentReport evaluate_alignment(
    const std::map<std::string, std::string>& topics,
    const std::map<std::string, std::string>& headings,
    const std::string& scope = "mono") {
  AlignmentReport report;
  report.scope = scope;

  std::map<std::string, int> heading_index;
  std::map<std::string, int> topic_index;
  std::vector<std::pair<int, int>> evaluated;  // (heading row, topic column)
  for (const auto& [key, topic] : topics) {
    auto h = headings.find(key);
    if (h == headings.end()) {
      ++report.excluded_without_heading;
      continue;
    }
    const int hi = heading_index.emplace(h->second, heading_index.size()).first->second;
    const int ki = topic_index.emplace(topic, topic_index.size()).first->second;
    evaluated.emplace_back(hi, ki);
  }
  for (const auto& [key, heading] : headings)
    if (!topics.count(key)) ++report.excluded_without_topic;
  if (evaluated.empty())
    throw ValidationError("evaluate_alignment: no paragraph has both a topic and a heading");

  report.heading_labels.resize(heading_index.size());
  for (const auto& [label, i] : heading_index) report.heading_labels[i] = label;
  report.topic_labels.resize(topic_index.size());
  for (const auto& [label, i] : topic_index) report.topic_labels[i] = label;

  report.overlap.assign(heading_index.size(),
                        std::vector<long long>(topic_index.size(), 0));
  for (const auto& [hi, ki] : evaluated) ++report.overlap[hi][ki];
  report.labeled_paragraphs = static_cast<long long>(evaluated.size());

  const double p = static_cast<double>(report.labeled_paragraphs);
  double recall_sum = 0.0;
  for (const auto& row : report.overlap)
    recall_sum += static_cast<double>(*std::max_element(row.begin(), row.end()));
  double precision_sum = 0.0;
  for (std::size_t k = 0; k < report.topic_labels.size(); ++k) {
    long long best = 0;
    for (std::size_t h = 0; h < report.heading_labels.size(); ++h)
      best = std::max(best, report.overlap[h][k]);
    precision_sum += static_cast<double>(best);
  }
  report.recall = recall_sum / p;
  report.precision = precision_sum / p;
  report.f1 = report.precision + report.recall > 0.0
                  ? 2.0 * report.precision * report.recall /
                        (report.precision + report.recall)
                  : 0.0;
  return report;
}

// Paragraph key used everywhere alignment artifacts meet the corpus.
inline std::string paragraph_key(const std::string& doc_id,
                                 const std::string& paragraph_id) {
  return doc_id + "#" + paragraph_id;
}

inline std::map<std::string, std::string> headings_from_corpus(
    const Corpus& corpus) {
  std::map<std::string, std::string> out;
  for (const Document& doc : corpus.documents)
    for (const Paragraph& par : doc.paragraphs)
      if (par.heading && !par.heading->empty())
        out[paragraph_key(doc.id, par.id)] = *par.heading;
  return out;
}

// Rewrites gold labels through a translation map (e.g. French headings to
// their English counterparts); labels without an entry pass through.
inline std::map<std::string, std::string> apply_label_map(
    const std::map<std::string, std::string>& headings,
    const std::map<std::string, std::string>& label_map) {
  if (label_map.empty()) return headings;
  std::map<std::string, std::string> out;
  for (const auto& [key, label] : headings) {
    auto it = label_map.find(label);
    out[key] = it == label_map.end() ? label : it->second;
  }
  return out;
}

using TermVector = std::map<std::string, double>;

inline double cosine_similarity(const TermVector& a, const TermVector& b) {
  const TermVector& small = a.size() <= b.size() ? a : b;
  const TermVector& large = a.size() <= b.size() ? b : a;
  double dot = 0.0;
  for (const auto& [term, weight] : small) {
    auto it = large.find(term);
    if (it != large.end()) dot += weight * it->second;
  }
  if (dot == 0.0) return 0.0;
  auto norm = [](const TermVector& v) {
    double s = 0.0;
    for (const auto& [term, weight] : v) s += weight * weight;
    return std::sqrt(s);
  };
  return dot / (norm(a) * norm(b));
}

// tf-idf over concept tokens; document frequencies are pooled over every
// paragraph passed in (both languages for the bilingual baselines).
inline std::vector<TermVector> paragraph_concept_vectors(
    const std::vector<const Paragraph*>& paragraphs) {
  std::map<std::string, long long> par_df;
  for (const Paragraph* par : paragraphs) {
    std::set<std::string> seen;
    for (const Token& tok : par->tokens)
      if (tok.kind == TokenKind::Concept) seen.insert(tok.surface);
    for (const auto& id : seen) ++par_df[id];
  }
  const double total = static_cast<double>(paragraphs.size());
  std::vector<TermVector> vectors(paragraphs.size());
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    TermVector& vec = vectors[i];
    for (const Token& tok : paragraphs[i]->tokens)
      if (tok.kind == TokenKind::Concept) vec[tok.surface] += 1.0;
    for (auto& [id, tf] : vec) tf *= std::log(total / static_cast<double>(par_df[id]));
  }
  return vectors;
}

struct ScoredPair {
  int a = 0;  // index into corpus A paragraph list
  int b = 0;  // index into corpus B paragraph list
  double similarity = 0.0;
};

// Single-link agglomeration: walk candidate pairs from the most similar down
// and union their clusters while similarity stays above the threshold.
class ClusterMerge {
 public:
  explicit ClusterMerge(int n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }

  void merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

inline std::vector<int> merge_above_threshold(int num_items,
                                              std::vector<ScoredPair> pairs,
                                              double threshold) {
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const ScoredPair& x, const ScoredPair& y) {
                     if (x.similarity != y.similarity) return x.similarity > y.similarity;
                     if (x.a != y.a) return x.a < y.a;
                     return x.b < y.b;
                   });
  ClusterMerge uf(num_items);
  for (const ScoredPair& p : pairs) {
    if (!(p.similarity > threshold)) break;
    uf.merge(p.a, p.b);
  }
  std::vector<int> cluster(num_items);
  for (int i = 0; i < num_items; ++i) cluster[i] = uf.find(i);
  return cluster;
}

namespace detail {

struct ParagraphPool {
  std::vector<const Paragraph*> paragraphs;
  std::vector<std::string> keys;
  int size_a = 0;  // paragraphs[0..size_a) come from corpus A

  static ParagraphPool build(const Corpus& a, const Corpus& b) {
    ParagraphPool pool;
    auto add = [&pool](const Corpus& c) {
      for (const Document& doc : c.documents)
        for (const Paragraph& par : doc.paragraphs) {
          pool.paragraphs.push_back(&par);
          pool.keys.push_back(paragraph_key(doc.id, par.id));
        }
    };
    add(a);
    pool.size_a = static_cast<int>(pool.paragraphs.size());
    add(b);
    return pool;
  }
};

inline std::map<std::string, std::string> clusters_to_topics(
    const ParagraphPool& pool, const std::vector<int>& cluster) {
  std::map<std::string, std::string> topics;
  for (std::size_t i = 0; i < pool.keys.size(); ++i)
    topics[pool.keys[i]] = "cluster" + std::to_string(cluster[i]);
  return topics;
}

}  // namespace detail

struct BaselineResult {
  std::map<std::string, std::string> cluster_of;  // paragraph key -> cluster id
  AlignmentReport report;
};

inline BaselineResult tfidf_concept_baseline(
    const Corpus& corpus_a, const Corpus& corpus_b, double threshold,
    const std::map<std::string, std::string>& label_map = {}) {
  const auto pool = detail::ParagraphPool::build(corpus_a, corpus_b);
  const auto vectors = paragraph_concept_vectors(pool.paragraphs);
  std::vector<ScoredPair> pairs;
  const int n = static_cast<int>(pool.paragraphs.size());
  for (int i = 0; i < pool.size_a; ++i) {
    if (vectors[i].empty()) continue;
    for (int j = pool.size_a; j < n; ++j) {
      if (vectors[j].empty()) continue;
      const double sim = cosine_similarity(vectors[i], vectors[j]);
      if (sim > threshold) pairs.push_back({i, j, sim});
    }
  }
  const auto cluster = merge_above_threshold(n, std::move(pairs), threshold);
  BaselineResult result;
  result.cluster_of = detail::clusters_to_topics(pool, cluster);
  // Gold labels come from both corpora; corpus B labels go through the map.
  auto headings = headings_from_corpus(corpus_a);
  for (const auto& [key, label] : apply_label_map(headings_from_corpus(corpus_b), label_map))
    headings[key] = label;
  result.report = evaluate_alignment(result.cluster_of, headings, "bilingual");
  return result;
}

class TranslationTable {
 public:
  void add(const std::string& src, const std::string& tgt, double prob) {
    if (!(prob >= 0.0) || prob > 1.0 + 1e-9)
      throw ValidationError("translation probability out of range for '" + src + "'");
    table_[src][tgt] = prob;
  }

  double max_probability(const std::string& src, const TermVector& targets) const {
    auto it = table_.find(src);
    if (it == table_.end()) return 0.0;
    double best = 0.0;
    for (const auto& [tgt, count] : targets) {
      auto jt = it->second.find(tgt);
      if (jt != it->second.end()) best = std::max(best, jt->second);
    }
    return best;
  }

  bool empty() const { return table_.empty(); }
  std::size_t size() const { return table_.size(); }

  static TranslationTable load_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open translation table '" + path + "'");
    TranslationTable table;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::string src, tgt, prob_text;
      if (!std::getline(ss, src, '\t') || !std::getline(ss, tgt, '\t') ||
          !std::getline(ss, prob_text, '\t')) {
        throw ParseError("translation table line " + std::to_string(line_no) +
                         ": expected src<TAB>tgt<TAB>prob");
      }
      try {
        table.add(src, tgt, std::stod(prob_text));
      } catch (const std::invalid_argument&) {
        throw ParseError("translation table line " + std::to_string(line_no) +
                         ": bad probability '" + prob_text + "'");
      }
    }
    return table;
  }

 private:
  std::map<std::string, std::map<std::string, double>> table_;
};

// Mean over tokens of both paragraphs of the best translation probability
// into the other paragraph.
inline double translation_similarity(const Paragraph& a, const Paragraph& b,
                                     const TranslationTable& table) {
  TermVector counts_a, counts_b;
  for (const Token& tok : a.tokens) counts_a[tok.surface] += 1.0;
  for (const Token& tok : b.tokens) counts_b[tok.surface] += 1.0;
  double sum = 0.0;
  for (const auto& [word, count] : counts_a)
    sum += count * table.max_probability(word, counts_b);
  for (const auto& [word, count] : counts_b)
    sum += count * table.max_probability(word, counts_a);
  return sum / static_cast<double>(a.tokens.size() + b.tokens.size());
}

inline BaselineResult translation_table_baseline(
    const Corpus& corpus_a, const Corpus& corpus_b, const TranslationTable& table,
    double threshold, const std::map<std::string, std::string>& label_map = {}) {
  if (table.empty()) throw ValidationError("translation table is empty");
  const auto pool = detail::ParagraphPool::build(corpus_a, corpus_b);
  const int n = static_cast<int>(pool.paragraphs.size());
  std::vector<ScoredPair> pairs;
  for (int i = 0; i < pool.size_a; ++i)
    for (int j = pool.size_a; j < n; ++j) {
      const double sim =
          translation_similarity(*pool.paragraphs[i], *pool.paragraphs[j], table);
      if (sim > threshold) pairs.push_back({i, j, sim});
    }
  const auto cluster = merge_above_threshold(n, std::move(pairs), threshold);
  BaselineResult result;
  result.cluster_of = detail::clusters_to_topics(pool, cluster);
  auto headings = headings_from_corpus(corpus_a);
  for (const auto& [key, label] : apply_label_map(headings_from_corpus(corpus_b), label_map))
    headings[key] = label;
  result.report = evaluate_alignment(result.cluster_of, headings, "bilingual");
  return result;
}

enum class DocRepr { TfIdfWords, TfIdfConcepts, DocSpecificTopic };

// Top-N tf-idf terms of one document; document frequencies span both corpora.
inline TermVector document_tfidf_terms(const Document& doc,
                                       const std::map<std::string, long long>& doc_df,
                                       long long total_docs, int top_n,
                                       bool concepts_only) {
  TermVector tf;
  for (const Paragraph& par : doc.paragraphs)
    for (const Token& tok : par.tokens) {
      const bool is_concept = tok.kind == TokenKind::Concept;
      if (concepts_only != is_concept) continue;
      tf[tok.surface] += 1.0;
    }
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(tf.size());
  for (const auto& [term, count] : tf) {
    const double idf =
        std::log(static_cast<double>(total_docs) / static_cast<double>(doc_df.at(term)));
    scored.emplace_back(term, count * idf);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  if (static_cast<int>(scored.size()) > top_n) scored.resize(top_n);
  return TermVector(scored.begin(), scored.end());
}

struct DocAlignment {
  std::vector<std::pair<std::string, std::string>> pairs;  // (doc in A, doc in B)
  std::vector<std::string> unpaired;
  double accuracy = 0.0;
  int correct = 0;
  int evaluated = 0;
};

// Greedy best-match pairing over document term vectors.
inline DocAlignment align_document_vectors(
    const std::vector<std::pair<std::string, TermVector>>& docs_a,
    const std::vector<std::pair<std::string, TermVector>>& docs_b,
    const std::map<std::string, std::string>& gold) {
  struct Cand {
    double sim;
    int a;
    int b;
  };
  std::vector<Cand> cands;
  cands.reserve(docs_a.size() * docs_b.size());
  for (std::size_t i = 0; i < docs_a.size(); ++i)
    for (std::size_t j = 0; j < docs_b.size(); ++j)
      cands.push_back({cosine_similarity(docs_a[i].second, docs_b[j].second),
                       static_cast<int>(i), static_cast<int>(j)});
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.sim != y.sim) return x.sim > y.sim;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  std::vector<bool> used_a(docs_a.size(), false), used_b(docs_b.size(), false);
  DocAlignment result;
  const std::size_t want = std::min(docs_a.size(), docs_b.size());
  for (const Cand& c : cands) {
    if (result.pairs.size() == want) break;
    if (used_a[c.a] || used_b[c.b]) continue;
    used_a[c.a] = true;
    used_b[c.b] = true;
    result.pairs.emplace_back(docs_a[c.a].first, docs_b[c.b].first);
  }
  for (std::size_t i = 0; i < docs_a.size(); ++i)
    if (!used_a[i]) result.unpaired.push_back(docs_a[i].first);
  for (std::size_t j = 0; j < docs_b.size(); ++j)
    if (!used_b[j]) result.unpaired.push_back(docs_b[j].first);
  for (const auto& [a, b] : result.pairs) {
    auto it = gold.find(a);
    if (it == gold.end()) continue;
    ++result.evaluated;
    if (it->second == b) ++result.correct;
  }
  result.accuracy = result.evaluated > 0
                        ? static_cast<double>(result.correct) /
                              static_cast<double>(result.evaluated)
                        : 0.0;
  return result;
}

// The DocSpecificTopic representation is supplied by the caller (it lives in
// the trained model); tf-idf representations are derived here.
inline DocAlignment align_documents(
    const Corpus& corpus_a, const Corpus& corpus_b, DocRepr mode,
    const std::map<std::string, std::string>& gold, int top_n = 20,
    const std::map<std::string, TermVector>* topic_repr = nullptr) {
  std::vector<std::pair<std::string, TermVector>> docs_a, docs_b;
  if (mode == DocRepr::DocSpecificTopic) {
    if (!topic_repr)
      throw ValidationError("document-topic alignment needs a trained model");
    auto build = [&](const Corpus& c, auto& out) {
      for (const Document& doc : c.documents) {
        auto it = topic_repr->find(doc.id);
        if (it == topic_repr->end())
          throw ValidationError("no document-specific topic for '" + doc.id + "'");
        out.emplace_back(doc.id, it->second);
      }
    };
    build(corpus_a, docs_a);
    build(corpus_b, docs_b);
  } else {
    const bool concepts_only = mode == DocRepr::TfIdfConcepts;
    std::map<std::string, long long> doc_df;
    auto count = [&](const Corpus& c) {
      for (const Document& doc : c.documents) {
        std::set<std::string> seen;
        for (const Paragraph& par : doc.paragraphs)
          for (const Token& tok : par.tokens) {
            const bool is_concept = tok.kind == TokenKind::Concept;
            if (concepts_only == is_concept) seen.insert(tok.surface);
          }
        for (const auto& term : seen) ++doc_df[term];
      }
    };
    count(corpus_a);
    count(corpus_b);
    const long long total =
        static_cast<long long>(corpus_a.size() + corpus_b.size());
    for (const Document& doc : corpus_a.documents)
      docs_a.emplace_back(doc.id,
                          document_tfidf_terms(doc, doc_df, total, top_n, concepts_only));
    for (const Document& doc : corpus_b.documents)
      docs_b.emplace_back(doc.id,
                          document_tfidf_terms(doc, doc_df, total, top_n, concepts_only));
  }
  return align_document_vectors(docs_a, docs_b, gold);
}

struct MetricRow {
  std::string metric;
  std::string scope;
  int k = 0;
  double value = 0.0;
};

inline std::vector<MetricRow> report_rows(const AlignmentReport& report, int k) {
  return {{"precision", report.scope, k, report.precision},
          {"recall", report.scope, k, report.recall},
          {"f1", report.scope, k, report.f1}};
}

inline std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream out;
  out << "metric,scope,K,value\n";
  char buf[64];
  for (const MetricRow& row : rows) {
    std::snprintf(buf, sizeof buf, "%.10g", row.value);
    out << row.metric << ',' << row.scope << ',' << row.k << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace themealign
