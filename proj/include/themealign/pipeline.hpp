#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "themealign/align.hpp"
#include "themealign/concept_annotator.hpp"
#include "themealign/corpus.hpp"
#include "themealign/lda2.hpp"
#include "themealign/model_io.hpp"
#include "themealign/parallel.hpp"
#include "themealign/theme_hmm.hpp"
#include "themealign/viterbi.hpp"

namespace themealign {

// Raw configuration as collected from flags/config file. Negative hyper
// values mean "derive from the data": beta = eta = W/100000, gamma = W/|P|,
// lambda = 50/K.
struct PipelineConfig {
  std::string corpus;
  std::string corpus2;
  std::string lexicon;
  std::string relations;
  std::string ttable;
  std::string model;
  std::string assignments;
  std::string gold;       // gold document pairing (docalign)
  std::string label_map;  // gold heading translation map
  std::string out;

  int k = 10;
  double eta = -1.0;
  double gamma = -1.0;
  double beta = -1.0;
  double lambda = -1.0;
  double alpha = 0.01;
  double kappa = 1000.0;
  int iters = 200;
  int burnin = 100;
  std::uint64_t seed = 1;
  bool boost = true;
  bool viterbi_mixture = true;
  double threshold = 0.5;
  int threads = 1;
  int topn = 20;
  std::string scope = "paragraph";  // annotation scope
  std::string solver = "exact";
  std::string mode = "concepts";  // baseline: concepts | ttable | docalign
  std::string repr = "topics";    // docalign: words | concepts | topics
};

inline WTopicHyper derive_wtopic_hyper(const PipelineConfig& cfg, int vocab_size,
                                       long long total_paragraphs) {
  WTopicHyper h;
  h.eta = cfg.eta > 0.0 ? cfg.eta : static_cast<double>(vocab_size) / 100000.0;
  h.gamma = cfg.gamma > 0.0
                ? cfg.gamma
                : static_cast<double>(vocab_size) / static_cast<double>(total_paragraphs);
  h.iterations = cfg.iters;
  h.burn_in = cfg.burnin;
  h.seed = cfg.seed;
  h.validate();
  return h;
}

inline ThemeHyper derive_theme_hyper(const PipelineConfig& cfg, int vocab_size) {
  ThemeHyper h;
  h.num_topics = cfg.k;
  h.beta = cfg.beta > 0.0 ? cfg.beta : static_cast<double>(vocab_size) / 100000.0;
  h.lambda = cfg.lambda > 0.0 ? cfg.lambda : 50.0 / static_cast<double>(cfg.k);
  h.alpha = cfg.alpha;
  h.kappa = cfg.kappa;
  h.use_concept_boost = cfg.boost;
  h.viterbi_use_mixture = cfg.viterbi_mixture;
  h.iterations = cfg.iters;
  h.burn_in = cfg.burnin;
  h.seed = cfg.seed;
  h.validate();
  return h;
}

// FNV-1a over the semantic configuration, for provenance checks.
inline std::string config_hash(const PipelineConfig& cfg) {
  std::ostringstream ss;
  ss << cfg.corpus << '|' << cfg.corpus2 << '|' << cfg.lexicon << '|'
     << cfg.relations << '|' << cfg.ttable << '|' << cfg.k << '|' << cfg.eta << '|'
     << cfg.gamma << '|' << cfg.beta << '|' << cfg.lambda << '|' << cfg.alpha << '|'
     << cfg.kappa << '|' << cfg.iters << '|' << cfg.burnin << '|' << cfg.seed << '|'
     << cfg.boost << '|' << cfg.viterbi_mixture << '|' << cfg.threshold << '|'
     << cfg.scope << '|' << cfg.solver;
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : ss.str()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// MAP word-role classification for decode: the frequency bias g times the
// trained role-word factor. The document-specific component of g comes from
// the document being decoded; known training documents also contribute their
// learned document-specific counts.
namespace detail {

inline std::vector<std::vector<int>> decode_theme_tokens(const Document& doc,
                                                         const Model& model,
                                                         const Vocabulary& vocab) {
  const int model_doc = model.doc_index(doc.id);
  std::unordered_map<int, long long> local_par_df;
  for (const Paragraph& par : doc.paragraphs) {
    std::unordered_set<int> seen;
    for (const Token& tok : par.tokens) {
      const int w = vocab.find(tok.surface);
      if (w >= 0) seen.insert(w);
    }
    for (int w : seen) ++local_par_df[w];
  }
  const double num_pars = static_cast<double>(doc.paragraphs.size());
  const double w_eta = static_cast<double>(model.wstate.vocab_size) * model.whyper.eta;
  const double ds_total =
      model_doc >= 0 ? static_cast<double>(model.wstate.doc_specific_total[model_doc]) : 0.0;

  std::vector<std::vector<int>> theme_tokens(doc.paragraphs.size());
  for (std::size_t t = 0; t < doc.paragraphs.size(); ++t) {
    for (const Token& tok : doc.paragraphs[t].tokens) {
      const int w = vocab.find(tok.surface);
      std::array<double, 3> g{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
      std::array<double, 3> word_factor;
      if (w >= 0) {
        const double g1 = static_cast<double>(model.tables.paragraph_df[w]) /
                          static_cast<double>(model.tables.total_paragraphs);
        const double g2 = static_cast<double>(local_par_df[w]) / num_pars;
        const double g3 = static_cast<double>(model.tables.document_df[w]) /
                          static_cast<double>(model.tables.total_documents) * (1.0 - g1);
        const double total = g1 + g2 + g3;
        if (total > 0.0) g = {g1 / total, g2 / total, g3 / total};
      }
      const double ds_count =
          model_doc >= 0 && w >= 0
              ? static_cast<double>(model.wstate.doc_word(model_doc, w))
              : 0.0;
      word_factor = {
          ((w >= 0 ? static_cast<double>(model.wstate.background_word_count[w]) : 0.0) +
           model.whyper.eta) /
              (static_cast<double>(model.wstate.background_total) + w_eta),
          (ds_count + model.whyper.eta) / (ds_total + w_eta),
          ((w >= 0 ? static_cast<double>(model.wstate.theme_word_count[w]) : 0.0) +
           model.whyper.eta) /
              (static_cast<double>(model.wstate.theme_total) + w_eta)};
      int role = 0;
      double best = -1.0;
      for (int l = 0; l < kNumWTopics; ++l) {
        const double score = g[l] * word_factor[l];
        if (score > best) {
          best = score;
          role = l;
        }
      }
      if (role == kThemeSpecific) theme_tokens[t].push_back(w);
    }
  }
  return theme_tokens;
}

}  // namespace detail

struct DecodedDocument {
  std::string doc_id;
  std::vector<int> topics;
  double log_probability = 0.0;
};

inline DecodedDocument decode_document(const Document& doc, const Model& model,
                                       const Vocabulary& vocab,
                                       const BoostIndex* boost = nullptr) {
  const auto theme_tokens = detail::decode_theme_tokens(doc, model, vocab);
  const int model_doc = model.doc_index(doc.id);
  const std::vector<long long>* doc_row =
      model_doc >= 0 ? &model.tstate.doc_topic[model_doc] : nullptr;
  const ViterbiResult result =
      viterbi_decode(theme_tokens, doc_row, model.tstate, model.thyper, boost);
  return {doc.id, result.path, result.log_probability};
}

// ---- command implementations (CLI-agnostic; throw on error) ----

inline void cmd_annotate(const PipelineConfig& cfg, std::ostream& diag = std::cerr) {
  if (cfg.corpus.empty()) throw ValidationError("annotate: --corpus is required");
  if (cfg.lexicon.empty()) throw ValidationError("annotate: --lexicon is required");
  if (cfg.out.empty()) throw ValidationError("annotate: --out is required");
  Corpus corpus = load_corpus(cfg.corpus);
  ConceptLexicon lexicon = ConceptLexicon::load_tsv(cfg.lexicon);
  RelationGraph graph;
  if (!cfg.relations.empty()) graph = RelationGraph::load_edges(cfg.relations);

  AnnotateOptions options;
  options.scope = cfg.scope == "document" ? AnnotationScope::Document
                                          : AnnotationScope::Paragraph;
  options.solver = cfg.solver == "greedy" ? SolveMode::Greedy : SolveMode::Exact;
  options.threads = cfg.threads;
  Corpus annotated = annotate_corpus(corpus, lexicon, &graph, options);
  save_corpus(cfg.out, annotated);

  const CorpusStats before = corpus_stats(corpus);
  const CorpusStats after = corpus_stats(annotated);
  diag << "annotate: " << before.documents << " documents, " << before.paragraphs
       << " paragraphs, " << before.tokens << " tokens in, " << after.tokens
       << " tokens out, " << after.concept_vocabulary << " distinct concepts\n";
}

inline Corpus load_training_corpus(const PipelineConfig& cfg) {
  if (cfg.corpus.empty()) throw ValidationError("--corpus is required");
  Corpus corpus = load_corpus(cfg.corpus);
  if (!cfg.corpus2.empty()) corpus = concatenate(corpus, load_corpus(cfg.corpus2));
  return corpus;
}

inline Model train_model(const Corpus& corpus, const PipelineConfig& cfg,
                         const RelationGraph* graph, std::ostream& diag = std::cerr) {
  if (corpus.documents.empty()) throw ValidationError("train: corpus is empty");
  if (cfg.k < 2) throw ValidationError("train: K must be at least 2");
  const Vocabulary vocab = Vocabulary::build(corpus);
  const FrequencyTables tables = build_frequency_tables(corpus, vocab);
  const WTopicHyper whyper =
      derive_wtopic_hyper(cfg, vocab.size(), tables.total_paragraphs);
  const ThemeHyper thyper = derive_theme_hyper(cfg, vocab.size());

  WTopicSampler wsampler(corpus, vocab, tables, whyper);
  wsampler.run();

  ThemeSampler tsampler(corpus, vocab, wsampler.state(), thyper,
                        cfg.boost ? graph : nullptr);
  tsampler.run();

  Model model;
  model.config_hash = config_hash(cfg);
  model.whyper = whyper;
  model.thyper = thyper;
  model.vocabulary = vocab.words();
  for (const Document& doc : corpus.documents) {
    model.doc_ids.push_back(doc.id);
    model.doc_langs.push_back(doc.lang);
  }
  model.tables = tables;
  model.wstate = wsampler.take_state();
  model.docs_without_theme_tokens = tsampler.diagnostics().docs_without_theme_tokens;
  model.tstate = tsampler.take_state();

  diag << "train: W=" << vocab.size() << " P=" << tables.total_paragraphs
       << " K=" << thyper.num_topics << " eta=" << whyper.eta
       << " gamma=" << whyper.gamma << " beta=" << thyper.beta
       << " lambda=" << thyper.lambda << " kappa=" << thyper.kappa << '\n';
  for (const auto& id : model.docs_without_theme_tokens)
    diag << "train: document '" << id << "' has no theme-specific tokens\n";
  return model;
}

inline void cmd_train(const PipelineConfig& cfg, std::ostream& diag = std::cerr) {
  if (cfg.out.empty()) throw ValidationError("train: --out is required");
  const Corpus corpus = load_training_corpus(cfg);
  RelationGraph graph;
  const bool have_graph = !cfg.relations.empty();
  if (have_graph) graph = RelationGraph::load_edges(cfg.relations);
  const Model model = train_model(corpus, cfg, have_graph ? &graph : nullptr, diag);
  save_model(cfg.out, model);
}

inline void cmd_decode(const PipelineConfig& cfg, std::ostream& diag = std::cerr) {
  if (cfg.model.empty()) throw ValidationError("decode: --model is required");
  if (cfg.corpus.empty()) throw ValidationError("decode: --corpus is required");
  if (cfg.out.empty()) throw ValidationError("decode: --out is required");
  const Model model = load_model(cfg.model);
  const Corpus corpus = load_corpus(cfg.corpus);
  const Vocabulary vocab = model.vocab();

  std::unique_ptr<BoostIndex> boost;
  if (model.thyper.use_concept_boost && cfg.boost) {
    if (!cfg.relations.empty()) {
      RelationGraph graph = RelationGraph::load_edges(cfg.relations);
      boost = std::make_unique<BoostIndex>(vocab, graph);
    } else {
      diag << "decode: model was trained with the concept boost but no "
              "--relations file was given; decoding without it\n";
    }
  }

  std::vector<DecodedDocument> decoded(corpus.size());
  parallel_for(static_cast<int>(corpus.size()), cfg.threads, [&](int d) {
    decoded[d] = decode_document(corpus.documents[d], model, vocab, boost.get());
  });

  std::ofstream out(cfg.out);
  if (!out) throw std::runtime_error("cannot write assignments file: " + cfg.out);
  for (const DecodedDocument& doc : decoded) {
    nlohmann::ordered_json j;
    j["doc"] = doc.doc_id;
    j["topics"] = doc.topics;
    out << j.dump() << '\n';
  }
  diag << "decode: " << decoded.size() << " documents\n";
}

// Join decode output with corpus paragraph ids: topics come per paragraph
// index, the corpus supplies ids and gold headings.
inline std::map<std::string, std::string> topics_for_corpus(
    const Corpus& corpus, const std::string& assignments_path) {
  std::ifstream in(assignments_path);
  if (!in) throw ParseError("cannot open assignments file: " + assignments_path);
  std::map<std::string, std::vector<int>> per_doc;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      per_doc[j.at("doc").get<std::string>()] = j.at("topics").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("assignments line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::map<std::string, std::string> topics;
  for (const Document& doc : corpus.documents) {
    auto it = per_doc.find(doc.id);
    if (it == per_doc.end()) continue;
    if (it->second.size() != doc.paragraphs.size())
      throw ValidationError("assignments for document '" + doc.id +
                            "' cover " + std::to_string(it->second.size()) +
                            " paragraphs, corpus has " +
                            std::to_string(doc.paragraphs.size()));
    for (std::size_t t = 0; t < doc.paragraphs.size(); ++t)
      topics[paragraph_key(doc.id, doc.paragraphs[t].id)] =
          std::to_string(it->second[t]);
  }
  return topics;
}

inline std::map<std::string, std::string> load_pair_map_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open map file: " + path);
  std::map<std::string, std::string> map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("map file line " + std::to_string(line_no) +
                       ": expected two tab-separated fields");
    map[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return map;
}

inline nlohmann::ordered_json report_to_json(const AlignmentReport& report, int k) {
  nlohmann::ordered_json j;
  j["scope"] = report.scope;
  j["k"] = k;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f1"] = report.f1;
  j["labeled_paragraphs"] = report.labeled_paragraphs;
  j["excluded_without_heading"] = report.excluded_without_heading;
  j["excluded_without_topic"] = report.excluded_without_topic;
  j["heading_labels"] = report.heading_labels;
  j["topic_labels"] = report.topic_labels;
  j["overlap"] = report.overlap;
  return j;
}

inline void write_report(const std::string& out_path, const AlignmentReport& report,
                         int k, std::ostream& diag) {
  const auto rows = report_rows(report, k);
  if (out_path.empty()) {
    std::cout << metrics_csv(rows);
  } else {
    std::ofstream csv(out_path);
    if (!csv) throw std::runtime_error("cannot write report: " + out_path);
    csv << metrics_csv(rows);
    std::ofstream json(out_path + ".json");
    if (!json) throw std::runtime_error("cannot write report: " + out_path + ".json");
    json << report_to_json(report, k).dump(1) << '\n';
  }
  diag << "eval: scope=" << report.scope << " P=" << report.precision
       << " R=" << report.recall << " F=" << report.f1 << " ("
       << report.labeled_paragraphs << " labeled paragraphs, "
       << report.excluded_without_heading << " without heading, "
       << report.excluded_without_topic << " without topic)\n";
}

inline void cmd_eval(const PipelineConfig& cfg, std::ostream& diag = std::cerr) {
  if (cfg.corpus.empty()) throw ValidationError("eval: --corpus is required");
  if (cfg.assignments.empty()) throw ValidationError("eval: --assignments is required");
  Corpus corpus = load_corpus(cfg.corpus);
  if (!cfg.corpus2.empty()) corpus = concatenate(corpus, load_corpus(cfg.corpus2));
  const auto topics = topics_for_corpus(corpus, cfg.assignments);
  auto headings = headings_from_corpus(corpus);
  if (!cfg.label_map.empty())
    headings = apply_label_map(headings, load_pair_map_tsv(cfg.label_map));
  const std::string scope = cfg.corpus2.empty() ? "mono" : "bilingual";
  const AlignmentReport report = evaluate_alignment(topics, headings, scope);
  write_report(cfg.out, report, cfg.k, diag);
}

inline std::map<std::string, TermVector> doc_topic_term_vectors(const Model& model,
                                                                int top_n) {
  const double w_eta =
      static_cast<double>(model.wstate.vocab_size) * model.whyper.eta;
  std::map<std::string, TermVector> vectors;
  for (std::size_t d = 0; d < model.doc_ids.size(); ++d) {
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(model.wstate.doc_word_count[d].size());
    const double denom =
        static_cast<double>(model.wstate.doc_specific_total[d]) + w_eta;
    for (const auto& [w, count] : model.wstate.doc_word_count[d])
      if (count > 0)
        scored.emplace_back(model.vocabulary[w],
                            (static_cast<double>(count) + model.whyper.eta) / denom);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
      if (x.second != y.second) return x.second > y.second;
      return x.first < y.first;
    });
    if (static_cast<int>(scored.size()) > top_n) scored.resize(top_n);
    vectors.emplace(model.doc_ids[d], TermVector(scored.begin(), scored.end()));
  }
  return vectors;
}

inline void cmd_baseline(const PipelineConfig& cfg, std::ostream& diag = std::cerr) {
  if (cfg.mode == "concepts" || cfg.mode == "ttable") {
    if (cfg.corpus.empty() || cfg.corpus2.empty())
      throw ValidationError("baseline: --corpus and --corpus2 are required");
    const Corpus a = load_corpus(cfg.corpus);
    const Corpus b = load_corpus(cfg.corpus2);
    std::map<std::string, std::string> label_map;
    if (!cfg.label_map.empty()) label_map = load_pair_map_tsv(cfg.label_map);
    BaselineResult result;
    if (cfg.mode == "concepts") {
      result = tfidf_concept_baseline(a, b, cfg.threshold, label_map);
    } else {
      if (cfg.ttable.empty()) throw ValidationError("baseline: --ttable is required");
      const TranslationTable table = TranslationTable::load_tsv(cfg.ttable);
      result = translation_table_baseline(a, b, table, cfg.threshold, label_map);
    }
    write_report(cfg.out, result.report, 0, diag);
    return;
  }
  if (cfg.mode == "docalign") {
    if (cfg.corpus.empty() || cfg.corpus2.empty())
      throw ValidationError("baseline: --corpus and --corpus2 are required");
    if (cfg.gold.empty()) throw ValidationError("baseline: --gold is required");
    const Corpus a = load_corpus(cfg.corpus);
    const Corpus b = load_corpus(cfg.corpus2);
    const auto gold = load_pair_map_tsv(cfg.gold);
    DocRepr repr;
    std::map<std::string, TermVector> topic_vectors;
    const std::map<std::string, TermVector>* topic_ptr = nullptr;
    if (cfg.repr == "words") {
      repr = DocRepr::TfIdfWords;
    } else if (cfg.repr == "concepts") {
      repr = DocRepr::TfIdfConcepts;
    } else if (cfg.repr == "topics") {
      repr = DocRepr::DocSpecificTopic;
      if (cfg.model.empty())
        throw ValidationError("baseline: --model is required for --repr topics");
      const Model model = load_model(cfg.model);
      topic_vectors = doc_topic_term_vectors(model, cfg.topn);
      topic_ptr = &topic_vectors;
    } else {
      throw ValidationError("baseline: unknown --repr '" + cfg.repr + "'");
    }
    const DocAlignment alignment = align_documents(a, b, repr, gold, cfg.topn, topic_ptr);
    std::vector<MetricRow> rows{
        {"accuracy", "docalign:" + cfg.repr, cfg.k, alignment.accuracy}};
    if (cfg.out.empty()) {
      std::cout << metrics_csv(rows);
    } else {
      std::ofstream csv(cfg.out);
      if (!csv) throw std::runtime_error("cannot write report: " + cfg.out);
      csv << metrics_csv(rows);
      nlohmann::ordered_json j;
      j["mode"] = "docalign";
      j["repr"] = cfg.repr;
      j["accuracy"] = alignment.accuracy;
      j["correct"] = alignment.correct;
      j["evaluated"] = alignment.evaluated;
      auto& jp = j["pairs"] = nlohmann::ordered_json::array();
      for (const auto& [x, y] : alignment.pairs) jp.push_back({x, y});
      j["unpaired"] = alignment.unpaired;
      std::ofstream json(cfg.out + ".json");
      if (!json) throw std::runtime_error("cannot write report: " + cfg.out + ".json");
      json << j.dump(1) << '\n';
    }
    diag << "docalign: repr=" << cfg.repr << " accuracy=" << alignment.accuracy
         << " (" << alignment.correct << "/" << alignment.evaluated << ")\n";
    for (const auto& id : alignment.unpaired)
      diag << "docalign: unpaired document '" << id << "'\n";
    return;
  }
  throw ValidationError("baseline: unknown --mode '" + cfg.mode + "'");
}

}  // namespace themealign
