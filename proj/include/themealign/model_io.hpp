#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "themealign/corpus.hpp"
#include "themealign/lda2.hpp"
#include "themealign/theme_hmm.hpp"

namespace themealign {

// Everything a trained run needs to decode and evaluate later. Sparse count
// tables are stored as sorted [id, count] pairs so a save -> load -> save
// cycle is byte-identical.
struct Model {
  std::string config_hash;
  WTopicHyper whyper;
  ThemeHyper thyper;
  std::vector<std::string> vocabulary;  // index = word id
  std::vector<std::string> doc_ids;
  std::vector<std::string> doc_langs;
  FrequencyTables tables;
  WTopicState wstate;
  ThemeState tstate;
  std::vector<std::string> docs_without_theme_tokens;

  Vocabulary vocab() const {
    Vocabulary v;
    for (const auto& w : vocabulary) v.add(w);
    return v;
  }

  int doc_index(const std::string& id) const {
    for (std::size_t i = 0; i < doc_ids.size(); ++i)
      if (doc_ids[i] == id) return static_cast<int>(i);
    return -1;
  }
};

namespace detail {

inline nlohmann::ordered_json sparse_counts(
    const std::unordered_map<int, long long>& table) {
  std::map<int, long long> sorted(table.begin(), table.end());
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [id, count] : sorted)
    if (count != 0) arr.push_back({id, count});
  return arr;
}

inline nlohmann::ordered_json sparse_counts(const std::vector<long long>& dense) {
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < dense.size(); ++i)
    if (dense[i] != 0) arr.push_back({static_cast<long long>(i), dense[i]});
  return arr;
}

inline void read_sparse(const nlohmann::json& arr,
                        std::unordered_map<int, long long>& table) {
  for (const auto& pair : arr) table[pair.at(0).get<int>()] = pair.at(1).get<long long>();
}

inline void read_sparse(const nlohmann::json& arr, std::vector<long long>& dense) {
  for (const auto& pair : arr) dense.at(pair.at(0).get<int>()) = pair.at(1).get<long long>();
}

}  // namespace detail

inline nlohmann::ordered_json model_to_json(const Model& model) {
  nlohmann::ordered_json j;
  j["format"] = "themealign-model";
  j["version"] = 1;
  j["config_hash"] = model.config_hash;

  auto& jw = j["wtopic_hyper"];
  jw["eta"] = model.whyper.eta;
  jw["gamma"] = model.whyper.gamma;
  jw["iterations"] = model.whyper.iterations;
  jw["burn_in"] = model.whyper.burn_in;
  jw["seed"] = model.whyper.seed;

  auto& jt = j["theme_hyper"];
  jt["k"] = model.thyper.num_topics;
  jt["beta"] = model.thyper.beta;
  jt["lambda"] = model.thyper.lambda;
  jt["alpha"] = model.thyper.alpha;
  jt["kappa"] = model.thyper.kappa;
  jt["use_concept_boost"] = model.thyper.use_concept_boost;
  jt["boost_exponent"] = model.thyper.boost_exponent;
  jt["viterbi_use_mixture"] = model.thyper.viterbi_use_mixture;
  jt["iterations"] = model.thyper.iterations;
  jt["burn_in"] = model.thyper.burn_in;
  jt["seed"] = model.thyper.seed;

  j["vocabulary"] = model.vocabulary;
  j["doc_ids"] = model.doc_ids;
  j["doc_langs"] = model.doc_langs;

  auto& jf = j["frequency_tables"];
  jf["paragraph_df"] = detail::sparse_counts(model.tables.paragraph_df);
  jf["document_df"] = detail::sparse_counts(model.tables.document_df);
  auto& jdp = jf["doc_paragraph_df"] = nlohmann::ordered_json::array();
  for (const auto& table : model.tables.doc_paragraph_df)
    jdp.push_back(detail::sparse_counts(table));
  jf["paragraphs_in_doc"] = model.tables.paragraphs_in_doc;
  jf["total_paragraphs"] = model.tables.total_paragraphs;
  jf["total_documents"] = model.tables.total_documents;

  auto& js = j["wtopic_state"];
  js["vocab_size"] = model.wstate.vocab_size;
  js["background"] = detail::sparse_counts(model.wstate.background_word_count);
  js["background_total"] = model.wstate.background_total;
  js["theme"] = detail::sparse_counts(model.wstate.theme_word_count);
  js["theme_total"] = model.wstate.theme_total;
  auto& jdw = js["doc_word"] = nlohmann::ordered_json::array();
  for (const auto& table : model.wstate.doc_word_count)
    jdw.push_back(detail::sparse_counts(table));
  js["doc_specific_total"] = model.wstate.doc_specific_total;
  js["assignments"] = model.wstate.assignments;

  auto& jz = j["theme_state"];
  jz["vocab_size"] = model.tstate.vocab_size;
  auto& jtw = jz["topic_word"] = nlohmann::ordered_json::array();
  for (const auto& row : model.tstate.topic_word)
    jtw.push_back(detail::sparse_counts(row));
  jz["topic_total"] = model.tstate.topic_total;
  jz["doc_topic"] = model.tstate.doc_topic;
  jz["transitions"] = model.tstate.transitions;
  jz["initial_counts"] = model.tstate.initial_counts;
  jz["topic_of"] = model.tstate.topic_of;

  j["docs_without_theme_tokens"] = model.docs_without_theme_tokens;
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "themealign-model")
    throw ParseError("not a themealign model file");
  Model model;
  model.config_hash = j.at("config_hash").get<std::string>();

  const auto& jw = j.at("wtopic_hyper");
  model.whyper.eta = jw.at("eta").get<double>();
  model.whyper.gamma = jw.at("gamma").get<double>();
  model.whyper.iterations = jw.at("iterations").get<int>();
  model.whyper.burn_in = jw.at("burn_in").get<int>();
  model.whyper.seed = jw.at("seed").get<std::uint64_t>();

  const auto& jt = j.at("theme_hyper");
  model.thyper.num_topics = jt.at("k").get<int>();
  model.thyper.beta = jt.at("beta").get<double>();
  model.thyper.lambda = jt.at("lambda").get<double>();
  model.thyper.alpha = jt.at("alpha").get<double>();
  model.thyper.kappa = jt.at("kappa").get<double>();
  model.thyper.use_concept_boost = jt.at("use_concept_boost").get<bool>();
  model.thyper.boost_exponent = jt.at("boost_exponent").get<double>();
  model.thyper.viterbi_use_mixture = jt.at("viterbi_use_mixture").get<bool>();
  model.thyper.iterations = jt.at("iterations").get<int>();
  model.thyper.burn_in = jt.at("burn_in").get<int>();
  model.thyper.seed = jt.at("seed").get<std::uint64_t>();

  model.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  model.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
  model.doc_langs = j.at("doc_langs").get<std::vector<std::string>>();
  const int vocab_size = static_cast<int>(model.vocabulary.size());
  const std::size_t num_docs = model.doc_ids.size();

  const auto& jf = j.at("frequency_tables");
  model.tables.paragraph_df.assign(vocab_size, 0);
  detail::read_sparse(jf.at("paragraph_df"), model.tables.paragraph_df);
  model.tables.document_df.assign(vocab_size, 0);
  detail::read_sparse(jf.at("document_df"), model.tables.document_df);
  model.tables.doc_paragraph_df.resize(num_docs);
  for (std::size_t d = 0; d < num_docs; ++d)
    detail::read_sparse(jf.at("doc_paragraph_df").at(d), model.tables.doc_paragraph_df[d]);
  model.tables.paragraphs_in_doc =
      jf.at("paragraphs_in_doc").get<std::vector<long long>>();
  model.tables.total_paragraphs = jf.at("total_paragraphs").get<long long>();
  model.tables.total_documents = jf.at("total_documents").get<long long>();

  const auto& js = j.at("wtopic_state");
  model.wstate.vocab_size = js.at("vocab_size").get<int>();
  model.wstate.background_word_count.assign(vocab_size, 0);
  detail::read_sparse(js.at("background"), model.wstate.background_word_count);
  model.wstate.background_total = js.at("background_total").get<long long>();
  model.wstate.theme_word_count.assign(vocab_size, 0);
  detail::read_sparse(js.at("theme"), model.wstate.theme_word_count);
  model.wstate.theme_total = js.at("theme_total").get<long long>();
  model.wstate.doc_word_count.resize(num_docs);
  for (std::size_t d = 0; d < num_docs; ++d)
    detail::read_sparse(js.at("doc_word").at(d), model.wstate.doc_word_count[d]);
  model.wstate.doc_specific_total =
      js.at("doc_specific_total").get<std::vector<long long>>();
  model.wstate.assignments =
      js.at("assignments")
          .get<std::vector<std::vector<std::vector<std::uint8_t>>>>();
  model.wstate.paragraph_role_count.resize(num_docs);
  for (std::size_t d = 0; d < num_docs; ++d) {
    model.wstate.paragraph_role_count[d].assign(model.wstate.assignments[d].size(),
                                                {0, 0, 0});
    for (std::size_t t = 0; t < model.wstate.assignments[d].size(); ++t)
      for (std::uint8_t role : model.wstate.assignments[d][t])
        ++model.wstate.paragraph_role_count[d][t][role];
  }

  const auto& jz = j.at("theme_state");
  model.tstate.vocab_size = jz.at("vocab_size").get<int>();
  const auto& jtw = jz.at("topic_word");
  model.tstate.topic_word.assign(jtw.size(), std::vector<long long>(vocab_size, 0));
  for (std::size_t k = 0; k < jtw.size(); ++k)
    detail::read_sparse(jtw.at(k), model.tstate.topic_word[k]);
  model.tstate.topic_total = jz.at("topic_total").get<std::vector<long long>>();
  model.tstate.doc_topic =
      jz.at("doc_topic").get<std::vector<std::vector<long long>>>();
  model.tstate.transitions =
      jz.at("transitions").get<std::vector<std::vector<long long>>>();
  model.tstate.initial_counts =
      jz.at("initial_counts").get<std::vector<long long>>();
  model.tstate.topic_of = jz.at("topic_of").get<std::vector<std::vector<int>>>();

  model.docs_without_theme_tokens =
      j.value("docs_without_theme_tokens", std::vector<std::string>());
  return model;
}

inline void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << model_to_json(model).dump(1) << '\n';
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file '") + path + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace themealign
