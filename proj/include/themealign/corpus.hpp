#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace themealign {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TokenKind { Word, Concept };

// Concept identifiers have the form "c" + digits, e.g. "c553795".
inline bool is_concept_id(std::string_view s) {
  if (s.size() < 2 || s[0] != 'c') return false;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

// ASCII-only fold; the corpora are pre-tokenized and already lowercased,
// multi-byte sequences pass through unchanged.
inline std::string fold_case(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

struct Token {
  std::string surface;  // folded word, or the concept id itself
  TokenKind kind = TokenKind::Word;

  bool is_concept() const { return kind == TokenKind::Concept; }

  // For concept tokens the surface is the identifier.
  std::optional<std::string_view> concept_id() const {
    if (kind == TokenKind::Concept) return std::string_view(surface);
    return std::nullopt;
  }

  static Token word(std::string s) { return {fold_case(std::move(s)), TokenKind::Word}; }
  static Token of_concept(std::string id) { return {std::move(id), TokenKind::Concept}; }

  // Classify a raw corpus token: concept ids are kept verbatim, words folded.
  static Token from_raw(const std::string& raw) {
    if (is_concept_id(raw)) return of_concept(raw);
    return word(raw);
  }

  bool operator==(const Token&) const = default;
};

struct Paragraph {
  std::string id;
  std::optional<std::string> heading;  // gold section label, absent at inference time
  std::vector<Token> tokens;

  bool operator==(const Paragraph&) const = default;
};

struct Document {
  std::string id;
  std::string lang;
  std::string title;
  std::vector<Paragraph> paragraphs;

  bool operator==(const Document&) const = default;
};

struct Corpus {
  std::vector<Document> documents;

  std::size_t size() const { return documents.size(); }

  int document_index(const std::string& id) const {
    for (std::size_t i = 0; i < documents.size(); ++i)
      if (documents[i].id == id) return static_cast<int>(i);
    return -1;
  }

  std::set<std::string> languages() const {
    std::set<std::string> langs;
    for (const auto& d : documents) langs.insert(d.lang);
    return langs;
  }

  std::size_t paragraph_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.paragraphs.size();
    return n;
  }

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& d : documents)
      for (const auto& p : d.paragraphs) n += p.tokens.size();
    return n;
  }

  bool operator==(const Corpus&) const = default;
};

inline void validate_document(const Document& doc) {
  if (doc.id.empty()) throw ValidationError("document with empty id");
  if (doc.lang.empty())
    throw ValidationError("document '" + doc.id + "' has empty language code");
  if (doc.paragraphs.empty())
    throw ValidationError("document '" + doc.id + "' has no paragraphs");
  std::unordered_set<std::string> par_ids;
  for (const auto& par : doc.paragraphs) {
    if (!par_ids.insert(par.id).second)
      throw ValidationError("document '" + doc.id + "' has duplicate paragraph id '" +
                            par.id + "'");
    if (par.tokens.empty())
      throw ValidationError("document '" + doc.id + "' paragraph '" + par.id +
                            "' is empty");
    for (const auto& tok : par.tokens)
      if (tok.surface.empty())
        throw ValidationError("document '" + doc.id + "' paragraph '" + par.id +
                              "' contains an empty token");
  }
}

inline void validate_corpus(const Corpus& corpus) {
  std::unordered_set<std::string> doc_ids;
  for (const auto& doc : corpus.documents) {
    validate_document(doc);
    if (!doc_ids.insert(doc.id).second)
      throw ValidationError("duplicate document id '" + doc.id + "'");
  }
}

// Corpus JSONL: one document object per line.
inline Document parse_document_json(const nlohmann::json& j) {
  Document doc;
  doc.id = j.at("id").get<std::string>();
  doc.lang = j.at("lang").get<std::string>();
  doc.title = j.value("title", std::string());
  for (const auto& jp : j.at("paragraphs")) {
    Paragraph par;
    par.id = jp.at("id").get<std::string>();
    if (jp.contains("heading") && !jp.at("heading").is_null())
      par.heading = jp.at("heading").get<std::string>();
    for (const auto& jt : jp.at("tokens"))
      par.tokens.push_back(Token::from_raw(jt.get<std::string>()));
    doc.paragraphs.push_back(std::move(par));
  }
  return doc;
}

inline Corpus read_corpus_jsonl(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      corpus.documents.push_back(parse_document_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_corpus(corpus);
  return corpus;
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open corpus file: " + path);
  return read_corpus_jsonl(in);
}

inline nlohmann::ordered_json document_to_json(const Document& doc) {
  nlohmann::ordered_json j;
  j["id"] = doc.id;
  j["lang"] = doc.lang;
  j["title"] = doc.title;
  auto& pars = j["paragraphs"] = nlohmann::ordered_json::array();
  for (const auto& par : doc.paragraphs) {
    nlohmann::ordered_json jp;
    jp["id"] = par.id;
    if (par.heading) jp["heading"] = *par.heading;
    auto& toks = jp["tokens"] = nlohmann::ordered_json::array();
    for (const auto& tok : par.tokens) toks.push_back(tok.surface);
    pars.push_back(std::move(jp));
  }
  return j;
}

inline void write_corpus_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& doc : corpus.documents) out << document_to_json(doc).dump() << '\n';
}

inline void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  write_corpus_jsonl(out, corpus);
}

// Appends the documents of b after those of a; ids must stay unique.
// This is the bilingual mode: concept ids collide across languages by
// construction, plain words only on identical strings.
inline Corpus concatenate(const Corpus& a, const Corpus& b) {
  Corpus merged = a;
  merged.documents.insert(merged.documents.end(), b.documents.begin(),
                          b.documents.end());
  validate_corpus(merged);
  return merged;
}

class Vocabulary {
 public:
  int add(const std::string& word) {
    auto [it, inserted] = index_.try_emplace(word, static_cast<int>(words_.size()));
    if (inserted) words_.push_back(word);
    return it->second;
  }

  int find(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? -1 : it->second;
  }

  const std::string& word(int index) const { return words_.at(index); }
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

  static Vocabulary build(const Corpus& corpus) {
    Vocabulary v;
    for (const auto& d : corpus.documents)
      for (const auto& p : d.paragraphs)
        for (const auto& t : p.tokens) v.add(t.surface);
    return v;
  }

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> words_;
};

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t paragraphs = 0;
  std::size_t tokens = 0;
  std::size_t vocabulary = 0;          // distinct token strings
  std::size_t word_vocabulary = 0;     // plain words only
  std::size_t concept_vocabulary = 0;  // concept ids only
};

inline CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.documents = corpus.size();
  std::unordered_set<std::string> words, concepts;
  for (const auto& d : corpus.documents)
    for (const auto& p : d.paragraphs) {
      ++s.paragraphs;
      for (const auto& t : p.tokens) {
        ++s.tokens;
        (t.is_concept() ? concepts : words).insert(t.surface);
      }
    }
  s.word_vocabulary = words.size();
  s.concept_vocabulary = concepts.size();
  words.insert(concepts.begin(), concepts.end());
  s.vocabulary = words.size();
  return s;
}

// Document/paragraph occurrence counts. A word occurring twice in one
// paragraph still contributes 1 to each table.
struct FrequencyTables {
  std::vector<long long> paragraph_df;  // paragraphs (collection-wide) containing w
  std::vector<long long> document_df;   // documents containing w
  std::vector<std::unordered_map<int, long long>> doc_paragraph_df;  // per doc: w -> #paragraphs
  std::vector<long long> paragraphs_in_doc;
  long long total_paragraphs = 0;
  long long total_documents = 0;

  long long doc_paragraph_count(int doc, int word) const {
    const auto& table = doc_paragraph_df.at(doc);
    auto it = table.find(word);
    return it == table.end() ? 0 : it->second;
  }
};

inline FrequencyTables build_frequency_tables(const Corpus& corpus,
                                              const Vocabulary& vocab) {
  if (corpus.documents.empty())
    throw ValidationError("cannot build frequency tables for an empty corpus");
  FrequencyTables t;
  t.paragraph_df.assign(vocab.size(), 0);
  t.document_df.assign(vocab.size(), 0);
  t.doc_paragraph_df.resize(corpus.size());
  t.paragraphs_in_doc.assign(corpus.size(), 0);
  t.total_documents = static_cast<long long>(corpus.size());
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const Document& doc = corpus.documents[d];
    t.paragraphs_in_doc[d] = static_cast<long long>(doc.paragraphs.size());
    t.total_paragraphs += t.paragraphs_in_doc[d];
    std::unordered_set<int> in_doc;
    for (const auto& par : doc.paragraphs) {
      std::unordered_set<int> in_par;
      for (const auto& tok : par.tokens) {
        int w = vocab.find(tok.surface);
        if (w >= 0) in_par.insert(w);
      }
      for (int w : in_par) {
        ++t.paragraph_df[w];
        ++t.doc_paragraph_df[d][w];
        in_doc.insert(w);
      }
    }
    for (int w : in_doc) ++t.document_df[w];
  }
  return t;
}

}  // namespace themealign
