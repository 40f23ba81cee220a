#include "themealign/align.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "themealign/rng.hpp"

using namespace themealign;

namespace {

Paragraph make_par(std::string id, std::string heading,
                   const std::vector<std::string>& toks) {
  Paragraph p;
  p.id = std::move(id);
  if (!heading.empty()) p.heading = std::move(heading);
  for (const auto& t : toks) p.tokens.push_back(Token::from_raw(t));
  return p;
}

Document make_doc(std::string id, std::string lang, std::vector<Paragraph> pars) {
  Document d;
  d.id = std::move(id);
  d.lang = std::move(lang);
  d.paragraphs = std::move(pars);
  return d;
}

}  // namespace

TEST(FormSegments, RunLengthExample) {
  const std::vector<int> topics{1, 1, 2, 2, 2, 1};
  const auto segments = form_segments(topics, "doc");
  ASSERT_EQ(segments.size(), 3u);
  EXPECT_EQ(segments[0], (Segment{"doc", 1, 0, 1}));
  EXPECT_EQ(segments[1], (Segment{"doc", 2, 2, 4}));
  EXPECT_EQ(segments[2], (Segment{"doc", 1, 5, 5}));
}

TEST(FormSegments, SingleElement) {
  const auto segments = form_segments(std::vector<int>{7});
  ASSERT_EQ(segments.size(), 1u);
  EXPECT_EQ(segments[0].topic, 7);
  EXPECT_EQ(segments[0].start, 0);
  EXPECT_EQ(segments[0].end, 0);
}

TEST(FormSegments, AllEqualCollapsesToOneSegment) {
  const std::vector<int> topics(9, 3);
  const auto segments = form_segments(topics);
  ASSERT_EQ(segments.size(), 1u);
  EXPECT_EQ(segments[0].end, 8);
}

TEST(FormSegments, EmptySequenceThrows) {
  EXPECT_THROW(form_segments(std::vector<int>{}), ValidationError);
}

TEST(FormSegments, FlattenInvertsAndRunsAreMaximal) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> topics;
    const int len = 1 + rng.uniform_int(20);
    for (int i = 0; i < len; ++i) topics.push_back(rng.uniform_int(3));
    const auto segments = form_segments(topics);
    EXPECT_EQ(flatten_segments(segments), topics);
    for (std::size_t s = 1; s < segments.size(); ++s) {
      EXPECT_NE(segments[s].topic, segments[s - 1].topic);
      EXPECT_EQ(segments[s].start, segments[s - 1].end + 1);
    }
  }
}

TEST(Evaluate, OverlapCountingExample) {
  const std::map<std::string, std::string> topics{
      {"p1", "k1"}, {"p2", "k1"}, {"p3", "k1"}, {"p4", "k2"}};
  const std::map<std::string, std::string> headings{
      {"p1", "h1"}, {"p2", "h1"}, {"p3", "h2"}, {"p4", "h2"}};
  const auto report = evaluate_alignment(topics, headings);
  EXPECT_DOUBLE_EQ(report.recall, 0.75);
  EXPECT_DOUBLE_EQ(report.precision, 0.75);
  EXPECT_DOUBLE_EQ(report.f1, 0.75);
  EXPECT_EQ(report.labeled_paragraphs, 4);
}

TEST(Evaluate, BijectionScoresPerfectly) {
  std::map<std::string, std::string> topics, headings;
  for (int i = 0; i < 12; ++i) {
    const std::string key = "p" + std::to_string(i);
    topics[key] = "k" + std::to_string(i % 4);
    headings[key] = "h" + std::to_string(i % 4);
  }
  const auto report = evaluate_alignment(topics, headings);
  EXPECT_DOUBLE_EQ(report.precision, 1.0);
  EXPECT_DOUBLE_EQ(report.recall, 1.0);
  EXPECT_DOUBLE_EQ(report.f1, 1.0);
}

TEST(Evaluate, SingletonTopicsHavePerfectPrecision) {
  std::map<std::string, std::string> topics, headings;
  for (int i = 0; i < 5; ++i) {
    const std::string key = "p" + std::to_string(i);
    topics[key] = "solo" + std::to_string(i);
    headings[key] = i < 3 ? "h1" : "h2";
  }
  const auto report = evaluate_alignment(topics, headings);
  EXPECT_DOUBLE_EQ(report.precision, 1.0);
  EXPECT_DOUBLE_EQ(report.recall, 2.0 / 5.0);
}

TEST(Evaluate, InvariantUnderRelabeling) {
  Rng rng(8);
  std::map<std::string, std::string> topics, headings;
  for (int i = 0; i < 30; ++i) {
    const std::string key = "p" + std::to_string(i);
    topics[key] = "k" + std::to_string(rng.uniform_int(4));
    headings[key] = "h" + std::to_string(rng.uniform_int(3));
  }
  const auto base = evaluate_alignment(topics, headings);
  std::map<std::string, std::string> renamed_topics, renamed_headings;
  for (const auto& [key, label] : topics) renamed_topics[key] = "X" + label + "Y";
  for (const auto& [key, label] : headings) renamed_headings[key] = label + "_fr";
  const auto renamed = evaluate_alignment(renamed_topics, renamed_headings);
  EXPECT_DOUBLE_EQ(renamed.precision, base.precision);
  EXPECT_DOUBLE_EQ(renamed.recall, base.recall);
  EXPECT_DOUBLE_EQ(renamed.f1, base.f1);
}

TEST(Evaluate, OverlapMarginalsMatchCounts) {
  Rng rng(9);
  std::map<std::string, std::string> topics, headings;
  std::map<std::string, long long> by_heading, by_topic;
  for (int i = 0; i < 40; ++i) {
    const std::string key = "p" + std::to_string(i);
    const std::string k = "k" + std::to_string(rng.uniform_int(5));
    const std::string h = "h" + std::to_string(rng.uniform_int(4));
    topics[key] = k;
    headings[key] = h;
    ++by_heading[h];
    ++by_topic[k];
  }
  const auto report = evaluate_alignment(topics, headings);
  long long total = 0;
  for (std::size_t h = 0; h < report.heading_labels.size(); ++h) {
    long long row = 0;
    for (long long v : report.overlap[h]) {
      row += v;
      total += v;
    }
    EXPECT_EQ(row, by_heading[report.heading_labels[h]]);
  }
  for (std::size_t k = 0; k < report.topic_labels.size(); ++k) {
    long long col = 0;
    for (std::size_t h = 0; h < report.heading_labels.size(); ++h)
      col += report.overlap[h][k];
    EXPECT_EQ(col, by_topic[report.topic_labels[k]]);
  }
  EXPECT_EQ(total, report.labeled_paragraphs);
  EXPECT_GE(report.precision, 0.0);
  EXPECT_LE(report.precision, 1.0);
  EXPECT_GE(report.recall, 0.0);
  EXPECT_LE(report.recall, 1.0);
}

TEST(Evaluate, ExclusionsAreCountedNotScored) {
  const std::map<std::string, std::string> topics{
      {"p1", "k1"}, {"p2", "k1"}, {"p3", "k2"}};
  const std::map<std::string, std::string> headings{
      {"p1", "h1"}, {"p2", "h1"}, {"p9", "h9"}};
  const auto report = evaluate_alignment(topics, headings);
  EXPECT_EQ(report.excluded_without_heading, 1);  // p3
  EXPECT_EQ(report.excluded_without_topic, 1);    // p9
  EXPECT_EQ(report.labeled_paragraphs, 2);
  EXPECT_DOUBLE_EQ(report.precision, 1.0);
  EXPECT_DOUBLE_EQ(report.recall, 1.0);
}

TEST(Evaluate, DisjointKeySetsThrow) {
  const std::map<std::string, std::string> topics{{"p1", "k1"}};
  const std::map<std::string, std::string> headings{{"q1", "h1"}};
  EXPECT_THROW(evaluate_alignment(topics, headings), ValidationError);
}

TEST(TfIdfBaseline, IdenticalConceptMultisetsMerge) {
  Corpus a, b;
  a.documents.push_back(make_doc(
      "da", "en",
      {make_par("p1", "h1", {"c1", "c1", "c2", "filler"}), make_par("p2", "h2", {"c9"})}));
  b.documents.push_back(make_doc(
      "db", "fr",
      {make_par("q1", "h1", {"c1", "c1", "c2", "bourrage"}), make_par("q2", "h3", {"c8"})}));
  const auto result = tfidf_concept_baseline(a, b, 0.9);
  EXPECT_EQ(result.cluster_of.at("da#p1"), result.cluster_of.at("db#q1"));
  EXPECT_NE(result.cluster_of.at("da#p2"), result.cluster_of.at("db#q2"));
  EXPECT_DOUBLE_EQ(result.report.precision, 1.0);
  EXPECT_DOUBLE_EQ(result.report.recall, 1.0);
  EXPECT_EQ(result.report.scope, "bilingual");
}

TEST(TfIdfBaseline, DisjointConceptSetsStaySingleton) {
  Corpus a, b;
  a.documents.push_back(
      make_doc("da", "en", {make_par("p1", "h1", {"c1", "c2"})}));
  b.documents.push_back(
      make_doc("db", "fr", {make_par("q1", "h2", {"c3", "c4"})}));
  const auto result = tfidf_concept_baseline(a, b, 0.1);
  EXPECT_NE(result.cluster_of.at("da#p1"), result.cluster_of.at("db#q1"));
  EXPECT_DOUBLE_EQ(result.report.precision, 1.0);  // singletons
}

TEST(TfIdfBaseline, ZeroConceptParagraphStaysSingletonAtZeroThreshold) {
  Corpus a, b;
  a.documents.push_back(make_doc(
      "da", "en",
      {make_par("p1", "h1", {"plain", "words", "only"}), make_par("p2", "h2", {"c1", "c5"})}));
  b.documents.push_back(make_doc(
      "db", "fr", {make_par("q1", "h2", {"c1", "c5", "c5"}), make_par("q2", "h4", {"c7"})}));
  const auto result = tfidf_concept_baseline(a, b, 0.0);
  const std::string p1_cluster = result.cluster_of.at("da#p1");
  for (const auto& [key, cluster] : result.cluster_of)
    if (key != "da#p1") EXPECT_NE(cluster, p1_cluster);
  EXPECT_EQ(result.cluster_of.at("da#p2"), result.cluster_of.at("db#q1"));
}

TEST(TfIdfBaseline, LabelMapTranslatesCorpusBLabels) {
  Corpus a, b;
  a.documents.push_back(make_doc(
      "da", "en",
      {make_par("p1", "history", {"c1", "c1", "c2"}), make_par("fa", "geo", {"c6"})}));
  b.documents.push_back(make_doc(
      "db", "fr",
      {make_par("q1", "histoire", {"c1", "c1", "c2"}), make_par("fb", "géo", {"c7"})}));
  const auto unmapped = tfidf_concept_baseline(a, b, 0.9);
  EXPECT_DOUBLE_EQ(unmapped.report.precision, 0.75);
  const auto mapped =
      tfidf_concept_baseline(a, b, 0.9, {{"histoire", "history"}, {"géo", "geo2"}});
  EXPECT_DOUBLE_EQ(mapped.report.precision, 1.0);
  EXPECT_DOUBLE_EQ(mapped.report.recall, 1.0);
}

TEST(TranslationSimilarity, IdentityTableOnIdenticalParagraphs) {
  TranslationTable table;
  table.add("busy", "busy", 1.0);
  table.add("city", "city", 1.0);
  const Paragraph p = make_par("p1", "", {"busy", "city"});
  const Paragraph q = make_par("q1", "", {"busy", "city"});
  EXPECT_DOUBLE_EQ(translation_similarity(p, q, table), 1.0);
}

TEST(TranslationSimilarity, NoLinkingEntriesGiveZero) {
  TranslationTable table;
  table.add("otherword", "elsewhere", 0.8);
  const Paragraph p = make_par("p1", "", {"busy", "city"});
  const Paragraph q = make_par("q1", "", {"ville", "animée"});
  EXPECT_DOUBLE_EQ(translation_similarity(p, q, table), 0.0);
}

TEST(TranslationSimilarity, CountsWeightTheSum) {
  TranslationTable table;
  table.add("chat", "cat", 0.5);
  const Paragraph p = make_par("p1", "", {"chat", "chat"});
  const Paragraph q = make_par("q1", "", {"cat"});
  // forward: 2 * 0.5; backward: "cat" has no source entry -> 0; 1/(2+1).
  EXPECT_DOUBLE_EQ(translation_similarity(p, q, table), 1.0 / 3.0);
}

TEST(TranslationBaseline, EmptyTableThrows) {
  Corpus a, b;
  a.documents.push_back(make_doc("da", "en", {make_par("p1", "h1", {"x"})}));
  b.documents.push_back(make_doc("db", "fr", {make_par("q1", "h1", {"y"})}));
  EXPECT_THROW(translation_table_baseline(a, b, TranslationTable{}, 0.5),
               ValidationError);
}

TEST(TranslationBaseline, MergesTranslatedParagraphs) {
  TranslationTable table;
  table.add("chat", "cat", 0.9);
  table.add("cat", "chat", 0.9);
  table.add("ville", "city", 0.9);
  table.add("city", "ville", 0.9);
  Corpus a, b;
  a.documents.push_back(make_doc(
      "da", "fr",
      {make_par("p1", "animals", {"chat", "chat"}), make_par("p2", "places", {"ville"})}));
  b.documents.push_back(make_doc(
      "db", "en",
      {make_par("q1", "animals", {"cat"}), make_par("q2", "places", {"city", "city"})}));
  const auto result = translation_table_baseline(a, b, table, 0.5);
  EXPECT_EQ(result.cluster_of.at("da#p1"), result.cluster_of.at("db#q1"));
  EXPECT_EQ(result.cluster_of.at("da#p2"), result.cluster_of.at("db#q2"));
  EXPECT_NE(result.cluster_of.at("da#p1"), result.cluster_of.at("da#p2"));
  EXPECT_DOUBLE_EQ(result.report.f1, 1.0);
}

TEST(TranslationTableIo, LoadTsvSkipsCommentsAndValidates) {
  testutil::TempDir dir;
  const auto path = dir.file("table.tsv");
  testutil::write_file(path, "# comment line\nchat\tcat\t0.9\nville\tcity\t0.35\n");
  const auto table = TranslationTable::load_tsv(path);
  EXPECT_EQ(table.size(), 2u);
  TermVector targets{{"cat", 1.0}};
  EXPECT_DOUBLE_EQ(table.max_probability("chat", targets), 0.9);

  const auto bad = dir.file("bad.tsv");
  testutil::write_file(bad, "chat\tcat\n");
  EXPECT_THROW(TranslationTable::load_tsv(bad), ParseError);
  const auto worse = dir.file("worse.tsv");
  testutil::write_file(worse, "chat\tcat\tnotanumber\n");
  EXPECT_THROW(TranslationTable::load_tsv(worse), ParseError);
  TranslationTable range;
  EXPECT_THROW(range.add("a", "b", 1.5), ValidationError);
}

TEST(Cosine, BasicGeometry) {
  const TermVector x{{"a", 1.0}, {"b", 0.0}};
  const TermVector y{{"a", 2.0}};
  const TermVector z{{"b", 3.0}};
  EXPECT_DOUBLE_EQ(cosine_similarity(x, y), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(y, z), 0.0);
  const TermVector diag{{"a", 1.0}, {"b", 1.0}};
  const TermVector axis{{"a", 1.0}};
  EXPECT_NEAR(cosine_similarity(diag, axis), std::sqrt(0.5), 1e-12);
}

TEST(DocAlign, CopyCorpusAlignsPerfectlyInEveryMode) {
  Corpus a;
  a.documents.push_back(make_doc(
      "rome", "en", {make_par("p1", "", {"forum", "c11", "ruins"})}));
  a.documents.push_back(make_doc(
      "oslo", "en", {make_par("p1", "", {"fjord", "c22", "harbor"})}));
  a.documents.push_back(make_doc(
      "cairo", "en", {make_par("p1", "", {"nile", "c33", "desert"})}));
  Corpus b = a;
  for (auto& doc : b.documents) {
    doc.id += "_fr";
    doc.lang = "fr";
  }
  std::map<std::string, std::string> gold;
  for (const auto& doc : a.documents) gold[doc.id] = doc.id + "_fr";
  for (const DocRepr mode : {DocRepr::TfIdfWords, DocRepr::TfIdfConcepts}) {
    const auto result = align_documents(a, b, mode, gold);
    EXPECT_DOUBLE_EQ(result.accuracy, 1.0);
    EXPECT_EQ(result.evaluated, 3);
    EXPECT_TRUE(result.unpaired.empty());
  }
  std::map<std::string, TermVector> repr;
  for (const auto& doc : a.documents) {
    repr[doc.id] = {{doc.id + "-topic", 1.0}};
    repr[doc.id + "_fr"] = {{doc.id + "-topic", 1.0}};
  }
  const auto result =
      align_documents(a, b, DocRepr::DocSpecificTopic, gold, 20, &repr);
  EXPECT_DOUBLE_EQ(result.accuracy, 1.0);
}

TEST(DocAlign, GreedyMatchesBruteForceOnToyVectors) {
  const std::vector<std::pair<std::string, TermVector>> docs_a{
      {"a1", {{"alpha", 3.0}, {"ua1", 1.0}}},
      {"a2", {{"beta", 2.0}, {"ua2", 1.0}}},
      {"a3", {{"gamma", 4.0}, {"ua3", 1.0}}},
  };
  const std::vector<std::pair<std::string, TermVector>> docs_b{
      {"b1", {{"alpha", 1.0}, {"ub1", 1.0}}},
      {"b2", {{"beta", 5.0}, {"ub2", 1.0}}},
      {"b3", {{"gamma", 1.0}, {"ub3", 1.0}}},
  };
  const std::map<std::string, std::string> gold{
      {"a1", "b1"}, {"a2", "b2"}, {"a3", "b3"}};
  const auto greedy = align_document_vectors(docs_a, docs_b, gold);
  // Brute-force optimal assignment over all 3! pairings.
  std::vector<int> perm{0, 1, 2};
  double best = -1.0;
  std::vector<int> best_perm;
  do {
    double total = 0.0;
    for (int i = 0; i < 3; ++i)
      total += cosine_similarity(docs_a[i].second, docs_b[perm[i]].second);
    if (total > best) {
      best = total;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::map<std::string, std::string> greedy_map(greedy.pairs.begin(), greedy.pairs.end());
  for (int i = 0; i < 3; ++i)
    EXPECT_EQ(greedy_map.at(docs_a[i].first), docs_b[best_perm[i]].first);
  EXPECT_DOUBLE_EQ(greedy.accuracy, 1.0);
}

TEST(DocAlign, UnequalSizesPairTheMinimumAndReportTheRest) {
  const std::vector<std::pair<std::string, TermVector>> docs_a{
      {"a1", {{"alpha", 1.0}}}, {"a2", {{"beta", 1.0}}}, {"a3", {{"lonely", 1.0}}}};
  const std::vector<std::pair<std::string, TermVector>> docs_b{
      {"b1", {{"alpha", 1.0}}}, {"b2", {{"beta", 1.0}}}};
  const auto result = align_document_vectors(
      docs_a, docs_b, {{"a1", "b1"}, {"a2", "b2"}});
  EXPECT_EQ(result.pairs.size(), 2u);
  ASSERT_EQ(result.unpaired.size(), 1u);
  EXPECT_EQ(result.unpaired[0], "a3");
  EXPECT_DOUBLE_EQ(result.accuracy, 1.0);
}

TEST(DocAlign, TopicModeWithoutRepresentationThrows) {
  Corpus a, b;
  a.documents.push_back(make_doc("da", "en", {make_par("p1", "", {"x"})}));
  b.documents.push_back(make_doc("db", "fr", {make_par("q1", "", {"y"})}));
  EXPECT_THROW(align_documents(a, b, DocRepr::DocSpecificTopic, {}), ValidationError);
}

TEST(DocumentTerms, TopNAndTieBreaks) {
  const Document doc = make_doc(
      "d", "en", {make_par("p1", "", {"zz", "aa", "aa", "bb", "c7", "c7"})});
  std::map<std::string, long long> df{{"zz", 1}, {"aa", 1}, {"bb", 1}, {"c7", 1}};
  const auto top2 = document_tfidf_terms(doc, df, 4, 2, false);
  ASSERT_EQ(top2.size(), 2u);
  EXPECT_TRUE(top2.count("aa"));  // tf 2, beats the tf-1 words
  EXPECT_TRUE(top2.count("bb"));  // alphabetical tie-break among tf-1 words
  const auto concepts = document_tfidf_terms(doc, df, 4, 5, true);
  ASSERT_EQ(concepts.size(), 1u);
  EXPECT_TRUE(concepts.count("c7"));
}

TEST(Metrics, CsvFormatIsStable) {
  AlignmentReport report;
  report.precision = 0.75;
  report.recall = 0.5;
  report.f1 = 0.6;
  report.scope = "bilingual";
  const auto csv = metrics_csv(report_rows(report, 10));
  EXPECT_EQ(csv,
            "metric,scope,K,value\n"
            "precision,bilingual,10,0.75\n"
            "recall,bilingual,10,0.5\n"
            "f1,bilingual,10,0.6\n");
}
