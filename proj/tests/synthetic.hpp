#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "themealign/corpus.hpp"
#include "themealign/rng.hpp"

// Synthetic corpora drawn from the model's own generative story: per-document
// sticky topic chains, and per-token roles (background / document-specific /
// theme-specific) with disjoint word supports. The generator's labels are the
// oracle for every recovery test.
namespace synthetic {

struct Config {
  int num_docs = 20;
  int num_topics = 5;
  int min_paragraphs = 8;
  int max_paragraphs = 12;
  int tokens_per_paragraph = 45;
  int background_words = 100;
  int doc_specific_words = 10;  // per document
  int theme_words_per_topic = 40;
  double sticky = 8.0;  // diagonal bonus of the transition Dirichlet
  std::uint64_t seed = 1;
};

struct Sample {
  themealign::Corpus corpus;
  std::vector<std::vector<int>> topics;               // gold z per paragraph
  std::vector<std::vector<std::vector<int>>> roles;   // gold role per token
};

inline double normal_draw(themealign::Rng& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Marsaglia-Tsang; shapes below 1 go through the boost identity.
inline double gamma_draw(themealign::Rng& rng, double shape) {
  if (shape < 1.0) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    return gamma_draw(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = normal_draw(rng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

inline std::vector<double> dirichlet(themealign::Rng& rng,
                                     const std::vector<double>& alpha) {
  std::vector<double> draw(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    draw[i] = gamma_draw(rng, alpha[i]);
    total += draw[i];
  }
  for (double& v : draw) v /= total;
  return draw;
}

inline Sample generate(const Config& cfg) {
  themealign::Rng rng(cfg.seed);

  // Word id layout: [0, B) background, then per-doc blocks, then per-topic.
  const int doc_base = cfg.background_words;
  const int theme_base = doc_base + cfg.num_docs * cfg.doc_specific_words;
  auto word_name = [](int id) { return "w" + std::to_string(id); };

  // Few very frequent background words, like real stopword mass.
  const auto background_dist =
      dirichlet(rng, std::vector<double>(cfg.background_words, 0.05));
  std::vector<std::vector<double>> topic_dist(cfg.num_topics);
  for (int j = 0; j < cfg.num_topics; ++j)
    topic_dist[j] = dirichlet(rng, std::vector<double>(cfg.theme_words_per_topic, 0.1));
  std::vector<std::vector<double>> doc_dist(cfg.num_docs);
  for (int m = 0; m < cfg.num_docs; ++m)
    doc_dist[m] = dirichlet(rng, std::vector<double>(cfg.doc_specific_words, 1.0));

  const auto initial = dirichlet(rng, std::vector<double>(cfg.num_topics, 1.0));
  std::vector<std::vector<double>> transition(cfg.num_topics);
  for (int j = 0; j < cfg.num_topics; ++j) {
    std::vector<double> alpha(cfg.num_topics, 0.5);
    alpha[j] += cfg.sticky;
    transition[j] = dirichlet(rng, alpha);
  }

  Sample sample;
  sample.topics.resize(cfg.num_docs);
  sample.roles.resize(cfg.num_docs);
  for (int m = 0; m < cfg.num_docs; ++m) {
    themealign::Document doc;
    doc.id = "doc" + std::to_string(m);
    doc.lang = "xx";
    doc.title = doc.id;
    const int num_pars =
        cfg.min_paragraphs + rng.uniform_int(cfg.max_paragraphs - cfg.min_paragraphs + 1);
    int topic = rng.categorical(initial);
    sample.roles[m].resize(num_pars);
    for (int t = 0; t < num_pars; ++t) {
      if (t > 0) topic = rng.categorical(transition[topic]);
      sample.topics[m].push_back(topic);
      themealign::Paragraph par;
      par.id = "p" + std::to_string(t);
      par.heading = "t" + std::to_string(topic);
      const auto mixture = dirichlet(rng, {3.0, 2.0, 3.0});
      for (int i = 0; i < cfg.tokens_per_paragraph; ++i) {
        const int role = rng.categorical(mixture);
        int word;
        if (role == 0)
          word = rng.categorical(background_dist);
        else if (role == 1)
          word = doc_base + m * cfg.doc_specific_words + rng.categorical(doc_dist[m]);
        else
          word = theme_base + topic * cfg.theme_words_per_topic +
                 rng.categorical(topic_dist[topic]);
        par.tokens.push_back(themealign::Token::word(word_name(word)));
        sample.roles[m][t].push_back(role);
      }
      doc.paragraphs.push_back(std::move(par));
    }
    sample.corpus.documents.push_back(std::move(doc));
  }
  themealign::validate_corpus(sample.corpus);
  return sample;
}

}  // namespace synthetic
