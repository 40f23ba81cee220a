#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "themealign/corpus.hpp"
#include "themealign/parallel.hpp"

namespace themealign {

class SolverBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConceptCandidate {
  std::string id;
  double prior = 0.0;
};

// Canonical candidate order used by every tie-break: higher prior first,
// then lexicographic id.
inline bool candidate_order(const ConceptCandidate& a, const ConceptCandidate& b) {
  if (a.prior != b.prior) return a.prior > b.prior;
  return a.id < b.id;
}

// Surface form (1..n case-folded words, space-joined) -> candidate concepts.
class ConceptLexicon {
 public:
  void add(const std::string& surface, const std::string& concept_id, double prior) {
    if (surface.empty()) throw ValidationError("lexicon: empty surface form");
    if (!is_concept_id(concept_id))
      throw ValidationError("lexicon: malformed concept id '" + concept_id + "'");
    if (!(prior >= 0.0 && prior <= 1.0))
      throw ValidationError("lexicon: prior out of [0,1] for '" + surface + "'");
    std::string key = fold_case(surface);
    int tokens = 1 + static_cast<int>(std::count(key.begin(), key.end(), ' '));
    max_form_tokens_ = std::max(max_form_tokens_, tokens);
    entries_[key].push_back({concept_id, prior});
  }

  // Sorts candidate lists canonically and checks the per-surface prior budget.
  void finalize() {
    for (auto& [surface, candidates] : entries_) {
      std::sort(candidates.begin(), candidates.end(), candidate_order);
      double total = 0.0;
      for (const auto& c : candidates) total += c.prior;
      if (total > 1.0 + 1e-9)
        throw ValidationError("lexicon: priors for '" + surface + "' sum to " +
                              std::to_string(total) + " > 1");
    }
  }

  const std::vector<ConceptCandidate>* find(const std::string& surface) const {
    auto it = entries_.find(surface);
    return it == entries_.end() ? nullptr : &it->second;
  }

  int max_form_tokens() const { return max_form_tokens_; }
  std::size_t size() const { return entries_.size(); }

  // TSV lines: surface_form<TAB>conceptId<TAB>prior
  static ConceptLexicon load_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open lexicon file: " + path);
    ConceptLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      auto tab1 = line.find('\t');
      auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
      if (tab2 == std::string::npos)
        throw ParseError("lexicon line " + std::to_string(line_no) + ": expected 3 fields");
      try {
        lex.add(line.substr(0, tab1), line.substr(tab1 + 1, tab2 - tab1 - 1),
                std::stod(line.substr(tab2 + 1)));
      } catch (const ValidationError&) {
        throw;
      } catch (const std::exception& e) {
        throw ParseError("lexicon line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    lex.finalize();
    return lex;
  }

 private:
  std::unordered_map<std::string, std::vector<ConceptCandidate>> entries_;
  int max_form_tokens_ = 0;
};

// Undirected weighted concept-concept edges. Neighbor lists are kept sorted
// by id, so adjacency scans and neighborhood intersections are O(degree).
class RelationGraph {
 public:
  void add_edge(const std::string& u, const std::string& v, double weight) {
    if (u == v) throw ValidationError("relation graph: self-loop on '" + u + "'");
    if (!(weight >= 0.0) || !std::isfinite(weight))
      throw ValidationError("relation graph: bad weight for (" + u + ", " + v + ")");
    adjacency_[u][v] = weight;
    adjacency_[v][u] = weight;
    ++edges_;
  }

  bool has_edge(const std::string& u, const std::string& v) const {
    auto it = adjacency_.find(u);
    return it != adjacency_.end() && it->second.count(v) > 0;
  }

  double edge_weight(const std::string& u, const std::string& v) const {
    auto it = adjacency_.find(u);
    if (it == adjacency_.end()) return 0.0;
    auto jt = it->second.find(v);
    return jt == it->second.end() ? 0.0 : jt->second;
  }

  const std::map<std::string, double>* neighbors(const std::string& u) const {
    auto it = adjacency_.find(u);
    return it == adjacency_.end() ? nullptr : &it->second;
  }

  std::size_t edge_count() const { return edges_; }

  double neighborhood_jaccard(const std::string& u, const std::string& v) const {
    const auto* nu = neighbors(u);
    const auto* nv = neighbors(v);
    if (u == v) return nu && !nu->empty() ? 1.0 : 0.0;
    if (!nu || !nv || nu->empty() || nv->empty()) return 0.0;
    std::size_t shared = 0;
    auto iu = nu->begin();
    auto iv = nv->begin();
    while (iu != nu->end() && iv != nv->end()) {
      if (iu->first == iv->first) {
        ++shared;
        ++iu;
        ++iv;
      } else if (iu->first < iv->first) {
        ++iu;
      } else {
        ++iv;
      }
    }
    std::size_t united = nu->size() + nv->size() - shared;
    return united == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(united);
  }

  // Edge list: "conceptId conceptId weight", one per line, '#' comments.
  static RelationGraph load_edges(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open relation graph file: " + path);
    RelationGraph graph;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream fields(line);
      std::string u, v;
      double w;
      if (!(fields >> u)) continue;  // blank line
      if (!(fields >> v >> w))
        throw ParseError("relation graph line " + std::to_string(line_no) +
                         ": expected 'u v weight'");
      graph.add_edge(u, v, w);
    }
    return graph;
  }

 private:
  std::unordered_map<std::string, std::map<std::string, double>> adjacency_;
  std::size_t edges_ = 0;
};

// One mention span and the concepts it may refer to. The span is a
// half-open token range [begin, end) inside a single paragraph.
struct MentionPartition {
  std::string paragraph_id;
  int paragraph_index = 0;  // index within the owning document
  int begin = 0;
  int end = 0;
  std::string surface;
  std::vector<ConceptCandidate> candidates;  // canonical order
};

// Greedy longest-match, leftmost-first; spans never overlap and never cover
// pre-existing concept tokens.
inline std::vector<MentionPartition> match_mentions(const Paragraph& paragraph,
                                                    const ConceptLexicon& lexicon,
                                                    int paragraph_index = 0) {
  std::vector<MentionPartition> mentions;
  const auto& tokens = paragraph.tokens;
  const int n = static_cast<int>(tokens.size());
  int pos = 0;
  while (pos < n) {
    if (tokens[pos].is_concept()) {
      ++pos;
      continue;
    }
    int longest = 0;
    const std::vector<ConceptCandidate>* found = nullptr;
    std::string form;
    std::string best_form;
    const int max_len = std::min(lexicon.max_form_tokens(), n - pos);
    for (int len = 1; len <= max_len; ++len) {
      const Token& tok = tokens[pos + len - 1];
      if (tok.is_concept()) break;  // forms cannot span concept tokens
      if (len > 1) form += ' ';
      form += tok.surface;
      if (const auto* candidates = lexicon.find(form)) {
        longest = len;
        found = candidates;
        best_form = form;
      }
    }
    if (found) {
      MentionPartition m;
      m.paragraph_id = paragraph.id;
      m.paragraph_index = paragraph_index;
      m.begin = pos;
      m.end = pos + longest;
      m.surface = best_form;
      m.candidates = *found;
      mentions.push_back(std::move(m));
      pos += longest;
    } else {
      ++pos;
    }
  }
  return mentions;
}

// Complete n-partite selection problem: one node per candidate, explicit
// weights between nodes of different partitions.
struct DisambiguationInstance {
  std::vector<MentionPartition> partitions;
  std::vector<int> node_offset;              // partition -> first node index
  std::vector<std::vector<double>> weights;  // node x node, symmetric

  int node(int partition, int candidate) const {
    return node_offset[partition] + candidate;
  }
  int total_nodes() const {
    return partitions.empty()
               ? 0
               : node_offset.back() + static_cast<int>(partitions.back().candidates.size());
  }
  double weight(int pi, int ci, int pj, int cj) const {
    return weights[node(pi, ci)][node(pj, cj)];
  }

  // Blend of relation evidence and lexicon priors:
  //   w = 0.8 * relation + 0.2 * (prior_u + prior_v) / 2
  // where relation is the direct edge weight when present, otherwise the
  // Jaccard similarity of the two concepts' graph neighborhoods.
  static DisambiguationInstance build(std::vector<MentionPartition> mentions,
                                      const RelationGraph* graph) {
    DisambiguationInstance inst;
    inst.partitions = std::move(mentions);
    inst.node_offset.reserve(inst.partitions.size());
    int nodes = 0;
    for (const auto& p : inst.partitions) {
      inst.node_offset.push_back(nodes);
      nodes += static_cast<int>(p.candidates.size());
    }
    inst.weights.assign(nodes, std::vector<double>(nodes, 0.0));
    for (std::size_t i = 0; i < inst.partitions.size(); ++i) {
      for (std::size_t j = i + 1; j < inst.partitions.size(); ++j) {
        const auto& ci = inst.partitions[i].candidates;
        const auto& cj = inst.partitions[j].candidates;
        for (std::size_t a = 0; a < ci.size(); ++a) {
          for (std::size_t b = 0; b < cj.size(); ++b) {
            double relation = 0.0;
            if (graph) {
              if (graph->has_edge(ci[a].id, cj[b].id))
                relation = graph->edge_weight(ci[a].id, cj[b].id);
              else
                relation = graph->neighborhood_jaccard(ci[a].id, cj[b].id);
            }
            double w = 0.8 * relation + 0.2 * (ci[a].prior + cj[b].prior) / 2.0;
            int u = inst.node(static_cast<int>(i), static_cast<int>(a));
            int v = inst.node(static_cast<int>(j), static_cast<int>(b));
            inst.weights[u][v] = w;
            inst.weights[v][u] = w;
          }
        }
      }
    }
    return inst;
  }
};

enum class SolveMode { Exact, Greedy };

struct Selection {
  std::vector<int> choice;  // candidate index per partition
  double objective = 0.0;
};

inline double selection_objective(const DisambiguationInstance& inst,
                                  std::span<const int> choice) {
  double total = 0.0;
  for (std::size_t i = 0; i < inst.partitions.size(); ++i)
    for (std::size_t j = i + 1; j < inst.partitions.size(); ++j)
      total += inst.weight(static_cast<int>(i), choice[i], static_cast<int>(j), choice[j]);
  return total;
}

namespace detail {

inline Selection solve_greedy(const DisambiguationInstance& inst) {
  const int n = static_cast<int>(inst.partitions.size());
  Selection sel;
  sel.choice.assign(n, -1);
  if (n == 1) {
    sel.choice[0] = 0;  // canonical order puts the highest-prior candidate first
    return sel;
  }
  // Seed with the globally heaviest cross-partition edge.
  int best_i = 0, best_a = 0, best_j = 1, best_b = 0;
  double best_w = -1.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (std::size_t a = 0; a < inst.partitions[i].candidates.size(); ++a)
        for (std::size_t b = 0; b < inst.partitions[j].candidates.size(); ++b) {
          double w = inst.weight(i, static_cast<int>(a), j, static_cast<int>(b));
          if (w > best_w) {
            best_w = w;
            best_i = i;
            best_a = static_cast<int>(a);
            best_j = j;
            best_b = static_cast<int>(b);
          }
        }
  sel.choice[best_i] = best_a;
  sel.choice[best_j] = best_b;
  // Remaining partitions in index order: candidate adding the most weight.
  for (int p = 0; p < n; ++p) {
    if (sel.choice[p] >= 0) continue;
    int best_c = 0;
    double best_gain = -1.0;
    for (std::size_t c = 0; c < inst.partitions[p].candidates.size(); ++c) {
      double gain = 0.0;
      for (int q = 0; q < n; ++q)
        if (sel.choice[q] >= 0) gain += inst.weight(p, static_cast<int>(c), q, sel.choice[q]);
      if (gain > best_gain) {
        best_gain = gain;
        best_c = static_cast<int>(c);
      }
    }
    sel.choice[p] = best_c;
  }
  sel.objective = selection_objective(inst, sel.choice);
  return sel;
}

class BranchAndBound {
 public:
  explicit BranchAndBound(const DisambiguationInstance& inst)
      : inst_(inst), n_(static_cast<int>(inst.partitions.size())) {
    // suffix_pair_best_[i] = sum over partition pairs p<q, p>=i of the best edge.
    suffix_pair_best_.assign(n_ + 1, 0.0);
    for (int i = n_ - 1; i >= 0; --i) {
      double sum = suffix_pair_best_[i + 1];
      for (int q = i + 1; q < n_; ++q) {
        double best = 0.0;
        for (std::size_t a = 0; a < inst_.partitions[i].candidates.size(); ++a)
          for (std::size_t b = 0; b < inst_.partitions[q].candidates.size(); ++b)
            best = std::max(best, inst_.weight(i, static_cast<int>(a), q, static_cast<int>(b)));
        sum += best;
      }
      suffix_pair_best_[i] = sum;
    }
    current_.assign(n_, -1);
  }

  Selection solve() {
    descend(0, 0.0);
    Selection sel;
    sel.choice = best_choice_;
    sel.objective = best_value_;
    return sel;
  }

 private:
  // Admissible bound: edges already fixed + for every open partition its best
  // total edge weight into the fixed selection + best possible edges among
  // the open partitions themselves.
  double upper_bound(int depth, double score) const {
    double bound = score + suffix_pair_best_[depth];
    for (int p = depth; p < n_; ++p) {
      double best = 0.0;
      for (std::size_t c = 0; c < inst_.partitions[p].candidates.size(); ++c) {
        double gain = 0.0;
        for (int q = 0; q < depth; ++q)
          gain += inst_.weight(p, static_cast<int>(c), q, current_[q]);
        best = std::max(best, gain);
      }
      bound += best;
    }
    return bound;
  }

  void descend(int depth, double score) {
    if (depth == n_) {
      // Strict improvement keeps the first solution in canonical DFS order,
      // which realizes the (prior, id) tie-break.
      if (score > best_value_) {
        best_value_ = score;
        best_choice_ = current_;
      }
      return;
    }
    if (!best_choice_.empty() && upper_bound(depth, score) <= best_value_) return;
    const auto& candidates = inst_.partitions[depth].candidates;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      double gain = 0.0;
      for (int q = 0; q < depth; ++q)
        gain += inst_.weight(depth, static_cast<int>(c), q, current_[q]);
      current_[depth] = static_cast<int>(c);
      descend(depth + 1, score + gain);
    }
    current_[depth] = -1;
  }

  const DisambiguationInstance& inst_;
  int n_;
  std::vector<double> suffix_pair_best_;
  std::vector<int> current_;
  std::vector<int> best_choice_;
  double best_value_ = -std::numeric_limits<double>::infinity();
};

}  // namespace detail

inline Selection solve_max_weight_selection(const DisambiguationInstance& inst,
                                            SolveMode mode,
                                            double exact_budget = 1e6) {
  if (inst.partitions.empty())
    throw std::invalid_argument("solve_max_weight_selection: no partitions");
  for (const auto& p : inst.partitions)
    if (p.candidates.empty())
      throw ValidationError("disambiguation partition without candidates");
  if (mode == SolveMode::Greedy) return detail::solve_greedy(inst);
  double product = 1.0;
  for (const auto& p : inst.partitions) {
    product *= static_cast<double>(p.candidates.size());
    if (product > exact_budget)
      throw SolverBudgetError("instance size " + std::to_string(product) +
                              " exceeds exact-solver budget");
  }
  return detail::BranchAndBound(inst).solve();
}

enum class AnnotationScope { Paragraph, Document };

struct AnnotateOptions {
  AnnotationScope scope = AnnotationScope::Paragraph;
  SolveMode solver = SolveMode::Exact;
  bool greedy_fallback = true;  // used when Exact rejects an oversized instance
  double exact_budget = 1e6;
  int threads = 1;
};

namespace detail {

inline Selection solve_with_fallback(const DisambiguationInstance& inst,
                                     const AnnotateOptions& options) {
  if (options.solver == SolveMode::Greedy)
    return solve_greedy(inst);
  try {
    return solve_max_weight_selection(inst, SolveMode::Exact, options.exact_budget);
  } catch (const SolverBudgetError&) {
    if (!options.greedy_fallback) throw;
    return solve_greedy(inst);
  }
}

inline void apply_selection(Document& doc,
                            const std::vector<MentionPartition>& partitions,
                            const Selection& selection) {
  // Group chosen spans by paragraph, then rebuild each token sequence.
  std::vector<std::vector<std::pair<int, std::string>>> spans(doc.paragraphs.size());
  std::vector<std::vector<int>> ends(doc.paragraphs.size());
  for (std::size_t m = 0; m < partitions.size(); ++m) {
    const auto& part = partitions[m];
    spans[part.paragraph_index].push_back(
        {part.begin, part.candidates[selection.choice[m]].id});
    ends[part.paragraph_index].push_back(part.end);
  }
  for (std::size_t t = 0; t < doc.paragraphs.size(); ++t) {
    if (spans[t].empty()) continue;
    auto& tokens = doc.paragraphs[t].tokens;
    std::vector<Token> rebuilt;
    rebuilt.reserve(tokens.size());
    std::size_t next_span = 0;
    for (int pos = 0; pos < static_cast<int>(tokens.size());) {
      if (next_span < spans[t].size() && spans[t][next_span].first == pos) {
        rebuilt.push_back(Token::of_concept(spans[t][next_span].second));
        pos = ends[t][next_span];
        ++next_span;
      } else {
        rebuilt.push_back(tokens[pos]);
        ++pos;
      }
    }
    tokens = std::move(rebuilt);
  }
}

}  // namespace detail

// Replaces matched surface spans with concept tokens, one disambiguation
// instance per scope unit. Deterministic for fixed inputs.
inline Corpus annotate_corpus(const Corpus& corpus, const ConceptLexicon& lexicon,
                              const RelationGraph* graph,
                              const AnnotateOptions& options = {}) {
  Corpus annotated = corpus;
  parallel_for(static_cast<int>(annotated.documents.size()), options.threads, [&](int d) {
    Document& doc = annotated.documents[d];
    if (options.scope == AnnotationScope::Document) {
      std::vector<MentionPartition> all;
      for (std::size_t t = 0; t < doc.paragraphs.size(); ++t) {
        auto mentions = match_mentions(doc.paragraphs[t], lexicon, static_cast<int>(t));
        all.insert(all.end(), mentions.begin(), mentions.end());
      }
      if (all.empty()) return;
      auto inst = DisambiguationInstance::build(std::move(all), graph);
      auto selection = detail::solve_with_fallback(inst, options);
      detail::apply_selection(doc, inst.partitions, selection);
    } else {
      for (std::size_t t = 0; t < doc.paragraphs.size(); ++t) {
        auto mentions = match_mentions(doc.paragraphs[t], lexicon, static_cast<int>(t));
        if (mentions.empty()) continue;
        auto inst = DisambiguationInstance::build(std::move(mentions), graph);
        auto selection = detail::solve_with_fallback(inst, options);
        detail::apply_selection(doc, inst.partitions, selection);
      }
    }
  });
  validate_corpus(annotated);
  return annotated;
}

}  // namespace themealign
