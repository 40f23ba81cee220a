#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "themealign/pipeline.hpp"

namespace {

std::string trim(std::string s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.erase(s.begin());
  while (!s.empty() && is_space(s.back())) s.pop_back();
  return s;
}

// key=value lines routed through the subcommand's own option callbacks, so
// config values get the same conversion and validation as flags. Options
// already given on the command line keep their values: flags beat the file,
// and the file beats THEMEALIGN_SEED because the environment only changes
// the seed's default.
void apply_config_file(CLI::App& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw themealign::ParseError("cannot open config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw themealign::ParseError("config file line " + std::to_string(line_no) +
                                   ": expected key=value");
    const std::string key = trim(entry.substr(0, eq));
    CLI::Option* opt = cmd.get_option_no_throw("--" + key);
    if (!opt || key == "config")
      throw themealign::ParseError("config file line " + std::to_string(line_no) +
                                   ": unknown option '" + key + "'");
    if (opt->count() > 0) continue;
    opt->add_result(trim(entry.substr(eq + 1)));
    opt->run_callback();
  }
}

// Shared option set; every subcommand accepts the full list so a single
// config file can drive a whole run. Flags override the file, the file
// overrides THEMEALIGN_SEED, which overrides the built-in defaults.
void add_options(CLI::App* cmd, themealign::PipelineConfig& cfg, std::string& config_path) {
  cmd->add_option("--config", config_path, "key=value configuration file");
  cmd->add_option("--corpus", cfg.corpus, "corpus JSONL file");
  cmd->add_option("--corpus2", cfg.corpus2, "second-language corpus JSONL file");
  cmd->add_option("--lexicon", cfg.lexicon, "surface-to-concept lexicon TSV");
  cmd->add_option("--relations", cfg.relations, "concept relation edge list");
  cmd->add_option("--ttable", cfg.ttable, "translation table TSV");
  cmd->add_option("--model", cfg.model, "model JSON file");
  cmd->add_option("--assignments", cfg.assignments, "decoded assignments JSONL");
  cmd->add_option("--gold", cfg.gold, "gold document pairing TSV");
  cmd->add_option("--label-map", cfg.label_map, "gold heading translation TSV");
  cmd->add_option("--out", cfg.out, "output file");
  cmd->add_option("--k", cfg.k, "number of t-topics");
  cmd->add_option("--eta", cfg.eta, "word-role smoothing (default W/100000)");
  cmd->add_option("--gamma", cfg.gamma, "role-mixture smoothing (default W/|P|)");
  cmd->add_option("--beta", cfg.beta, "topic-word smoothing (default W/100000)");
  cmd->add_option("--lambda", cfg.lambda, "mixture smoothing (default 50/K)");
  cmd->add_option("--alpha", cfg.alpha, "transition smoothing");
  cmd->add_option("--kappa", cfg.kappa, "self-transition bonus");
  cmd->add_option("--iters", cfg.iters, "Gibbs iterations");
  cmd->add_option("--burnin", cfg.burnin, "burn-in iterations");
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_flag("--boost,!--no-boost", cfg.boost, "concept-relation boost");
  cmd->add_flag("--viterbi-mixture,!--no-viterbi-mixture", cfg.viterbi_mixture,
                "include the document mixture in decode emissions");
  cmd->add_option("--threshold", cfg.threshold, "baseline merge threshold");
  cmd->add_option("--threads", cfg.threads, "worker thread cap");
  cmd->add_option("--topn", cfg.topn, "terms per document representation");
  cmd->add_option("--scope", cfg.scope, "annotation scope: paragraph | document")
      ->check(CLI::IsMember({"paragraph", "document"}));
  cmd->add_option("--solver", cfg.solver, "disambiguation solver: exact | greedy")
      ->check(CLI::IsMember({"exact", "greedy"}));
  cmd->add_option("--mode", cfg.mode, "baseline: concepts | ttable | docalign")
      ->check(CLI::IsMember({"concepts", "ttable", "docalign"}));
  cmd->add_option("--repr", cfg.repr, "docalign representation: words | concepts | topics")
      ->check(CLI::IsMember({"words", "concepts", "topics"}));
}

}  // namespace

int main(int argc, char** argv) {
  themealign::PipelineConfig cfg;
  if (const char* env_seed = std::getenv("THEMEALIGN_SEED")) {
    try {
      cfg.seed = std::stoull(env_seed);
    } catch (const std::exception&) {
      std::cerr << "error: THEMEALIGN_SEED is not an integer: " << env_seed << '\n';
      return 1;
    }
  }

  CLI::App app{"Paragraph-level theme segmentation and cross-lingual alignment"};
  app.require_subcommand(1);

  auto* annotate = app.add_subcommand("annotate", "replace lexicon matches with concept ids");
  auto* train = app.add_subcommand("train", "run both Gibbs samplers and save the model");
  auto* decode = app.add_subcommand("decode", "Viterbi topic sequences for each document");
  auto* eval = app.add_subcommand("eval", "score assignments against gold headings");
  auto* baseline = app.add_subcommand("baseline", "tf-idf / translation-table / docalign baselines");
  std::string config_path;
  for (CLI::App* cmd : {annotate, train, decode, eval, baseline})
    add_options(cmd, cfg, config_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      CLI::App* active = annotate->parsed()   ? annotate
                         : train->parsed()    ? train
                         : decode->parsed()   ? decode
                         : eval->parsed()     ? eval
                                              : baseline;
      apply_config_file(*active, config_path);
    }
    if (annotate->parsed()) themealign::cmd_annotate(cfg);
    if (train->parsed()) themealign::cmd_train(cfg);
    if (decode->parsed()) themealign::cmd_decode(cfg);
    if (eval->parsed()) themealign::cmd_eval(cfg);
    if (baseline->parsed()) themealign::cmd_baseline(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
