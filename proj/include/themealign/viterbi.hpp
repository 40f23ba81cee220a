#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace themealign {

struct ViterbiResult {
  std::vector<int> path;
  double log_probability = 0.0;
};

inline double sequence_log_probability(
    std::span<const int> path, std::span<const double> log_initial,
    const std::vector<std::vector<double>>& log_transition,
    const std::vector<std::vector<double>>& log_emission) {
  if (path.empty()) return 0.0;
  double total = log_initial[path[0]] + log_emission[0][path[0]];
  for (std::size_t t = 1; t < path.size(); ++t)
    total += log_transition[path[t - 1]][path[t]] + log_emission[t][path[t]];
  return total;
}

// Max-probability state sequence; ties resolved toward the lower state index.
inline ViterbiResult viterbi_path(
    std::span<const double> log_initial,
    const std::vector<std::vector<double>>& log_transition,
    const std::vector<std::vector<double>>& log_emission) {
  const int num_states = static_cast<int>(log_initial.size());
  const int length = static_cast<int>(log_emission.size());
  if (num_states <= 0) throw std::invalid_argument("viterbi: no states");
  ViterbiResult result;
  if (length == 0) return result;

  std::vector<std::vector<double>> score(length, std::vector<double>(num_states));
  std::vector<std::vector<int>> back(length, std::vector<int>(num_states, 0));
  for (int j = 0; j < num_states; ++j)
    score[0][j] = log_initial[j] + log_emission[0][j];
  for (int t = 1; t < length; ++t) {
    for (int j = 0; j < num_states; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int i = 0; i < num_states; ++i) {
        double s = score[t - 1][i] + log_transition[i][j];
        if (s > best) {
          best = s;
          arg = i;
        }
      }
      score[t][j] = best + log_emission[t][j];
      back[t][j] = arg;
    }
  }
  int last = 0;
  for (int j = 1; j < num_states; ++j)
    if (score[length - 1][j] > score[length - 1][last]) last = j;
  result.log_probability = score[length - 1][last];
  result.path.assign(length, 0);
  result.path[length - 1] = last;
  for (int t = length - 1; t > 0; --t)
    result.path[t - 1] = back[t][result.path[t]];
  return result;
}

}  // namespace themealign
