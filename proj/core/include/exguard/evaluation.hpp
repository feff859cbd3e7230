#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "exguard/analysis.hpp"
#include "exguard/chain.hpp"
#include "exguard/prompts.hpp"

namespace exguard {

struct LoopStats {
  std::map<std::size_t, std::size_t> histogram;  // loop_count -> converged tasks
  std::size_t total = 0;                          // all results, converged or not
  /// Per loop-count group: sum of all per-loop unhandled counts divided by
  /// (tasks in group * loop count).
  std::map<std::size_t, double> avg_unhandled_by_loop;
  /// Per loop-count group: the mean unhandled count at each loop index.
  std::map<std::size_t, std::vector<double>> per_loop_means;

  /// Fraction of all results that converged within k loops.
  double within_k(std::size_t k) const;
  std::size_t completed() const;
};

/// Statistics over the Converged results. Throws EmptyResults on an empty list.
LoopStats loop_stats(std::span<const ChainResult> results);

struct QualityMatrix {
  std::vector<PromptMode> modes;  // column order
  std::map<PromptMode, std::map<QualityLabel, std::size_t>> counts;
  std::map<PromptMode, std::size_t> errored;
  std::map<PromptMode, std::size_t> tasks;

  std::size_t count(PromptMode m, QualityLabel q) const;
  std::size_t errored_in(PromptMode m) const;
};

inline constexpr QualityLabel kAllLabels[] = {QualityLabel::IncompleteExceptionHandling,
                                              QualityLabel::IncorrectExceptionHandling,
                                              QualityLabel::AbuseOfTryCatch, QualityLabel::GoodPractice};

/// Runs every task once per mode (generation plus one exception-prompt round)
/// and classifies the output. Failed tasks are counted as errored.
QualityMatrix quality_matrix(std::span<const CodingTask> corpus, const KnowledgeBase& kb, ChatClient& client,
                             std::span<const PromptMode> modes, const ChainConfig& base = {});

/// Matrix over stored results; a result with no quality label or an LlmError counts as errored.
QualityMatrix quality_matrix_from_results(std::span<const ChainResult> results);

/// Asks the good-practice Y/N question about `code`. Throws UnparseableVerdict.
bool llm_eva(std::string_view code, ChatClient& client, const ChainConfig& config = {});
std::string llm_eva_prompt(std::string_view code);

/// Sample size for a 0.05 margin of error at 95% confidence.
inline constexpr std::size_t kMinSampleSize = 384;

/// `n` distinct indices from [0, population), in ascending order, drawn with a
/// seeded mt19937_64. Returns every index when n >= population.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed);

// ---- report emitters ----

std::vector<std::pair<std::size_t, std::size_t>> histogram_pairs(const LoopStats& s);
std::string loop_stats_to_json(const LoopStats& s);
std::string render_loop_stats(const LoopStats& s);
std::string quality_matrix_to_json(const QualityMatrix& m);
/// Rows are quality labels, columns are modes, plus an errored row.
std::string render_quality_table(const QualityMatrix& m);

}  // namespace exguard
