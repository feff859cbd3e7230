#include "exguard/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "exguard/errors.hpp"
#include "json.hpp"

namespace exguard {

using nlohmann::ordered_json;

double LoopStats::within_k(std::size_t k) const {
  if (total == 0) return 0.0;
  std::size_t n = 0;
  for (const auto& [loops, count] : histogram) {
    if (loops <= k) n += count;
  }
  return static_cast<double>(n) / static_cast<double>(total);
}

std::size_t LoopStats::completed() const {
  std::size_t n = 0;
  for (const auto& [loops, count] : histogram) n += count;
  return n;
}

LoopStats loop_stats(std::span<const ChainResult> results) {
  if (results.empty()) throw EmptyResults("loop statistics need at least one result");
  LoopStats s;
  s.total = results.size();
  std::map<std::size_t, std::vector<double>> sums;
  for (const auto& r : results) {
    if (r.termination != Termination::Converged) continue;
    const auto loops = r.loop_count;
    ++s.histogram[loops];
    auto& acc = sums[loops];
    acc.resize(loops, 0.0);
    for (std::size_t i = 0; i < loops && i < r.unhandled_per_loop.size(); ++i) {
      acc[i] += static_cast<double>(r.unhandled_per_loop[i]);
    }
  }
  for (auto& [loops, acc] : sums) {
    const auto n = static_cast<double>(s.histogram[loops]);
    const double total = std::accumulate(acc.begin(), acc.end(), 0.0);
    s.avg_unhandled_by_loop[loops] = loops == 0 ? 0.0 : total / (n * static_cast<double>(loops));
    for (auto& v : acc) v /= n;
    s.per_loop_means[loops] = acc;
  }
  return s;
}

std::size_t QualityMatrix::count(PromptMode m, QualityLabel q) const {
  const auto it = counts.find(m);
  if (it == counts.end()) return 0;
  const auto jt = it->second.find(q);
  return jt == it->second.end() ? 0 : jt->second;
}

std::size_t QualityMatrix::errored_in(PromptMode m) const {
  const auto it = errored.find(m);
  return it == errored.end() ? 0 : it->second;
}

namespace {

void add_mode(QualityMatrix& m, PromptMode mode) {
  if (std::find(m.modes.begin(), m.modes.end(), mode) != m.modes.end()) return;
  m.modes.push_back(mode);
  for (auto q : kAllLabels) m.counts[mode][q] = 0;
  m.errored[mode] = 0;
  m.tasks[mode] = 0;
}

void tally(QualityMatrix& m, const ChainResult& r) {
  add_mode(m, r.mode);
  ++m.tasks[r.mode];
  if (r.termination == Termination::LlmError || !r.quality) {
    ++m.errored[r.mode];
  } else {
    ++m.counts[r.mode][*r.quality];
  }
}

}  // namespace

QualityMatrix quality_matrix(std::span<const CodingTask> corpus, const KnowledgeBase& kb, ChatClient& client,
                             std::span<const PromptMode> modes, const ChainConfig& base) {
  QualityMatrix m;
  for (auto mode : modes) {
    add_mode(m, mode);
    auto config = base;
    config.mode = mode;
    for (const auto& task : corpus) {
      try {
        tally(m, run_single_round(task, kb, client, config));
      } catch (const Error&) {
        ++m.tasks[mode];
        ++m.errored[mode];
      }
    }
  }
  return m;
}

QualityMatrix quality_matrix_from_results(std::span<const ChainResult> results) {
  QualityMatrix m;
  for (const auto& r : results) tally(m, r);
  std::sort(m.modes.begin(), m.modes.end());
  return m;
}

std::string llm_eva_prompt(std::string_view code) {
  return "```java\n" + std::string(code) + "\n```\n" + std::string(kLlmEvaPrompt);
}

bool llm_eva(std::string_view code, ChatClient& client, const ChainConfig& config) {
  ChatRequest req;
  req.messages.push_back({"user", llm_eva_prompt(code)});
  req.model = config.model;
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;
  return parse_verdict(client.complete(req));
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n >= population) return idx;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first n slots become a uniform sample.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<std::pair<std::size_t, std::size_t>> histogram_pairs(const LoopStats& s) {
  return {s.histogram.begin(), s.histogram.end()};
}

std::string loop_stats_to_json(const LoopStats& s) {
  ordered_json j;
  j["total"] = s.total;
  j["completed"] = s.completed();
  j["histogram"] = ordered_json::array();
  for (const auto& [loops, count] : s.histogram) j["histogram"].push_back({loops, count});
  j["within_k"] = ordered_json::object();
  for (std::size_t k : {1, 2, 5, 10}) j["within_k"][std::to_string(k)] = s.within_k(k);
  j["avg_unhandled_by_loop"] = ordered_json::object();
  for (const auto& [loops, avg] : s.avg_unhandled_by_loop) j["avg_unhandled_by_loop"][std::to_string(loops)] = avg;
  j["per_loop_means"] = ordered_json::object();
  for (const auto& [loops, means] : s.per_loop_means) j["per_loop_means"][std::to_string(loops)] = means;
  return j.dump(2) + "\n";
}

std::string render_loop_stats(const LoopStats& s) {
  std::ostringstream out;
  out << fmt::format("results: {}  converged: {}\n", s.total, s.completed());
  out << "loops  tasks  avg_unhandled\n";
  for (const auto& [loops, count] : s.histogram) {
    out << fmt::format("{:>5}  {:>5}  {:>13.2f}\n", loops, count, s.avg_unhandled_by_loop.at(loops));
  }
  out << fmt::format("within 2: {:.2f}%  within 10: {:.2f}%\n", 100.0 * s.within_k(2), 100.0 * s.within_k(10));
  return out.str();
}

std::string quality_matrix_to_json(const QualityMatrix& m) {
  ordered_json j = ordered_json::object();
  for (auto mode : m.modes) {
    ordered_json col;
    for (auto q : kAllLabels) col[std::string(to_string(q))] = m.count(mode, q);
    col["Errored"] = m.errored_in(mode);
    j[std::string(to_string(mode))] = std::move(col);
  }
  return j.dump(2) + "\n";
}

std::string render_quality_table(const QualityMatrix& m) {
  std::ostringstream out;
  out << fmt::format("{:<28}", "Quality");
  for (auto mode : m.modes) out << fmt::format("{:>9}", to_string(mode));
  out << "\n";
  for (auto q : kAllLabels) {
    out << fmt::format("{:<28}", to_string(q));
    for (auto mode : m.modes) out << fmt::format("{:>9}", m.count(mode, q));
    out << "\n";
  }
  out << fmt::format("{:<28}", "Errored");
  for (auto mode : m.modes) out << fmt::format("{:>9}", m.errored_in(mode));
  out << "\n";
  return out.str();
}

}  // namespace exguard
