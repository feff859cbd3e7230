#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "exguard/errors.hpp"
#include "exguard/evaluation.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace exguard;
using exguard::testing::fixture_kb;
using exguard::testing::read_fixture;
using exguard::testing::walkthrough_cassette;

namespace {

ChainResult converged(std::string id, std::vector<std::size_t> per_loop) {
  ChainResult r;
  r.task_id = std::move(id);
  r.loop_count = per_loop.size();
  r.unhandled_per_loop = std::move(per_loop);
  r.termination = Termination::Converged;
  r.quality = QualityLabel::GoodPractice;
  return r;
}

ChainResult capped(std::string id, std::size_t loops) {
  ChainResult r;
  r.task_id = std::move(id);
  r.loop_count = loops;
  r.unhandled_per_loop.assign(loops, 2);
  r.termination = Termination::LoopCapReached;
  r.quality = QualityLabel::IncompleteExceptionHandling;
  return r;
}

std::string trimmed(const std::string& s) { return s.substr(0, s.find_last_not_of("\n") + 1); }

std::vector<ChainResult> random_results(std::mt19937& rng) {
  std::vector<ChainResult> out;
  const auto n = 1 + rng() % 30;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng() % 5 == 0) {
      out.push_back(capped("c" + std::to_string(i), 10));
      continue;
    }
    const auto loops = 1 + rng() % 6;
    std::vector<std::size_t> per(loops);
    for (std::size_t k = 0; k + 1 < loops; ++k) per[k] = 1 + rng() % 4;
    per.back() = 0;
    out.push_back(converged("t" + std::to_string(i), per));
  }
  return out;
}

}  // namespace

TEST(LoopStats, HistogramAndWithinK) {
  const std::vector<ChainResult> rs = {converged("a", {1, 0}), converged("b", {3, 0}), converged("c", {2, 1, 0})};
  const auto s = loop_stats(rs);
  EXPECT_EQ(s.histogram, (std::map<std::size_t, std::size_t>{{2, 2}, {3, 1}}));
  EXPECT_NEAR(s.within_k(2), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.within_k(3), 1.0, 1e-12);
  EXPECT_NEAR(s.within_k(1), 0.0, 1e-12);
}

TEST(LoopStats, GroupAverages) {
  const std::vector<ChainResult> rs = {converged("a", {2, 0}), converged("b", {2, 0}), converged("c", {3, 1, 0})};
  const auto s = loop_stats(rs);
  EXPECT_EQ(s.histogram, (std::map<std::size_t, std::size_t>{{2, 2}, {3, 1}}));
  // (2+0+2+0)/(2 tasks * 2 loops) and (3+1+0)/(1 task * 3 loops)
  EXPECT_NEAR(s.avg_unhandled_by_loop.at(2), 1.0, 1e-9);
  EXPECT_NEAR(s.avg_unhandled_by_loop.at(3), 4.0 / 3.0, 1e-9);
  EXPECT_EQ(s.per_loop_means.at(2), (std::vector<double>{2.0, 0.0}));
  EXPECT_EQ(s.per_loop_means.at(3), (std::vector<double>{3.0, 1.0, 0.0}));
}

TEST(LoopStats, SingleTaskGroup) {
  const std::vector<ChainResult> rs = {converged("c", {3, 1, 0})};
  EXPECT_NEAR(loop_stats(rs).avg_unhandled_by_loop.at(3), 4.0 / 3.0, 1e-9);
}

TEST(LoopStats, UnconvergedCountInDenominatorOnly) {
  const std::vector<ChainResult> rs = {converged("a", {1, 0}), capped("b", 10)};
  const auto s = loop_stats(rs);
  EXPECT_EQ(s.total, 2u);
  EXPECT_EQ(s.completed(), 1u);
  EXPECT_NEAR(s.within_k(10), 0.5, 1e-12);
  EXPECT_EQ(s.histogram.count(10), 0u);
}

TEST(LoopStats, EmptyInput) {
  EXPECT_THROW(loop_stats(std::vector<ChainResult>{}), EmptyResults);
}

TEST(LoopStatsProperties, PermutationInvariant) {
  std::mt19937 rng(7);
  for (int run = 0; run < 100; ++run) {
    auto rs = random_results(rng);
    const auto a = loop_stats(rs);
    std::shuffle(rs.begin(), rs.end(), rng);
    const auto b = loop_stats(rs);
    EXPECT_EQ(a.histogram, b.histogram);
    for (const auto& [loops, avg] : a.avg_unhandled_by_loop) EXPECT_NEAR(avg, b.avg_unhandled_by_loop.at(loops), 1e-9);
    for (std::size_t k = 0; k <= 10; ++k) EXPECT_DOUBLE_EQ(a.within_k(k), b.within_k(k));
  }
}

TEST(LoopStatsProperties, WithinKMonotoneAndHistogramSums) {
  std::mt19937 rng(11);
  for (int run = 0; run < 100; ++run) {
    const auto rs = random_results(rng);
    const auto s = loop_stats(rs);
    const auto converged_n = static_cast<std::size_t>(
        std::count_if(rs.begin(), rs.end(), [](const auto& r) { return r.termination == Termination::Converged; }));
    EXPECT_EQ(s.completed(), converged_n);
    double prev = 0.0;
    for (std::size_t k = 0; k <= 12; ++k) {
      EXPECT_GE(s.within_k(k), prev);
      EXPECT_LE(s.within_k(k), 1.0);
      prev = s.within_k(k);
    }
    EXPECT_DOUBLE_EQ(s.within_k(100), static_cast<double>(converged_n) / static_cast<double>(rs.size()));
  }
}

TEST(QualityMatrix, WalkthroughDiagonal) {
  const std::vector<CodingTask> corpus = {{"swap", "How to swap two elements in a vector"}};
  const std::vector<PromptMode> modes = {PromptMode::Direct, PromptMode::General, PromptMode::Coarse,
                                         PromptMode::Fine};
  LlmClient client(ClientOptions{}, walkthrough_cassette());
  const auto m = quality_matrix(corpus, fixture_kb(), client, modes);
  EXPECT_EQ(m.modes, modes);
  EXPECT_EQ(m.count(PromptMode::Direct, QualityLabel::IncompleteExceptionHandling), 1u);
  EXPECT_EQ(m.count(PromptMode::General, QualityLabel::IncorrectExceptionHandling), 1u);
  EXPECT_EQ(m.count(PromptMode::Coarse, QualityLabel::AbuseOfTryCatch), 1u);
  EXPECT_EQ(m.count(PromptMode::Fine, QualityLabel::GoodPractice), 1u);
  for (auto mode : modes) {
    std::size_t row = m.errored_in(mode);
    for (auto q : kAllLabels) row += m.count(mode, q);
    EXPECT_EQ(row, 1u);
  }
}

TEST(QualityMatrix, MissingCassetteEntriesAreErrored) {
  const auto corpus = parse_task_corpus(read_fixture("tasks/corpus.jsonl"));
  const std::vector<PromptMode> modes = {PromptMode::Fine};
  LlmClient client(ClientOptions{}, walkthrough_cassette());
  const auto m = quality_matrix(corpus, fixture_kb(), client, modes);
  EXPECT_EQ(m.tasks.at(PromptMode::Fine), 3u);
  EXPECT_EQ(m.errored_in(PromptMode::Fine), 1u);
  EXPECT_EQ(m.count(PromptMode::Fine, QualityLabel::GoodPractice), 2u);
}

TEST(QualityMatrix, NoModes) {
  const std::vector<CodingTask> corpus = {{"swap", "How to swap two elements in a vector"}};
  LlmClient client(ClientOptions{}, walkthrough_cassette());
  const auto m = quality_matrix(corpus, fixture_kb(), client, std::vector<PromptMode>{});
  EXPECT_TRUE(m.modes.empty());
  EXPECT_EQ(quality_matrix_to_json(m), "{}\n");
}

TEST(QualityMatrix, RecomputableFromStoredRecords) {
  std::vector<ChainResult> rs = {converged("a", {1, 0}), capped("b", 10), converged("c", {0})};
  rs[2].mode = PromptMode::Coarse;
  rs[2].quality = QualityLabel::AbuseOfTryCatch;
  ChainResult err;
  err.task_id = "d";
  err.termination = Termination::LlmError;
  err.error = "loop 0: boom";
  rs.push_back(err);
  std::vector<ChainResult> reread;
  for (const auto& r : rs) reread.push_back(result_from_json(result_to_json(r, "")));
  const auto m = quality_matrix_from_results(reread);
  EXPECT_EQ(m.modes, (std::vector<PromptMode>{PromptMode::Coarse, PromptMode::Fine}));
  EXPECT_EQ(m.count(PromptMode::Fine, QualityLabel::GoodPractice), 1u);
  EXPECT_EQ(m.count(PromptMode::Fine, QualityLabel::IncompleteExceptionHandling), 1u);
  EXPECT_EQ(m.errored_in(PromptMode::Fine), 1u);
  EXPECT_EQ(m.count(PromptMode::Coarse, QualityLabel::AbuseOfTryCatch), 1u);
  EXPECT_EQ(quality_matrix_to_json(m), quality_matrix_to_json(quality_matrix_from_results(rs)));
}

TEST(LlmEva, Verdicts) {
  LlmClient client(ClientOptions{}, walkthrough_cassette());
  EXPECT_TRUE(llm_eva(trimmed(read_fixture("java/swap_d.java")), client));
  EXPECT_FALSE(llm_eva(trimmed(read_fixture("java/swap_a.java")), client));
  EXPECT_TRUE(llm_eva(trimmed(read_fixture("java/charremover_d.java")), client));
  EXPECT_THROW(llm_eva(trimmed(read_fixture("java/swap_c.java")), client), UnparseableVerdict);
}

TEST(LlmEva, PromptShape) {
  EXPECT_EQ(llm_eva_prompt("class A {}"),
            "```java\nclass A {}\n```\nCan the code handle all exceptions in good practice? (Y/N)?");
}

TEST(Sampling, MinimumSizeMatchesCochran) {
  // n = z^2 p (1 - p) / e^2 with z = 1.96, p = 0.5, e = 0.05
  const double n = 1.96 * 1.96 * 0.25 / (0.05 * 0.05);
  EXPECT_EQ(kMinSampleSize, static_cast<std::size_t>(std::floor(n)));
}

TEST(Sampling, IndicesAreDistinctSortedAndSeeded) {
  const auto a = sample_indices(1000, 384, 42);
  ASSERT_EQ(a.size(), 384u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), a.size());
  EXPECT_LT(a.back(), 1000u);
  EXPECT_EQ(a, sample_indices(1000, 384, 42));
  EXPECT_NE(a, sample_indices(1000, 384, 43));
  EXPECT_EQ(sample_indices(5, 10, 1), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_TRUE(sample_indices(0, 3, 1).empty());
}

TEST(Sampling, RoughlyUniform) {
  std::vector<int> hits(10, 0);
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    for (auto i : sample_indices(10, 3, seed)) ++hits[i];
  }
  for (int h : hits) EXPECT_NEAR(h, 600, 120);
}

TEST(Emitters, LoopStatsJson) {
  const std::vector<ChainResult> rs = {converged("a", {2, 0}), converged("b", {2, 0}), converged("c", {3, 1, 0})};
  const auto s = loop_stats(rs);
  EXPECT_EQ(histogram_pairs(s), (std::vector<std::pair<std::size_t, std::size_t>>{{2, 2}, {3, 1}}));
  const auto j = nlohmann::json::parse(loop_stats_to_json(s));
  EXPECT_EQ(j["total"], 3);
  EXPECT_EQ(j["histogram"], nlohmann::json::parse("[[2,2],[3,1]]"));
  EXPECT_NEAR(j["within_k"]["2"].get<double>(), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(j["avg_unhandled_by_loop"]["3"].get<double>(), 4.0 / 3.0, 1e-12);
  EXPECT_NE(render_loop_stats(s).find("within 2: 66.67%"), std::string::npos);
}

TEST(Emitters, QualityTable) {
  QualityMatrix m = quality_matrix_from_results(std::vector<ChainResult>{converged("a", {0})});
  const auto table = render_quality_table(m);
  EXPECT_EQ(table.substr(0, table.find('\n')), "Quality                          fine");
  EXPECT_NE(table.find("GoodPractice                        1"), std::string::npos);
  EXPECT_NE(table.find("Errored                             0"), std::string::npos);
}
