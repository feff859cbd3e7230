#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "exguard/analysis.hpp"
#include "exguard/evaluation.hpp"
#include "exguard/javadoc.hpp"
#include "exguard/knowledge_base.hpp"
#include "exguard/llm_client.hpp"

namespace fs = std::filesystem;
using namespace exguard;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path kFixtures = EXGUARD_FIXTURES_DIR;

std::vector<PageInput> pages() {
  std::vector<PageInput> out;
  for (const auto& e : fs::directory_iterator(kFixtures / "pages")) {
    const auto ext = e.path().extension();
    if (ext == ".html" || ext == ".txt") out.push_back({e.path().filename().string(), slurp(e.path())});
  }
  return out;
}

const KnowledgeBase& kb() {
  static const KnowledgeBase k = [] {
    const auto p = pages();
    return build_knowledge_base(p);
  }();
  return k;
}

void BM_ParseApiPages(benchmark::State& state) {
  const auto p = pages();
  for (auto _ : state) {
    for (const auto& page : p) benchmark::DoNotOptimize(parse_api_page(page.text));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.size()));
}
BENCHMARK(BM_ParseApiPages);

void BM_ExtractInvocations(benchmark::State& state) {
  const auto code = slurp(kFixtures / "java/kitchen_sink.java");
  for (auto _ : state) benchmark::DoNotOptimize(extract_invocations(code));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(code.size()));
}
BENCHMARK(BM_ExtractInvocations);

void BM_ClassifyQuality(benchmark::State& state) {
  const auto code = slurp(kFixtures / "java/priority_mixed.java");
  const auto& k = kb();
  for (auto _ : state) benchmark::DoNotOptimize(classify_quality(code, k));
}
BENCHMARK(BM_ClassifyQuality);

void BM_CanonicalKey(benchmark::State& state) {
  ChatRequest r;
  const std::string turn(static_cast<std::size_t>(state.range(0)), 'x');
  r.messages = {{"user", turn}, {"assistant", turn}, {"user", turn}};
  for (auto _ : state) benchmark::DoNotOptimize(canonical_key(r));
  state.SetBytesProcessed(state.iterations() * 3 * state.range(0));
}
BENCHMARK(BM_CanonicalKey)->Arg(256)->Arg(8192);

void BM_LoopStats(benchmark::State& state) {
  std::mt19937 rng(1);
  std::vector<ChainResult> rs(static_cast<std::size_t>(state.range(0)));
  for (auto& r : rs) {
    r.loop_count = 1 + rng() % 10;
    r.unhandled_per_loop.assign(r.loop_count, 1);
    r.unhandled_per_loop.back() = 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(loop_stats(rs));
}
BENCHMARK(BM_LoopStats)->Arg(3079);

}  // namespace

BENCHMARK_MAIN();
