// exguard command-line tool: knowledge base, checker, chain runner and reports.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "exguard/analysis.hpp"
#include "exguard/chain.hpp"
#include "exguard/errors.hpp"
#include "exguard/evaluation.hpp"
#include "exguard/javadoc.hpp"
#include "exguard/knowledge_base.hpp"
#include "exguard/llm_client.hpp"
#include "exguard/prompts.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace exguard;

namespace {

constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kUsage = 2;

// Usage or environment problem; main() reports it and exits 2.
struct UsageError {
  std::string message;
};

struct Options {
  std::string kb_path;
  std::string cassette_path;
  std::string client = "replay-strict";
  std::string mode = "fine";
  std::string checker = "static";
  std::size_t max_loops = 10;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  std::string out;
  bool verbose = false;

  // kb build / kb lookup / check / report
  std::string pages_dir;
  std::string fqn;
  std::string code_path;
  std::string results_dir;
  bool json = false;

  // chain
  std::string task_text;
  std::string task_id = "task";
  std::string corpus_path;
  std::size_t sample = 0;
  bool single_round = false;
  bool eva = false;
};

std::string read_text(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError{fmt::format("cannot read {} '{}'", what, path.string())};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError{"cannot write '" + tmp.string() + "'"};
    out << content;
    if (!out.flush()) throw UsageError{"short write to '" + tmp.string() + "'"};
  }
  fs::rename(tmp, path);
}

KnowledgeBase load_kb(const Options& o) {
  if (o.kb_path.empty()) throw UsageError{"--kb is required"};
  if (!fs::is_regular_file(o.kb_path)) throw UsageError{"knowledge base '" + o.kb_path + "' not found"};
  try {
    return kb_from_json(read_text(o.kb_path, "knowledge base"));
  } catch (const Error& e) {
    throw UsageError{"knowledge base '" + o.kb_path + "': " + e.what()};
  }
}

bool is_page_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".html" || ext == ".htm" || ext == ".txt";
}

// ---------------------------------------------------------------- kb build

int cmd_kb_build(const Options& o) {
  std::error_code ec;
  if (!fs::is_directory(o.pages_dir, ec)) throw UsageError{"pages directory '" + o.pages_dir + "' is not readable"};
  std::vector<fs::path> files;
  for (fs::directory_iterator it(o.pages_dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file() && is_page_file(it->path())) files.push_back(it->path());
  }
  if (ec) throw UsageError{"cannot list '" + o.pages_dir + "': " + ec.message()};
  std::sort(files.begin(), files.end());

  std::vector<PageInput> pages;
  std::size_t failures = 0;
  for (const auto& f : files) {
    PageInput page{f.filename().string(), read_text(f, "page")};
    try {
      const auto entries = parse_api_page(page.text);
      if (o.verbose) fmt::print(stderr, "{}: {} entries\n", page.id, entries.size());
      pages.push_back(std::move(page));
    } catch (const Error& e) {
      fmt::print(stderr, "{}: {}\n", f.string(), e.what());
      ++failures;
    }
  }
  if (failures > 0) {
    fmt::print(stderr, "{} of {} pages could not be parsed; no knowledge base written\n", failures, files.size());
    return kNegative;
  }
  if (files.empty()) fmt::print(stderr, "warning: no documentation pages in '{}'\n", o.pages_dir);

  const auto kb = build_knowledge_base(pages);
  const fs::path out = o.out.empty() ? fs::path("kb.json") : fs::path(o.out);
  write_atomic(out, kb_to_json(kb));

  fmt::print("wrote {}: {} entries, {} specs from {} pages\n", out.string(), kb.entries().size(), kb.spec_count(),
             pages.size());
  std::map<std::string, std::size_t> per_page;
  std::size_t notes = 0;
  for (const auto& [fqn, prov] : kb.provenance()) {
    for (const auto& p : prov.pages) ++per_page[p];
    notes += prov.notes.size();
  }
  for (const auto& [page, n] : per_page) fmt::print("  {:<32} {}\n", page, n);
  if (notes > 0) fmt::print("  {} provenance notes (merged or colliding declarations)\n", notes);
  return kOk;
}

// ---------------------------------------------------------------- kb lookup

int cmd_kb_lookup(const Options& o) {
  const auto kb = load_kb(o);
  const auto specs = kb_lookup(kb, o.fqn);
  if (specs.empty()) {
    fmt::print("{}: no exception specifications\n", o.fqn);
    return kNegative;
  }
  for (const auto& s : specs) {
    fmt::print("{} - {}{}\n", s.exception, s.condition.empty() ? "(no condition)" : s.condition,
               s.guardable ? "  [guardable]" : "");
  }
  return kOk;
}

// ---------------------------------------------------------------- check

int cmd_check(const Options& o) {
  const auto kb = load_kb(o);
  const auto code = read_text(o.code_path, "source file");
  AnalysisReport report;
  try {
    report = analyze(JavaSource::parse(code), kb);
  } catch (const ParseError& e) {
    fmt::print(stderr, "{}:{}:{}: {}\n", o.code_path, e.line(), e.column(), e.message());
    return kUsage;
  }
  std::cout << report_to_json(report);
  return report.label == QualityLabel::GoodPractice ? kOk : kNegative;
}

// ---------------------------------------------------------------- chain

std::string safe_name(const std::string& id) {
  std::string out;
  for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  return out.empty() ? "task" : out;
}

struct TaskOutcome {
  std::optional<ChainResult> result;
  std::string abort_error;  // ParseError inside the chain
  std::optional<bool> eva;
  std::string eva_error;
};

std::shared_ptr<ChatClient> make_client(const Options& o) {
  ClientMode mode;
  try {
    mode = parse_client_mode(o.client);
  } catch (const Error& e) {
    throw UsageError{e.what()};
  }
  auto options = ClientOptions::from_environment(mode);
  options.replay_fallthrough = mode == ClientMode::Replay && !options.api_base.empty();
  std::shared_ptr<CassetteStore> store;
  if (mode == ClientMode::Replay || mode == ClientMode::ReplayStrict) {
    if (o.cassette_path.empty()) throw UsageError{"--cassette is required in " + o.client + " mode"};
    if (!fs::is_regular_file(o.cassette_path)) throw UsageError{"cassette '" + o.cassette_path + "' not found"};
  }
  if (mode == ClientMode::Record && o.cassette_path.empty()) throw UsageError{"--cassette is required in record mode"};
  if ((mode == ClientMode::Live || mode == ClientMode::Record) && options.api_base.empty()) {
    throw UsageError{std::string(kApiBaseEnv) + " must be set for " + o.client + " mode"};
  }
  try {
    store = o.cassette_path.empty() ? std::make_shared<CassetteStore>()
                                    : std::make_shared<CassetteStore>(fs::path(o.cassette_path));
  } catch (const Error& e) {
    throw UsageError{"cassette '" + o.cassette_path + "': " + e.what()};
  }
  return std::make_shared<LlmClient>(options, store);
}

std::vector<CodingTask> load_tasks(const Options& o) {
  if (!o.task_text.empty() && !o.corpus_path.empty()) throw UsageError{"use either --task or --corpus"};
  if (!o.task_text.empty()) return {{o.task_id, o.task_text}};
  if (o.corpus_path.empty()) throw UsageError{"one of --task or --corpus is required"};
  std::vector<CodingTask> tasks;
  try {
    tasks = parse_task_corpus(read_text(o.corpus_path, "task corpus"));
  } catch (const SchemaViolation& e) {
    throw UsageError{"task corpus '" + o.corpus_path + "': " + e.what()};
  }
  if (o.sample > 0) {
    std::vector<CodingTask> picked;
    for (auto i : sample_indices(tasks.size(), o.sample, o.seed)) picked.push_back(tasks[i]);
    tasks = std::move(picked);
  }
  return tasks;
}

ChainConfig chain_config(const Options& o) {
  ChainConfig c;
  try {
    c.mode = parse_prompt_mode(o.mode);
    c.checker = parse_checker_kind(o.checker);
  } catch (const Error& e) {
    throw UsageError{e.what()};
  }
  c.max_loops = o.max_loops;
  if (c.max_loops == 0) throw UsageError{"--max-loops must be at least 1"};
  if (o.single_round && c.checker == CheckerKind::Llm) throw UsageError{"--single-round uses the static checker only"};
  return c;
}

TaskOutcome run_task(const CodingTask& task, const KnowledgeBase& kb, ChatClient& client, const ChainConfig& config,
                     bool single_round, bool eva) {
  TaskOutcome out;
  try {
    out.result = single_round ? run_single_round(task, kb, client, config) : run_chain(task, kb, client, config);
  } catch (const ChainAborted& e) {
    out.result = e.partial();
    out.abort_error = e.what();
    return out;
  }
  if (eva && out.result->termination != Termination::LlmError) {
    try {
      out.eva = llm_eva(out.result->final_code, client, config);
    } catch (const Error& e) {
      out.eva_error = e.what();
    }
  }
  return out;
}

int cmd_chain(const Options& o) {
  const auto kb = load_kb(o);
  const auto config = chain_config(o);
  const auto tasks = load_tasks(o);
  const auto client = make_client(o);
  const fs::path out_dir = o.out.empty() ? fs::path("exguard-out") : fs::path(o.out);

  std::vector<TaskOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < tasks.size(); i = next++) {
      outcomes[i] = run_task(tasks[i], kb, *client, config, o.single_round, o.eva);
    }
  };
  const auto n_workers = std::max<std::size_t>(1, std::min(o.workers, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string results, errors, evas;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& oc = outcomes[i];
    const auto& r = *oc.result;
    const auto ref = "transcripts/" + safe_name(tasks[i].id) + ".json";
    write_atomic(out_dir / ref, transcript_to_json(r));
    if (!oc.abort_error.empty()) {
      ++failed;
      errors += nlohmann::json{{"id", r.task_id}, {"error", oc.abort_error}, {"transcript_ref", ref}}.dump() + "\n";
      fmt::print("{}: aborted error=\"{}\"\n", r.task_id, oc.abort_error);
      continue;
    }
    results += result_to_json(r, ref) + "\n";
    if (r.termination == Termination::LlmError) ++failed;
    std::string line = fmt::format("{}: loops={} termination={} quality={}", r.task_id, r.loop_count,
                                   to_string(r.termination), r.quality ? to_string(*r.quality) : "none");
    if (o.eva) {
      const auto verdict = oc.eva ? (*oc.eva ? "Y" : "N") : "none";
      line += fmt::format(" llm_eva={}", verdict);
      nlohmann::json e{{"id", r.task_id}, {"llm_eva", oc.eva ? nlohmann::json(*oc.eva) : nlohmann::json(nullptr)}};
      if (!oc.eva_error.empty()) e["error"] = oc.eva_error;
      evas += e.dump() + "\n";
    }
    if (!r.error.empty()) line += fmt::format(" error=\"{}\"", r.error);
    fmt::print("{}\n", line);
  }
  write_atomic(out_dir / "results.jsonl", results);
  if (!errors.empty()) write_atomic(out_dir / "errors.jsonl", errors);
  if (o.eva) write_atomic(out_dir / "llm_eva.jsonl", evas);
  if (o.verbose) fmt::print(stderr, "wrote {} task outputs to {}\n", tasks.size(), out_dir.string());
  return failed > 0 ? kNegative : kOk;
}

// ---------------------------------------------------------------- report

int cmd_report(const Options& o) {
  const fs::path dir(o.results_dir);
  const auto path = dir / "results.jsonl";
  if (!fs::is_regular_file(path)) throw UsageError{"no result records in '" + o.results_dir + "'"};
  std::vector<ChainResult> all;
  std::size_t line_no = 0;
  std::istringstream in(read_text(path, "results"));
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      all.push_back(result_from_json(line));
    } catch (const SchemaViolation& e) {
      throw UsageError{fmt::format("{}:{}: {}", path.string(), line_no, e.what())};
    }
  }
  if (all.empty()) throw UsageError{"no result records in '" + o.results_dir + "'"};

  std::vector<ChainResult> chains;
  for (const auto& r : all) {
    if (!r.single_round) chains.push_back(r);
  }
  const auto matrix = quality_matrix_from_results(all);
  std::optional<LoopStats> stats;
  if (!chains.empty()) stats = loop_stats(chains);

  std::size_t eva_yes = 0, eva_total = 0;
  if (fs::is_regular_file(dir / "llm_eva.jsonl")) {
    std::istringstream ev(read_text(dir / "llm_eva.jsonl", "llm_eva records"));
    for (std::string line; std::getline(ev, line);) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("llm_eva") || !j["llm_eva"].is_boolean()) continue;
      ++eva_total;
      eva_yes += j["llm_eva"].get<bool>() ? 1 : 0;
    }
  }

  if (o.json) {
    nlohmann::ordered_json j;
    j["records"] = all.size();
    j["loop_stats"] = stats ? nlohmann::ordered_json::parse(loop_stats_to_json(*stats)) : nlohmann::ordered_json();
    j["quality"] = nlohmann::ordered_json::parse(quality_matrix_to_json(matrix));
    if (eva_total > 0) j["llm_eva"] = {{"yes", eva_yes}, {"total", eva_total}};
    std::cout << j.dump(2) << "\n";
  } else {
    if (stats) std::cout << render_loop_stats(*stats) << "\n";
    std::cout << render_quality_table(matrix);
    if (eva_total > 0) fmt::print("\nllm_eva: {}/{} judged good practice\n", eva_yes, eva_total);
  }
  if (!o.out.empty()) {
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    if (stats) {
      for (const auto& [loops, count] : histogram_pairs(*stats)) hist.push_back({loops, count});
    }
    write_atomic(fs::path(o.out) / "loop_histogram.json", hist.dump() + "\n");
    write_atomic(fs::path(o.out) / "quality_matrix.json", quality_matrix_to_json(matrix));
  }
  return kOk;
}

constexpr const char* kFooter = R"(Environment:
  EXGUARD_API_BASE   chat-completion endpoint base URL, e.g. https://api.openai.com/v1
                     (requests go to POST {base}/chat/completions); live and record modes only
  EXGUARD_API_KEY    bearer credential for that endpoint; never written to cassettes

Exit codes: 0 success, 1 negative outcome (not good practice, failed task), 2 usage or environment error)";

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"exguard: exception-handling knowledge base, checker and prompt chain for Java code"};
  app.footer(kFooter);
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--kb", o.kb_path, "Knowledge base file (JSON)");
  app.add_option("--cassette", o.cassette_path, "Record/replay cassette (JSONL)");
  app.add_option("--client", o.client, "Client mode")
      ->check(CLI::IsMember({"replay-strict", "replay", "record", "live"}))
      ->capture_default_str();
  app.add_option("--mode", o.mode, "Prompt granularity")
      ->check(CLI::IsMember({"direct", "general", "coarse", "fine"}))
      ->capture_default_str();
  app.add_option("--checker", o.checker, "Checker used inside the chain")
      ->check(CLI::IsMember({"static", "llm"}))
      ->capture_default_str();
  app.add_option("--max-loops", o.max_loops, "Check/rewrite loop cap")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--workers", o.workers, "Concurrent tasks")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--seed", o.seed, "Seed for --sample")->capture_default_str();
  app.add_option("--out", o.out, "Output file (kb build) or directory (chain, report)");
  app.add_flag("-v,--verbose", o.verbose, "Progress on stderr");

  auto* kb = app.add_subcommand("kb", "Build or query the knowledge base");
  kb->require_subcommand(1);
  auto* kb_build = kb->add_subcommand("build", "Extract a knowledge base from stored documentation pages");
  kb_build->add_option("pages_dir", o.pages_dir, "Directory of .html/.htm/.txt pages")->required();
  auto* kb_lookup_cmd = kb->add_subcommand("lookup", "Print the exception specs of one method");
  kb_lookup_cmd->add_option("fqn", o.fqn, "e.g. \"java.util.Vector.get(int index)\"")->required();

  auto* check = app.add_subcommand("check", "Analyze a Java file; exit 0 only for good practice");
  check->add_option("code", o.code_path, "Java source file")->required();

  auto* chain = app.add_subcommand("chain", "Run the generate/check/rewrite chain");
  chain->add_option("--task", o.task_text, "Task text, e.g. \"How to swap two elements in a vector\"");
  chain->add_option("--task-id", o.task_id, "Id for --task")->capture_default_str();
  chain->add_option("--corpus", o.corpus_path, "JSONL corpus of {id, text} records");
  chain->add_option("--sample", o.sample, "Run a seeded random sample of this many corpus tasks");
  chain->add_flag("--single-round", o.single_round, "Generation plus one exception-prompt round");
  chain->add_flag("--llm-eva", o.eva, "Ask the good-practice Y/N question about each final code");

  auto* report = app.add_subcommand("report", "Loop statistics and quality matrix over chain results");
  report->add_option("results_dir", o.results_dir, "Directory holding results.jsonl")->required();
  report->add_flag("--json", o.json, "Print JSON instead of tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (kb_build->parsed()) return cmd_kb_build(o);
    if (kb_lookup_cmd->parsed()) return cmd_kb_lookup(o);
    if (check->parsed()) return cmd_check(o);
    if (chain->parsed()) return cmd_chain(o);
    if (report->parsed()) return cmd_report(o);
  } catch (const UsageError& e) {
    fmt::print(stderr, "exguard: {}\n", e.message);
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "exguard: {}\n", e.what());
    return kUsage;
  } catch (const Error& e) {
    fmt::print(stderr, "exguard: {}\n", e.what());
    return kNegative;
  }
  return kUsage;
}
