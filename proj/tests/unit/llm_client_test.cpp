#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "exguard/errors.hpp"
#include "exguard/llm_client.hpp"
#include "httplib.h"
#include "json.hpp"
#include "test_support.hpp"

using namespace exguard;
using exguard::testing::read_fixture;
using exguard::testing::walkthrough_cassette;

namespace {

ChatRequest user_request(const std::string& content, double temperature = 0.0) {
  ChatRequest r;
  r.messages = {{"user", content}};
  r.temperature = temperature;
  return r;
}

std::string ok_body(const std::string& content) {
  nlohmann::json j;
  j["choices"] = nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}});
  return j.dump();
}

/// Plays back a list of HTTP outcomes; status 0 means a connection failure.
class CannedTransport : public Transport {
 public:
  explicit CannedTransport(std::vector<HttpResponse> script) : script_(std::move(script)) {}

  HttpResponse post_json(const std::string& path, const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers) override {
    std::lock_guard lock(mu_);
    paths.push_back(path);
    bodies.push_back(body);
    this->headers = headers;
    const auto& r = script_[std::min(calls, script_.size() - 1)];
    ++calls;
    if (r.status == 0) throw TransportError("connection refused", 0);
    return r;
  }

  std::size_t calls = 0;
  std::vector<std::string> paths;
  std::vector<std::string> bodies;
  std::vector<std::pair<std::string, std::string>> headers;

 private:
  std::mutex mu_;
  std::vector<HttpResponse> script_;
};

ClientOptions fast(ClientMode mode) {
  ClientOptions o;
  o.mode = mode;
  o.backoff_base = std::chrono::milliseconds(0);
  return o;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("exguard-client-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

std::vector<std::string> file_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

TEST(CanonicalKey, GoldenDigests) {
  const auto golden = nlohmann::json::parse(read_fixture("cassettes/golden_keys.json"));
  ASSERT_GE(golden.size(), 5u);
  for (const auto& g : golden) {
    ChatRequest r;
    r.temperature = g["temperature"].get<double>();
    for (const auto& m : g["messages"]) r.messages.push_back({m["role"], m["content"]});
    EXPECT_EQ(canonical_key(r), g["key"].get<std::string>()) << g["name"];
  }
}

TEST(CanonicalKey, Sensitivity) {
  const auto base = user_request("hello");
  EXPECT_EQ(canonical_key(base), canonical_key(user_request("hello")));
  EXPECT_NE(canonical_key(base), canonical_key(user_request("hello ")));
  EXPECT_NE(canonical_key(base), canonical_key(user_request("hello", 0.2)));
  auto other_model = base;
  other_model.model = "gpt-4";
  EXPECT_NE(canonical_key(base), canonical_key(other_model));
  auto more_tokens = base;
  more_tokens.max_tokens = 16;
  EXPECT_EQ(canonical_key(base), canonical_key(more_tokens));
  EXPECT_EQ(canonical_key(base).size(), 64u);
}

TEST(Cassette, LinesAreByteStable) {
  std::istringstream in(read_fixture("cassettes/walkthrough.jsonl"));
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto e = parse_cassette_line(line);
    EXPECT_EQ(cassette_line(e), line);
    EXPECT_EQ(e.key, canonical_key(e.request));
    ++n;
  }
  EXPECT_EQ(n, walkthrough_cassette()->size());
}

TEST(Cassette, BadLines) {
  EXPECT_THROW(parse_cassette_line("{"), SchemaViolation);
  EXPECT_THROW(parse_cassette_line(R"({"key":"k","response":"r"})"), SchemaViolation);
}

TEST(Cassette, LatestRecordingWins) {
  CassetteStore store;
  const auto req = user_request("q");
  store.append({canonical_key(req), req, "first", "2026-01-01T00:00:00Z"});
  store.append({canonical_key(req), req, "second", "2026-01-02T00:00:00Z"});
  EXPECT_EQ(store.find(canonical_key(req)), "second");
  EXPECT_EQ(store.size(), 2u);
  EXPECT_FALSE(store.find("missing").has_value());
}

TEST(Replay, StrictHitNeverTouchesTransport) {
  auto transport = std::make_shared<CannedTransport>(std::vector<HttpResponse>{{200, ok_body("live")}});
  LlmClient client(fast(ClientMode::ReplayStrict), walkthrough_cassette(), transport);
  const auto out = client.complete(user_request("Please write a Java method to swap two elements in a vector"));
  EXPECT_NE(out.find("```java"), std::string::npos);
  EXPECT_EQ(transport->calls, 0u);
}

TEST(Replay, StrictMissNamesTheDigest) {
  auto transport = std::make_shared<CannedTransport>(std::vector<HttpResponse>{{200, ok_body("live")}});
  LlmClient client(fast(ClientMode::ReplayStrict), walkthrough_cassette(), transport);
  const auto req = user_request("never recorded");
  try {
    client.complete(req);
    FAIL() << "expected ReplayMiss";
  } catch (const ReplayMiss& e) {
    EXPECT_EQ(e.digest(), canonical_key(req));
    EXPECT_NE(std::string(e.what()).find(canonical_key(req)), std::string::npos);
  }
  EXPECT_EQ(transport->calls, 0u);
}

TEST(Replay, FallthroughGoesLiveWithoutRecording) {
  auto transport = std::make_shared<CannedTransport>(std::vector<HttpResponse>{{200, ok_body("live answer")}});
  auto store = std::make_shared<CassetteStore>();
  auto opts = fast(ClientMode::Replay);
  EXPECT_THROW(LlmClient(opts, store, transport).complete(user_request("x")), ReplayMiss);
  opts.replay_fallthrough = true;
  LlmClient client(opts, store, transport);
  EXPECT_EQ(client.complete(user_request("x")), "live answer");
  EXPECT_EQ(transport->calls, 1u);
  EXPECT_EQ(store->size(), 0u);
}

TEST(Live, RetriesServerErrorsThenSucceeds) {
  auto transport = std::make_shared<CannedTransport>(
      std::vector<HttpResponse>{{503, "busy"}, {0, ""}, {200, ok_body("done")}});
  auto opts = fast(ClientMode::Live);
  opts.api_key = "sk-test";
  opts.api_base = "https://example.invalid/v1/";
  LlmClient client(opts, nullptr, transport);
  EXPECT_EQ(client.complete(user_request("q")), "done");
  EXPECT_EQ(transport->calls, 3u);
  EXPECT_EQ(transport->paths.back(), "/v1/chat/completions");
  ASSERT_EQ(transport->headers.size(), 1u);
  EXPECT_EQ(transport->headers[0].second, "Bearer sk-test");
  const auto body = nlohmann::json::parse(transport->bodies.back());
  EXPECT_EQ(body["model"], "gpt-3.5-turbo");
  EXPECT_EQ(body["max_tokens"], 2048);
}

TEST(Live, PersistentRateLimitIsEndpointError) {
  auto transport = std::make_shared<CannedTransport>(std::vector<HttpResponse>{{429, "slow down"}});
  LlmClient client(fast(ClientMode::Live), nullptr, transport);
  try {
    client.complete(user_request("q"));
    FAIL();
  } catch (const EndpointError& e) {
    EXPECT_EQ(e.status(), 429);
  }
  EXPECT_EQ(transport->calls, 4u);
}

TEST(Live, ClientErrorIsNotRetried) {
  auto transport = std::make_shared<CannedTransport>(std::vector<HttpResponse>{{400, "bad"}});
  LlmClient client(fast(ClientMode::Live), nullptr, transport);
  EXPECT_THROW(client.complete(user_request("q")), EndpointError);
  EXPECT_EQ(transport->calls, 1u);
}

TEST(Live, ConnectionFailureExhaustsRetries) {
  auto transport = std::make_shared<CannedTransport>(std::vector<HttpResponse>{{0, ""}});
  LlmClient client(fast(ClientMode::Live), nullptr, transport);
  try {
    client.complete(user_request("q"));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.retries(), 3);
  }
  EXPECT_EQ(transport->calls, 4u);
}

TEST(Live, UnexpectedBody) {
  EXPECT_THROW(completion_content(200, "{}"), EndpointError);
  EXPECT_THROW(completion_content(200, "not json"), EndpointError);
  EXPECT_EQ(completion_content(200, ok_body("hi")), "hi");
}

TEST(Live, NoEndpointConfigured) {
  LlmClient client(fast(ClientMode::Live), nullptr);
  EXPECT_THROW(client.complete(user_request("q")), Error);
}

TEST(Live, FactoryIsUsedWhenNoTransportIsInjected) {
  auto canned = std::make_shared<CannedTransport>(std::vector<HttpResponse>{{200, ok_body("factory")}});
  std::string seen_origin;
  auto previous = set_transport_factory([&](const std::string& origin) {
    seen_origin = origin;
    return canned;
  });
  auto opts = fast(ClientMode::Live);
  opts.api_base = "http://127.0.0.1:9/v1";
  LlmClient client(opts, nullptr);
  EXPECT_EQ(client.complete(user_request("q")), "factory");
  set_transport_factory(previous);
  EXPECT_EQ(seen_origin, "http://127.0.0.1:9");
}

TEST(Record, AppendsWithoutRewriting) {
  TempDir dir;
  const auto path = dir.path / "c.jsonl";
  const auto fixture_lines = file_lines(exguard::testing::fixture("cassettes/walkthrough.jsonl"));
  {
    std::ofstream out(path);
    for (const auto& l : fixture_lines) out << l << "\n";
  }
  auto transport = std::make_shared<CannedTransport>(std::vector<HttpResponse>{{200, ok_body("new answer")}});
  auto store = std::make_shared<CassetteStore>(path);
  LlmClient client(fast(ClientMode::Record), store, transport);
  EXPECT_EQ(client.complete(user_request("fresh")), "new answer");

  const auto lines = file_lines(path);
  ASSERT_EQ(lines.size(), fixture_lines.size() + 1);
  for (std::size_t i = 0; i < fixture_lines.size(); ++i) EXPECT_EQ(lines[i], fixture_lines[i]);
  const auto e = parse_cassette_line(lines.back());
  EXPECT_EQ(e.key, canonical_key(user_request("fresh")));
  EXPECT_EQ(e.response, "new answer");
  EXPECT_EQ(e.recorded_at.size(), 20u);

  LlmClient replay(fast(ClientMode::ReplayStrict), std::make_shared<CassetteStore>(path));
  EXPECT_EQ(replay.complete(user_request("fresh")), "new answer");
}

TEST(Record, LoopbackServerThenReplay) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    auth = req.get_header_value("Authorization");
    const auto body = nlohmann::json::parse(req.body);
    res.set_content(ok_body("echo: " + body["messages"].back()["content"].get<std::string>()), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  TempDir dir;
  const auto path = dir.path / "rec.jsonl";
  const std::string origin = "http://127.0.0.1:" + std::to_string(port);
  auto opts = fast(ClientMode::Record);
  opts.api_base = origin + "/v1";
  opts.api_key = "k";
  {
    LlmClient rec(opts, std::make_shared<CassetteStore>(path), std::make_shared<HttpTransport>(origin));
    EXPECT_EQ(rec.complete(user_request("ping")), "echo: ping");
  }
  server.stop();
  th.join();
  EXPECT_EQ(hits.load(), 1);
  EXPECT_EQ(auth, "Bearer k");

  LlmClient replay(fast(ClientMode::ReplayStrict), std::make_shared<CassetteStore>(path));
  EXPECT_EQ(replay.complete(user_request("ping")), "echo: ping");
}

TEST(Concurrency, ParallelRecordingKeepsEveryEntry) {
  auto store = std::make_shared<CassetteStore>();
  auto transport = std::make_shared<CannedTransport>(std::vector<HttpResponse>{{200, ok_body("r")}});
  LlmClient client(fast(ClientMode::Record), store, transport);
  constexpr int kThreads = 8, kPer = 25;
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < kPer; ++i) client.complete(user_request(std::to_string(t) + "/" + std::to_string(i)));
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(store->size(), static_cast<std::size_t>(kThreads * kPer));
  for (int t = 0; t < kThreads; ++t) {
    for (int i = 0; i < kPer; ++i) {
      EXPECT_TRUE(store->find(canonical_key(user_request(std::to_string(t) + "/" + std::to_string(i)))));
    }
  }
}

TEST(Concurrency, ParallelReplay) {
  auto store = walkthrough_cassette();
  LlmClient client(fast(ClientMode::ReplayStrict), store);
  const auto req = user_request("Please write a Java method to swap two elements in a vector");
  const auto expected = client.complete(req);
  std::atomic<int> mismatches{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 200; ++i) {
        if (client.complete(req) != expected) ++mismatches;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
}

TEST(Request, Validation) {
  ChatRequest empty;
  EXPECT_THROW(empty.validate(), Error);
  EXPECT_NO_THROW(user_request("x").validate());
}

TEST(Request, RoleRules) {
  ChatRequest r;
  r.messages = {{"robot", "x"}};
  EXPECT_THROW(r.validate(), Error);
  r.messages = {{"user", "x"}, {"assistant", "a"}, {"assistant", "b"}};
  EXPECT_THROW(r.validate(), Error);
  r.messages = {{"system", "s"}, {"user", "x"}, {"assistant", "a"}, {"user", "y"}};
  EXPECT_NO_THROW(r.validate());
}

TEST(ClientModeNames, RoundTrip) {
  for (auto m : {ClientMode::Live, ClientMode::Record, ClientMode::Replay, ClientMode::ReplayStrict}) {
    EXPECT_EQ(parse_client_mode(to_string(m)), m);
  }
  EXPECT_EQ(parse_client_mode("replay-strict"), ClientMode::ReplayStrict);
  EXPECT_THROW(parse_client_mode("offline"), Error);
}
