#include "exguard/llm_client.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include "exguard/errors.hpp"
#include "httplib.h"
#include "json.hpp"
#include "text_util.hpp"

namespace exguard {

using nlohmann::json;
using nlohmann::ordered_json;

void ChatRequest::validate() const {
  if (messages.empty()) throw Error("chat request has no messages");
  const Message* prev = nullptr;
  for (const auto& m : messages) {
    if (m.role != "system" && m.role != "user" && m.role != "assistant") {
      throw Error("chat request has unknown role '" + m.role + "'");
    }
    if (prev && prev->role == "assistant" && m.role == "assistant") {
      throw Error("chat request has two consecutive assistant messages");
    }
    prev = &m;
  }
}

std::string canonical_key(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"content", m.content}, {"role", m.role}});
  // json objects keep keys sorted, so dump() is already canonical.
  const json doc = {{"messages", messages}, {"model", request.model}, {"temperature", request.temperature}};
  const auto text = doc.dump();

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

namespace {

ordered_json request_json(const ChatRequest& r) {
  ordered_json msgs = ordered_json::array();
  for (const auto& m : r.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  ordered_json j;
  j["model"] = r.model;
  j["temperature"] = r.temperature;
  j["max_tokens"] = r.max_tokens;
  j["messages"] = std::move(msgs);
  return j;
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 200;
  return std::string(body.substr(0, kMax)) + (body.size() > kMax ? "..." : "");
}

}  // namespace

std::string cassette_line(const CassetteEntry& e) {
  ordered_json j;
  j["key"] = e.key;
  j["request"] = request_json(e.request);
  j["response"] = e.response;
  j["recorded_at"] = e.recorded_at;
  return j.dump();
}

CassetteEntry parse_cassette_line(std::string_view line) {
  try {
    const auto j = json::parse(line);
    CassetteEntry e;
    e.key = j.at("key").get<std::string>();
    const auto& r = j.at("request");
    e.request.model = r.at("model").get<std::string>();
    e.request.temperature = r.at("temperature").get<double>();
    e.request.max_tokens = r.value("max_tokens", std::size_t{2048});
    for (const auto& m : r.at("messages")) {
      e.request.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    }
    e.response = j.at("response").get<std::string>();
    e.recorded_at = j.value("recorded_at", std::string());
    return e;
  } catch (const json::exception& ex) {
    throw SchemaViolation(std::string("bad cassette record (") + ex.what() + ")", std::string(line));
  }
}

// ---------------------------------------------------------------- CassetteStore

CassetteStore::CassetteStore() : snapshot_(std::make_shared<const Snapshot>()) {}

CassetteStore::CassetteStore(std::filesystem::path path) : path_(std::move(path)) {
  Snapshot snap;
  if (std::filesystem::exists(path_)) {
    const auto text = detail::read_file(path_);
    for (auto line : detail::split_lines(text)) {
      if (detail::trim(line).empty()) continue;
      auto e = parse_cassette_line(line);
      snap[e.key] = e.response;
      entries_.push_back(std::move(e));
    }
  }
  snapshot_ = std::make_shared<const Snapshot>(std::move(snap));
}

std::optional<std::string> CassetteStore::find(const std::string& key) const {
  const auto snap = std::atomic_load(&snapshot_);
  if (auto it = snap->find(key); it != snap->end()) return it->second;
  return std::nullopt;
}

void CassetteStore::append(CassetteEntry entry) {
  std::lock_guard lock(write_mutex_);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to cassette " + path_.string());
    out << cassette_line(entry) << '\n';
    out.flush();
    if (!out) throw Error("short write to cassette " + path_.string());
  }
  auto next = std::make_shared<Snapshot>(*std::atomic_load(&snapshot_));
  (*next)[entry.key] = entry.response;
  entries_.push_back(std::move(entry));
  std::atomic_store(&snapshot_, std::shared_ptr<const Snapshot>(std::move(next)));
}

std::size_t CassetteStore::size() const {
  std::lock_guard lock(write_mutex_);
  return entries_.size();
}

std::vector<CassetteEntry> CassetteStore::entries() const {
  std::lock_guard lock(write_mutex_);
  return entries_;
}

// ---------------------------------------------------------------- transport

HttpTransport::HttpTransport(std::string origin, std::chrono::seconds timeout)
    : origin_(std::move(origin)), timeout_(timeout) {}

HttpResponse HttpTransport::post_json(const std::string& path, const std::string& body,
                                      const std::vector<std::pair<std::string, std::string>>& headers) {
  httplib::Client client(origin_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path, h, body, "application/json");
  if (!res) throw TransportError("POST " + origin_ + path + " failed: " + httplib::to_string(res.error()), 0);
  return {res->status, res->body};
}

namespace {

std::mutex g_factory_mutex;
TransportFactory g_factory;

std::shared_ptr<Transport> make_transport(const std::string& origin) {
  std::lock_guard lock(g_factory_mutex);
  if (g_factory) return g_factory(origin);
  return std::make_shared<HttpTransport>(origin);
}

}  // namespace

TransportFactory set_transport_factory(TransportFactory factory) {
  std::lock_guard lock(g_factory_mutex);
  auto previous = std::move(g_factory);
  g_factory = std::move(factory);
  return previous;
}

// ---------------------------------------------------------------- LlmClient

std::string_view to_string(ClientMode m) {
  switch (m) {
    case ClientMode::Live: return "live";
    case ClientMode::Record: return "record";
    case ClientMode::Replay: return "replay";
    case ClientMode::ReplayStrict: return "replay-strict";
  }
  return "?";
}

ClientMode parse_client_mode(std::string_view name) {
  for (auto m : {ClientMode::Live, ClientMode::Record, ClientMode::Replay, ClientMode::ReplayStrict}) {
    if (to_string(m) == name) return m;
  }
  throw Error("unknown client mode '" + std::string(name) + "'");
}

ClientOptions ClientOptions::from_environment(ClientMode mode) {
  ClientOptions o;
  o.mode = mode;
  if (const char* base = std::getenv(kApiBaseEnv)) o.api_base = base;
  if (const char* key = std::getenv(kApiKeyEnv)) o.api_key = key;
  return o;
}

LlmClient::LlmClient(ClientOptions options, std::shared_ptr<CassetteStore> cassette,
                     std::shared_ptr<Transport> transport)
    : options_(std::move(options)), cassette_(std::move(cassette)), transport_(std::move(transport)) {
  if (!cassette_) cassette_ = std::make_shared<CassetteStore>();
  // Split "https://host:port/v1" into origin and path prefix.
  const auto& base = options_.api_base;
  const auto scheme = base.find("://");
  const auto path_start = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  origin_ = base.substr(0, path_start);
  if (path_start != std::string::npos) path_prefix_ = base.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string LlmClient::complete(const ChatRequest& request) {
  request.validate();
  const auto key = canonical_key(request);
  switch (options_.mode) {
    case ClientMode::Replay:
    case ClientMode::ReplayStrict:
      if (auto hit = cassette_->find(key)) return *hit;
      if (options_.mode == ClientMode::Replay && options_.replay_fallthrough) return live(request);
      throw ReplayMiss(key);
    case ClientMode::Live:
      return live(request);
    case ClientMode::Record: {
      auto response = live(request);
      cassette_->append({key, request, response, now_utc()});
      return response;
    }
  }
  throw Error("unreachable client mode");
}

Transport& LlmClient::transport() {
  std::lock_guard lock(transport_mutex_);
  if (!transport_) {
    if (origin_.empty()) throw Error(std::string(kApiBaseEnv) + " is not set; live requests need an endpoint");
    transport_ = make_transport(origin_);
  }
  return *transport_;
}

std::string LlmClient::live(const ChatRequest& request) {
  auto& t = transport();
  const auto body = completion_body(request);
  std::vector<std::pair<std::string, std::string>> headers;
  if (!options_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + options_.api_key);
  const auto path = path_prefix_ + "/chat/completions";

  std::string last_error;
  HttpResponse last;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options_.backoff_base * (1 << (attempt - 1)));
    try {
      last = t.post_json(path, body, headers);
    } catch (const TransportError& e) {
      last_error = e.what();
      last = {};
      continue;
    }
    if (last.status == 429 || last.status >= 500) continue;
    return completion_content(last.status, last.body);
  }
  if (last.status != 0) throw EndpointError(last.status, excerpt(last.body));
  throw TransportError(last_error, options_.max_retries);
}

std::string completion_body(const ChatRequest& request) { return request_json(request).dump(); }

std::string completion_content(int status, std::string_view body) {
  if (status < 200 || status >= 300) throw EndpointError(status, excerpt(body));
  try {
    const auto j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw EndpointError(status, excerpt(body));
  }
}

}  // namespace exguard
