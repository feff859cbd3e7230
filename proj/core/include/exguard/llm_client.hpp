#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace exguard {

struct Message {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

inline constexpr std::string_view kDefaultModel = "gpt-3.5-turbo";

struct ChatRequest {
  std::vector<Message> messages;
  std::string model = std::string(kDefaultModel);
  double temperature = 0.0;
  std::size_t max_tokens = 2048;

  /// Throws Error when there is no message, a role is unknown, or two
  /// assistant messages are adjacent.
  void validate() const;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

/// Hex SHA-256 of the compact, key-sorted JSON of {messages, model, temperature}.
/// Message content is hashed byte-exact; max_tokens is not part of the key.
std::string canonical_key(const ChatRequest& request);

struct CassetteEntry {
  std::string key;
  ChatRequest request;
  std::string response;
  std::string recorded_at;  // ISO-8601 UTC

  friend bool operator==(const CassetteEntry&, const CassetteEntry&) = default;
};

/// One JSON line with fields in the fixed order key, request, response, recorded_at.
std::string cassette_line(const CassetteEntry& entry);
/// Throws SchemaViolation.
CassetteEntry parse_cassette_line(std::string_view line);

/// Append-only record/replay store backed by a JSONL file.
///
/// Lookups read an immutable snapshot without locking; appends are serialized
/// and publish a new snapshot. When a key was recorded more than once the
/// latest response wins.
class CassetteStore {
 public:
  /// In-memory store.
  CassetteStore();
  /// Loads `path` if it exists; appends go to the same file.
  explicit CassetteStore(std::filesystem::path path);

  std::optional<std::string> find(const std::string& key) const;
  void append(CassetteEntry entry);

  std::size_t size() const;
  std::vector<CassetteEntry> entries() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  using Snapshot = std::unordered_map<std::string, std::string>;

  std::filesystem::path path_;
  mutable std::mutex write_mutex_;
  std::vector<CassetteEntry> entries_;
  std::shared_ptr<const Snapshot> snapshot_;
};

// ---- transport ----

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Network boundary. Implementations throw TransportError on connection failure.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post_json(const std::string& path, const std::string& body,
                                 const std::vector<std::pair<std::string, std::string>>& headers) = 0;
};

/// cpp-httplib transport for an OpenAI-compatible endpoint.
class HttpTransport : public Transport {
 public:
  /// `origin` is scheme://host[:port].
  HttpTransport(std::string origin, std::chrono::seconds timeout = std::chrono::seconds(120));
  HttpResponse post_json(const std::string& path, const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers) override;

 private:
  std::string origin_;
  std::chrono::seconds timeout_;
};

using TransportFactory = std::function<std::shared_ptr<Transport>(const std::string& origin)>;

/// Replaces the factory used when a client needs a live transport and none was
/// injected. Passing an empty function restores the HTTP default. Returns the previous factory.
TransportFactory set_transport_factory(TransportFactory factory);

// ---- clients ----

/// Anything that answers a chat request.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

enum class ClientMode { Live, Record, Replay, ReplayStrict };

std::string_view to_string(ClientMode m);
/// "live", "record", "replay", "replay-strict"; throws Error otherwise.
ClientMode parse_client_mode(std::string_view name);

inline constexpr const char* kApiBaseEnv = "EXGUARD_API_BASE";
inline constexpr const char* kApiKeyEnv = "EXGUARD_API_KEY";

struct ClientOptions {
  ClientMode mode = ClientMode::ReplayStrict;
  bool replay_fallthrough = false;  // Replay only: go live on a miss
  std::string api_base;             // e.g. https://api.openai.com/v1
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};

  /// Fills api_base / api_key from EXGUARD_API_BASE / EXGUARD_API_KEY.
  static ClientOptions from_environment(ClientMode mode);
};

/// Chat-completion client with record/replay.
///
/// Errors: ReplayMiss, TransportError (after retries), EndpointError.
class LlmClient : public ChatClient {
 public:
  LlmClient(ClientOptions options, std::shared_ptr<CassetteStore> cassette,
            std::shared_ptr<Transport> transport = nullptr);

  std::string complete(const ChatRequest& request) override;

  const ClientOptions& options() const noexcept { return options_; }

 private:
  std::string live(const ChatRequest& request);
  Transport& transport();

  ClientOptions options_;
  std::shared_ptr<CassetteStore> cassette_;
  std::shared_ptr<Transport> transport_;
  std::mutex transport_mutex_;
  std::string origin_;
  std::string path_prefix_;
};

/// Body of an OpenAI-compatible chat/completions request.
std::string completion_body(const ChatRequest& request);
/// choices[0].message.content; throws EndpointError on an unexpected body.
std::string completion_content(int status, std::string_view body);

}  // namespace exguard
