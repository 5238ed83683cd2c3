#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftrans/prompt_engine.hpp"

namespace ftrans {

enum class Role { system, user, assistant };
std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

struct ChatMessage {
  Role role;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

enum class ProviderKind { http_chat, replay, rule_based };
std::string_view to_string(ProviderKind kind);
ProviderKind provider_kind_from_string(std::string_view s);

struct ProviderConfig {
  ProviderKind kind = ProviderKind::rule_based;
  std::string base_url;
  std::string model_name;
  double temperature = 0.0;
  int max_attempts = 3;
  double timeout_seconds = 60.0;
  std::string api_key_env = "FTRANS_API_KEY";
  double requests_per_minute = 0.0;  // 0 disables the limiter
  double backoff_seconds = 1.0;      // first retry delay, doubled per retry
  std::filesystem::path transcript_dir;  // replay source; optional recording target
  std::filesystem::path corpus_dir;      // rule_based golden lookup
  // rule_based: units whose first translate_source answer carries a planted
  // defect, to exercise the repair path.
  std::set<std::string> inject_defect_units;
};

struct ChatExchange {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::string model;
  std::string response_text;
  double latency_seconds = 0.0;
  ProviderKind provider_kind = ProviderKind::rule_based;
  std::string request_digest;
};

nlohmann::json to_json(const ChatExchange& e);
ChatExchange exchange_from_json(const nlohmann::json& j);

// sha256 over the canonical request {messages, temperature}: sorted keys,
// CRLF folded to LF. The model name is excluded so transcripts recorded with
// one provider replay under another.
std::string request_digest(const std::vector<ChatMessage>& messages, double temperature);

// Throws ContractViolation unless messages are exactly [system, user] with
// nonempty content.
void check_pipeline_messages(const std::vector<ChatMessage>& messages);

class ChatClient {
public:
  explicit ChatClient(ProviderConfig config);
  ~ChatClient();
  ChatClient(const ChatClient&) = delete;
  ChatClient& operator=(const ChatClient&) = delete;

  // Thread-safe. Throws AuthMissing, ProviderError, TimeoutExceeded,
  // ReplayMiss or ContractViolation.
  ChatExchange complete(const std::vector<ChatMessage>& messages);

  const ProviderConfig& config() const { return config_; }
  int calls() const;

private:
  std::string http_complete(const std::vector<ChatMessage>& messages);
  std::string replay_complete(const std::string& digest);
  std::string rule_based_complete(const std::vector<ChatMessage>& messages);
  void throttle();

  ProviderConfig config_;
  mutable std::mutex mutex_;
  std::chrono::steady_clock::time_point next_slot_{};
  std::set<std::string> defects_served_;
  int calls_ = 0;
  std::unique_ptr<PromptLibrary> prompts_;
};

ChatExchange complete(const ProviderConfig& config, const std::vector<ChatMessage>& messages);

// Writes <dir>/<digest>.json atomically. An existing transcript with the same
// response is left untouched. Throws IoError.
std::filesystem::path record_transcript(const ChatExchange& exchange,
                                        const std::filesystem::path& dir);

// The planted defect used by the rule_based provider: drops the last
// np.where guard before the first return (for the day-length golden, the
// declination guard), otherwise flips the first subtraction to an addition.
std::string inject_defect(const std::string& python_source);

}  // namespace ftrans
