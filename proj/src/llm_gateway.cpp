#include "ftrans/llm_gateway.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <thread>

#include "ftrans/error.hpp"
#include "ftrans/fortran_lexer.hpp"
#include "ftrans/fortran_units.hpp"
#include "ftrans/rule_translator.hpp"
#include "ftrans/util.hpp"

namespace ftrans {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw Error("unknown chat role: " + std::string(s));
}

std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::http_chat: return "http_chat";
    case ProviderKind::replay: return "replay";
    case ProviderKind::rule_based: return "rule_based";
  }
  return "rule_based";
}

ProviderKind provider_kind_from_string(std::string_view s) {
  if (s == "http_chat") return ProviderKind::http_chat;
  if (s == "replay") return ProviderKind::replay;
  if (s == "rule_based") return ProviderKind::rule_based;
  throw Error("unknown provider kind: " + std::string(s));
}

namespace {

std::string normalize_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r' && i + 1 < s.size() && s[i + 1] == '\n') continue;
    out += s[i];
  }
  return out;
}

nlohmann::json messages_json(const std::vector<ChatMessage>& messages, bool normalize) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : messages) {
    arr.push_back({{"role", to_string(m.role)},
                   {"content", normalize ? normalize_newlines(m.content) : m.content}});
  }
  return arr;
}

}  // namespace

std::string request_digest(const std::vector<ChatMessage>& messages, double temperature) {
  nlohmann::json canonical = {{"messages", messages_json(messages, true)},
                              {"temperature", temperature}};
  return sha256_hex(canonical.dump());
}

void check_pipeline_messages(const std::vector<ChatMessage>& messages) {
  if (messages.size() != 2 || messages[0].role != Role::system ||
      messages[1].role != Role::user) {
    throw ContractViolation("a request is one system message followed by one user message");
  }
  for (const auto& m : messages) {
    if (m.content.empty()) throw ContractViolation("chat message content is empty");
  }
}

nlohmann::json to_json(const ChatExchange& e) {
  return {{"request_digest", e.request_digest},
          {"provider_kind", to_string(e.provider_kind)},
          {"request",
           {{"messages", messages_json(e.messages, false)},
            {"temperature", e.temperature},
            {"model", e.model}}},
          {"response_text", e.response_text},
          {"latency_seconds", e.latency_seconds}};
}

ChatExchange exchange_from_json(const nlohmann::json& j) {
  ChatExchange e;
  e.request_digest = j.at("request_digest");
  e.provider_kind = provider_kind_from_string(j.at("provider_kind").get<std::string>());
  const auto& req = j.at("request");
  for (const auto& m : req.at("messages")) {
    e.messages.push_back({role_from_string(m.at("role").get<std::string>()), m.at("content")});
  }
  e.temperature = req.at("temperature");
  e.model = req.value("model", "");
  e.response_text = j.at("response_text");
  e.latency_seconds = j.value("latency_seconds", 0.0);
  return e;
}

ChatClient::ChatClient(ProviderConfig config) : config_(std::move(config)) {
  if (config_.kind == ProviderKind::http_chat &&
      (config_.base_url.empty() || config_.model_name.empty())) {
    throw ContractViolation("http_chat provider needs base_url and model_name");
  }
  if (config_.kind == ProviderKind::replay && config_.transcript_dir.empty()) {
    throw ContractViolation("replay provider needs a transcript directory");
  }
  if (config_.kind == ProviderKind::rule_based) {
    if (config_.corpus_dir.empty()) config_.corpus_dir = resource_dir() / "corpus";
    prompts_ = std::make_unique<PromptLibrary>(PromptLibrary::bundled());
  }
}

ChatClient::~ChatClient() = default;

int ChatClient::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

void ChatClient::throttle() {
  if (config_.requests_per_minute <= 0) return;
  auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(60.0 / config_.requests_per_minute));
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

ChatExchange ChatClient::complete(const std::vector<ChatMessage>& messages) {
  check_pipeline_messages(messages);
  ChatExchange e;
  e.messages = messages;
  e.temperature = config_.temperature;
  e.model = config_.model_name;
  e.provider_kind = config_.kind;
  e.request_digest = request_digest(messages, config_.temperature);
  {
    std::lock_guard lock(mutex_);
    ++calls_;
  }
  auto start = std::chrono::steady_clock::now();
  switch (config_.kind) {
    case ProviderKind::http_chat: e.response_text = http_complete(messages); break;
    case ProviderKind::replay: e.response_text = replay_complete(e.request_digest); break;
    case ProviderKind::rule_based: e.response_text = rule_based_complete(messages); break;
  }
  e.latency_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (config_.kind != ProviderKind::replay && !config_.transcript_dir.empty()) {
    record_transcript(e, config_.transcript_dir);
  }
  return e;
}

ChatExchange complete(const ProviderConfig& config, const std::vector<ChatMessage>& messages) {
  ChatClient client(config);
  return client.complete(messages);
}

// --- http_chat ---------------------------------------------------------------

std::string ChatClient::http_complete(const std::vector<ChatMessage>& messages) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (!key || !*key) throw AuthMissing(config_.api_key_env);

  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, url_re)) {
    throw ContractViolation("base_url must look like http(s)://host[:port][/path]: " +
                            config_.base_url);
  }
  std::string origin = m[1];
  std::string prefix = m[2].matched ? std::string(m[2]) : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  const std::string path = prefix + "/chat/completions";

  nlohmann::json body = {{"model", config_.model_name},
                         {"messages", messages_json(messages, false)},
                         {"temperature", config_.temperature}};
  const std::string payload = body.dump();

  httplib::Client client(origin);
  auto secs = static_cast<time_t>(config_.timeout_seconds);
  auto usecs = static_cast<time_t>((config_.timeout_seconds - secs) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_bearer_token_auth(key);

  const int attempts = std::max(1, config_.max_attempts);
  double delay = config_.backoff_seconds;
  bool last_was_timeout = false;
  int last_status = 0;
  std::string last_body;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    throttle();
    auto res = client.Post(path, payload, "application/json");
    if (res) {
      last_was_timeout = false;
      last_status = res->status;
      last_body = res->body.substr(0, 500);
      if (res->status == 200) {
        try {
          auto j = nlohmann::json::parse(res->body);
          return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& ex) {
          throw ProviderError(res->status, std::string("malformed response: ") + ex.what());
        }
      }
      bool transient = res->status == 429 || res->status >= 500;
      if (!transient) throw ProviderError(res->status, last_body);
    } else {
      last_was_timeout = res.error() == httplib::Error::Read ||
                         res.error() == httplib::Error::Write ||
                         res.error() == httplib::Error::ConnectionTimeout;
      last_status = 0;
      last_body = httplib::to_string(res.error());
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      delay *= 2;
    }
  }
  if (last_was_timeout) {
    throw TimeoutExceeded("chat request timed out after " + std::to_string(attempts) +
                          " attempts");
  }
  throw ProviderError(last_status, last_body);
}

// --- replay ------------------------------------------------------------------

std::string ChatClient::replay_complete(const std::string& digest) {
  auto path = config_.transcript_dir / (digest + ".json");
  if (!std::filesystem::exists(path)) throw ReplayMiss(digest);
  try {
    return nlohmann::json::parse(read_file(path)).at("response_text").get<std::string>();
  } catch (const nlohmann::json::exception& ex) {
    throw IoError("unreadable transcript " + path.string() + ": " + ex.what());
  }
}

std::filesystem::path record_transcript(const ChatExchange& exchange,
                                        const std::filesystem::path& dir) {
  auto path = dir / (exchange.request_digest + ".json");
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    try {
      auto old = nlohmann::json::parse(read_file(path));
      if (old.value("response_text", "") == exchange.response_text) return path;
    } catch (const std::exception&) {
      // overwrite unreadable transcripts
    }
  }
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file_atomic(path, to_json(exchange).dump(2) + "\n");
  return path;
}

// --- rule_based ----------------------------------------------------------------

std::string inject_defect(const std::string& source) {
  auto lines = split_lines(source);
  std::size_t ret = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).rfind("return", 0) == 0) {
      ret = i;
      break;
    }
  }
  for (std::size_t i = ret; i-- > 0;) {
    if (lines[i].find("np.where(") != std::string::npos) {
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(i));
      std::string out;
      for (const auto& l : lines) out += l + "\n";
      return out;
    }
  }
  std::string out = source;
  if (auto p = out.find(" - "); p != std::string::npos) out.replace(p, 3, " + ");
  return out;
}

namespace {

std::string fence(const std::string& code) {
  std::string out = "```python\n" + code;
  if (out.back() != '\n') out += '\n';
  return out + "```";
}

std::vector<std::string> procedure_names(std::string_view fortran) {
  std::vector<std::string> names;
  for (const auto& s : fortran::lex_statements(fortran)) {
    const auto& t = s.tokens;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      if (!t[i].ident()) break;
      if ((t[i].text == "function" || t[i].text == "subroutine") && t[i + 1].ident()) {
        names.push_back(t[i + 1].text);
        break;
      }
      if (t[i].is("end")) break;
      if (t[i].text != "elemental" && t[i].text != "pure" && t[i].text != "recursive" &&
          t[i].text != "impure" && !fortran::is_type_keyword(t[i].text)) {
        break;
      }
      if (i + 1 < t.size() && t[i + 1].is("(")) {
        // skip kind selector
        int depth = 0;
        std::size_t k = i + 1;
        for (; k < t.size(); ++k) {
          if (t[k].is("(")) ++depth;
          else if (t[k].is(")") && --depth == 0) break;
        }
        i = k;
      }
    }
  }
  return names;
}

std::string first_python_def(const std::string& python) {
  static const std::regex def_re(R"((?:^|\n)def ([A-Za-z_][A-Za-z0-9_]*)\()");
  std::smatch m;
  if (std::regex_search(python, m, def_re)) return m[1];
  return {};
}

}  // namespace

std::string ChatClient::rule_based_complete(const std::vector<ChatMessage>& messages) {
  const std::string& user = messages[1].content;
  namespace fs = std::filesystem;

  auto golden = [&](const std::string& file) -> std::optional<std::string> {
    if (file.empty() || !fs::is_directory(config_.corpus_dir)) return std::nullopt;
    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(config_.corpus_dir)) entries.push_back(e.path());
    std::sort(entries.begin(), entries.end());
    for (const auto& e : entries) {
      auto p = e / "golden" / file;
      if (fs::exists(p)) return read_file(p);
    }
    return std::nullopt;
  };
  auto golden_names = [&]() {
    std::set<std::string> names;
    if (!fs::is_directory(config_.corpus_dir)) return names;
    for (const auto& e : fs::recursive_directory_iterator(config_.corpus_dir)) {
      auto p = e.path();
      if (p.parent_path().filename() == "golden" && p.extension() == ".py" &&
          p.filename().string().rfind("test_", 0) != 0) {
        names.insert(p.stem().string());
      }
    }
    return names;
  };

  if (auto slots = prompts_->match(PromptTask::gen_fortran_tests, user)) {
    const std::string& code = slots->at("fortran_code");
    auto names = procedure_names(code);
    if (!names.empty() && fs::is_directory(config_.corpus_dir)) {
      std::vector<fs::path> pfs;
      for (const auto& e : fs::recursive_directory_iterator(config_.corpus_dir)) {
        if (e.path().extension() == ".pf") pfs.push_back(e.path());
      }
      std::sort(pfs.begin(), pfs.end());
      for (const auto& p : pfs) {
        auto selected = fortran::select_tests_for_unit(read_file(p), names.front());
        if (!selected.empty()) return "```fortran\n" + selected + "```";
      }
    }
    return "```fortran\n" + skeleton_funit_tests(code) + "```";
  }

  if (auto slots = prompts_->match(PromptTask::translate_tests, user)) {
    const std::string& pf = slots->at("unit_tests");
    // The unit under test is the golden unit mentioned most often in the test
    // bodies (the preamble's use-only list names every unit of the module).
    auto known = golden_names();
    std::map<std::string, int> counts;
    bool in_body = false;
    for (const auto& s : fortran::lex_statements(pf)) {
      if (!in_body) {
        in_body = s.tokens.size() == 1 && s.tokens[0].is("contains");
        continue;
      }
      for (const auto& t : s.tokens) {
        if (t.ident() && known.count(t.text)) ++counts[t.text];
      }
    }
    std::string best;
    int best_count = 0;
    for (const auto& [name, c] : counts) {
      if (c > best_count) {
        best = name;
        best_count = c;
      }
    }
    if (auto g = golden("test_" + best + ".py")) return fence(*g);
    return fence(translate_funit_to_pytest(pf));
  }

  if (auto slots = prompts_->match(PromptTask::translate_source, user)) {
    const std::string& code = slots->at("python_code");
    auto names = procedure_names(code);
    std::string source;
    if (names.size() == 1) {
      if (auto g = golden(names.front() + ".py")) source = *g;
    }
    if (source.empty()) source = translate_fortran_to_python(code);
    if (!names.empty() && config_.inject_defect_units.count(names.front())) {
      std::lock_guard lock(mutex_);
      if (defects_served_.insert(names.front()).second) source = inject_defect(source);
    }
    return fence(source);
  }

  if (auto slots = prompts_->match(PromptTask::gen_target_tests, user)) {
    const std::string& fn = slots->at("python_function");
    std::string name = first_python_def(fn);
    if (auto g = golden("test_" + name + ".py")) return fence(*g);
    std::string tests = "import numpy as np\n";
    for (int k = 1; k <= 5; ++k) {
      tests += "\n\ndef test_" + name + "_smoke_" + std::to_string(k) + "():\n    assert callable(" +
               name + ")\n";
    }
    return fence(tests);
  }

  if (auto slots = prompts_->match(PromptTask::repair, user)) {
    const std::string& fn = slots->at("python_function");
    std::string name = first_python_def(fn);
    auto src = golden(name + ".py");
    auto tests = golden("test_" + name + ".py");
    std::string s = src ? *src : fn;
    std::string t = tests ? *tests : slots->at("python_unit_tests");
    return "SOURCE CODE: " + fence(s) + "\nUNIT TESTS: " + fence(t);
  }

  throw ProviderError(400, "rule_based provider does not recognize the prompt");
}

}  // namespace ftrans
