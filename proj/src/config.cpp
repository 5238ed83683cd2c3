#include "ftrans/config.hpp"

#include <cstdlib>
#include <sstream>

#include "ftrans/error.hpp"
#include "ftrans/util.hpp"

namespace ftrans {

namespace {

using json = nlohmann::json;

json provider_json(const ProviderConfig& p) {
  return {{"kind", to_string(p.kind)},
          {"base_url", p.base_url},
          {"model_name", p.model_name},
          {"temperature", p.temperature},
          {"max_attempts", p.max_attempts},
          {"timeout_seconds", p.timeout_seconds},
          {"api_key_env", p.api_key_env},
          {"requests_per_minute", p.requests_per_minute},
          {"backoff_seconds", p.backoff_seconds},
          {"transcript_dir", p.transcript_dir.string()},
          {"corpus_dir", p.corpus_dir.string()},
          {"inject_defect_units", p.inject_defect_units}};
}

json harness_json(const HarnessConfig& h) {
  return {{"test_command", h.test_command},
          {"summary_regex", h.summary_regex},
          {"timeout_seconds", h.timeout_seconds},
          {"sandbox_wrapper", h.sandbox_wrapper},
          {"env_allowlist", h.env_allowlist},
          {"failure_context_chars", h.failure_context_chars}};
}

json settings_json(const CliConfig& c) {
  return {{"provider", provider_json(c.provider)},
          {"harness", harness_json(c.harness)},
          {"token_budget", c.token_budget},
          {"max_iters", c.max_iters},
          {"workers", c.workers}};
}

// Objects are descended, everything else (arrays included) is a leaf.
void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
  for (const auto& [k, v] : j.items()) {
    std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) flatten(v, key, out);
    else out[key] = v;
  }
}

bool same_shape(const json& want, const json& got) {
  if (want.is_number()) return got.is_number();
  if (want.is_array()) {
    if (!got.is_array()) return false;
    for (const auto& e : got) {
      if (!e.is_string()) return false;
    }
    return true;
  }
  return want.type() == got.type();
}

json from_env_string(const std::string& key, const json& want, const std::string& text) {
  try {
    if (want.is_number_integer()) {
      std::size_t used = 0;
      long v = std::stol(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    }
    if (want.is_number()) {
      std::size_t used = 0;
      double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    }
  } catch (const std::exception&) {
    throw ConfigError("environment value for " + key + " is not a number: " + text);
  }
  if (want.is_array()) {
    if (!text.empty() && text.front() == '[') {
      try {
        return json::parse(text);
      } catch (const json::exception&) {
        throw ConfigError("environment value for " + key + " is not a JSON array");
      }
    }
    json arr = json::array();
    std::istringstream in(text);
    for (std::string w; in >> w;) arr.push_back(w);
    return arr;
  }
  return text;
}

void apply_layer(const json& layer, const std::string& name, std::map<std::string, json>& merged,
                 std::map<std::string, std::string>& origin) {
  if (!layer.is_object()) throw ConfigError(name + " configuration must be a JSON object");
  std::map<std::string, json> flat;
  flatten(layer, "", flat);
  for (const auto& [key, value] : flat) {
    auto it = merged.find(key);
    if (it == merged.end()) throw ConfigError("unknown configuration key '" + key + "' (" + name + ")");
    if (!same_shape(it->second, value)) {
      throw ConfigError("configuration key '" + key + "' has the wrong type (" + name + ")");
    }
    it->second = value;
    origin[key] = name;
  }
}

json::json_pointer pointer_of(std::string dotted) {
  for (auto& ch : dotted) {
    if (ch == '.') ch = '/';
  }
  return json::json_pointer("/" + dotted);
}

json unflatten(const std::map<std::string, json>& flat) {
  json out = json::object();
  for (const auto& [key, value] : flat) {
    out[pointer_of(key)] = value;
  }
  return out;
}

}  // namespace

const std::map<std::string, std::string>& env_bindings() {
  static const std::map<std::string, std::string> m{
      {"FTRANS_PROVIDER", "provider.kind"},
      {"FTRANS_BASE_URL", "provider.base_url"},
      {"FTRANS_MODEL", "provider.model_name"},
      {"FTRANS_TEMPERATURE", "provider.temperature"},
      {"FTRANS_API_KEY_ENV", "provider.api_key_env"},
      {"FTRANS_TRANSCRIPT_DIR", "provider.transcript_dir"},
      {"FTRANS_TEST_COMMAND", "harness.test_command"},
      {"FTRANS_TEST_TIMEOUT", "harness.timeout_seconds"},
      {"FTRANS_TOKEN_BUDGET", "token_budget"},
      {"FTRANS_MAX_ITERS", "max_iters"},
      {"FTRANS_WORKERS", "workers"},
  };
  return m;
}

std::map<std::string, std::string> current_env() {
  std::map<std::string, std::string> env;
  auto grab = [&](const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) env[name] = v;
  };
  grab("FTRANS_CONFIG");
  for (const auto& [name, key] : env_bindings()) grab(name);
  return env;
}

CliConfig resolve_config(const std::optional<std::filesystem::path>& flag_config_path,
                         const nlohmann::json& flags,
                         const std::map<std::string, std::string>& env) {
  CliConfig defaults;
  defaults.provider.corpus_dir = resource_dir() / "corpus";

  std::map<std::string, json> merged;
  flatten(settings_json(defaults), "", merged);
  std::map<std::string, std::string> origin;
  for (const auto& [key, v] : merged) origin[key] = "default";

  std::filesystem::path file;
  if (auto it = env.find("FTRANS_CONFIG"); it != env.end() && !it->second.empty()) file = it->second;
  else if (flag_config_path) file = *flag_config_path;
  if (!file.empty()) {
    json doc;
    try {
      doc = json::parse(read_file(file));
    } catch (const json::exception& e) {
      throw ConfigError("config file " + file.string() + " is not valid JSON: " + e.what());
    } catch (const Error& e) {
      throw ConfigError(std::string("cannot read config file: ") + e.what());
    }
    apply_layer(doc, "file", merged, origin);
  }
  if (!flags.is_null()) apply_layer(flags, "flag", merged, origin);

  json env_layer = json::object();
  for (const auto& [name, key] : env_bindings()) {
    auto it = env.find(name);
    if (it == env.end()) continue;
    env_layer[pointer_of(key)] = from_env_string(name, merged.at(key), it->second);
  }
  apply_layer(env_layer, "env", merged, origin);

  json j = unflatten(merged);
  CliConfig c;
  c.config_file = file;
  c.origin = std::move(origin);
  try {
    const auto& p = j.at("provider");
    c.provider.kind = provider_kind_from_string(p.at("kind").get<std::string>());
    c.provider.base_url = p.at("base_url");
    c.provider.model_name = p.at("model_name");
    c.provider.temperature = p.at("temperature");
    c.provider.max_attempts = p.at("max_attempts");
    c.provider.timeout_seconds = p.at("timeout_seconds");
    c.provider.api_key_env = p.at("api_key_env");
    c.provider.requests_per_minute = p.at("requests_per_minute");
    c.provider.backoff_seconds = p.at("backoff_seconds");
    c.provider.transcript_dir = p.at("transcript_dir").get<std::string>();
    c.provider.corpus_dir = p.at("corpus_dir").get<std::string>();
    c.provider.inject_defect_units = p.at("inject_defect_units").get<std::set<std::string>>();
    const auto& h = j.at("harness");
    c.harness.test_command = h.at("test_command").get<std::vector<std::string>>();
    c.harness.summary_regex = h.at("summary_regex");
    c.harness.timeout_seconds = h.at("timeout_seconds");
    c.harness.sandbox_wrapper = h.at("sandbox_wrapper").get<std::vector<std::string>>();
    c.harness.env_allowlist = h.at("env_allowlist").get<std::vector<std::string>>();
    c.harness.failure_context_chars = h.at("failure_context_chars");
    c.token_budget = j.at("token_budget");
    c.max_iters = j.at("max_iters");
    c.workers = j.at("workers");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }

  if (c.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (c.token_budget < 1) throw ConfigError("token_budget must be at least 1");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  if (c.harness.test_command.empty()) throw ConfigError("harness.test_command is empty");
  if (c.harness.timeout_seconds <= 0) throw ConfigError("harness.timeout_seconds must be positive");
  if (c.provider.kind == ProviderKind::http_chat &&
      (c.provider.base_url.empty() || c.provider.model_name.empty())) {
    throw ConfigError("http_chat provider requires provider.base_url and provider.model_name");
  }
  if (c.provider.kind == ProviderKind::replay && c.provider.transcript_dir.empty()) {
    throw ConfigError("replay provider requires provider.transcript_dir");
  }
  return c;
}

nlohmann::json to_json(const CliConfig& c) {
  json j = settings_json(c);
  j["config_file"] = c.config_file.string();
  j["origin"] = c.origin;
  return j;
}

}  // namespace ftrans
