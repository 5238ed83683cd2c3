#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ftrans/llm_gateway.hpp"
#include "ftrans/test_harness.hpp"

namespace ftrans {

struct CliConfig {
  ProviderConfig provider;
  HarnessConfig harness;
  int token_budget = 8000;
  int max_iters = 5;
  int workers = 1;
  std::filesystem::path config_file;  // empty when none was read
  // Dotted key -> layer that supplied the value ("default", "file", "flag", "env").
  std::map<std::string, std::string> origin;
};

// Environment variable -> dotted config key.
const std::map<std::string, std::string>& env_bindings();

// Layers are merged env > flags > file > defaults. `flags` uses the config
// file schema (nested objects). The file is FTRANS_CONFIG when set, else
// `flag_config_path`. The environment is passed in so tests can control it.
// Throws ConfigError.
CliConfig resolve_config(const std::optional<std::filesystem::path>& flag_config_path,
                         const nlohmann::json& flags,
                         const std::map<std::string, std::string>& env);

// The process environment restricted to the variables resolve_config reads.
std::map<std::string, std::string> current_env();

nlohmann::json to_json(const CliConfig& c);

}  // namespace ftrans
