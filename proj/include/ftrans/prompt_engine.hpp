#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ftrans {

enum class PromptTask { gen_fortran_tests, translate_source, translate_tests, gen_target_tests, repair };

std::string_view to_string(PromptTask task);
PromptTask prompt_task_from_string(std::string_view s);
const std::vector<PromptTask>& all_prompt_tasks();

// Slots the task's user template may reference.
const std::vector<std::string>& declared_slots(PromptTask task);

struct PromptTemplate {
  PromptTask task;
  std::string system_text;
  std::string user_template;
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
};

using SlotMap = std::map<std::string, std::string>;

class PromptLibrary {
public:
  // Reads <task>.system.txt and <task>.user.txt for every task. Throws
  // IoError on a missing file and Error when a template references an
  // undeclared slot.
  static PromptLibrary load(const std::filesystem::path& dir);
  static PromptLibrary bundled();

  const PromptTemplate& get(PromptTask task) const;

  // Substitutes each {slot} once; slot values are not rescanned. The
  // translate_source template names its slot python_code; fortran_code is
  // accepted for it as well. Throws MissingSlot for an absent or empty slot.
  RenderedPrompt render(PromptTask task, const SlotMap& slots) const;

  // Inverse of render: recovers the slot values when `user_text` was
  // rendered from this task's template, otherwise nullopt.
  std::optional<SlotMap> match(PromptTask task, std::string_view user_text) const;

private:
  std::map<PromptTask, PromptTemplate> templates_;
};

struct ParsedResponse {
  std::optional<std::string> source_code;
  std::optional<std::string> unit_tests;
  std::string raw;
};

// Contents of every complete ``` fenced block, in order. A language tag on
// the opening fence line and the newline before the closing fence are
// stripped.
std::vector<std::string> fenced_blocks(std::string_view text);

// Single-artifact tasks take the longest fenced block (source_code for
// translate_source, unit_tests otherwise). repair reads the blocks following
// the "SOURCE CODE:" and "UNIT TESTS:" labels.
// Throws NoCodeBlockFound or MissingSection.
ParsedResponse parse_response(PromptTask task, std::string_view text);

}  // namespace ftrans
