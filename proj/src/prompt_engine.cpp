#include "ftrans/prompt_engine.hpp"

#include <algorithm>
#include <cctype>

#include "ftrans/error.hpp"
#include "ftrans/util.hpp"

namespace ftrans {

std::string_view to_string(PromptTask task) {
  switch (task) {
    case PromptTask::gen_fortran_tests: return "gen_fortran_tests";
    case PromptTask::translate_source: return "translate_source";
    case PromptTask::translate_tests: return "translate_tests";
    case PromptTask::gen_target_tests: return "gen_target_tests";
    case PromptTask::repair: return "repair";
  }
  return "repair";
}

PromptTask prompt_task_from_string(std::string_view s) {
  for (auto t : all_prompt_tasks()) {
    if (to_string(t) == s) return t;
  }
  throw Error("unknown prompt task: " + std::string(s));
}

const std::vector<PromptTask>& all_prompt_tasks() {
  static const std::vector<PromptTask> tasks{
      PromptTask::gen_fortran_tests, PromptTask::translate_source, PromptTask::translate_tests,
      PromptTask::gen_target_tests, PromptTask::repair};
  return tasks;
}

const std::vector<std::string>& declared_slots(PromptTask task) {
  static const std::map<PromptTask, std::vector<std::string>> slots{
      {PromptTask::gen_fortran_tests, {"fortran_code"}},
      {PromptTask::translate_source, {"python_code"}},
      {PromptTask::translate_tests, {"unit_tests"}},
      {PromptTask::gen_target_tests, {"python_function"}},
      {PromptTask::repair, {"python_function", "python_unit_tests", "python_test_results"}},
  };
  return slots.at(task);
}

namespace {

bool slot_char(char c) { return std::islower(static_cast<unsigned char>(c)) || c == '_'; }

// Calls fn(begin, end, name) for every {name} placeholder made of [a-z_].
template <typename Fn>
void for_each_placeholder(std::string_view text, Fn fn) {
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    std::size_t end = pos + 1;
    while (end < text.size() && slot_char(text[end])) ++end;
    if (end < text.size() && text[end] == '}' && end > pos + 1) {
      fn(pos, end + 1, std::string(text.substr(pos + 1, end - pos - 1)));
      pos = end + 1;
    } else {
      ++pos;
    }
  }
}

const std::string* lookup_slot(PromptTask task, const std::string& name, const SlotMap& slots) {
  auto it = slots.find(name);
  if (it != slots.end() && !it->second.empty()) return &it->second;
  if (task == PromptTask::translate_source && name == "python_code") {
    it = slots.find("fortran_code");
    if (it != slots.end() && !it->second.empty()) return &it->second;
  }
  return nullptr;
}

}  // namespace

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  PromptLibrary lib;
  for (auto task : all_prompt_tasks()) {
    std::string base(to_string(task));
    PromptTemplate t{task, read_file(dir / (base + ".system.txt")),
                     read_file(dir / (base + ".user.txt"))};
    const auto& declared = declared_slots(task);
    for_each_placeholder(t.user_template, [&](std::size_t, std::size_t, const std::string& name) {
      if (std::find(declared.begin(), declared.end(), name) == declared.end()) {
        throw Error("template " + base + " references undeclared slot {" + name + "}");
      }
    });
    lib.templates_.emplace(task, std::move(t));
  }
  return lib;
}

PromptLibrary PromptLibrary::bundled() { return load(resource_dir() / "prompts"); }

const PromptTemplate& PromptLibrary::get(PromptTask task) const { return templates_.at(task); }

RenderedPrompt PromptLibrary::render(PromptTask task, const SlotMap& slots) const {
  const PromptTemplate& t = get(task);
  for (const auto& name : declared_slots(task)) {
    if (!lookup_slot(task, name, slots)) throw MissingSlot(name);
  }
  std::string out;
  std::size_t last = 0;
  for_each_placeholder(t.user_template, [&](std::size_t b, std::size_t e, const std::string& name) {
    out.append(t.user_template, last, b - last);
    out += *lookup_slot(task, name, slots);
    last = e;
  });
  out.append(t.user_template, last, std::string::npos);
  return {t.system_text, out};
}

std::optional<SlotMap> PromptLibrary::match(PromptTask task, std::string_view text) const {
  const std::string& tpl = get(task).user_template;
  std::vector<std::string> literals;
  std::vector<std::string> names;
  std::size_t last = 0;
  for_each_placeholder(tpl, [&](std::size_t b, std::size_t e, const std::string& name) {
    literals.push_back(tpl.substr(last, b - last));
    names.push_back(name);
    last = e;
  });
  literals.push_back(tpl.substr(last));

  if (text.substr(0, literals[0].size()) != literals[0]) return std::nullopt;
  std::size_t pos = literals[0].size();
  SlotMap out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& next = literals[i + 1];
    std::size_t end;
    if (i + 1 == names.size()) {
      if (text.size() < pos + next.size() || text.substr(text.size() - next.size()) != next) {
        return std::nullopt;
      }
      end = text.size() - next.size();
    } else {
      end = text.find(next, pos);
      if (end == std::string_view::npos) return std::nullopt;
    }
    out[names[i]] = std::string(text.substr(pos, end - pos));
    pos = end + next.size();
  }
  if (names.empty() && text.size() != literals[0].size()) return std::nullopt;
  return out;
}

namespace {

struct Block {
  std::size_t begin;  // offset of the opening fence
  std::size_t end;    // offset just past the closing fence
  std::string content;
};

std::vector<Block> blocks_with_offsets(std::string_view text) {
  std::vector<Block> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = text.find("```", pos);
    if (open == std::string_view::npos) break;
    std::size_t body = open + 3;
    std::size_t close = text.find("```", body);
    if (close == std::string_view::npos) break;
    std::string_view c = text.substr(body, close - body);
    std::size_t tag = 0;
    while (tag < c.size() && (std::isalnum(static_cast<unsigned char>(c[tag])) || c[tag] == '_' ||
                              c[tag] == '+' || c[tag] == '-')) {
      ++tag;
    }
    if (tag < c.size() && c[tag] == '\r') ++tag;
    if (tag < c.size() && c[tag] == '\n') c.remove_prefix(tag + 1);
    if (!c.empty() && c.back() == '\n') {
      c.remove_suffix(1);
      if (!c.empty() && c.back() == '\r') c.remove_suffix(1);
    }
    out.push_back({open, close + 3, std::string(c)});
    pos = close + 3;
  }
  return out;
}

std::string block_after(std::string_view text, std::size_t from, const std::string& section) {
  for (auto& b : blocks_with_offsets(text)) {
    if (b.begin >= from) return b.content;
  }
  throw NoCodeBlockFound(section);
}

}  // namespace

std::vector<std::string> fenced_blocks(std::string_view text) {
  std::vector<std::string> out;
  for (auto& b : blocks_with_offsets(text)) out.push_back(std::move(b.content));
  return out;
}

ParsedResponse parse_response(PromptTask task, std::string_view text) {
  ParsedResponse r;
  r.raw = std::string(text);
  if (task == PromptTask::repair) {
    const std::string src_label = "SOURCE CODE:";
    const std::string test_label = "UNIT TESTS:";
    std::size_t s = text.find(src_label);
    if (s == std::string_view::npos) throw MissingSection("SOURCE CODE");
    auto blocks = blocks_with_offsets(text);
    auto src = std::find_if(blocks.begin(), blocks.end(),
                            [&](const Block& b) { return b.begin >= s; });
    if (src == blocks.end()) throw NoCodeBlockFound("SOURCE CODE");
    std::size_t t = text.find(test_label, src->end);
    if (t == std::string_view::npos) throw MissingSection("UNIT TESTS");
    r.source_code = src->content;
    r.unit_tests = block_after(text, t, "UNIT TESTS");
    return r;
  }
  auto blocks = fenced_blocks(text);
  if (blocks.empty()) throw NoCodeBlockFound();
  auto longest = std::max_element(blocks.begin(), blocks.end(),
                                  [](const std::string& a, const std::string& b) {
                                    return a.size() < b.size();
                                  });
  if (task == PromptTask::translate_source) {
    r.source_code = *longest;
  } else {
    r.unit_tests = *longest;
  }
  return r;
}

}  // namespace ftrans
