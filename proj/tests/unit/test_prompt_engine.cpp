#include <doctest.h>

#include <random>

#include "ftrans/error.hpp"
#include "ftrans/prompt_engine.hpp"
#include "ftrans/util.hpp"
#include "test_support.hpp"

using namespace ftrans;

namespace {

const PromptLibrary& lib() {
  static const PromptLibrary l = PromptLibrary::bundled();
  return l;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

std::string random_payload(std::mt19937& rng) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABC0123456789 _=+-*/()[]{}:,.\"'#\n\t";
  std::size_t n = 1 + rng() % 80;
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += alphabet[rng() % alphabet.size()];
  return s;
}

}  // namespace

TEST_CASE("bundled template files are pinned") {
  // Update these only together with a deliberate template change.
  const std::map<std::string, std::string> pins{
      {"gen_fortran_tests.system.txt", "188727ad9acabc18f8d1d9daa14e1217c59eca869861960a74f795c3c1f0ca13"},
      {"gen_fortran_tests.user.txt", "80590d7f17f78fb82e11ed15baea1a7c6f7475fff82682cbac29f00472d569ca"},
      {"gen_target_tests.system.txt", "5225cc3154b86bf29e5ffa53614d5b42afa029d8bc84fc4be0e9fe7e5548b6f4"},
      {"gen_target_tests.user.txt", "a1fca1641628fb740da44eec2951cab56e54a7372fa022d3ddcebe419d4bf173"},
      {"repair.system.txt", "560c21e62954c1c25cd1bdb686e2aa69c73f26bfeb6ab6a9672ab1faf5c0049d"},
      {"repair.user.txt", "1365fbade9ee7bad16176992f1a91d61590722a118e0774e4599d372ac1f67ae"},
      {"translate_source.system.txt", "870e48a9292747aa650276ca3fb11b3c22635d2b7c918e19cef6f17cf5a6fa71"},
      {"translate_source.user.txt", "2b9203d5f408ed9a0c5c9a1b69d48104d9b88245992edf3de255b06f82e204be"},
      {"translate_tests.system.txt", "870e48a9292747aa650276ca3fb11b3c22635d2b7c918e19cef6f17cf5a6fa71"},
      {"translate_tests.user.txt", "1225c89be549392fedb3d2cc2c1835901776c2702daa596f97cefd6378123abf"},
  };
  for (const auto& [file, sum] : pins) {
    INFO(file);
    CHECK(sha256_hex(read_file(resource_dir() / "prompts" / file)) == sum);
  }
}

TEST_CASE("templates carry the fixed prompt wording") {
  CHECK(lib().get(PromptTask::gen_fortran_tests).system_text == "You're a proficient Fortran programmer.");
  CHECK(lib().get(PromptTask::translate_source).system_text ==
        "You're a programmer proficient in Fortran and Python.");
  CHECK(lib().get(PromptTask::translate_source).user_template ==
        "Convert the following Fortran function to Python. ```{python_code}```");
  CHECK(lib().get(PromptTask::translate_tests).user_template ==
        "Convert the following unit tests from Fortran to Python using pytest. No need to import "
        "the module under test. ```{unit_tests}```");
  CHECK(contains(lib().get(PromptTask::gen_fortran_tests).user_template,
                 "Given Fortran code, write unit tests using funit."));
  CHECK(contains(lib().get(PromptTask::gen_target_tests).user_template,
                 "Generate 5 unit tests for the following Python function using pytest."));
}

TEST_CASE("every task declares the slots its template uses") {
  for (PromptTask t : all_prompt_tasks()) {
    CHECK_FALSE(declared_slots(t).empty());
    CHECK(prompt_task_from_string(to_string(t)) == t);
  }
  CHECK(declared_slots(PromptTask::repair) ==
        std::vector<std::string>{"python_function", "python_unit_tests", "python_test_results"});
}

TEST_CASE("render translate_source puts the code inside a fence") {
  auto r = lib().render(PromptTask::translate_source, {{"python_code", "x"}});
  CHECK(contains(r.user_text, "Convert the following Fortran function"));
  CHECK(contains(r.user_text, "```x```"));
  auto alias = lib().render(PromptTask::translate_source, {{"fortran_code", "x"}});
  CHECK(alias.user_text == r.user_text);
}

TEST_CASE("render with missing or empty slots") {
  CHECK_THROWS_AS(lib().render(PromptTask::translate_tests, {}), MissingSlot);
  CHECK_THROWS_AS(lib().render(PromptTask::translate_tests, {{"unit_tests", ""}}), MissingSlot);
  try {
    lib().render(PromptTask::repair, {{"python_function", "f"}, {"python_unit_tests", "t"}});
    FAIL("expected MissingSlot");
  } catch (const MissingSlot& e) {
    CHECK(e.slot() == "python_test_results");
  }
}

TEST_CASE("render repair ends with the response-shape instruction") {
  auto r = lib().render(PromptTask::repair, {{"python_function", "def f(): pass"},
                                             {"python_unit_tests", "def test_f(): f()"},
                                             {"python_test_results", "1 failed"}});
  const std::string tail =
      "Modify the source code to pass the failing unit tests. Return a response of the following form:\n"
      "SOURCE CODE: ```<python source code>```\n"
      "UNIT TESTS: ```<python unit tests>```";
  CHECK(r.user_text.size() >= tail.size());
  CHECK(r.user_text.substr(r.user_text.size() - tail.size()) == tail);
  CHECK(contains(r.user_text, "Output from `pytest`:"));
}

TEST_CASE("slot values are not rescanned") {
  auto r = lib().render(PromptTask::translate_tests, {{"unit_tests", "{python_code}"}});
  CHECK(contains(r.user_text, "```{python_code}```"));
}

TEST_CASE("a template with an undeclared slot is rejected at load") {
  testing::TempDir dir;
  for (PromptTask t : all_prompt_tasks()) {
    std::string base = std::string(to_string(t));
    write_file_atomic(dir.path() / (base + ".system.txt"), lib().get(t).system_text);
    write_file_atomic(dir.path() / (base + ".user.txt"), lib().get(t).user_template);
  }
  CHECK_NOTHROW(PromptLibrary::load(dir.path()));
  write_file_atomic(dir.path() / "translate_tests.user.txt", "convert {fortran_code}");
  CHECK_THROWS_AS(PromptLibrary::load(dir.path()), Error);
  fs::remove(dir.path() / "translate_tests.user.txt");
  CHECK_THROWS_AS(PromptLibrary::load(dir.path()), IoError);
}

TEST_CASE("parse single-artifact responses") {
  auto r = parse_response(PromptTask::translate_source, "here you go\n```python\nA\n```");
  REQUIRE(r.source_code);
  CHECK(*r.source_code == "A");
  CHECK_FALSE(r.unit_tests);

  // Longest block wins over a short usage snippet.
  auto two = parse_response(PromptTask::translate_source,
                            "```\nf(1)\n```\nand the code:\n```python\ndef f(x):\n    return x\n```\n");
  CHECK(*two.source_code == "def f(x):\n    return x");

  auto tests = parse_response(PromptTask::gen_target_tests, "```py\ndef test_a():\n    pass\n```");
  CHECK(*tests.unit_tests == "def test_a():\n    pass");
  CHECK_FALSE(tests.source_code);

  CHECK_THROWS_AS(parse_response(PromptTask::translate_source, "no code here"), NoCodeBlockFound);
  CHECK_THROWS_AS(parse_response(PromptTask::translate_source, "```python\ntruncated"), NoCodeBlockFound);
}

TEST_CASE("parse repair responses") {
  const std::string canned =
      "Sure.\nSOURCE CODE: ```python\ndef f(x):\n    return x + 1\n```\n"
      "UNIT TESTS: ```python\ndef test_f():\n    assert f(1) == 2\n```\nDone.";
  auto r = parse_response(PromptTask::repair, canned);
  CHECK(*r.source_code == "def f(x):\n    return x + 1");
  CHECK(*r.unit_tests == "def test_f():\n    assert f(1) == 2");
  CHECK(r.raw == canned);

  try {
    parse_response(PromptTask::repair, "SOURCE CODE: ```\ndef f(): pass\n```\n");
    FAIL("expected MissingSection");
  } catch (const MissingSection& e) {
    CHECK(e.section() == "UNIT TESTS");
  }
  CHECK_THROWS_AS(parse_response(PromptTask::repair, "```\nx\n```"), MissingSection);
  CHECK_THROWS_AS(parse_response(PromptTask::repair, "SOURCE CODE: ```\nx\n```\nUNIT TESTS: none"),
                  NoCodeBlockFound);
}

TEST_CASE("fenced_blocks strips tags and the final newline") {
  auto b = fenced_blocks("a ```c++\nint x;\n``` b ```\r\ny\r\n``` ```z```");
  REQUIRE(b.size() == 3);
  CHECK(b[0] == "int x;");
  CHECK(b[1] == "y");
  CHECK(b[2] == "z");
}

TEST_CASE("property: parse recovers embedded payloads for every task") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    std::string a = random_payload(rng);
    std::string b = random_payload(rng);
    for (PromptTask t : all_prompt_tasks()) {
      if (t == PromptTask::repair) {
        std::string text = "prose\nSOURCE CODE: ```python\n" + a + "\n```\nUNIT TESTS: ```python\n" + b +
                           "\n```\ntrailing words";
        auto r = parse_response(t, text);
        CHECK(*r.source_code == a);
        CHECK(*r.unit_tests == b);
      } else {
        std::string text = "Here it is:\n```python\n" + a + "\n```\nThanks.";
        auto r = parse_response(t, text);
        const auto& got = t == PromptTask::translate_source ? r.source_code : r.unit_tests;
        REQUIRE(got);
        CHECK(*got == a);
      }
    }
  }
}

TEST_CASE("property: render then match recovers the slots") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    for (PromptTask t : all_prompt_tasks()) {
      SlotMap slots;
      for (const auto& name : declared_slots(t)) slots[name] = random_payload(rng);
      auto r = lib().render(t, slots);
      auto back = lib().match(t, r.user_text);
      REQUIRE(back);
      CHECK(*back == slots);
    }
  }
  CHECK_FALSE(lib().match(PromptTask::translate_source, "unrelated text"));
}
