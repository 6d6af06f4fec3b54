#pragma once
// Minimal single-header test harness with Catch2-style TEST_CASE / REQUIRE /
// CHECK macros. Test cases run in registration order, which within one
// translation unit is textual order.

#include <cstdio>
#include <cstring>
#include <exception>
#include <string>
#include <vector>

namespace tsl_test {

struct test_case {
  char const* name;
  char const* tags;
  void (*function)();
};

inline std::vector<test_case>& registry() {
  static std::vector<test_case> cases;
  return cases;
}

struct registrar {
  registrar(void (*function)(), char const* name, char const* tags = "") {
    registry().push_back(test_case{name, tags, function});
  }
};

struct require_failure : std::exception {
  char const* what() const noexcept override { return "REQUIRE failed"; }
};

struct run_state {
  std::size_t failed_checks = 0;
  char const* current = "";
};

inline run_state& state() {
  static run_state s;
  return s;
}

inline void report_failure(char const* macro, char const* expression, char const* file, int line) {
  ++state().failed_checks;
  std::fprintf(stderr, "%s:%d: %s(%s) failed in '%s'\n", file, line, macro, expression,
               state().current);
}

inline void unsafe_banner(char const* test_name, char const* missing) {
  std::fprintf(stderr,
               "*** UNSAFE TEST '%s': depends on untested primitive(s): %s; "
               "a failure may originate in those primitives ***\n",
               test_name, missing);
}

inline int run(int argc, char** argv) {
  char const* filter = argc > 1 ? argv[1] : nullptr;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
  for (auto const& tc : registry()) {
    if (filter != nullptr && std::strstr(tc.name, filter) == nullptr) {
      ++skipped;
      continue;
    }
    state().current = tc.name;
    std::size_t const before = state().failed_checks;
    bool aborted = false;
    try {
      tc.function();
    } catch (require_failure const&) {
      aborted = true;
    } catch (std::exception const& e) {
      std::fprintf(stderr, "unexpected exception in '%s': %s\n", tc.name, e.what());
      aborted = true;
    }
    if (aborted || state().failed_checks != before) {
      ++failed;
      std::printf("FAIL %s\n", tc.name);
    } else {
      ++passed;
      std::printf("PASS %s\n", tc.name);
    }
  }
  std::printf("%zu passed, %zu failed, %zu skipped\n", passed, failed, skipped);
  return failed == 0 ? 0 : 1;
}

}  // namespace tsl_test

#define TSL_TEST_CONCAT_IMPL(a, b) a##b
#define TSL_TEST_CONCAT(a, b) TSL_TEST_CONCAT_IMPL(a, b)
#define TSL_TEST_CASE_IMPL(function, ...)                                       \
  static void function();                                                       \
  static ::tsl_test::registrar TSL_TEST_CONCAT(function, _registrar)(&function, \
                                                                     __VA_ARGS__); \
  static void function()
#define TEST_CASE(...) TSL_TEST_CASE_IMPL(TSL_TEST_CONCAT(tsl_test_case_, __LINE__), __VA_ARGS__)

#define REQUIRE(...)                                                            \
  do {                                                                          \
    if (!(__VA_ARGS__)) {                                                       \
      ::tsl_test::report_failure("REQUIRE", #__VA_ARGS__, __FILE__, __LINE__);  \
      throw ::tsl_test::require_failure{};                                      \
    }                                                                           \
  } while (false)

#define CHECK(...)                                                              \
  do {                                                                          \
    if (!(__VA_ARGS__)) {                                                       \
      ::tsl_test::report_failure("CHECK", #__VA_ARGS__, __FILE__, __LINE__);    \
    }                                                                           \
  } while (false)

#define WARN(message) std::fprintf(stderr, "warning in '%s': %s\n", ::tsl_test::state().current, message)
