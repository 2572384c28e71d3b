#ifndef BIPHOTON_TESTS_TEST_UTIL_HPP
#define BIPHOTON_TESTS_TEST_UTIL_HPP

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace test_util {

// Per-test scratch directory under the ctest working directory; wiped on
// entry so reruns start from a clean slate.
inline std::filesystem::path fresh_dir(const std::string& name) {
  const std::filesystem::path p =
      std::filesystem::current_path() / "test_scratch" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace test_util

#endif  // BIPHOTON_TESTS_TEST_UTIL_HPP
