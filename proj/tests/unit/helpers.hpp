#ifndef PLANPROBE_TESTS_HELPERS_HPP
#define PLANPROBE_TESTS_HELPERS_HPP

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "../common/fuzz.hpp"
#include "planprobe/planprobe.hpp"

namespace planprobe::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "planprobe_";
    if (info) name += std::string(info->test_suite_name()) + "_" + info->name();
    path_ = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::kUsage;
}

}  // namespace planprobe::testing

#endif  // PLANPROBE_TESTS_HELPERS_HPP
