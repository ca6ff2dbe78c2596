#ifndef PLANPROBE_ERROR_HPP
#define PLANPROBE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace planprobe {

enum class ErrorKind {
  kShape,
  kIo,
  kValidation,
  kFormat,
  kCorruption,
  kIntegrity,
  kConfig,
  kData,
  kBalance,
  kSplit,
  kDivergence,
  kCompatibility,
  kUsage,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kCorruption: return "corruption error";
    case ErrorKind::kIntegrity: return "integrity error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kData: return "data error";
    case ErrorKind::kBalance: return "balance error";
    case ErrorKind::kSplit: return "split error";
    case ErrorKind::kDivergence: return "divergence error";
    case ErrorKind::kCompatibility: return "compatibility error";
    case ErrorKind::kUsage: return "usage error";
  }
  return "error";
}

/// Every failure raised by the toolkit. The kind lets callers (and the CLI
/// exit-status mapping) distinguish failure classes without RTTI ladders.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace planprobe

#endif  // PLANPROBE_ERROR_HPP
