#pragma once

#include <stdexcept>
#include <string>

namespace uemb {

// Error taxonomy used by the CLI to print "error: <category>: <message>"
// and pick an exit status.
enum class ErrorCategory { config, io, data, numeric, usage };

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::data: return "data";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorCategory::config, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorCategory::io, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorCategory::data, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrorCategory::numeric, msg); }

}  // namespace uemb
