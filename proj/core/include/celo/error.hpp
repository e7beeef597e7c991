#pragma once

#include <stdexcept>
#include <string>

namespace celo {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Raised on bad user-facing input (config files, CLI values).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

namespace detail {
[[noreturn]] void throw_check_failed(const char* expr, const std::string& msg);
}

}  // namespace celo

#define CELO_CHECK(cond, msg)                              \
  do {                                                     \
    if (!(cond)) ::celo::detail::throw_check_failed(#cond, (msg)); \
  } while (false)
