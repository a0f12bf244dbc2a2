#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace spadi {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class... Args>
std::string msg(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

[[noreturn]] inline void fail(const std::string& m) { throw Error(m); }

}  // namespace spadi

#define SPADI_CHECK(cond, ...) \
  do {                         \
    if (!(cond)) ::spadi::fail(::spadi::msg(__VA_ARGS__)); \
  } while (0)
