#pragma once
#include <stdexcept>
#include <string>
#include <utility>

namespace pacer {

// Categorized so the CLI can exit nonzero with one "error: <kind>: <detail>" line.
// Kinds in use: usage, io, data, config, domain, numeric.
struct Error : std::runtime_error {
  std::string kind;
  Error(std::string k, const std::string& what)
      : std::runtime_error(what), kind(std::move(k)) {}
};

[[noreturn]] inline void fail(std::string kind, const std::string& what) {
  throw Error(std::move(kind), what);
}

inline void require(bool ok, const char* kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace pacer
