#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polysched {

/// Malformed input (bad JSON, unknown identifiers, wrong row widths).
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A broken internal invariant: a step the algorithms guarantee cannot fail
/// did fail.
class InternalError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Branch-and-bound ran out of nodes.
class ResourceLimitError : public std::runtime_error {
public:
  ResourceLimitError(const std::string &what, std::size_t limit)
      : std::runtime_error(what + " (limit " + std::to_string(limit) + ")"),
        limit_(limit) {}
  [[nodiscard]] std::size_t limit() const { return limit_; }

private:
  std::size_t limit_;
};

} // namespace polysched
