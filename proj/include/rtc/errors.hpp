#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rtc {

// Malformed input file or JSON document.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A structurally well-formed instance that violates one or more model
// invariants. Carries the full list so callers can report every problem.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "instance validation failed:";
    for (const auto& s : v) {
      out += "\n  - ";
      out += s;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

// An enumeration or search would exceed a configured guardrail.
class LimitError : public std::runtime_error {
 public:
  LimitError(std::string resource, std::uint64_t count, std::uint64_t limit)
      : std::runtime_error("limit exceeded: " + resource + " count " +
                           std::to_string(count) + " > limit " + std::to_string(limit)),
        resource_(std::move(resource)),
        count_(count),
        limit_(limit) {}

  const std::string& resource() const { return resource_; }
  std::uint64_t count() const { return count_; }
  std::uint64_t limit() const { return limit_; }

 private:
  std::string resource_;
  std::uint64_t count_;
  std::uint64_t limit_;
};

// A design's tables do not match the instance's alphabet sizes or horizon.
class DimensionMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Conditioning on an event the current belief assigns (numerically) zero
// probability. Reaching this indicates a caller bug or corrupted state.
class ZeroMassError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A stage belief table has no entry matching the belief reached at run time.
class BeliefMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An encoder rule was queried for a belief id outside its support.
class MissingRuleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rtc
