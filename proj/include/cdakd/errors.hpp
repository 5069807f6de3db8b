#pragma once

#include <stdexcept>
#include <string>

namespace cdakd {

// Caller broke a precondition (bad shape, bad index, bad config).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Training produced a non-finite loss or gradient; the run cannot continue.
class RunAborted : public std::runtime_error {
 public:
  explicit RunAborted(const std::string& what) : std::runtime_error(what) {}
};

// Takes the message by template so literals are not copied on the happy path.
template <typename Message>
inline void require(bool ok, const Message& message) {
  if (!ok) throw UsageError(std::string(message));
}

}  // namespace cdakd
