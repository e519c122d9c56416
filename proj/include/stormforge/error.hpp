#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stormforge {

enum class Errc {
  kFileNotFound,
  kDecodeFailure,
  kUnsupportedBitDepth,
  kUnwritablePath,
  kDimensionMismatch,
  kInvalidArgument,
  kZeroAreaCanvas,
  kWindowTooLarge,
  kExtractorFailure,
  kTransport,
  kProtocolVersion,
  kProtocol,
  kLabelSetMismatch,
  kNonFiniteObjective,
  kConfig,
};

std::string_view errc_name(Errc code);

// Every failure surfaced by the library carries one of the codes above so
// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

  // Only transport-level failures are worth retrying.
  bool retryable() const noexcept { return code_ == Errc::kTransport; }

 private:
  Errc code_;
};

}  // namespace stormforge
