#include "stormforge/error.hpp"

namespace stormforge {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kFileNotFound: return "file_not_found";
    case Errc::kDecodeFailure: return "decode_failure";
    case Errc::kUnsupportedBitDepth: return "unsupported_bit_depth";
    case Errc::kUnwritablePath: return "unwritable_path";
    case Errc::kDimensionMismatch: return "dimension_mismatch";
    case Errc::kInvalidArgument: return "invalid_argument";
    case Errc::kZeroAreaCanvas: return "zero_area_canvas";
    case Errc::kWindowTooLarge: return "window_too_large";
    case Errc::kExtractorFailure: return "extractor_failure";
    case Errc::kTransport: return "transport";
    case Errc::kProtocolVersion: return "protocol_version";
    case Errc::kProtocol: return "protocol";
    case Errc::kLabelSetMismatch: return "label_set_mismatch";
    case Errc::kNonFiniteObjective: return "non_finite_objective";
    case Errc::kConfig: return "config";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

}  // namespace stormforge
