#pragma once

#include <stdexcept>
#include <string>

namespace photoscore {

// Error families map one-to-one onto CLI exit codes and C API statuses.
enum class ErrorFamily : int {
  generic = 1,
  config = 2,
  io = 3,
  numeric = 4,
};

enum class Errc {
  bad_config,
  // matrices and measures
  constant_column,
  too_few_rows,
  dimension_mismatch,
  not_symmetric,
  no_convergence,
  negative_eigenvalue,
  index_out_of_range,
  single_node,
  empty_confusion,
  all_zero,
  length_mismatch,
  // network
  shape_mismatch,
  batch_too_small,
  non_finite_loss,
  format_version_mismatch,
  corrupt_file,
  // datasets and images
  missing_image,
  bad_label,
  malformed_row,
  unsupported_format,
  truncated_file,
  class_too_small,
  // saliency
  empty_stack,
  io_error,
};

constexpr ErrorFamily family(Errc code) {
  switch (code) {
    case Errc::bad_config:
      return ErrorFamily::config;
    case Errc::format_version_mismatch:
    case Errc::corrupt_file:
    case Errc::missing_image:
    case Errc::bad_label:
    case Errc::malformed_row:
    case Errc::unsupported_format:
    case Errc::truncated_file:
    case Errc::io_error:
      return ErrorFamily::io;
    default:
      return ErrorFamily::numeric;
  }
}

constexpr const char* errc_name(Errc code) {
  switch (code) {
    case Errc::bad_config: return "BadConfig";
    case Errc::constant_column: return "ConstantColumn";
    case Errc::too_few_rows: return "TooFewRows";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::not_symmetric: return "NotSymmetric";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::negative_eigenvalue: return "NegativeEigenvalue";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::single_node: return "SingleNode";
    case Errc::empty_confusion: return "EmptyConfusion";
    case Errc::all_zero: return "AllZero";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::batch_too_small: return "BatchTooSmall";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::format_version_mismatch: return "FormatVersionMismatch";
    case Errc::corrupt_file: return "CorruptFile";
    case Errc::missing_image: return "MissingImage";
    case Errc::bad_label: return "BadLabel";
    case Errc::malformed_row: return "MalformedRow";
    case Errc::unsupported_format: return "UnsupportedFormat";
    case Errc::truncated_file: return "TruncatedFile";
    case Errc::class_too_small: return "ClassTooSmall";
    case Errc::empty_stack: return "EmptyStack";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const { return code_; }
  ErrorFamily family() const { return photoscore::family(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace photoscore
