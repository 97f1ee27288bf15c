#ifndef UVT_ERRORS_HPP
#define UVT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace uvt {

// File and format failures, kept distinct from numeric failures so callers
// can map them to different exit codes.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace uvt

#endif
