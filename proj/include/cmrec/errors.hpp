#pragma once

#include <stdexcept>
#include <string>

namespace cmrec {

// Malformed or inconsistent user-supplied data (files, ids, query inputs).
// The CLI maps this to exit code 2; all other exceptions map to 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cmrec
