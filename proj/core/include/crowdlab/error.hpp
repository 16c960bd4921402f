#ifndef CROWDLAB_ERROR_HPP_
#define CROWDLAB_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace crowdlab {

// All recoverable failures (bad input files, invalid configuration, numeric
// breakdown) surface as this exception; callers that want exit codes catch it
// at the CLI boundary.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Parse failures carry the offending file and line so the message is
// actionable ("crowd.tsv:17: expected 4 columns, got 3").
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what) {}
};

}  // namespace crowdlab

#endif  // CROWDLAB_ERROR_HPP_
