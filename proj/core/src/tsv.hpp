#ifndef CROWDLAB_SRC_TSV_HPP_
#define CROWDLAB_SRC_TSV_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crowdlab/error.hpp"

namespace crowdlab {
namespace tsv {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
  if (!out) throw Error("write failed: " + path);
}

// Splits file content into lines; a trailing '\r' (CRLF input) is dropped.
inline std::vector<std::string> lines(const std::string& content) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t nl = content.find('\n', start);
    if (nl == std::string::npos) {
      if (start < content.size()) out.push_back(content.substr(start));
      break;
    }
    std::size_t len = nl - start;
    if (len > 0 && content[start + len - 1] == '\r') --len;
    out.push_back(content.substr(start, len));
    start = nl + 1;
  }
  return out;
}

inline std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

inline long parse_int(const std::string& s, const std::string& path, std::size_t line) {
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(path, line, "expected integer, got \"" + s + "\"");
  }
  if (pos != s.size()) throw ParseError(path, line, "expected integer, got \"" + s + "\"");
  return v;
}

inline double parse_double(const std::string& s, const std::string& path, std::size_t line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(path, line, "expected number, got \"" + s + "\"");
  }
  if (pos != s.size()) throw ParseError(path, line, "expected number, got \"" + s + "\"");
  return v;
}

}  // namespace tsv
}  // namespace crowdlab

#endif  // CROWDLAB_SRC_TSV_HPP_
