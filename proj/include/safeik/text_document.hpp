#pragma once

// Line-oriented declarative documents shared by the robot description and the
// run configuration. Each non-empty line is `keyword token token ...`; `#`
// starts a comment.

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace safeik {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, std::string field, const std::string& message);

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

struct TextLine {
  int number = 0;
  std::vector<std::string> tokens;

  const std::string& keyword() const { return tokens.front(); }
  double number_at(std::size_t index, std::string_view field) const;
  int integer_at(std::size_t index, std::string_view field) const;
  const std::string& token_at(std::size_t index, std::string_view field) const;
};

std::vector<TextLine> tokenize_document(std::string_view text);

/// Parses trailing `key n1 n2 ...` groups starting at `first`. `arity` gives the
/// number of numbers each allowed key consumes; unknown keys are errors.
std::map<std::string, std::vector<double>> parse_keyed_numbers(
    const TextLine& line, std::size_t first, const std::map<std::string, int>& arity);

std::string read_file(const std::string& path);

/// Shortest round-trip formatting of a double.
std::string format_double(double value);

}  // namespace safeik
