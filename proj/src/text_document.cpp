#include "safeik/text_document.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace safeik {

ParseError::ParseError(int line, std::string field, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", field '" + field + "': " + message),
      line_(line),
      field_(std::move(field)) {}

const std::string& TextLine::token_at(std::size_t index, std::string_view field) const {
  if (index >= tokens.size()) throw ParseError(number, std::string(field), "missing value");
  return tokens[index];
}

double TextLine::number_at(std::size_t index, std::string_view field) const {
  const std::string& tok = token_at(index, field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(number, std::string(field), "expected a number, got '" + tok + "'");
  }
  return value;
}

int TextLine::integer_at(std::size_t index, std::string_view field) const {
  const std::string& tok = token_at(index, field);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(number, std::string(field), "expected an integer, got '" + tok + "'");
  }
  return value;
}

std::vector<TextLine> tokenize_document(std::string_view text) {
  std::vector<TextLine> lines;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    ++number;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::istringstream in{std::string(raw)};
    TextLine line{number, {}};
    for (std::string tok; in >> tok;) line.tokens.push_back(tok);
    if (!line.tokens.empty()) lines.push_back(std::move(line));
    pos = end + 1;
  }
  return lines;
}

std::map<std::string, std::vector<double>> parse_keyed_numbers(
    const TextLine& line, std::size_t first, const std::map<std::string, int>& arity) {
  std::map<std::string, std::vector<double>> out;
  std::size_t i = first;
  while (i < line.tokens.size()) {
    const std::string& key = line.tokens[i];
    const auto it = arity.find(key);
    if (it == arity.end()) throw ParseError(line.number, key, "unknown key");
    if (out.count(key)) throw ParseError(line.number, key, "duplicate key");
    std::vector<double> values;
    for (int k = 0; k < it->second; ++k) values.push_back(line.number_at(i + 1 + k, key));
    out.emplace(key, std::move(values));
    i += 1 + it->second;
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace safeik
