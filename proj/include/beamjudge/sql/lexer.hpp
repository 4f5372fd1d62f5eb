#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "beamjudge/error.hpp"

namespace beamjudge::sql {

enum class TokenKind {
  word,      // keyword or identifier, lower-cased
  quoted,    // `backquoted` identifier, lower-cased
  number,
  string,    // 'single' or "double" quoted literal, quotes stripped
  symbol,    // punctuation and comparison operators
  end,
};

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t offset;

  bool is_word(std::string_view w) const { return kind == TokenKind::word && text == w; }
  bool is_symbol(std::string_view s) const { return kind == TokenKind::symbol && text == s; }
};

namespace detail {

inline char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace detail

// Splits SQL text into tokens. The final token is always TokenKind::end with
// offset == text.size().
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();

  while (i < n) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;

    if (detail::ident_start(c)) {
      std::string word;
      while (i < n && detail::ident_char(text[i])) word += detail::lower(text[i++]);
      out.push_back({TokenKind::word, std::move(word), start});
      continue;
    }

    if (detail::digit(c) || (c == '.' && i + 1 < n && detail::digit(text[i + 1]))) {
      std::string num;
      while (i < n && detail::digit(text[i])) num += text[i++];
      if (i < n && text[i] == '.') {
        num += text[i++];
        while (i < n && detail::digit(text[i])) num += text[i++];
      }
      if (i < n && (text[i] == 'e' || text[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < n && (text[j] == '+' || text[j] == '-')) ++j;
        if (j < n && detail::digit(text[j])) {
          num += 'e';
          num.append(text.substr(i + 1, j - i - 1));
          i = j;
          while (i < n && detail::digit(text[i])) num += text[i++];
        }
      }
      if (i < n && detail::ident_start(text[i]))
        throw ParseError("malformed number", start);
      out.push_back({TokenKind::number, std::move(num), start});
      continue;
    }

    if (c == '\'' || c == '"') {
      std::string body;
      ++i;
      bool closed = false;
      while (i < n) {
        if (text[i] == c) {
          if (i + 1 < n && text[i + 1] == c) {  // doubled quote escape
            body += c;
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        body += text[i++];
      }
      if (!closed) throw ParseError("unterminated string literal", start);
      out.push_back({TokenKind::string, std::move(body), start});
      continue;
    }

    if (c == '`') {
      std::string name;
      ++i;
      while (i < n && text[i] != '`') name += detail::lower(text[i++]);
      if (i >= n) throw ParseError("unterminated quoted identifier", start);
      ++i;
      if (name.empty()) throw ParseError("empty quoted identifier", start);
      out.push_back({TokenKind::quoted, std::move(name), start});
      continue;
    }

    auto two = text.substr(i, 2);
    if (two == "<=" || two == ">=" || two == "!=" || two == "<>" || two == "==") {
      std::string sym(two);
      if (sym == "<>") sym = "!=";
      if (sym == "==") sym = "=";
      out.push_back({TokenKind::symbol, std::move(sym), start});
      i += 2;
      continue;
    }

    switch (c) {
      case '(': case ')': case ',': case '.': case '*': case '+': case '-':
      case '/': case '=': case '<': case '>': case ';':
        out.push_back({TokenKind::symbol, std::string(1, c), start});
        ++i;
        continue;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
  }

  out.push_back({TokenKind::end, "", n});
  return out;
}

}  // namespace beamjudge::sql
