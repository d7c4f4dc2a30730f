#pragma once

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "kmarf/rational.hpp"

namespace kmarf {

// Parse diagnostic with a 1-based source position.
struct ParseError : std::runtime_error {
  int line;
  int column;
  ParseError(int line_, int column_, const std::string& what_)
      : std::runtime_error(std::to_string(line_) + ":" + std::to_string(column_) + ": " + what_),
        line(line_),
        column(column_) {}
};

enum class TokenKind {
  Ident,    // lowercase-leading identifier
  Var,      // uppercase-leading identifier
  Number,   // integer or decimal literal (fractions are Number Slash Number)
  LBrace,
  RBrace,
  LParen,
  RParen,
  Comma,
  Dot,
  Slash,
  Arrow,    // ->
  End,
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  Rational value;  // Number only
  int line = 1;
  int column = 1;
};

// Tokenizer shared by the .kmf and .tax readers. ASCII only; '#' starts a
// comment running to end of line.
class Lexer {
 public:
  explicit Lexer(std::string_view input) : input_(input) { advance(); }

  const Token& peek() const { return current_; }

  Token next() {
    Token t = current_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(current_.line, current_.column, message);
  }

 private:
  void advance() {
    skip_trivia();
    current_ = Token{};
    current_.line = line_;
    current_.column = column_;
    if (pos_ >= input_.size()) {
      current_.kind = TokenKind::End;
      return;
    }
    char c = input_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c))) {
      read_identifier();
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < input_.size() &&
         std::isdigit(static_cast<unsigned char>(input_[pos_ + 1])))) {
      read_number();
      return;
    }
    switch (c) {
      case '{': single(TokenKind::LBrace); return;
      case '}': single(TokenKind::RBrace); return;
      case '(': single(TokenKind::LParen); return;
      case ')': single(TokenKind::RParen); return;
      case ',': single(TokenKind::Comma); return;
      case '.': single(TokenKind::Dot); return;
      case '/': single(TokenKind::Slash); return;
      case '-':
        if (pos_ + 1 < input_.size() && input_[pos_ + 1] == '>') {
          current_.kind = TokenKind::Arrow;
          current_.text = "->";
          consume();
          consume();
          return;
        }
        throw ParseError(line_, column_, "stray '-'");
      default:
        if (static_cast<unsigned char>(c) >= 0x80)
          throw ParseError(line_, column_, "non-ASCII input");
        throw ParseError(line_, column_, std::string("unexpected character '") + c + "'");
    }
  }

  void single(TokenKind kind) {
    current_.kind = kind;
    current_.text = std::string(1, input_[pos_]);
    consume();
  }

  void read_identifier() {
    std::size_t start = pos_;
    while (pos_ < input_.size() &&
           (std::isalnum(static_cast<unsigned char>(input_[pos_])) || input_[pos_] == '_'))
      consume();
    current_.text = std::string(input_.substr(start, pos_ - start));
    current_.kind =
        std::isupper(static_cast<unsigned char>(current_.text[0])) ? TokenKind::Var : TokenKind::Ident;
  }

  void read_number() {
    std::size_t start = pos_;
    bool negative = input_[pos_] == '-';
    if (negative) consume();
    std::string int_digits, frac_digits;
    while (pos_ < input_.size() && std::isdigit(static_cast<unsigned char>(input_[pos_]))) {
      int_digits += input_[pos_];
      consume();
    }
    if (pos_ + 1 < input_.size() && input_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(input_[pos_ + 1]))) {
      consume();  // '.'
      while (pos_ < input_.size() && std::isdigit(static_cast<unsigned char>(input_[pos_]))) {
        frac_digits += input_[pos_];
        consume();
      }
    }
    current_.kind = TokenKind::Number;
    current_.text = std::string(input_.substr(start, pos_ - start));
    __int128 num = 0;
    for (char d : int_digits + frac_digits) {
      num = num * 10 + (d - '0');
      if (num > static_cast<__int128>(INT64_MAX))
        throw ParseError(current_.line, current_.column, "numeric literal out of range");
    }
    __int128 den = 1;
    for (std::size_t i = 0; i < frac_digits.size(); ++i) {
      den *= 10;
      if (den > static_cast<__int128>(INT64_MAX))
        throw ParseError(current_.line, current_.column, "numeric literal out of range");
    }
    if (negative) num = -num;
    current_.value = Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
  }

  void skip_trivia() {
    while (pos_ < input_.size()) {
      char c = input_[pos_];
      if (c == '#') {
        while (pos_ < input_.size() && input_[pos_] != '\n') consume();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        consume();
      } else {
        break;
      }
    }
  }

  void consume() {
    if (input_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view input_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
  Token current_;
};

}  // namespace kmarf
