// Copyright 2026 The tpcost Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cctype>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "tpcost/error.hpp"
#include "tpcost/ir/ast.hpp"

namespace tpcost::ir {

struct ParseOptions {
  int max_leaves = kDefaultMaxLeaves;
  int max_depth = 256;
};

namespace detail {

enum class Tok { kIdent, kInt, kLBrace, kRBrace, kEq, kAt, kDotDot, kEnd };

struct Token {
  Tok kind;
  std::string_view text;
  std::size_t line;
  std::size_t column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_trivia();
    const std::size_t line = line_, col = col_;
    if (pos_ >= src_.size()) return {Tok::kEnd, {}, line, col};
    const char c = src_[pos_];
    const std::size_t start = pos_;
    auto single = [&](Tok k) {
      advance();
      return Token{k, src_.substr(start, 1), line, col};
    };
    if (c == '{') return single(Tok::kLBrace);
    if (c == '}') return single(Tok::kRBrace);
    if (c == '=') return single(Tok::kEq);
    if (c == '@') return single(Tok::kAt);
    if (c == '.') {
      if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '.') {
        advance();
        advance();
        return {Tok::kDotDot, src_.substr(start, 2), line, col};
      }
      throw SyntaxError(line, col, "expected '..'");
    }
    if (is_digit(c)) {
      while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
      return {Tok::kInt, src_.substr(start, pos_ - start), line, col};
    }
    if (is_ident_start(c)) {
      while (pos_ < src_.size() && is_ident_char(src_[pos_])) advance();
      return {Tok::kIdent, src_.substr(start, pos_ - start), line, col};
    }
    throw SyntaxError(line, col, "unexpected character");
  }

 private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

class Parser {
 public:
  Parser(std::string_view src, const ParseOptions& opts) : lex_(src), opts_(opts) {
    cur_ = lex_.next();
  }

  bool at_end() const { return cur_.kind == Tok::kEnd; }

  ProgramAst program() {
    expect_keyword("program");
    std::string name(expect(Tok::kIdent, "program name").text);
    const Token open = expect(Tok::kLBrace, "'{'");
    std::vector<AstNode> body = block_body(open, 0);
    ProgramAst ast = make_program(std::move(name), std::move(body));
    if (ast.n_leaf > opts_.max_leaves) {
      throw LeafCountExceeded("program '" + ast.name + "' has " + std::to_string(ast.n_leaf) +
                              " leaves; maximum is " + std::to_string(opts_.max_leaves));
    }
    return ast;
  }

 private:
  // Parses statements up to and including the closing brace.
  std::vector<AstNode> block_body(const Token& open, int depth) {
    if (depth > opts_.max_depth) throw SyntaxError(open.line, open.column, "nesting too deep");
    std::vector<AstNode> stmts;
    while (cur_.kind != Tok::kRBrace) {
      if (cur_.kind == Tok::kEnd) throw SyntaxError(cur_.line, cur_.column, "unterminated block");
      stmts.push_back(statement(depth + 1));
    }
    bump();
    if (stmts.empty()) throw ValidationError(location(open) + "empty block");
    return stmts;
  }

  AstNode statement(int depth) {
    if (cur_.kind == Tok::kIdent && cur_.text == "for") return loop(depth);
    if (cur_.kind == Tok::kIdent && cur_.text == "compute") return compute();
    throw SyntaxError(cur_.line, cur_.column, "expected 'for' or 'compute'");
  }

  AstNode loop(int depth) {
    const Token head = bump();
    LoopInfo info;
    info.var_name = std::string(expect(Tok::kIdent, "loop variable").text);
    expect_keyword("in");
    const Token zero = expect(Tok::kInt, "'0..'");
    if (zero.text != "0") throw SyntaxError(zero.line, zero.column, "loop ranges must start at 0");
    expect(Tok::kDotDot, "'..'");
    const Token ext = expect(Tok::kInt, "loop extent");
    const std::uint64_t extent = to_uint(ext);
    if (extent > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw SyntaxError(ext.line, ext.column, "extent out of range");
    }
    info.extent = static_cast<std::int64_t>(extent);
    if (info.extent < 1) throw ValidationError(location(head) + "loop extent must be >= 1");
    while (cur_.kind == Tok::kAt) {
      bump();
      const Token a = expect(Tok::kIdent, "annotation");
      Annotation ann;
      if (a.text == "vectorize") {
        ann = Annotation::kVectorize;
      } else if (a.text == "unroll") {
        ann = Annotation::kUnroll;
      } else if (a.text == "parallel") {
        ann = Annotation::kParallel;
      } else {
        throw SyntaxError(a.line, a.column, "unknown annotation '" + std::string(a.text) + "'");
      }
      if (!info.annotations.insert(ann)) {
        throw ValidationError(location(a) + "duplicate annotation @" + std::string(a.text));
      }
    }
    const Token open = expect(Tok::kLBrace, "'{'");
    return AstNode::make_loop(std::move(info), block_body(open, depth));
  }

  AstNode compute() {
    const Token head = bump();
    std::string name(expect(Tok::kIdent, "compute name").text);
    expect(Tok::kLBrace, "'{'");
    ComputeStats s;
    unsigned seen = 0;
    int n_keys = 0;
    while (cur_.kind != Tok::kRBrace) {
      const Token key = expect(Tok::kIdent, "statistic key");
      expect(Tok::kEq, "'='");
      const std::uint64_t v = to_uint(expect(Tok::kInt, "integer"));
      static constexpr std::string_view kKeys[] = {
          "fma", "add", "mul", "div", "special", "bytes_read", "bytes_written",
          "buffers_read", "buffers_written"};
      std::uint64_t* slots[] = {&s.fma_count,     &s.add_count,   &s.mul_count,
                                &s.div_count,     &s.special_count, &s.bytes_read,
                                &s.bytes_written, &s.buffers_read, &s.buffers_written};
      bool matched = false;
      for (unsigned i = 0; i < std::size(kKeys); ++i) {
        if (key.text == kKeys[i]) {
          if (seen & (1u << i)) {
            throw ValidationError(location(key) + "duplicate key '" + std::string(key.text) + "'");
          }
          seen |= 1u << i;
          *slots[i] = v;
          matched = true;
        }
      }
      if (!matched) {
        throw SyntaxError(key.line, key.column, "unknown key '" + std::string(key.text) + "'");
      }
      ++n_keys;
    }
    if (n_keys == 0) throw SyntaxError(cur_.line, cur_.column, "compute block needs at least one key");
    bump();
    if (s.is_empty()) {
      throw ValidationError(location(head) + "compute '" + name + "' has no operations or bytes");
    }
    return AstNode::make_leaf(std::move(name), s);
  }

  std::uint64_t to_uint(const Token& t) {
    std::uint64_t v = 0;
    for (char c : t.text) {
      const auto d = static_cast<std::uint64_t>(c - '0');
      if (v > (std::numeric_limits<std::uint64_t>::max() - d) / 10) {
        throw SyntaxError(t.line, t.column, "integer literal out of range");
      }
      v = v * 10 + d;
    }
    return v;
  }

  Token bump() {
    Token t = cur_;
    cur_ = lex_.next();
    return t;
  }

  Token expect(Tok kind, const char* what) {
    if (cur_.kind != kind) throw SyntaxError(cur_.line, cur_.column, std::string("expected ") + what);
    return bump();
  }

  void expect_keyword(std::string_view kw) {
    if (cur_.kind != Tok::kIdent || cur_.text != kw) {
      throw SyntaxError(cur_.line, cur_.column, "expected '" + std::string(kw) + "'");
    }
    bump();
  }

  static std::string location(const Token& t) {
    return std::to_string(t.line) + ":" + std::to_string(t.column) + ": ";
  }

  Lexer lex_;
  ParseOptions opts_;
  Token cur_;
};

}  // namespace detail

/// Parses exactly one `program NAME { ... }` block.
inline ProgramAst parse_program(std::string_view text, const ParseOptions& opts = {}) {
  detail::Parser p(text, opts);
  ProgramAst ast = p.program();
  if (!p.at_end()) throw SyntaxError(0, 0, "trailing input after program");
  return ast;
}

/// Parses a file holding any number of program blocks (sidecar files of DFGs).
inline std::vector<ProgramAst> parse_programs(std::string_view text, const ParseOptions& opts = {}) {
  detail::Parser p(text, opts);
  std::vector<ProgramAst> out;
  while (!p.at_end()) out.push_back(p.program());
  return out;
}

}  // namespace tpcost::ir
