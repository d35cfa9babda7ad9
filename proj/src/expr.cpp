#include "skofbsde/expr.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "skofbsde/errors.hpp"

namespace skofbsde {

namespace {

using Op = TimeExpression::Op;
using Fn = TimeExpression::Fn;
using Instr = TimeExpression::Instr;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  std::vector<Instr> parse() {
    expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("expression '" + s_ + "': " + msg + " at position " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expr() {
    term();
    for (;;) {
      if (accept('+')) {
        term();
        out_.push_back({Op::add});
      } else if (accept('-')) {
        term();
        out_.push_back({Op::sub});
      } else {
        return;
      }
    }
  }

  void term() {
    unary();
    for (;;) {
      if (accept('*')) {
        unary();
        out_.push_back({Op::mul});
      } else if (accept('/')) {
        unary();
        out_.push_back({Op::div});
      } else {
        return;
      }
    }
  }

  void unary() {
    if (accept('-')) {
      unary();
      out_.push_back({Op::neg});
    } else if (accept('+')) {
      unary();
    } else {
      power();
    }
  }

  void power() {
    primary();
    if (accept('^')) {
      unary();
      out_.push_back({Op::pow});
    }
  }

  void primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      out_.push_back({Op::push, Fn::sin, v});
      return;
    }
    if (accept('(')) {
      expr();
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "t") {
        out_.push_back({Op::var});
        return;
      }
      if (name == "pi") {
        out_.push_back({Op::push, Fn::sin, std::numbers::pi});
        return;
      }
      static const std::array<std::pair<const char*, Fn>, 8> fns{{{"sin", Fn::sin},
                                                                   {"cos", Fn::cos},
                                                                   {"tan", Fn::tan},
                                                                   {"exp", Fn::exp},
                                                                   {"log", Fn::log},
                                                                   {"sqrt", Fn::sqrt},
                                                                   {"abs", Fn::abs},
                                                                   {"tanh", Fn::tanh}}};
      for (const auto& [fname, fn] : fns) {
        if (name == fname) {
          if (!accept('(')) fail("expected '(' after " + name);
          expr();
          if (!accept(')')) fail("expected ')'");
          out_.push_back({Op::call, fn});
          return;
        }
      }
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::vector<Instr> out_;
};

double apply(Fn fn, double x) {
  switch (fn) {
    case Fn::sin: return std::sin(x);
    case Fn::cos: return std::cos(x);
    case Fn::tan: return std::tan(x);
    case Fn::exp: return std::exp(x);
    case Fn::log: return std::log(x);
    case Fn::sqrt: return std::sqrt(x);
    case Fn::abs: return std::fabs(x);
    case Fn::tanh: return std::tanh(x);
  }
  return x;
}

}  // namespace

TimeExpression::TimeExpression(std::string source) : source_(std::move(source)) {
  code_ = Parser(source_).parse();
  std::size_t depth = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::push:
      case Op::var: ++depth; break;
      case Op::add:
      case Op::sub:
      case Op::mul:
      case Op::div:
      case Op::pow: --depth; break;
      case Op::neg:
      case Op::call: break;
    }
    max_depth_ = std::max(max_depth_, depth);
  }
  if (max_depth_ > 64) throw ConfigError("expression '" + source_ + "': nesting too deep");
}

double TimeExpression::operator()(double t) const {
  std::array<double, 64> stack{};
  std::size_t sp = 0;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::push: stack[sp++] = in.value; break;
      case Op::var: stack[sp++] = t; break;
      case Op::add: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::sub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::mul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::div: --sp; stack[sp - 1] /= stack[sp]; break;
      case Op::pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
      case Op::neg: stack[sp - 1] = -stack[sp - 1]; break;
      case Op::call: stack[sp - 1] = apply(in.fn, stack[sp - 1]); break;
    }
  }
  return stack[0];
}

}  // namespace skofbsde
