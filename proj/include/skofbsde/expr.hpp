#pragma once

#include <memory>
#include <string>
#include <vector>

namespace skofbsde {

// Compiled arithmetic expression in one variable `t`.
//
// Grammar: numbers, `t`, `pi`, + - * / ^ (right associative), unary minus,
// parentheses and the functions sin cos tan exp log sqrt abs tanh.
// Compiled to postfix so evaluation needs no allocation.
class TimeExpression {
 public:
  /// Throws ConfigError with the offending position on a parse error.
  explicit TimeExpression(std::string source);

  double operator()(double t) const;
  const std::string& source() const noexcept { return source_; }

  enum class Op : unsigned char { push, var, add, sub, mul, div, pow, neg, call };
  enum class Fn : unsigned char { sin, cos, tan, exp, log, sqrt, abs, tanh };
  struct Instr {
    Op op;
    Fn fn = Fn::sin;
    double value = 0.0;
  };

 private:
  std::string source_;
  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
};

}  // namespace skofbsde
