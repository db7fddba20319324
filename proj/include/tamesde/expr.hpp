#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tamesde {

// Tiny arithmetic language for inline scalar coefficients over the variables
// t (time), x (state) and z (jump mark): numeric literals, + - * /,
// right-associative ^ binding tighter than unary minus, parentheses, and the
// functions abs sqrt exp log sin cos tanh (one argument) and pow min max
// (two arguments). Parse once, evaluate many times.
class Expr {
  public:
    // Throws std::invalid_argument with a character position on bad input.
    static Expr parse(std::string_view source);

    double eval(double t, double x, double z) const;
    const std::string& source() const { return source_; }

  private:
    enum class Op {
        Const, VarT, VarX, VarZ,
        Add, Sub, Mul, Div, Pow, Neg,
        Abs, Sqrt, Exp, Log, Sin, Cos, Tanh, Min, Max,
    };
    struct Node {
        Op op = Op::Const;
        double value = 0.0;
        int a = -1;
        int b = -1;
    };

    friend class ExprParser;

    double eval_node(int index, double t, double x, double z) const;

    std::vector<Node> nodes_;
    int root_ = -1;
    std::string source_;
};

}  // namespace tamesde
