#include "tamesde/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace tamesde {

namespace {

[[noreturn]] void fail(std::size_t pos, const std::string& what) {
    throw std::invalid_argument("expression error at position " +
                                std::to_string(pos + 1) + ": " + what);
}

}  // namespace

class ExprParser {
  public:
    explicit ExprParser(std::string_view src, Expr& out) : src_(src), out_(out) {}

    void run() {
        out_.source_.assign(src_.begin(), src_.end());
        out_.root_ = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail(pos_, "unexpected trailing input");
        if (out_.nodes_.empty()) fail(0, "empty expression");
    }

  private:
    int add(Expr::Node node) {
        out_.nodes_.push_back(node);
        return static_cast<int>(out_.nodes_.size()) - 1;
    }

    void skip_ws() {
        while (pos_ < src_.size() &&
               std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            if (eat('+'))
                lhs = add({Expr::Op::Add, 0.0, lhs, parse_term()});
            else if (eat('-'))
                lhs = add({Expr::Op::Sub, 0.0, lhs, parse_term()});
            else
                return lhs;
        }
    }

    int parse_term() {
        int lhs = parse_factor();
        for (;;) {
            if (eat('*'))
                lhs = add({Expr::Op::Mul, 0.0, lhs, parse_factor()});
            else if (eat('/'))
                lhs = add({Expr::Op::Div, 0.0, lhs, parse_factor()});
            else
                return lhs;
        }
    }

    // '^' binds tighter than unary minus and associates to the right, so
    // -x^2 is -(x^2) and 2^3^2 is 2^(3^2).
    int parse_factor() {
        if (eat('-')) return add({Expr::Op::Neg, 0.0, parse_factor(), -1});
        const int base = parse_base();
        if (eat('^')) return add({Expr::Op::Pow, 0.0, base, parse_factor()});
        return base;
    }

    int parse_base() {
        skip_ws();
        if (pos_ >= src_.size()) fail(pos_, "expected a value");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            const int inner = parse_expr();
            if (!eat(')')) fail(pos_, "expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return parse_ident();
        fail(pos_, std::string("unexpected character '") + c + "'");
    }

    int parse_number() {
        const char* begin = src_.data() + pos_;
        char* end = nullptr;
        const double value = std::strtod(begin, &end);
        if (end == begin) fail(pos_, "malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        return add({Expr::Op::Const, value, -1, -1});
    }

    int parse_ident() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));
        if (peek() != '(') {
            if (name == "t") return add({Expr::Op::VarT, 0.0, -1, -1});
            if (name == "x") return add({Expr::Op::VarX, 0.0, -1, -1});
            if (name == "z") return add({Expr::Op::VarZ, 0.0, -1, -1});
            fail(start, "unknown variable '" + name + "' (expected t, x or z)");
        }
        struct Fn {
            const char* name;
            Expr::Op op;
            int arity;
        };
        static constexpr Fn kFns[] = {
            {"abs", Expr::Op::Abs, 1},   {"sqrt", Expr::Op::Sqrt, 1},
            {"exp", Expr::Op::Exp, 1},   {"log", Expr::Op::Log, 1},
            {"sin", Expr::Op::Sin, 1},   {"cos", Expr::Op::Cos, 1},
            {"tanh", Expr::Op::Tanh, 1}, {"pow", Expr::Op::Pow, 2},
            {"min", Expr::Op::Min, 2},   {"max", Expr::Op::Max, 2},
        };
        for (const Fn& fn : kFns) {
            if (name != fn.name) continue;
            eat('(');
            const int first = parse_expr();
            int second = -1;
            if (fn.arity == 2) {
                if (!eat(',')) fail(pos_, "function '" + name + "' needs two arguments");
                second = parse_expr();
            }
            if (!eat(')')) fail(pos_, "expected ')'");
            return add({fn.op, 0.0, first, second});
        }
        fail(start, "unknown function '" + name + "'");
    }

    std::string_view src_;
    Expr& out_;
    std::size_t pos_ = 0;
};

Expr Expr::parse(std::string_view source) {
    Expr expr;
    ExprParser(source, expr).run();
    return expr;
}

double Expr::eval(double t, double x, double z) const {
    return eval_node(root_, t, x, z);
}

double Expr::eval_node(int index, double t, double x, double z) const {
    const Node& n = nodes_[static_cast<std::size_t>(index)];
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::VarT: return t;
        case Op::VarX: return x;
        case Op::VarZ: return z;
        case Op::Add: return eval_node(n.a, t, x, z) + eval_node(n.b, t, x, z);
        case Op::Sub: return eval_node(n.a, t, x, z) - eval_node(n.b, t, x, z);
        case Op::Mul: return eval_node(n.a, t, x, z) * eval_node(n.b, t, x, z);
        case Op::Div: return eval_node(n.a, t, x, z) / eval_node(n.b, t, x, z);
        case Op::Pow:
            return std::pow(eval_node(n.a, t, x, z), eval_node(n.b, t, x, z));
        case Op::Neg: return -eval_node(n.a, t, x, z);
        case Op::Abs: return std::fabs(eval_node(n.a, t, x, z));
        case Op::Sqrt: return std::sqrt(eval_node(n.a, t, x, z));
        case Op::Exp: return std::exp(eval_node(n.a, t, x, z));
        case Op::Log: return std::log(eval_node(n.a, t, x, z));
        case Op::Sin: return std::sin(eval_node(n.a, t, x, z));
        case Op::Cos: return std::cos(eval_node(n.a, t, x, z));
        case Op::Tanh: return std::tanh(eval_node(n.a, t, x, z));
        case Op::Min:
            return std::fmin(eval_node(n.a, t, x, z), eval_node(n.b, t, x, z));
        case Op::Max:
            return std::fmax(eval_node(n.a, t, x, z), eval_node(n.b, t, x, z));
    }
    return 0.0;
}

}  // namespace tamesde
