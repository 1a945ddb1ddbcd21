#include "fbl/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace fbl {

namespace {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Hill };

}  // namespace

struct Expr::Node {
    Op op = Op::Const;
    double value = 0.0;  // Const
    int var = 0;         // Var, 0-based
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct Parser {
    const std::string& s;
    std::size_t pos = 0;
    int n_vars;
    std::set<int>* vars;

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool consume(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }

    [[noreturn]] void syntax_error(const std::string& what) {
        fail(ErrorCode::ConfigError,
             "expression syntax error at position " + std::to_string(pos) + ": " + what +
                 " in \"" + s + "\"");
    }

    NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
        auto n = std::make_shared<Expr::Node>();
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    NodePtr parse_expr() {  // + -
        NodePtr lhs = parse_term();
        for (;;) {
            if (consume('+')) {
                lhs = make(Op::Add, lhs, parse_term());
            } else if (consume('-')) {
                lhs = make(Op::Sub, lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term() {  // * /
        NodePtr lhs = parse_unary();
        for (;;) {
            if (consume('*')) {
                lhs = make(Op::Mul, lhs, parse_unary());
            } else if (consume('/')) {
                lhs = make(Op::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        if (consume('-')) return make(Op::Neg, parse_unary());
        if (consume('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {  // right associative, binds tighter than unary minus on the left
        NodePtr base = parse_atom();
        if (consume('^')) {
            return make(Op::Pow, base, parse_unary());
        }
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos >= s.size()) syntax_error("unexpected end of input");
        const char c = s[pos];
        if (c == '(') {
            ++pos;
            NodePtr e = parse_expr();
            if (!consume(')')) syntax_error("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* end = nullptr;
            const double v = std::strtod(s.c_str() + pos, &end);
            if (end == s.c_str() + pos) syntax_error("bad number");
            pos = static_cast<std::size_t>(end - s.c_str());
            auto n = make(Op::Const);
            const_cast<Expr::Node*>(n.get())->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            const std::string name = s.substr(start, pos - start);
            if (name == "exp") {
                if (!consume('(')) syntax_error("expected '(' after exp");
                NodePtr u = parse_expr();
                if (!consume(')')) syntax_error("expected ')'");
                return make(Op::Exp, u);
            }
            if (name == "hill") {
                if (!consume('(')) syntax_error("expected '(' after hill");
                NodePtr u = parse_expr();
                if (!consume(',')) syntax_error("hill takes two arguments");
                NodePtr p = parse_expr();
                if (!consume(')')) syntax_error("expected ')'");
                return make(Op::Hill, u, p);
            }
            if (name.size() >= 2 && name[0] == 'x') {
                int idx = std::atoi(name.c_str() + 1);
                if (idx < 1 || idx > n_vars)
                    syntax_error("variable " + name + " out of range 1.." +
                                 std::to_string(n_vars));
                vars->insert(idx);
                auto n = make(Op::Var);
                const_cast<Expr::Node*>(n.get())->var = idx - 1;
                return n;
            }
            syntax_error("unknown identifier '" + name + "'");
        }
        syntax_error(std::string("unexpected character '") + c + "'");
    }
};

double eval_node(const Expr::Node& n, const Vec& x) {
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return x[n.var];
        case Op::Add: return eval_node(*n.a, x) + eval_node(*n.b, x);
        case Op::Sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
        case Op::Mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
        case Op::Div: return eval_node(*n.a, x) / eval_node(*n.b, x);
        case Op::Pow: return std::pow(eval_node(*n.a, x), eval_node(*n.b, x));
        case Op::Neg: return -eval_node(*n.a, x);
        case Op::Exp: return std::exp(eval_node(*n.a, x));
        case Op::Hill: {
            const double u = eval_node(*n.a, x);
            const double p = eval_node(*n.b, x);
            return 1.0 / (1.0 + std::pow(u, p));
        }
    }
    return 0.0;
}

}  // namespace

Expr Expr::parse(const std::string& text, int n_vars) {
    Expr e;
    e.text_ = text;
    Parser p{text, 0, n_vars, &e.vars_};
    auto root = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.syntax_error("trailing input");
    e.root_ = root;
    return e;
}

double Expr::eval(const Vec& x) const {
    if (!root_) fail(ErrorCode::Internal, "empty expression");
    return eval_node(*root_, x);
}

}  // namespace fbl
