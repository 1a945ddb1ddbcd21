#pragma once

#include "fbl/types.hpp"

#include <memory>
#include <set>
#include <string>

namespace fbl {

/// One parsed scalar expression over variables x1..xn.
///
/// Grammar: numbers, x<k>, + - * / ^ (right assoc), unary -, parentheses,
/// exp(u), hill(u, p) = 1/(1 + u^p).
class Expr {
public:
    static Expr parse(const std::string& text, int n_vars);

    double eval(const Vec& x) const;
    /// 1-based indices of the variables the expression references.
    const std::set<int>& variables() const { return vars_; }
    const std::string& text() const { return text_; }

    Expr() = default;

    struct Node;  // exposed for the parser translation unit

private:
    std::shared_ptr<const Node> root_;
    std::set<int> vars_;
    std::string text_;
};

}  // namespace fbl
