#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cig/core/value.hpp"

namespace cig::model {

enum class BinaryOp { logical_or, logical_and, eq, ne, lt, le, gt, ge, add, sub, mul, div };

enum class Builtin { known, netsupport, is_committed, result_of, abs, min, max };

std::string_view to_string(BinaryOp op);
std::string_view to_string(Builtin fn);
std::optional<Builtin> builtin_by_name(std::string_view name);

/// Expression tree node. Value semantics; children are held by value.
struct Expr {
    enum class Kind { literal, reference, logical_not, binary, call };

    Kind kind = Kind::literal;
    Value literal;             // literal
    std::string name;          // reference: data item
    BinaryOp op = BinaryOp::logical_or;
    Builtin fn = Builtin::known;
    std::vector<Expr> operands;

    static Expr make_literal(Value v);
    static Expr make_reference(std::string item);
    static Expr make_not(Expr operand);
    static Expr make_binary(BinaryOp op, Expr lhs, Expr rhs);
    static Expr make_call(Builtin fn, std::vector<Expr> args);

    bool operator==(const Expr&) const = default;
};

/// Parses the expression grammar:
///
///   expr   := or
///   or     := and ("or" and)*
///   and    := not ("and" not)*
///   not    := "not" not | cmp
///   cmp    := sum (("=="|"!="|"<"|"<="|">"|">=") sum)?
///   sum    := term (("+"|"-") term)*
///   term   := factor (("*"|"/") factor)*
///   factor := number | string | identifier | builtin "(" args ")" | "(" expr ")"
///
/// `true` and `false` are boolean literals. Builtins whose arguments name
/// an element (known, netsupport, is_committed, result_of) require bare
/// identifiers. Throws SyntaxError with a byte offset.
Expr parse_expression(std::string_view source);

/// Prints an expression back into the grammar with the minimum parentheses
/// needed to preserve the tree.
std::string to_source(const Expr& expr);

/// Collects every identifier that the expression refers to, by role.
struct ExprReferences {
    std::vector<std::string> items;                                  // plain refs and known(x)
    std::vector<std::string> candidates;                             // netsupport(c)
    std::vector<std::pair<std::string, std::string>> commitments;    // is_committed(d, c)
    std::vector<std::string> tasks;                                  // result_of(t)
};
ExprReferences collect_references(const Expr& expr);

}  // namespace cig::model
