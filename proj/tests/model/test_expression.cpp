#include <doctest.h>

#include <random>

#include "cig/core/error.hpp"
#include "cig/model/expression.hpp"

using namespace cig;
using namespace cig::model;

TEST_CASE("comparison nests under conjunction")
{
    auto e = parse_expression("grade >= 1 and known(temp)");
    auto expected = Expr::make_binary(
        BinaryOp::logical_and,
        Expr::make_binary(BinaryOp::ge, Expr::make_reference("grade"), Expr::make_literal(Value(1))),
        Expr::make_call(Builtin::known, {Expr::make_reference("temp")}));
    CHECK(e == expected);
}

TEST_CASE("builtin call node")
{
    auto e = parse_expression("netsupport(c_paracetamol) >= 1");
    Expr call;
    call.kind = Expr::Kind::call;
    call.fn = Builtin::netsupport;
    Expr ref;
    ref.kind = Expr::Kind::reference;
    ref.name = "c_paracetamol";
    call.operands.push_back(ref);
    Expr one;
    one.kind = Expr::Kind::literal;
    one.literal = Value(std::int64_t{1});
    Expr root;
    root.kind = Expr::Kind::binary;
    root.op = BinaryOp::ge;
    root.operands = {call, one};
    CHECK(e == root);
}

TEST_CASE("incomplete input reports end position")
{
    try {
        parse_expression("1 + ");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.offset() == 4);
        CHECK(std::string(e.what()).find("end of input") != std::string::npos);
    }
}

TEST_CASE("precedence follows the grammar levels")
{
    // not binds looser than comparison
    CHECK(parse_expression("not x > 5") ==
          Expr::make_not(Expr::make_binary(BinaryOp::gt, Expr::make_reference("x"), Expr::make_literal(Value(5)))));
    // and binds tighter than or
    auto e = parse_expression("a or b and c");
    REQUIRE(e.kind == Expr::Kind::binary);
    CHECK(e.op == BinaryOp::logical_or);
    CHECK(e.operands[1].op == BinaryOp::logical_and);
    // multiplicative over additive, left associative
    auto m = parse_expression("1 - 2 - 3 * 4");
    CHECK(to_source(m) == "1 - 2 - 3 * 4");
    CHECK(m.operands[0].op == BinaryOp::sub);
    CHECK(m.operands[1].op == BinaryOp::mul);
}

TEST_CASE("syntax errors")
{
    CHECK_THROWS_AS(parse_expression(""), SyntaxError);
    CHECK_THROWS_AS(parse_expression("a < b < c"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("frobnicate(x)"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("known(1)"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("is_committed(d)"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("min(1)"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("(a"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("\"open"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("a = b"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("1."), SyntaxError);
}

TEST_CASE("literals")
{
    CHECK(parse_expression("38.5").literal == Value(38.5));
    CHECK(parse_expression("42").literal == Value(42));
    CHECK(parse_expression("true").literal == Value(true));
    CHECK(parse_expression("'it\\'s'").literal == Value("it's"));
    CHECK(parse_expression("1e3").literal == Value(1000.0));
}

TEST_CASE("reference collection by role")
{
    auto refs = collect_references(
        parse_expression("known(a) and b > 1 and netsupport(c) > 0 and is_committed(d, e) and result_of(t) == \"x\""));
    CHECK(refs.items == std::vector<std::string>{"a", "b"});
    CHECK(refs.candidates == std::vector<std::string>{"c"});
    CHECK(refs.commitments.size() == 1);
    CHECK(refs.tasks == std::vector<std::string>{"t"});
}

namespace {

// Grammar-driven generator over the full published grammar.
class ExprGen {
public:
    explicit ExprGen(std::uint32_t seed) : rng_(seed) {}

    Expr gen(int depth)
    {
        int choice = depth <= 0 ? pick(0, 3) : pick(0, 9);
        switch (choice) {
        case 0: return Expr::make_literal(Value(static_cast<std::int64_t>(pick(0, 1000))));
        case 1: return Expr::make_literal(Value(pick(0, 400) / 4.0));
        case 2: return Expr::make_literal(pick(0, 1) ? Value(true) : Value(text()));
        case 3: return Expr::make_reference(ident());
        case 4: return Expr::make_not(gen(depth - 1));
        case 5:
        case 6:
        case 7: {
            static constexpr BinaryOp ops[] = {BinaryOp::logical_or, BinaryOp::logical_and, BinaryOp::eq,
                                               BinaryOp::ne,         BinaryOp::lt,          BinaryOp::le,
                                               BinaryOp::gt,         BinaryOp::ge,          BinaryOp::add,
                                               BinaryOp::sub,        BinaryOp::mul,         BinaryOp::div};
            return Expr::make_binary(ops[pick(0, 11)], gen(depth - 1), gen(depth - 1));
        }
        default: return call(depth);
        }
    }

private:
    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    std::string ident()
    {
        static const char* names[] = {"x", "temp_grade", "known", "a1", "_z", "max", "grade"};
        return names[pick(0, 6)];
    }

    std::string text()
    {
        static const char* texts[] = {"", "fever", "say \"hi\"", "back\\slash", "it's"};
        return texts[pick(0, 4)];
    }

    Expr call(int depth)
    {
        switch (pick(0, 6)) {
        case 0: return Expr::make_call(Builtin::known, {Expr::make_reference(ident())});
        case 1: return Expr::make_call(Builtin::netsupport, {Expr::make_reference(ident())});
        case 2:
            return Expr::make_call(Builtin::is_committed, {Expr::make_reference(ident()), Expr::make_reference(ident())});
        case 3: return Expr::make_call(Builtin::result_of, {Expr::make_reference(ident())});
        case 4: return Expr::make_call(Builtin::abs, {gen(depth - 1)});
        default: {
            std::vector<Expr> args;
            int n = pick(2, 3);
            for (int i = 0; i < n; ++i) args.push_back(gen(depth - 1));
            return Expr::make_call(pick(0, 1) ? Builtin::min : Builtin::max, std::move(args));
        }
        }
    }

    std::mt19937 rng_;
};

}  // namespace

TEST_CASE("property: parse(print(ast)) == ast")
{
    ExprGen gen(20261015);
    for (int i = 0; i < 3000; ++i) {
        Expr e = gen.gen(i % 6);
        std::string text = to_source(e);
        INFO(text);
        Expr back = parse_expression(text);
        REQUIRE(back == e);
        CHECK(to_source(back) == text);
    }
}
