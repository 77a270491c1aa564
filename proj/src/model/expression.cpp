#include "cig/model/expression.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "cig/core/error.hpp"

namespace cig::model {

std::string_view to_string(BinaryOp op)
{
    switch (op) {
    case BinaryOp::logical_or: return "or";
    case BinaryOp::logical_and: return "and";
    case BinaryOp::eq: return "==";
    case BinaryOp::ne: return "!=";
    case BinaryOp::lt: return "<";
    case BinaryOp::le: return "<=";
    case BinaryOp::gt: return ">";
    case BinaryOp::ge: return ">=";
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
    }
    return "?";
}

std::string_view to_string(Builtin fn)
{
    switch (fn) {
    case Builtin::known: return "known";
    case Builtin::netsupport: return "netsupport";
    case Builtin::is_committed: return "is_committed";
    case Builtin::result_of: return "result_of";
    case Builtin::abs: return "abs";
    case Builtin::min: return "min";
    case Builtin::max: return "max";
    }
    return "?";
}

std::optional<Builtin> builtin_by_name(std::string_view name)
{
    for (auto fn : {Builtin::known, Builtin::netsupport, Builtin::is_committed, Builtin::result_of,
                    Builtin::abs, Builtin::min, Builtin::max}) {
        if (to_string(fn) == name) return fn;
    }
    return std::nullopt;
}

Expr Expr::make_literal(Value v)
{
    Expr e;
    e.kind = Kind::literal;
    e.literal = std::move(v);
    return e;
}

Expr Expr::make_reference(std::string item)
{
    Expr e;
    e.kind = Kind::reference;
    e.name = std::move(item);
    return e;
}

Expr Expr::make_not(Expr operand)
{
    Expr e;
    e.kind = Kind::logical_not;
    e.operands.push_back(std::move(operand));
    return e;
}

Expr Expr::make_binary(BinaryOp op, Expr lhs, Expr rhs)
{
    Expr e;
    e.kind = Kind::binary;
    e.op = op;
    e.operands.push_back(std::move(lhs));
    e.operands.push_back(std::move(rhs));
    return e;
}

Expr Expr::make_call(Builtin fn, std::vector<Expr> args)
{
    Expr e;
    e.kind = Kind::call;
    e.fn = fn;
    e.operands = std::move(args);
    return e;
}

namespace {

enum class Tok { end, number, string, ident, kw_and, kw_or, kw_not, kw_true, kw_false, lparen, rparen, comma, op };

struct Token {
    Tok type = Tok::end;
    std::string text;
    std::size_t offset = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        Token t;
        t.offset = pos_;
        if (pos_ >= src_.size()) return t;

        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) return number(t);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return word(t);
        if (c == '"' || c == '\'') return string(t, c);

        switch (c) {
        case '(': ++pos_; t.type = Tok::lparen; return t;
        case ')': ++pos_; t.type = Tok::rparen; return t;
        case ',': ++pos_; t.type = Tok::comma; return t;
        case '+': case '-': case '*': case '/':
            ++pos_;
            t.type = Tok::op;
            t.text = std::string(1, c);
            return t;
        case '<': case '>': case '=': case '!': {
            bool has_eq = pos_ + 1 < src_.size() && src_[pos_ + 1] == '=';
            if ((c == '=' || c == '!') && !has_eq)
                throw SyntaxError(pos_, std::string("unexpected character '") + c + "'");
            t.type = Tok::op;
            t.text = has_eq ? std::string{c, '='} : std::string(1, c);
            pos_ += has_eq ? 2 : 1;
            return t;
        }
        default:
            throw SyntaxError(pos_, std::string("unexpected character '") + c + "'");
        }
    }

private:
    Token number(Token t)
    {
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
                throw SyntaxError(pos_, "digit expected after decimal point");
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
                throw SyntaxError(pos_, "digit expected in exponent");
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        t.type = Tok::number;
        t.text = std::string(src_.substr(start, pos_ - start));
        return t;
    }

    Token word(Token t)
    {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        t.text = std::string(src_.substr(start, pos_ - start));
        if (t.text == "and") t.type = Tok::kw_and;
        else if (t.text == "or") t.type = Tok::kw_or;
        else if (t.text == "not") t.type = Tok::kw_not;
        else if (t.text == "true") t.type = Tok::kw_true;
        else if (t.text == "false") t.type = Tok::kw_false;
        else t.type = Tok::ident;
        return t;
    }

    Token string(Token t, char quote)
    {
        ++pos_;
        while (true) {
            if (pos_ >= src_.size()) throw SyntaxError(t.offset, "unterminated string literal");
            char c = src_[pos_++];
            if (c == quote) break;
            if (c == '\\') {
                if (pos_ >= src_.size()) throw SyntaxError(t.offset, "unterminated string literal");
                c = src_[pos_++];
            }
            t.text.push_back(c);
        }
        t.type = Tok::string;
        return t;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lexer_(src) { cur_ = lexer_.next(); }

    Expr parse()
    {
        Expr e = parse_or();
        if (cur_.type != Tok::end) unexpected();
        return e;
    }

private:
    void advance() { cur_ = lexer_.next(); }

    [[noreturn]] void unexpected() const
    {
        if (cur_.type == Tok::end) throw SyntaxError(cur_.offset, "unexpected end of input");
        throw SyntaxError(cur_.offset, "unexpected token '" + describe(cur_) + "'");
    }

    static std::string describe(const Token& t)
    {
        switch (t.type) {
        case Tok::lparen: return "(";
        case Tok::rparen: return ")";
        case Tok::comma: return ",";
        case Tok::string: return "\"" + t.text + "\"";
        default: return t.text;
        }
    }

    void expect(Tok type, const char* what)
    {
        if (cur_.type != type) {
            if (cur_.type == Tok::end) throw SyntaxError(cur_.offset, std::string(what) + " expected at end of input");
            throw SyntaxError(cur_.offset, std::string(what) + " expected");
        }
        advance();
    }

    Expr parse_or()
    {
        Expr lhs = parse_and();
        while (cur_.type == Tok::kw_or) {
            advance();
            lhs = Expr::make_binary(BinaryOp::logical_or, std::move(lhs), parse_and());
        }
        return lhs;
    }

    Expr parse_and()
    {
        Expr lhs = parse_not();
        while (cur_.type == Tok::kw_and) {
            advance();
            lhs = Expr::make_binary(BinaryOp::logical_and, std::move(lhs), parse_not());
        }
        return lhs;
    }

    Expr parse_not()
    {
        if (cur_.type == Tok::kw_not) {
            advance();
            return Expr::make_not(parse_not());
        }
        return parse_cmp();
    }

    Expr parse_cmp()
    {
        Expr lhs = parse_sum();
        if (cur_.type == Tok::op) {
            std::optional<BinaryOp> op;
            if (cur_.text == "==") op = BinaryOp::eq;
            else if (cur_.text == "!=") op = BinaryOp::ne;
            else if (cur_.text == "<") op = BinaryOp::lt;
            else if (cur_.text == "<=") op = BinaryOp::le;
            else if (cur_.text == ">") op = BinaryOp::gt;
            else if (cur_.text == ">=") op = BinaryOp::ge;
            if (op) {
                advance();
                return Expr::make_binary(*op, std::move(lhs), parse_sum());
            }
        }
        return lhs;
    }

    Expr parse_sum()
    {
        Expr lhs = parse_term();
        while (cur_.type == Tok::op && (cur_.text == "+" || cur_.text == "-")) {
            auto op = cur_.text == "+" ? BinaryOp::add : BinaryOp::sub;
            advance();
            lhs = Expr::make_binary(op, std::move(lhs), parse_term());
        }
        return lhs;
    }

    Expr parse_term()
    {
        Expr lhs = parse_factor();
        while (cur_.type == Tok::op && (cur_.text == "*" || cur_.text == "/")) {
            auto op = cur_.text == "*" ? BinaryOp::mul : BinaryOp::div;
            advance();
            lhs = Expr::make_binary(op, std::move(lhs), parse_factor());
        }
        return lhs;
    }

    Expr parse_factor()
    {
        Token t = cur_;
        switch (t.type) {
        case Tok::number: {
            advance();
            if (t.text.find_first_of(".eE") == std::string::npos) {
                std::int64_t v = 0;
                auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
                if (ec != std::errc()) throw SyntaxError(t.offset, "integer literal out of range");
                return Expr::make_literal(Value(v));
            }
            return Expr::make_literal(Value(std::strtod(t.text.c_str(), nullptr)));
        }
        case Tok::string:
            advance();
            return Expr::make_literal(Value(t.text));
        case Tok::kw_true:
            advance();
            return Expr::make_literal(Value(true));
        case Tok::kw_false:
            advance();
            return Expr::make_literal(Value(false));
        case Tok::lparen: {
            advance();
            Expr inner = parse_or();
            expect(Tok::rparen, "')'");
            return inner;
        }
        case Tok::ident:
            advance();
            if (cur_.type == Tok::lparen) return parse_call(t);
            return Expr::make_reference(t.text);
        default:
            unexpected();
        }
    }

    Expr parse_call(const Token& name)
    {
        auto fn = builtin_by_name(name.text);
        if (!fn) throw SyntaxError(name.offset, "unknown function '" + name.text + "'");
        advance();  // '('

        std::vector<Expr> args;
        std::vector<std::size_t> offsets;
        if (cur_.type != Tok::rparen) {
            while (true) {
                offsets.push_back(cur_.offset);
                args.push_back(parse_or());
                if (cur_.type != Tok::comma) break;
                advance();
            }
        }
        expect(Tok::rparen, "')'");

        auto arity_error = [&](const std::string& want) {
            throw SyntaxError(name.offset, name.text + "() takes " + want);
        };
        switch (*fn) {
        case Builtin::known:
        case Builtin::netsupport:
        case Builtin::result_of:
        case Builtin::abs:
            if (args.size() != 1) arity_error("exactly 1 argument");
            break;
        case Builtin::is_committed:
            if (args.size() != 2) arity_error("exactly 2 arguments");
            break;
        case Builtin::min:
        case Builtin::max:
            if (args.size() < 2) arity_error("at least 2 arguments");
            break;
        }
        if (*fn != Builtin::abs && *fn != Builtin::min && *fn != Builtin::max) {
            for (std::size_t i = 0; i < args.size(); ++i) {
                if (args[i].kind != Expr::Kind::reference)
                    throw SyntaxError(offsets[i], name.text + "() arguments must be identifiers");
            }
        }
        return Expr::make_call(*fn, std::move(args));
    }

    Lexer lexer_;
    Token cur_;
};

// Binding strength per grammar level; higher binds tighter.
int level_of(const Expr& e)
{
    switch (e.kind) {
    case Expr::Kind::literal:
    case Expr::Kind::reference:
    case Expr::Kind::call:
        return 7;
    case Expr::Kind::logical_not:
        return 3;
    case Expr::Kind::binary:
        switch (e.op) {
        case BinaryOp::logical_or: return 1;
        case BinaryOp::logical_and: return 2;
        case BinaryOp::add:
        case BinaryOp::sub: return 5;
        case BinaryOp::mul:
        case BinaryOp::div: return 6;
        default: return 4;
        }
    }
    return 0;
}

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void print(const Expr& e, std::string& out);

void print_at(const Expr& e, int min_level, std::string& out)
{
    if (level_of(e) < min_level) {
        out.push_back('(');
        print(e, out);
        out.push_back(')');
    } else {
        print(e, out);
    }
}

void print(const Expr& e, std::string& out)
{
    switch (e.kind) {
    case Expr::Kind::literal:
        if (e.literal.is_string()) {
            out += quote(e.literal.as_string());
        } else if (e.literal.is_real()) {
            std::string text = e.literal.to_text();
            if (text.find_first_of(".eE") == std::string::npos) text += ".0";
            out += text;
        } else {
            out += e.literal.to_text();
        }
        return;
    case Expr::Kind::reference:
        out += e.name;
        return;
    case Expr::Kind::logical_not:
        out += "not ";
        print_at(e.operands[0], 3, out);
        return;
    case Expr::Kind::call:
        out += to_string(e.fn);
        out.push_back('(');
        for (std::size_t i = 0; i < e.operands.size(); ++i) {
            if (i) out += ", ";
            print(e.operands[i], out);
        }
        out.push_back(')');
        return;
    case Expr::Kind::binary: {
        int level = level_of(e);
        // Left-associative chains keep the left operand at the same level;
        // comparison is non-associative so both sides must bind tighter.
        int left_min = level == 4 ? 5 : level;
        print_at(e.operands[0], left_min, out);
        out.push_back(' ');
        out += to_string(e.op);
        out.push_back(' ');
        print_at(e.operands[1], level + 1, out);
        return;
    }
    }
}

void collect(const Expr& e, ExprReferences& refs)
{
    switch (e.kind) {
    case Expr::Kind::literal:
        return;
    case Expr::Kind::reference:
        refs.items.push_back(e.name);
        return;
    case Expr::Kind::call:
        switch (e.fn) {
        case Builtin::known: refs.items.push_back(e.operands[0].name); return;
        case Builtin::netsupport: refs.candidates.push_back(e.operands[0].name); return;
        case Builtin::is_committed:
            refs.commitments.emplace_back(e.operands[0].name, e.operands[1].name);
            return;
        case Builtin::result_of: refs.tasks.push_back(e.operands[0].name); return;
        default: break;
        }
        [[fallthrough]];
    default:
        for (const auto& child : e.operands) collect(child, refs);
    }
}

}  // namespace

Expr parse_expression(std::string_view source)
{
    return Parser(source).parse();
}

std::string to_source(const Expr& expr)
{
    std::string out;
    print(expr, out);
    return out;
}

ExprReferences collect_references(const Expr& expr)
{
    ExprReferences refs;
    collect(expr, refs);
    return refs;
}

}  // namespace cig::model
