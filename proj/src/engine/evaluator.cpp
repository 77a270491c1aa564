#include "evaluator.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

namespace cig::engine {

using model::BinaryOp;
using model::Builtin;
using model::Expr;

namespace {

constexpr int max_depth = 64;

struct DepthGuard {
    explicit DepthGuard(int& d) : depth(d)
    {
        if (++depth > max_depth) {
            --depth;
            throw EvaluationError("expression nesting too deep (recursive netsupport?)");
        }
    }
    ~DepthGuard() { --depth; }
    int& depth;
};

Value from_tri(TriValue t)
{
    if (t == TriValue::unknown) return Value::unknown();
    return Value(t == TriValue::true_value);
}

void require_number(const Value& v, BinaryOp op)
{
    if (!v.is_number())
        throw TypeMismatch("operator " + std::string(to_string(op)) + " needs numbers, got " +
                           std::string(v.kind_name()));
}

}  // namespace

Value Evaluator::eval(const Expr& e) const
{
    DepthGuard guard(depth_);
    switch (e.kind) {
    case Expr::Kind::literal:
        return e.literal;
    case Expr::Kind::reference:
        return inst_.value_of(e.name);
    case Expr::Kind::logical_not:
        return from_tri(tri_not(to_tri(eval(e.operands[0]))));
    case Expr::Kind::binary:
        return eval_binary(e);
    case Expr::Kind::call:
        return eval_call(e);
    }
    return Value::unknown();
}

Value Evaluator::eval_binary(const Expr& e) const
{
    const auto& lhs = e.operands[0];
    const auto& rhs = e.operands[1];
    switch (e.op) {
    case BinaryOp::logical_and: {
        auto a = to_tri(eval(lhs));
        if (a == TriValue::false_value) return Value(false);
        return from_tri(tri_and(a, to_tri(eval(rhs))));
    }
    case BinaryOp::logical_or: {
        auto a = to_tri(eval(lhs));
        if (a == TriValue::true_value) return Value(true);
        return from_tri(tri_or(a, to_tri(eval(rhs))));
    }
    case BinaryOp::add:
    case BinaryOp::sub:
    case BinaryOp::mul:
    case BinaryOp::div:
        return arithmetic(e.op, eval(lhs), eval(rhs));
    default:
        return compare(e.op, eval(lhs), eval(rhs));
    }
}

Value Evaluator::arithmetic(BinaryOp op, const Value& a, const Value& b) const
{
    if (a.is_known()) require_number(a, op);
    if (b.is_known()) require_number(b, op);
    if (!a.is_known() || !b.is_known()) return Value::unknown();

    if (op == BinaryOp::div) {
        if (b.as_number() == 0.0) {
            std::string msg = "division by zero in instance " + inst_.instance_id() + "; result unknown";
            spdlog::debug(msg);
            inst_.warnings_.push_back(std::move(msg));
            return Value::unknown();
        }
        return Value(a.as_number() / b.as_number());
    }
    if (a.is_integer() && b.is_integer()) {
        std::int64_t out = 0;
        bool overflow = false;
        switch (op) {
        case BinaryOp::add: overflow = __builtin_add_overflow(a.as_integer(), b.as_integer(), &out); break;
        case BinaryOp::sub: overflow = __builtin_sub_overflow(a.as_integer(), b.as_integer(), &out); break;
        default: overflow = __builtin_mul_overflow(a.as_integer(), b.as_integer(), &out); break;
        }
        if (!overflow) return Value(out);
    }
    double x = a.as_number();
    double y = b.as_number();
    switch (op) {
    case BinaryOp::add: return Value(x + y);
    case BinaryOp::sub: return Value(x - y);
    default: return Value(x * y);
    }
}

Value Evaluator::compare(BinaryOp op, const Value& a, const Value& b) const
{
    if (!a.is_known() || !b.is_known()) return Value::unknown();

    int order = 0;
    if (a.is_number() && b.is_number()) {
        double x = a.as_number();
        double y = b.as_number();
        order = x < y ? -1 : (x > y ? 1 : 0);
    } else if (a.is_string() && b.is_string()) {
        order = a.as_string().compare(b.as_string());
        order = order < 0 ? -1 : (order > 0 ? 1 : 0);
    } else if (a.is_bool() && b.is_bool()) {
        if (op != BinaryOp::eq && op != BinaryOp::ne)
            throw TypeMismatch("booleans only support == and !=");
        order = a.as_bool() == b.as_bool() ? 0 : 1;
    } else {
        throw TypeMismatch("cannot compare " + std::string(a.kind_name()) + " with " + std::string(b.kind_name()));
    }

    switch (op) {
    case BinaryOp::eq: return Value(order == 0);
    case BinaryOp::ne: return Value(order != 0);
    case BinaryOp::lt: return Value(order < 0);
    case BinaryOp::le: return Value(order <= 0);
    case BinaryOp::gt: return Value(order > 0);
    case BinaryOp::ge: return Value(order >= 0);
    default: break;
    }
    throw EvaluationError("not a comparison operator");
}

Value Evaluator::eval_call(const Expr& e) const
{
    const auto& g = inst_.guideline();
    switch (e.fn) {
    case Builtin::known:
        return Value(inst_.value_of(e.operands[0].name).is_known());
    case Builtin::netsupport: {
        auto [decision, cand] = g.resolve_candidate(e.operands[0].name, context_);
        if (decision == model::ValidatedGuideline::npos)
            throw EvaluationError("unresolved candidate '" + e.operands[0].name + "'");
        return Value(netsupport(decision, cand));
    }
    case Builtin::is_committed: {
        auto decision = g.task_index(e.operands[0].name);
        if (decision == model::ValidatedGuideline::npos)
            throw EvaluationError("unknown decision '" + e.operands[0].name + "'");
        auto cand = g.candidate_index(decision, e.operands[1].name);
        if (cand == model::ValidatedGuideline::npos)
            throw EvaluationError("unknown candidate '" + e.operands[1].name + "'");
        return Value(static_cast<bool>(inst_.commits_[decision][cand]));
    }
    case Builtin::result_of: {
        auto task = g.task_index(e.operands[0].name);
        if (task == model::ValidatedGuideline::npos)
            throw EvaluationError("unknown task '" + e.operands[0].name + "'");
        if (inst_.tasks_[task].state != TaskState::completed) return Value::unknown();
        const auto& def = g.task(task);
        if (def.kind == model::TaskKind::action) {
            if (inst_.results_[task]) return Value(*inst_.results_[task]);
            return Value::unknown();
        }
        if (def.kind == model::TaskKind::decision) {
            for (std::size_t c = 0; c < def.candidates.size(); ++c)
                if (inst_.commits_[task][c]) return Value(def.candidates[c].name);
        }
        return Value::unknown();
    }
    case Builtin::abs: {
        Value v = eval(e.operands[0]);
        if (!v.is_known()) return v;
        if (!v.is_number()) throw TypeMismatch("abs() needs a number");
        if (v.is_integer()) return Value(v.as_integer() < 0 ? -v.as_integer() : v.as_integer());
        return Value(std::fabs(v.as_number()));
    }
    case Builtin::min:
    case Builtin::max: {
        std::vector<Value> args;
        for (const auto& a : e.operands) args.push_back(eval(a));
        for (const auto& v : args)
            if (v.is_known() && !v.is_number()) throw TypeMismatch(std::string(to_string(e.fn)) + "() needs numbers");
        if (std::any_of(args.begin(), args.end(), [](const Value& v) { return !v.is_known(); }))
            return Value::unknown();
        Value best = args[0];
        for (std::size_t i = 1; i < args.size(); ++i) {
            bool better = e.fn == Builtin::min ? args[i].as_number() < best.as_number()
                                               : args[i].as_number() > best.as_number();
            if (better) best = args[i];
        }
        bool all_int = std::all_of(args.begin(), args.end(), [](const Value& v) { return v.is_integer(); });
        return all_int ? best : Value(best.as_number());
    }
    }
    return Value::unknown();
}

std::int64_t Evaluator::netsupport(std::size_t decision, std::size_t candidate) const
{
    Evaluator inner(inst_, decision);
    inner.depth_ = depth_;
    std::int64_t sum = 0;
    for (const auto& arg : inst_.guideline().task(decision).candidates[candidate].arguments) {
        if (inner.truth(arg.condition) == TriValue::true_value) sum += arg.weight;
    }
    return sum;
}

TriValue Evaluator::recommended(std::size_t decision, std::size_t candidate) const
{
    const auto& cand = inst_.guideline().task(decision).candidates[candidate];
    if (cand.recommend_expr) {
        Evaluator inner(inst_, decision);
        return inner.truth(*cand.recommend_expr);
    }
    return netsupport(decision, candidate) >= 1 ? TriValue::true_value : TriValue::false_value;
}

}  // namespace cig::engine
