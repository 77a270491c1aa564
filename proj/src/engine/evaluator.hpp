#pragma once

#include "cig/engine/instance.hpp"

namespace cig::engine {

/// Three-valued evaluation of expressions against one instance's bindings
/// and decision records.
class Evaluator {
public:
    static constexpr std::size_t no_decision = model::ValidatedGuideline::npos;

    explicit Evaluator(const EngineInstance& inst, std::size_t context_decision = no_decision)
        : inst_(inst), context_(context_decision)
    {}

    Value eval(const model::Expr& e) const;
    TriValue truth(const model::Expr& e) const { return to_tri(eval(e)); }

    std::int64_t netsupport(std::size_t decision, std::size_t candidate) const;
    TriValue recommended(std::size_t decision, std::size_t candidate) const;

private:
    Value eval_binary(const model::Expr& e) const;
    Value eval_call(const model::Expr& e) const;
    Value arithmetic(model::BinaryOp op, const Value& a, const Value& b) const;
    Value compare(model::BinaryOp op, const Value& a, const Value& b) const;

    const EngineInstance& inst_;
    std::size_t context_;
    mutable int depth_ = 0;
};

}  // namespace cig::engine
