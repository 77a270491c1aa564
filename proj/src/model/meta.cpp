#include "cig/model/meta.hpp"

#include <array>

namespace cig::model {

namespace {

constexpr std::array registry{
    MetaKeyInfo{meta::source_type, MetaTarget::data_item,
                "component that created the source record; absent means any creator", false},
    MetaKeyInfo{meta::resource_type, MetaTarget::data_item, "resource type holding the source value", false},
    MetaKeyInfo{meta::value_expression, MetaTarget::data_item,
                "which field or property of the resource is reported to the engine", false},
    MetaKeyInfo{meta::intervention_type, MetaTarget::task,
                "intervention a task represents (tip, reminder, alert, capsule, medication-proposal, "
                "invoke-cig, internal)",
                false},
    MetaKeyInfo{meta::gate, MetaTarget::task, "AND | OR | XOR: how many offered recommendations to follow", false},
    MetaKeyInfo{meta::source, MetaTarget::data_item, "kdom | dp | external | calc: where the value comes from", true},
    MetaKeyInfo{meta::abstraction_id, MetaTarget::data_item, "KDOM rule computing the value", true},
    MetaKeyInfo{meta::cig_id, MetaTarget::task, "specialized guideline started by an invoke-cig action", true},
    MetaKeyInfo{meta::handler_id, MetaTarget::task, "internal handler run by an internal action", true},
    MetaKeyInfo{meta::code_query, MetaTarget::data_item, "resource code filter for platform queries", true},
    MetaKeyInfo{meta::title, MetaTarget::any, "short human-readable text for the produced message", true},
    MetaKeyInfo{meta::evidence, MetaTarget::any, "guideline text supporting the recommendation", true},
    MetaKeyInfo{meta::decision_ref, MetaTarget::task, "decision whose gate groups this medication proposal", true},
    MetaKeyInfo{meta::medication, MetaTarget::task, "medication code proposed by the task", true},
    MetaKeyInfo{meta::count, MetaTarget::task, "number of items produced by a handler", true},
    MetaKeyInfo{meta::spacing_seconds, MetaTarget::task, "spacing between scheduled items", true},
    MetaKeyInfo{meta::delay_seconds, MetaTarget::task, "delay before a deferred item", true},
    MetaKeyInfo{meta::external_key, MetaTarget::data_item, "lookup key in an external data source", true},
    MetaKeyInfo{meta::calc, MetaTarget::data_item, "named calculation producing the value", true},
    MetaKeyInfo{meta::message_item, MetaTarget::task, "data item whose value becomes the message text", true},
    MetaKeyInfo{meta::audience, MetaTarget::task, "physician | patient: who receives the message", true},
};

}  // namespace

std::span<const MetaKeyInfo> meta_registry()
{
    return registry;
}

const MetaKeyInfo* find_meta_key(std::string_view key)
{
    for (const auto& info : registry) {
        if (info.key == key) return &info;
    }
    return nullptr;
}

std::string_view to_string(Gate gate)
{
    switch (gate) {
    case Gate::all_of: return "AND";
    case Gate::any_of: return "OR";
    case Gate::exactly_one: return "XOR";
    }
    return "?";
}

std::optional<Gate> parse_gate(std::string_view text)
{
    if (text == "AND") return Gate::all_of;
    if (text == "OR") return Gate::any_of;
    if (text == "XOR") return Gate::exactly_one;
    return std::nullopt;
}

}  // namespace cig::model
