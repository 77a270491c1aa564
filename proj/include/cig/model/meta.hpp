#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace cig::model {

/// Free-form key/value annotations attached to tasks and data items. The
/// engine never reads them; wrapper components do. Unknown keys are kept
/// verbatim.
using MetaPropertyMap = std::map<std::string, std::string>;

enum class MetaTarget { data_item, task, candidate, any };

struct MetaKeyInfo {
    std::string_view key;
    MetaTarget target;
    std::string_view description;
    bool extension;  // not part of the base data-item/task vocabulary
};

/// Recognized keys. The registry is open: keys outside it are preserved and
/// passed through, never rejected.
std::span<const MetaKeyInfo> meta_registry();
const MetaKeyInfo* find_meta_key(std::string_view key);

namespace meta {
inline constexpr std::string_view source_type = "sourceType";
inline constexpr std::string_view resource_type = "resourceType";
inline constexpr std::string_view value_expression = "valueExpression";
inline constexpr std::string_view intervention_type = "interventionType";
inline constexpr std::string_view gate = "gate";
inline constexpr std::string_view source = "source";
inline constexpr std::string_view abstraction_id = "abstractionId";
inline constexpr std::string_view cig_id = "cigId";
inline constexpr std::string_view handler_id = "handlerId";
inline constexpr std::string_view code_query = "codeQuery";
inline constexpr std::string_view title = "title";
inline constexpr std::string_view evidence = "evidence";
inline constexpr std::string_view decision_ref = "decisionRef";
inline constexpr std::string_view medication = "medication";
inline constexpr std::string_view count = "count";
inline constexpr std::string_view spacing_seconds = "spacingSeconds";
inline constexpr std::string_view delay_seconds = "delaySeconds";
inline constexpr std::string_view external_key = "externalKey";
inline constexpr std::string_view calc = "calc";
inline constexpr std::string_view message_item = "messageItem";
inline constexpr std::string_view audience = "audience";
}  // namespace meta

/// Logical gate of a decision: how many offered recommendations to follow.
enum class Gate { all_of, any_of, exactly_one };

std::string_view to_string(Gate gate);
std::optional<Gate> parse_gate(std::string_view text);

}  // namespace cig::model
