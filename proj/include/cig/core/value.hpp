#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

namespace cig {

/// Declared type of a data item.
enum class ValueType { boolean, integer, real, text, code };

std::string_view to_string(ValueType type);
std::optional<ValueType> parse_value_type(std::string_view text);

/// A typed datum or "unknown". Integers and reals are distinct so that
/// bindings can be type-checked against their item declaration.
class Value {
public:
    using Storage = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

    Value() = default;
    Value(bool b) : data_(b) {}
    Value(int i) : data_(static_cast<std::int64_t>(i)) {}
    Value(std::int64_t i) : data_(i) {}
    Value(double d) : data_(d) {}
    Value(std::string s) : data_(std::move(s)) {}
    Value(const char* s) : data_(std::string(s)) {}

    static Value unknown() { return Value(); }

    bool is_known() const { return !std::holds_alternative<std::monostate>(data_); }
    bool is_bool() const { return std::holds_alternative<bool>(data_); }
    bool is_integer() const { return std::holds_alternative<std::int64_t>(data_); }
    bool is_real() const { return std::holds_alternative<double>(data_); }
    bool is_number() const { return is_integer() || is_real(); }
    bool is_string() const { return std::holds_alternative<std::string>(data_); }

    bool as_bool() const { return std::get<bool>(data_); }
    std::int64_t as_integer() const { return std::get<std::int64_t>(data_); }
    double as_number() const;
    const std::string& as_string() const { return std::get<std::string>(data_); }

    const Storage& storage() const { return data_; }

    /// Name of the runtime kind ("unknown", "boolean", "integer", "real", "text").
    std::string_view kind_name() const;

    /// Human-readable rendering, used in messages and flat string maps.
    std::string to_text() const;

    bool operator==(const Value&) const = default;

private:
    Storage data_;
};

/// True when `value` may be bound to an item of `type` (after `coerce_to`).
bool matches_type(const Value& value, ValueType type);

/// Strict type conversion for bindings: integer widens to real, nothing else
/// changes kind. Returns nullopt on mismatch. Unknown passes through.
std::optional<Value> coerce_to(const Value& value, ValueType type);

/// Lenient conversion of text coming from flat string maps (event payloads,
/// resource properties) into the declared item type.
std::optional<Value> parse_as(std::string_view text, ValueType type);

nlohmann::ordered_json to_json(const Value& value);
Value value_from_json(const nlohmann::json& j);

}  // namespace cig
