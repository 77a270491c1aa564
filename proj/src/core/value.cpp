#include "cig/core/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace cig {

std::string_view to_string(ValueType type)
{
    switch (type) {
    case ValueType::boolean: return "boolean";
    case ValueType::integer: return "integer";
    case ValueType::real: return "real";
    case ValueType::text: return "text";
    case ValueType::code: return "code";
    }
    return "?";
}

std::optional<ValueType> parse_value_type(std::string_view text)
{
    if (text == "boolean") return ValueType::boolean;
    if (text == "integer") return ValueType::integer;
    if (text == "real") return ValueType::real;
    if (text == "text") return ValueType::text;
    if (text == "code") return ValueType::code;
    return std::nullopt;
}

double Value::as_number() const
{
    if (is_integer()) return static_cast<double>(as_integer());
    return std::get<double>(data_);
}

std::string_view Value::kind_name() const
{
    switch (data_.index()) {
    case 0: return "unknown";
    case 1: return "boolean";
    case 2: return "integer";
    case 3: return "real";
    default: return "text";
    }
}

std::string Value::to_text() const
{
    switch (data_.index()) {
    case 0: return "unknown";
    case 1: return as_bool() ? "true" : "false";
    case 2: return std::to_string(as_integer());
    case 3: {
        // Shortest representation that still round-trips.
        char buf[64];
        for (int precision = 1; precision <= 17; ++precision) {
            std::snprintf(buf, sizeof buf, "%.*g", precision, std::get<double>(data_));
            if (std::strtod(buf, nullptr) == std::get<double>(data_)) break;
        }
        return buf;
    }
    default: return as_string();
    }
}

bool matches_type(const Value& value, ValueType type)
{
    return coerce_to(value, type).has_value();
}

std::optional<Value> coerce_to(const Value& value, ValueType type)
{
    if (!value.is_known()) return value;
    switch (type) {
    case ValueType::boolean:
        if (value.is_bool()) return value;
        break;
    case ValueType::integer:
        if (value.is_integer()) return value;
        break;
    case ValueType::real:
        if (value.is_real()) return value;
        if (value.is_integer()) return Value(static_cast<double>(value.as_integer()));
        break;
    case ValueType::text:
    case ValueType::code:
        if (value.is_string()) return value;
        break;
    }
    return std::nullopt;
}

std::optional<Value> parse_as(std::string_view text, ValueType type)
{
    switch (type) {
    case ValueType::boolean:
        if (text == "true") return Value(true);
        if (text == "false") return Value(false);
        return std::nullopt;
    case ValueType::integer: {
        std::int64_t out = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
        if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
        return Value(out);
    }
    case ValueType::real: {
        std::string owned(text);
        char* end = nullptr;
        double out = std::strtod(owned.c_str(), &end);
        if (owned.empty() || end != owned.c_str() + owned.size() || !std::isfinite(out)) return std::nullopt;
        return Value(out);
    }
    case ValueType::text:
    case ValueType::code:
        return Value(std::string(text));
    }
    return std::nullopt;
}

nlohmann::ordered_json to_json(const Value& value)
{
    switch (value.storage().index()) {
    case 0: return nullptr;
    case 1: return value.as_bool();
    case 2: return value.as_integer();
    case 3: return value.as_number();
    default: return value.as_string();
    }
}

Value value_from_json(const nlohmann::json& j)
{
    if (j.is_null()) return Value::unknown();
    if (j.is_boolean()) return Value(j.get<bool>());
    if (j.is_number_integer()) return Value(j.get<std::int64_t>());
    if (j.is_number_float()) return Value(j.get<double>());
    if (j.is_string()) return Value(j.get<std::string>());
    throw std::invalid_argument("value must be null, boolean, number or string");
}

}  // namespace cig
