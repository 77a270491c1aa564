#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cig/core/time.hpp"
#include "cig/core/value.hpp"
#include "cig/engine/types.hpp"
#include "cig/kdom/kdom.hpp"
#include "cig/model/guideline.hpp"
#include "cig/platform/data_platform.hpp"

namespace cig::bridge {

/// Where a data item's value comes from, read from its `source` meta.
enum class SourceKind { kdom, dp, external, calc, context };

std::string_view to_string(SourceKind kind);
/// `source` meta first; without it an item with `resourceType` is a DP item,
/// anything else is taken from the caller's context (event payload).
SourceKind source_of(const model::DataItemDefinition& item);

/// Repository stub for the "other data sources" an enquiry may query.
class ExternalSource {
public:
    virtual ~ExternalSource() = default;
    virtual std::optional<Value> fetch(const std::string& key, const std::string& patient, VirtualTime now) const = 0;
    /// Every entry under the key, in store order.
    virtual std::vector<Value> fetch_all(const std::string& key) const = 0;
};

/// valueExpression of a DP item: "value" (default), "code", "status", or
/// the name of a resource property parsed as the item's type.
///
/// JSON-backed store: {"key": value, "key2": [v0, v1, ...]}. A list yields
/// one entry per virtual day, rotating, so the choice is deterministic.
class JsonExternalStore : public ExternalSource {
public:
    /// Merges a file or every *.json file of a directory. Later keys win.
    void load(const std::filesystem::path& path);
    void put(const std::string& key, nlohmann::json value);
    std::optional<Value> fetch(const std::string& key, const std::string& patient, VirtualTime now) const override;
    std::vector<Value> fetch_all(const std::string& key) const override;

private:
    std::map<std::string, nlohmann::json> entries_;
};

/// Names accepted by the `calc` meta.
std::optional<Value> calculate(const std::string& name, VirtualTime now);

struct Resolution {
    std::string item;
    SourceKind kind = SourceKind::dp;
    Value value;  // unknown when unresolved
    std::string note;  // why it is unknown, or what it came from
};

/// Meta-driven data gathering shared by PDSS and VC. Missing data is
/// unknown, never an error; resolver failures are logged and reported as
/// unknown.
class DataResolver {
public:
    DataResolver(const platform::DataPlatform& platform, const kdom::Kdom* kdom = nullptr,
                 const ExternalSource* external = nullptr)
        : platform_(platform), kdom_(kdom), external_(external)
    {
    }

    Resolution resolve(const model::DataItemDefinition& item, const std::string& patient, VirtualTime now,
                       const std::map<std::string, Value>& context = {}) const;

    /// Resolves `items` (all data items when empty) and returns the known
    /// values as bindings, stamped `now`.
    std::vector<engine::DataValueBinding> gather(const model::GuidelineDefinition& def, const std::string& patient,
                                                 VirtualTime now, const std::map<std::string, Value>& context = {},
                                                 const std::vector<std::string>& items = {},
                                                 engine::BindingOrigin origin = engine::BindingOrigin::external) const;

private:
    Value from_platform(const model::DataItemDefinition& item, const std::string& patient, VirtualTime now,
                        std::string& note) const;

    const platform::DataPlatform& platform_;
    const kdom::Kdom* kdom_;
    const ExternalSource* external_;
};

}  // namespace cig::bridge
