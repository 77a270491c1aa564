#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cig/core/error.hpp"
#include "cig/core/value.hpp"
#include "cig/model/expression.hpp"
#include "cig/model/meta.hpp"

namespace cig::model {

enum class TaskKind { plan, action, enquiry, decision };

std::string_view to_string(TaskKind kind);
std::optional<TaskKind> parse_task_kind(std::string_view text);

struct Argument {
    Expr condition;
    std::int64_t weight = 0;  // positive supports, negative opposes

    bool operator==(const Argument&) const = default;
};

struct Candidate {
    std::string name;
    std::vector<Argument> arguments;
    std::optional<Expr> recommend_expr;  // absent: netsupport(name) >= 1
    MetaPropertyMap meta;

    bool operator==(const Candidate&) const = default;
};

struct DataItemDefinition {
    std::string name;
    ValueType value_type = ValueType::text;
    MetaPropertyMap meta;

    bool operator==(const DataItemDefinition&) const = default;
};

struct TaskDefinition {
    std::string name;
    TaskKind kind = TaskKind::action;
    std::vector<std::string> components;   // plans
    std::vector<std::string> antecedents;
    std::optional<Expr> precondition;
    std::vector<std::string> sources;      // enquiries
    std::vector<Candidate> candidates;     // decisions
    std::string procedure;                 // actions
    MetaPropertyMap meta;

    bool operator==(const TaskDefinition&) const = default;
};

struct GuidelineDefinition {
    std::string id;
    std::string version;
    std::string description;
    std::vector<DataItemDefinition> data_items;
    std::vector<TaskDefinition> tasks;
    std::string root_plan;

    const TaskDefinition* find_task(std::string_view name) const;
    const DataItemDefinition* find_item(std::string_view name) const;

    bool operator==(const GuidelineDefinition&) const = default;
};

/// Structural problem in a guideline document. `path` locates the element
/// (for example "tasks[2].kind").
class FormatError : public Error {
public:
    FormatError(std::string path, const std::string& message)
        : Error(path.empty() ? message : path + ": " + message), path_(std::move(path))
    {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

class DuplicateIdentifier : public FormatError {
public:
    using FormatError::FormatError;
};

/// Parses a PF-Lite document (JSON). Syntax errors in the JSON text raise
/// SyntaxError; structural errors raise FormatError.
GuidelineDefinition parse_guideline(std::string_view source_text);

/// Serializes with a fixed field order. parse_guideline(serialize_guideline(d)) == d.
std::string serialize_guideline(const GuidelineDefinition& def);

/// Copy with every meta map emptied.
GuidelineDefinition strip_meta(GuidelineDefinition def);

std::optional<std::string> get_meta(const TaskDefinition& task, std::string_view key);
std::optional<std::string> get_meta(const DataItemDefinition& item, std::string_view key);
std::optional<std::string> get_meta(const Candidate& candidate, std::string_view key);

// Validation ---------------------------------------------------------------

enum class Severity { warning, error };

struct ValidationIssue {
    Severity severity = Severity::error;
    std::string location;  // "task:<name>", "item:<name>", "guideline"
    std::string message;

    bool operator==(const ValidationIssue&) const = default;
};

std::vector<ValidationIssue> validate_guideline(const GuidelineDefinition& def);

class InvalidDefinition : public Error {
public:
    InvalidDefinition(std::string id, std::vector<ValidationIssue> issues);
    const std::vector<ValidationIssue>& issues() const { return issues_; }

private:
    std::vector<ValidationIssue> issues_;
};

/// A definition that passed validation with no errors, plus the lookup
/// tables the engine needs. Immutable and cheap to copy (shared storage).
class ValidatedGuideline {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    /// Throws InvalidDefinition when validation reports any error.
    static ValidatedGuideline from(GuidelineDefinition def);

    const GuidelineDefinition& definition() const { return index_->def; }
    const std::string& id() const { return index_->def.id; }

    std::size_t task_count() const { return index_->def.tasks.size(); }
    const TaskDefinition& task(std::size_t i) const { return index_->def.tasks[i]; }
    std::size_t task_index(std::string_view name) const;
    std::size_t root() const { return index_->root; }
    std::size_t parent(std::size_t task) const { return index_->parent[task]; }
    const std::vector<std::size_t>& children(std::size_t task) const { return index_->children[task]; }
    const std::vector<std::size_t>& antecedents(std::size_t task) const { return index_->antecedents[task]; }
    /// Tasks ordered so that every plan follows all of its descendants.
    const std::vector<std::size_t>& post_order() const { return index_->post_order; }

    std::size_t item_count() const { return index_->def.data_items.size(); }
    const DataItemDefinition& item(std::size_t i) const { return index_->def.data_items[i]; }
    std::size_t item_index(std::string_view name) const;

    std::size_t candidate_index(std::size_t decision, std::string_view name) const;
    /// Resolves a candidate by name: inside `context_decision` first, then
    /// as a definition-wide unique name. Returns {npos, npos} if unresolved.
    std::pair<std::size_t, std::size_t> resolve_candidate(std::string_view name,
                                                          std::size_t context_decision = npos) const;

private:
    struct Index {
        GuidelineDefinition def;
        std::size_t root = npos;
        std::unordered_map<std::string, std::size_t> tasks;
        std::unordered_map<std::string, std::size_t> items;
        std::vector<std::size_t> parent;
        std::vector<std::vector<std::size_t>> children;
        std::vector<std::vector<std::size_t>> antecedents;
        std::vector<std::size_t> post_order;
        // candidate name -> (decision, candidate); npos decision when ambiguous
        std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> candidates;
    };

    explicit ValidatedGuideline(std::shared_ptr<const Index> index) : index_(std::move(index)) {}

    std::shared_ptr<const Index> index_;
};

}  // namespace cig::model
