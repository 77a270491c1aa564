#include "cig/model/guideline.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include <nlohmann/json.hpp>

namespace cig::model {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(TaskKind kind)
{
    switch (kind) {
    case TaskKind::plan: return "plan";
    case TaskKind::action: return "action";
    case TaskKind::enquiry: return "enquiry";
    case TaskKind::decision: return "decision";
    }
    return "?";
}

std::optional<TaskKind> parse_task_kind(std::string_view text)
{
    if (text == "plan") return TaskKind::plan;
    if (text == "action") return TaskKind::action;
    if (text == "enquiry") return TaskKind::enquiry;
    if (text == "decision") return TaskKind::decision;
    return std::nullopt;
}

const TaskDefinition* GuidelineDefinition::find_task(std::string_view name) const
{
    auto it = std::find_if(tasks.begin(), tasks.end(), [&](const auto& t) { return t.name == name; });
    return it == tasks.end() ? nullptr : &*it;
}

const DataItemDefinition* GuidelineDefinition::find_item(std::string_view name) const
{
    auto it = std::find_if(data_items.begin(), data_items.end(), [&](const auto& d) { return d.name == name; });
    return it == data_items.end() ? nullptr : &*it;
}

// Parsing --------------------------------------------------------------------

namespace {

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed)
{
    if (!obj.is_object()) throw FormatError(path, "object expected");
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw FormatError(path, "unknown key '" + key + "'");
    }
}

std::string require_string(const json& obj, const char* key, const std::string& path)
{
    auto it = obj.find(key);
    if (it == obj.end()) throw FormatError(path, std::string("missing '") + key + "'");
    if (!it->is_string()) throw FormatError(path + "." + key, "string expected");
    return it->get<std::string>();
}

std::string optional_string(const json& obj, const char* key, const std::string& path)
{
    auto it = obj.find(key);
    if (it == obj.end()) return {};
    if (!it->is_string()) throw FormatError(path + "." + key, "string expected");
    return it->get<std::string>();
}

std::vector<std::string> string_list(const json& obj, const char* key, const std::string& path)
{
    std::vector<std::string> out;
    auto it = obj.find(key);
    if (it == obj.end()) return out;
    if (!it->is_array()) throw FormatError(path + "." + key, "array expected");
    for (const auto& v : *it) {
        if (!v.is_string()) throw FormatError(path + "." + key, "array of strings expected");
        out.push_back(v.get<std::string>());
    }
    return out;
}

MetaPropertyMap parse_meta(const json& obj, const std::string& path)
{
    MetaPropertyMap meta;
    auto it = obj.find("meta");
    if (it == obj.end()) return meta;
    if (!it->is_object()) throw FormatError(path + ".meta", "flat string map expected");
    for (const auto& [key, value] : it->items()) {
        if (!value.is_string()) throw FormatError(path + ".meta." + key, "string value expected");
        meta.emplace(key, value.get<std::string>());
    }
    return meta;
}

Expr parse_expr_field(const json& value, const std::string& path)
{
    if (!value.is_string()) throw FormatError(path, "expression string expected");
    try {
        return parse_expression(value.get<std::string>());
    } catch (const SyntaxError& e) {
        throw FormatError(path, std::string("expression syntax error ") + e.what());
    }
}

Candidate parse_candidate(const json& obj, const std::string& path)
{
    check_keys(obj, path, {"name", "arguments", "recommend_expr", "meta"});
    Candidate c;
    c.name = require_string(obj, "name", path);
    if (auto it = obj.find("arguments"); it != obj.end()) {
        if (!it->is_array()) throw FormatError(path + ".arguments", "array expected");
        std::size_t i = 0;
        for (const auto& a : *it) {
            std::string apath = path + ".arguments[" + std::to_string(i++) + "]";
            check_keys(a, apath, {"condition", "weight"});
            if (!a.contains("condition")) throw FormatError(apath, "missing 'condition'");
            if (!a.contains("weight") || !a["weight"].is_number_integer())
                throw FormatError(apath, "integer 'weight' expected");
            c.arguments.push_back({parse_expr_field(a["condition"], apath + ".condition"), a["weight"].get<std::int64_t>()});
        }
    }
    if (auto it = obj.find("recommend_expr"); it != obj.end())
        c.recommend_expr = parse_expr_field(*it, path + ".recommend_expr");
    c.meta = parse_meta(obj, path);
    return c;
}

TaskDefinition parse_task(const json& obj, const std::string& path)
{
    check_keys(obj, path,
               {"name", "kind", "components", "antecedents", "precondition", "sources", "candidates", "procedure", "meta"});
    TaskDefinition t;
    t.name = require_string(obj, "name", path);
    std::string kind = require_string(obj, "kind", path);
    auto parsed = parse_task_kind(kind);
    if (!parsed) throw FormatError(path + ".kind", "unknown task kind '" + kind + "'");
    t.kind = *parsed;
    t.components = string_list(obj, "components", path);
    t.antecedents = string_list(obj, "antecedents", path);
    if (auto it = obj.find("precondition"); it != obj.end())
        t.precondition = parse_expr_field(*it, path + ".precondition");
    t.sources = string_list(obj, "sources", path);
    if (auto it = obj.find("candidates"); it != obj.end()) {
        if (!it->is_array()) throw FormatError(path + ".candidates", "array expected");
        std::set<std::string> seen;
        std::size_t i = 0;
        for (const auto& c : *it) {
            std::string cpath = path + ".candidates[" + std::to_string(i++) + "]";
            t.candidates.push_back(parse_candidate(c, cpath));
            if (!seen.insert(t.candidates.back().name).second)
                throw DuplicateIdentifier(cpath, "duplicate candidate '" + t.candidates.back().name + "'");
        }
    }
    t.procedure = optional_string(obj, "procedure", path);
    t.meta = parse_meta(obj, path);
    return t;
}

ordered_json meta_json(const MetaPropertyMap& meta)
{
    ordered_json out = ordered_json::object();
    for (const auto& [k, v] : meta) out[k] = v;
    return out;
}

}  // namespace

GuidelineDefinition parse_guideline(std::string_view source_text)
{
    json doc;
    try {
        doc = json::parse(source_text);
    } catch (const json::parse_error& e) {
        throw SyntaxError(e.byte, e.what());
    }

    check_keys(doc, "", {"id", "version", "description", "data_items", "tasks", "root_plan"});
    GuidelineDefinition def;
    def.id = require_string(doc, "id", "");
    def.version = optional_string(doc, "version", "");
    def.description = optional_string(doc, "description", "");
    def.root_plan = optional_string(doc, "root_plan", "");

    std::set<std::string> names;
    if (auto it = doc.find("data_items"); it != doc.end()) {
        if (!it->is_array()) throw FormatError("data_items", "array expected");
        std::size_t i = 0;
        for (const auto& obj : *it) {
            std::string path = "data_items[" + std::to_string(i++) + "]";
            check_keys(obj, path, {"name", "value_type", "meta"});
            DataItemDefinition item;
            item.name = require_string(obj, "name", path);
            std::string type = require_string(obj, "value_type", path);
            auto vt = parse_value_type(type);
            if (!vt) throw FormatError(path + ".value_type", "unknown value type '" + type + "'");
            item.value_type = *vt;
            item.meta = parse_meta(obj, path);
            if (!names.insert(item.name).second)
                throw DuplicateIdentifier(path, "duplicate data item '" + item.name + "'");
            def.data_items.push_back(std::move(item));
        }
    }

    names.clear();
    if (auto it = doc.find("tasks"); it != doc.end()) {
        if (!it->is_array()) throw FormatError("tasks", "array expected");
        std::size_t i = 0;
        for (const auto& obj : *it) {
            std::string path = "tasks[" + std::to_string(i++) + "]";
            auto task = parse_task(obj, path);
            if (!names.insert(task.name).second)
                throw DuplicateIdentifier(path, "duplicate task '" + task.name + "'");
            def.tasks.push_back(std::move(task));
        }
    }
    return def;
}

std::string serialize_guideline(const GuidelineDefinition& def)
{
    ordered_json doc;
    doc["id"] = def.id;
    doc["version"] = def.version;
    doc["description"] = def.description;
    doc["data_items"] = ordered_json::array();
    for (const auto& item : def.data_items) {
        ordered_json j;
        j["name"] = item.name;
        j["value_type"] = std::string(to_string(item.value_type));
        if (!item.meta.empty()) j["meta"] = meta_json(item.meta);
        doc["data_items"].push_back(std::move(j));
    }
    doc["tasks"] = ordered_json::array();
    for (const auto& task : def.tasks) {
        ordered_json j;
        j["name"] = task.name;
        j["kind"] = std::string(to_string(task.kind));
        if (!task.components.empty()) j["components"] = task.components;
        if (!task.antecedents.empty()) j["antecedents"] = task.antecedents;
        if (task.precondition) j["precondition"] = to_source(*task.precondition);
        if (!task.sources.empty()) j["sources"] = task.sources;
        if (!task.candidates.empty()) {
            j["candidates"] = ordered_json::array();
            for (const auto& c : task.candidates) {
                ordered_json cj;
                cj["name"] = c.name;
                cj["arguments"] = ordered_json::array();
                for (const auto& a : c.arguments) {
                    ordered_json aj;
                    aj["condition"] = to_source(a.condition);
                    aj["weight"] = a.weight;
                    cj["arguments"].push_back(std::move(aj));
                }
                if (c.recommend_expr) cj["recommend_expr"] = to_source(*c.recommend_expr);
                if (!c.meta.empty()) cj["meta"] = meta_json(c.meta);
                j["candidates"].push_back(std::move(cj));
            }
        }
        if (!task.procedure.empty()) j["procedure"] = task.procedure;
        if (!task.meta.empty()) j["meta"] = meta_json(task.meta);
        doc["tasks"].push_back(std::move(j));
    }
    doc["root_plan"] = def.root_plan;
    return doc.dump(2) + "\n";
}

GuidelineDefinition strip_meta(GuidelineDefinition def)
{
    for (auto& item : def.data_items) item.meta.clear();
    for (auto& task : def.tasks) {
        task.meta.clear();
        for (auto& c : task.candidates) c.meta.clear();
    }
    return def;
}

namespace {
std::optional<std::string> lookup(const MetaPropertyMap& meta, std::string_view key)
{
    auto it = meta.find(std::string(key));
    if (it == meta.end()) return std::nullopt;
    return it->second;
}
}  // namespace

std::optional<std::string> get_meta(const TaskDefinition& task, std::string_view key)
{
    return lookup(task.meta, key);
}

std::optional<std::string> get_meta(const DataItemDefinition& item, std::string_view key)
{
    return lookup(item.meta, key);
}

std::optional<std::string> get_meta(const Candidate& candidate, std::string_view key)
{
    return lookup(candidate.meta, key);
}

// Validation -----------------------------------------------------------------

namespace {

class Validator {
public:
    explicit Validator(const GuidelineDefinition& def) : def_(def) {}

    std::vector<ValidationIssue> run()
    {
        index();
        check_items();
        check_root();
        for (const auto& task : def_.tasks) check_task(task);
        check_tree();
        check_antecedent_cycles();
        return std::move(issues_);
    }

private:
    void error(std::string location, std::string message)
    {
        issues_.push_back({Severity::error, std::move(location), std::move(message)});
    }
    void warning(std::string location, std::string message)
    {
        issues_.push_back({Severity::warning, std::move(location), std::move(message)});
    }

    static std::string where(const TaskDefinition& t) { return "task:" + t.name; }

    void index()
    {
        for (std::size_t i = 0; i < def_.tasks.size(); ++i) {
            if (!tasks_.emplace(def_.tasks[i].name, i).second)
                error(where(def_.tasks[i]), "duplicate task identifier");
            for (const auto& c : def_.tasks[i].candidates) {
                auto [it, inserted] = candidate_owner_.emplace(c.name, i);
                if (!inserted && it->second != i) ambiguous_candidates_.insert(c.name);
            }
        }
    }

    void check_items()
    {
        std::set<std::string> seen;
        for (const auto& item : def_.data_items) {
            if (!seen.insert(item.name).second) error("item:" + item.name, "duplicate data item identifier");
            if (auto src = get_meta(item, meta::source);
                src && *src != "kdom" && *src != "dp" && *src != "external" && *src != "calc")
                warning("item:" + item.name, "source must be kdom|dp|external|calc");
            if (get_meta(item, meta::source) == std::optional<std::string>("kdom") &&
                !get_meta(item, meta::abstraction_id))
                warning("item:" + item.name, "kdom source without abstractionId; item name used as rule key");
        }
    }

    void check_root()
    {
        if (def_.root_plan.empty()) {
            error("guideline", "missing root_plan");
            return;
        }
        auto it = tasks_.find(def_.root_plan);
        if (it == tasks_.end()) {
            error("guideline", "root_plan '" + def_.root_plan + "' does not name a task");
            return;
        }
        const auto& root = def_.tasks[it->second];
        if (root.kind != TaskKind::plan) error("guideline", "root_plan '" + def_.root_plan + "' is not a plan");
        if (root.precondition || !root.antecedents.empty())
            warning(where(root), "root plan precondition/antecedents are ignored; the root starts on enactment");
    }

    void check_task(const TaskDefinition& t)
    {
        const auto loc = where(t);
        if ((t.kind == TaskKind::plan) != !t.components.empty())
            error(loc, t.kind == TaskKind::plan ? "plan without components" : "components on a non-plan task");
        if ((t.kind == TaskKind::enquiry) != !t.sources.empty())
            error(loc, t.kind == TaskKind::enquiry ? "enquiry without sources" : "sources on a non-enquiry task");
        if ((t.kind == TaskKind::decision) != !t.candidates.empty())
            error(loc, t.kind == TaskKind::decision ? "decision without candidates" : "candidates on a non-decision task");
        if (t.kind != TaskKind::action && !t.procedure.empty()) warning(loc, "procedure on a non-action task");

        for (const auto& c : t.components)
            if (!tasks_.count(c)) error(loc, "component '" + c + "' does not name a task");
        for (const auto& s : t.sources)
            if (!def_.find_item(s)) error(loc, "source '" + s + "' does not name a data item");

        std::set<std::string> ante;
        for (const auto& a : t.antecedents) {
            if (!tasks_.count(a)) error(loc, "antecedent '" + a + "' does not name a task");
            else if (a == t.name) error(loc, "antecedent cycle: task depends on itself");
            if (!ante.insert(a).second) warning(loc, "antecedent '" + a + "' listed twice");
        }

        if (auto gate = get_meta(t, meta::gate); gate && !parse_gate(*gate))
            error(loc, "gate must be AND|OR|XOR (got '" + *gate + "')");

        if (t.precondition) check_expr(*t.precondition, loc + ".precondition", nullptr);

        std::set<std::string> names;
        for (const auto& c : t.candidates) {
            std::string cloc = loc + ".candidate:" + c.name;
            if (!names.insert(c.name).second) error(cloc, "duplicate candidate identifier");
            if (auto gate = get_meta(c, meta::gate); gate && !parse_gate(*gate))
                error(cloc, "gate must be AND|OR|XOR (got '" + *gate + "')");
            for (const auto& a : c.arguments) {
                if (a.weight == 0) error(cloc, "argument weight must be non-zero");
                check_expr(a.condition, cloc + ".argument", &t);
            }
            if (c.recommend_expr) check_expr(*c.recommend_expr, cloc + ".recommend_expr", &t);
        }
    }

    void check_expr(const Expr& e, const std::string& loc, const TaskDefinition* decision)
    {
        auto refs = collect_references(e);
        for (const auto& item : refs.items)
            if (!def_.find_item(item)) error(loc, "unknown data item '" + item + "'");
        for (const auto& cand : refs.candidates) {
            bool local = decision && std::any_of(decision->candidates.begin(), decision->candidates.end(),
                                                 [&](const auto& c) { return c.name == cand; });
            if (local) continue;
            if (!candidate_owner_.count(cand)) error(loc, "unknown candidate '" + cand + "'");
            else if (ambiguous_candidates_.count(cand)) error(loc, "ambiguous candidate '" + cand + "'");
        }
        for (const auto& [dec, cand] : refs.commitments) {
            auto it = tasks_.find(dec);
            if (it == tasks_.end() || def_.tasks[it->second].kind != TaskKind::decision) {
                error(loc, "unknown decision '" + dec + "'");
                continue;
            }
            const auto& cands = def_.tasks[it->second].candidates;
            if (std::none_of(cands.begin(), cands.end(), [&](const auto& c) { return c.name == cand; }))
                error(loc, "decision '" + dec + "' has no candidate '" + cand + "'");
        }
        for (const auto& task : refs.tasks)
            if (!tasks_.count(task)) error(loc, "unknown task '" + task + "'");
    }

    void check_tree()
    {
        parent_.assign(def_.tasks.size(), npos);
        for (std::size_t i = 0; i < def_.tasks.size(); ++i) {
            for (const auto& c : def_.tasks[i].components) {
                auto it = tasks_.find(c);
                if (it == tasks_.end()) continue;
                if (parent_[it->second] != npos && parent_[it->second] != i)
                    error("task:" + c, "task is a component of more than one plan");
                else if (parent_[it->second] == i)
                    warning("task:" + c, "component listed twice in plan '" + def_.tasks[i].name + "'");
                parent_[it->second] = i;
            }
        }

        auto root = tasks_.find(def_.root_plan);
        if (root != tasks_.end() && parent_[root->second] != npos)
            error("task:" + def_.root_plan, "root plan is a component of another plan");

        // Every task must be reachable from the root through component links,
        // and following parents upward must never loop.
        for (std::size_t i = 0; i < def_.tasks.size(); ++i) {
            std::size_t cur = i;
            std::size_t steps = 0;
            while (parent_[cur] != npos && steps <= def_.tasks.size()) {
                cur = parent_[cur];
                ++steps;
            }
            if (steps > def_.tasks.size()) {
                error(where(def_.tasks[i]), "component cycle");
            } else if (root != tasks_.end() && cur != root->second) {
                error(where(def_.tasks[i]), "task not reachable from root plan");
            }
        }

        for (std::size_t i = 0; i < def_.tasks.size(); ++i) {
            for (const auto& a : def_.tasks[i].antecedents) {
                auto it = tasks_.find(a);
                if (it == tasks_.end() || it->second == i) continue;
                if (parent_[it->second] != parent_[i])
                    error(where(def_.tasks[i]), "cross-plan antecedent '" + a + "'");
            }
        }
    }

    void check_antecedent_cycles()
    {
        // 0 = unvisited, 1 = on stack, 2 = done
        std::vector<int> mark(def_.tasks.size(), 0);
        std::set<std::size_t> reported;
        std::function<void(std::size_t)> visit = [&](std::size_t i) {
            mark[i] = 1;
            for (const auto& a : def_.tasks[i].antecedents) {
                auto it = tasks_.find(a);
                if (it == tasks_.end() || it->second == i) continue;
                if (mark[it->second] == 1) {
                    if (reported.insert(i).second) error(where(def_.tasks[i]), "antecedent cycle through '" + a + "'");
                } else if (mark[it->second] == 0) {
                    visit(it->second);
                }
            }
            mark[i] = 2;
        };
        for (std::size_t i = 0; i < def_.tasks.size(); ++i)
            if (mark[i] == 0) visit(i);
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    const GuidelineDefinition& def_;
    std::vector<ValidationIssue> issues_;
    std::unordered_map<std::string, std::size_t> tasks_;
    std::unordered_map<std::string, std::size_t> candidate_owner_;
    std::set<std::string> ambiguous_candidates_;
    std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<ValidationIssue> validate_guideline(const GuidelineDefinition& def)
{
    return Validator(def).run();
}

InvalidDefinition::InvalidDefinition(std::string id, std::vector<ValidationIssue> issues)
    : Error([&] {
          std::string msg = "guideline '" + id + "' is invalid";
          for (const auto& issue : issues)
              if (issue.severity == Severity::error) msg += "; " + issue.location + ": " + issue.message;
          return msg;
      }()),
      issues_(std::move(issues))
{}

ValidatedGuideline ValidatedGuideline::from(GuidelineDefinition def)
{
    auto issues = validate_guideline(def);
    if (std::any_of(issues.begin(), issues.end(), [](const auto& i) { return i.severity == Severity::error; }))
        throw InvalidDefinition(def.id, std::move(issues));

    auto index = std::make_shared<Index>();
    index->def = std::move(def);
    const auto& d = index->def;
    const std::size_t n = d.tasks.size();

    for (std::size_t i = 0; i < n; ++i) index->tasks.emplace(d.tasks[i].name, i);
    for (std::size_t i = 0; i < d.data_items.size(); ++i) index->items.emplace(d.data_items[i].name, i);
    index->root = index->tasks.at(d.root_plan);

    index->parent.assign(n, npos);
    index->children.assign(n, {});
    index->antecedents.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& c : d.tasks[i].components) {
            auto child = index->tasks.at(c);
            if (index->parent[child] == npos) {
                index->parent[child] = i;
                index->children[i].push_back(child);
            }
        }
        std::set<std::size_t> seen;
        for (const auto& a : d.tasks[i].antecedents) {
            auto ante = index->tasks.at(a);
            if (seen.insert(ante).second) index->antecedents[i].push_back(ante);
        }
        for (std::size_t c = 0; c < d.tasks[i].candidates.size(); ++c) {
            auto [it, inserted] = index->candidates.emplace(d.tasks[i].candidates[c].name, std::pair{i, c});
            if (!inserted) it->second = {npos, npos};
        }
    }

    std::function<void(std::size_t)> walk = [&](std::size_t t) {
        for (auto c : index->children[t]) walk(c);
        index->post_order.push_back(t);
    };
    walk(index->root);

    return ValidatedGuideline(std::move(index));
}

std::size_t ValidatedGuideline::task_index(std::string_view name) const
{
    auto it = index_->tasks.find(std::string(name));
    return it == index_->tasks.end() ? npos : it->second;
}

std::size_t ValidatedGuideline::item_index(std::string_view name) const
{
    auto it = index_->items.find(std::string(name));
    return it == index_->items.end() ? npos : it->second;
}

std::size_t ValidatedGuideline::candidate_index(std::size_t decision, std::string_view name) const
{
    const auto& cands = index_->def.tasks[decision].candidates;
    for (std::size_t i = 0; i < cands.size(); ++i)
        if (cands[i].name == name) return i;
    return npos;
}

std::pair<std::size_t, std::size_t> ValidatedGuideline::resolve_candidate(std::string_view name,
                                                                          std::size_t context_decision) const
{
    if (context_decision != npos) {
        auto c = candidate_index(context_decision, name);
        if (c != npos) return {context_decision, c};
    }
    auto it = index_->candidates.find(std::string(name));
    if (it == index_->candidates.end()) return {npos, npos};
    return it->second;
}

}  // namespace cig::model
