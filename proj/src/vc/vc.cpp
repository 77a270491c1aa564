#include "cig/vc/vc.hpp"

#include <deque>
#include <set>

#include <spdlog/spdlog.h>

namespace cig::vc {

using engine::ActiveTask;
using model::TaskKind;
using platform::Resource;
using platform::ResourceStatus;
using platform::ResourceType;
namespace meta = model::meta;

std::string_view to_string(SessionStatus s)
{
    switch (s) {
    case SessionStatus::running: return "running";
    case SessionStatus::quiescent: return "quiescent";
    case SessionStatus::done: return "done";
    case SessionStatus::aborted: return "aborted";
    }
    return "?";
}

nlohmann::ordered_json to_json(const CoachingSession& s)
{
    nlohmann::ordered_json j;
    j["session_id"] = s.session_id;
    j["patient"] = s.patient_id;
    j["trigger"] = s.trigger_event.event_id;
    j["status"] = std::string(to_string(s.status));
    j["iterations"] = s.iterations;
    j["instances"] = s.instances;
    j["effects"] = s.effects;
    j["outputs"] = s.outputs;
    if (!s.note.empty()) j["note"] = s.note;
    return j;
}

namespace {

std::string meta_or(const model::MetaPropertyMap& m, std::string_view key, std::string fallback = {})
{
    auto it = m.find(std::string(key));
    return it == m.end() ? fallback : it->second;
}

std::int64_t meta_int(const model::MetaPropertyMap& m, std::string_view key, std::int64_t fallback)
{
    auto it = m.find(std::string(key));
    if (it == m.end()) return fallback;
    try {
        return std::stoll(it->second);
    } catch (const std::exception&) {
        throw InvalidArgument(std::string(key) + " must be an integer, got '" + it->second + "'");
    }
}

Resource patient_message(const HandlerContext& ctx, std::string id, std::string code, VirtualTime at)
{
    Resource r;
    r.id = std::move(id);
    r.type = ResourceType::Communication;
    r.code = std::move(code);
    r.value = Value(meta_or(ctx.meta, meta::title, ctx.task));
    r.effective_at = at;
    r.properties["text"] = ctx.text;
    return r;
}

std::vector<std::string> schedule_tips(const HandlerContext& ctx)
{
    auto count = meta_int(ctx.meta, meta::count, 3);
    auto spacing = meta_int(ctx.meta, meta::spacing_seconds, 7200);
    auto delay = meta_int(ctx.meta, meta::delay_seconds, spacing);
    if (count < 1 || spacing < 0 || delay < 0) throw InvalidArgument("schedule_tips needs count >= 1 and non-negative times");

    std::vector<std::string> texts;
    auto key = meta_or(ctx.meta, meta::external_key);
    if (!key.empty() && ctx.external)
        for (const auto& v : ctx.external->fetch_all(key)) texts.push_back(v.to_text());
    if (texts.empty()) texts.push_back(ctx.text);

    auto day = static_cast<std::size_t>(std::max<std::int64_t>(0, ctx.now.seconds / 86400));
    std::vector<std::string> ids;
    for (std::int64_t i = 0; i < count; ++i) {
        auto at = ctx.now + delay + i * spacing;
        auto r = patient_message(ctx, ctx.instance_id + "/" + ctx.task + "/" + std::to_string(i + 1), "tip", at);
        r.properties["text"] = texts[(day + static_cast<std::size_t>(i)) % texts.size()];
        r.properties["scheduledFor"] = std::to_string(at.seconds);
        ids.push_back(ctx.write(std::move(r)));
    }
    return ids;
}

std::vector<std::string> snooze_reminder(const HandlerContext& ctx)
{
    auto delay = meta_int(ctx.meta, meta::delay_seconds, 1800);
    if (delay < 0) throw InvalidArgument("snooze_reminder needs a non-negative delay");
    auto at = ctx.now + delay;
    auto r = patient_message(ctx, ctx.instance_id + "/" + ctx.task, "reminder", at);
    r.properties["scheduledFor"] = std::to_string(at.seconds);
    return {ctx.write(std::move(r))};
}

const std::set<std::string>& message_types()
{
    static const std::set<std::string> types{"tip", "reminder", "capsule", "alert", "message"};
    return types;
}

}  // namespace

HandlerCatalog HandlerCatalog::defaults()
{
    HandlerCatalog c;
    c.add("schedule_tips", schedule_tips);
    c.add("snooze_reminder", snooze_reminder);
    return c;
}

void HandlerCatalog::add(const std::string& id, InternalHandler handler)
{
    if (!handlers_.emplace(id, std::move(handler)).second) throw Conflict("duplicate handler '" + id + "'");
}

const InternalHandler* HandlerCatalog::find(const std::string& id) const
{
    auto it = handlers_.find(id);
    return it == handlers_.end() ? nullptr : &it->second;
}

std::vector<std::string> HandlerCatalog::ids() const
{
    std::vector<std::string> out;
    for (const auto& [id, h] : handlers_) out.push_back(id);
    return out;
}

std::string fill_placeholders(const std::string& text, const engine::EngineInstance& inst)
{
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto open = text.find('{', pos);
        auto close = open == std::string::npos ? std::string::npos : text.find('}', open);
        if (close == std::string::npos) {
            out += text.substr(pos);
            break;
        }
        out += text.substr(pos, open - pos);
        auto name = text.substr(open + 1, close - open - 1);
        Value v;
        if (inst.guideline().definition().find_item(name)) v = inst.value_of(name);
        out += v.is_known() ? v.to_text() : text.substr(open, close - open + 1);
        pos = close + 1;
    }
    return out;
}

struct Vc::Session {
    CoachingSession out;
    std::map<std::string, Value> context;
    std::deque<Slot> slots;  // stable references while appending
    std::set<std::string> ids;
    VirtualTime now;
};

Vc::Vc(platform::DataPlatform& platform, const kdom::Kdom* kdom, const bridge::ExternalSource* external,
       std::optional<model::ValidatedGuideline> master, bridge::CigSet specialized, HandlerCatalog handlers,
       VcOptions options)
    : platform_(platform), kdom_(kdom), external_(external), master_(std::move(master)),
      specialized_(std::move(specialized)), handlers_(std::move(handlers)), options_(options),
      resolver_(platform, kdom, external)
{
}

void Vc::attach(platform::CaseManager& cm)
{
    platform::Subscription sub;
    sub.subscriber_id = std::string(subscriber_id);
    sub.event_types = {std::string(platform::event_types::symptom_reported), std::string(platform::event_types::time_tick),
                       std::string(platform::event_types::capsule_completed)};
    cm.subscribe(sub, [this](const platform::EventEnvelope& ev) { handle_event(ev); });
}

Vc::Slot Vc::enact(Session& s, const model::ValidatedGuideline& g) const
{
    auto id = s.out.session_id + "/" + g.id();
    for (int n = 2; s.ids.count(id); ++n) id = s.out.session_id + "/" + g.id() + "-" + std::to_string(n);
    s.ids.insert(id);

    // Items no enquiry asks for are bound up front; enquiry sources wait
    // for their enquiry to become active.
    std::set<std::string> asked;
    for (const auto& t : g.definition().tasks)
        if (t.kind == TaskKind::enquiry) asked.insert(t.sources.begin(), t.sources.end());
    std::vector<std::string> eager;
    for (const auto& item : g.definition().data_items)
        if (!asked.count(item.name)) eager.push_back(item.name);

    engine::EnactOptions opts;
    opts.instance_id = id;
    opts.mode = engine::DecisionMode::automatic;
    opts.at = s.now;
    std::vector<engine::DataValueBinding> initial;
    if (!eager.empty()) initial = resolver_.gather(g.definition(), s.out.patient_id, s.now, s.context, eager);
    s.out.instances.push_back(id);
    return Slot{id, engine::EngineInstance::enact(g, s.out.patient_id, initial, opts)};
}

std::string Vc::write(Session& s, Resource r) const
{
    r.type = ResourceType::Communication;
    r.patient_id = s.out.patient_id;
    r.source_type = "vc";
    r.status = ResourceStatus::pending;
    if (!r.effective_at) r.effective_at = s.now;
    r.properties["audience"] = "patient";
    r.properties["sessionId"] = s.out.session_id;
    r.properties["trigger"] = s.out.trigger_event.event_id;
    auto id = platform_.store(std::move(r));
    s.out.outputs.push_back(id);
    return id;
}

bool Vc::dispatch_action(Session& s, Slot& slot, const ActiveTask& task) const
{
    auto& inst = slot.instance;
    auto type = meta_or(task.meta, meta::intervention_type);
    const auto* def = inst.guideline().definition().find_task(task.name);
    auto text = fill_placeholders(def ? def->procedure : std::string(), inst);
    auto where = slot.instance_id + ":" + task.name;
    auto discard = [&](const std::string& why) {
        spdlog::warn("vc: {} discarded: {}", where, why);
        inst.discard_action(task.name, why);
        s.out.effects.push_back(where + " discarded (" + why + ")");
    };

    if (type == "invoke-cig") {
        auto cig = meta_or(task.meta, meta::cig_id);
        const auto* g = specialized_.find(cig);
        if (!g) {
            discard("unknown cigId '" + cig + "'");
            return true;
        }
        try {
            s.slots.push_back(enact(s, *g));
        } catch (const std::exception& e) {
            discard("cannot enact " + cig + ": " + e.what());
            return true;
        }
        inst.complete_action(task.name, s.slots.back().instance_id);
        s.out.effects.push_back(where + " invoked " + s.slots.back().instance_id);
        return true;
    }

    if (type == "internal") {
        auto id = meta_or(task.meta, meta::handler_id);
        const auto* handler = handlers_.find(id);
        if (!handler) {
            discard("unknown handlerId '" + id + "'");
            return true;
        }
        HandlerContext ctx{s.out,  slot.instance_id, task.name, task.meta, text, s.now, external_,
                           [&](Resource r) {
                               r.properties["sourceCig"] = inst.guideline().id();
                               r.properties["instanceId"] = slot.instance_id;
                               r.properties["task"] = task.name;
                               return write(s, std::move(r));
                           }};
        std::vector<std::string> written;
        try {
            written = (*handler)(ctx);
        } catch (const std::exception& e) {
            discard("handler " + id + " failed: " + e.what());
            return true;
        }
        inst.complete_action(task.name, std::to_string(written.size()) + " messages");
        s.out.effects.push_back(where + " ran " + id + " (" + std::to_string(written.size()) + " messages)");
        return true;
    }

    if (message_types().count(type)) {
        Resource r;
        r.id = slot.instance_id + "/" + task.name;
        r.code = type;
        r.value = Value(meta_or(task.meta, meta::title, task.name));
        if (auto item = meta_or(task.meta, meta::message_item); !item.empty()) {
            auto v = inst.value_of(item);
            if (v.is_known()) text = v.to_text();
        }
        r.properties["text"] = text;
        r.properties["title"] = meta_or(task.meta, meta::title, task.name);
        r.properties["sourceCig"] = inst.guideline().id();
        r.properties["instanceId"] = slot.instance_id;
        r.properties["task"] = task.name;
        auto id = write(s, std::move(r));
        inst.complete_action(task.name, id);
        s.out.effects.push_back(where + " sent " + type + " " + id);
        return true;
    }

    // basic action: nothing to deliver
    if (!type.empty()) spdlog::warn("vc: {} has unknown interventionType '{}', completing it", where, type);
    inst.complete_action(task.name);
    s.out.effects.push_back(where + " completed");
    return true;
}

bool Vc::resolve_enquiry(Session& s, Slot& slot, const ActiveTask& task) const
{
    auto& inst = slot.instance;
    const auto* def = inst.guideline().definition().find_task(task.name);
    if (!def) return false;
    std::vector<engine::DataValueBinding> found;
    std::vector<std::string> missing;
    for (const auto& name : def->sources) {
        if (inst.value_of(name).is_known()) continue;
        const auto* item = inst.guideline().definition().find_item(name);
        auto r = resolver_.resolve(*item, s.out.patient_id, s.now, s.context);
        if (r.value.is_known()) found.push_back({name, r.value, s.now, engine::BindingOrigin::enquiry});
        else missing.push_back(name + ": " + r.note);
    }
    auto changed = found.empty() ? std::set<std::string>{} : inst.set_data_values(found);
    if (!changed.empty())
        s.out.effects.push_back(slot.instance_id + ":" + task.name + " resolved " + std::to_string(changed.size()) +
                                " items");
    if (!missing.empty()) spdlog::debug("vc: {}:{} still waiting on {}", slot.instance_id, task.name, missing.front());
    return !changed.empty();
}

void Vc::run_session(Session& s) const
{
    // Round robin: each iteration visits the instances that existed when it
    // started; instances invoked during it are first visited next time.
    while (true) {
        if (s.out.iterations >= options_.iteration_cap) {
            s.out.status = SessionStatus::aborted;
            s.out.note = "iteration cap " + std::to_string(options_.iteration_cap) + " reached";
            spdlog::error("vc: {} aborted: {}", s.out.session_id, s.out.note);
            return;
        }
        ++s.out.iterations;
        bool progress = false;
        auto n = s.slots.size();
        for (std::size_t i = 0; i < n; ++i) {
            auto& slot = s.slots[i];
            if (!slot.instance.advance().empty()) progress = true;
            for (const auto& task : slot.instance.active_tasks({TaskKind::action}))
                progress = dispatch_action(s, slot, task) || progress;
            for (const auto& task : slot.instance.active_tasks({TaskKind::enquiry}))
                progress = resolve_enquiry(s, slot, task) || progress;
        }
        if (s.slots.size() > n) progress = true;
        if (progress) continue;

        bool waiting = false;
        for (const auto& slot : s.slots)
            if (!slot.instance.active_tasks({TaskKind::action, TaskKind::enquiry}).empty()) waiting = true;
        s.out.status = waiting ? SessionStatus::quiescent : SessionStatus::done;
        return;
    }
}

CoachingSession Vc::handle_event(const platform::EventEnvelope& ev) const
{
    Session s;
    s.out.session_id = "vc/" + ev.patient_id + "/" + std::to_string(ev.seq);
    s.out.patient_id = ev.patient_id;
    s.out.trigger_event = ev;
    s.now = ev.at;
    for (const auto& [k, v] : ev.payload) s.context[k] = Value(v);
    s.context["event_type"] = Value(ev.event_type);

    if (!master_) {
        s.out.status = SessionStatus::aborted;
        s.out.note = "no master guideline";
        spdlog::error("vc: {} aborted: {}", s.out.session_id, s.out.note);
        if (observer_) observer_(s.out);
        return s.out;
    }
    if (platform_.has_trace(s.out.session_id + "/" + master_->id())) {
        spdlog::info("vc: {} already handled, skipping", s.out.session_id);
        s.out.status = SessionStatus::done;
        s.out.note = "already handled";
        if (observer_) observer_(s.out);
        return s.out;
    }

    try {
        s.slots.push_back(enact(s, *master_));
        run_session(s);
    } catch (const std::exception& e) {
        s.out.status = SessionStatus::aborted;
        s.out.note = e.what();
        spdlog::error("vc: {} aborted: {}", s.out.session_id, e.what());
    }
    for (auto& slot : s.slots) {
        slot.instance.terminate();
        s.out.recorded.push_back({slot.instance_id, slot.instance.guideline().id(), slot.instance.recording()});
        try {
            platform_.append_trace(slot.instance_id, ev.patient_id, slot.instance.transition_log());
        } catch (const std::exception& e) {
            spdlog::error("vc: trace for {} not stored: {}", slot.instance_id, e.what());
        }
    }
    spdlog::info("vc: {} {} after {} iterations, {} outputs", s.out.session_id, to_string(s.out.status),
                 s.out.iterations, s.out.outputs.size());
    if (observer_) observer_(s.out);
    return s.out;
}

}  // namespace cig::vc
