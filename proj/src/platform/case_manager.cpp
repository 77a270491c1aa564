#include "cig/platform/case_manager.hpp"

#include <spdlog/spdlog.h>

#include "cig/core/error.hpp"

namespace cig::platform {

CaseManager::CaseManager(DataPlatform& platform, std::size_t workers) : platform_(platform)
{
    for (std::size_t i = 0; i < workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

CaseManager::~CaseManager()
{
    if (!workers_.empty()) drain();
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    work_cv_.notify_all();
    for (auto& t : workers_) t.join();
}

EventEnvelope CaseManager::publish(EventEnvelope ev)
{
    if (ev.event_type.empty()) throw InvalidArgument("event_type must not be empty");
    if (ev.patient_id.empty()) throw InvalidArgument("event needs a patient");
    {
        std::lock_guard guard(publish_mutex_);
        ev.seq = platform_.last_event_seq(ev.patient_id) + 1;
        ev.event_id = "ev/" + ev.patient_id + "/" + std::to_string(ev.seq);
        ev.at = platform_.clock().now();
        platform_.archive_event(ev);

        // Enqueue while still holding the publish lock so per-patient order
        // on every strand equals seq order.
        std::lock_guard lock(mutex_);
        for (const auto& [id, sub] : subscribers_) {
            if (!sub->sub.event_types.count(ev.event_type)) continue;
            auto& slot = strands_[{id, ev.patient_id}];
            if (!slot) slot = std::make_unique<Strand>();
            slot->subscriber = sub;
            slot->queue.push_back(ev);
            ++pending_;
            schedule(*slot);
        }
    }
    spdlog::debug("cm: published {} ({})", ev.event_id, ev.event_type);
    if (workers_.empty()) run_inline();
    return ev;
}

void CaseManager::schedule(Strand& strand)
{
    if (strand.scheduled) return;
    strand.scheduled = true;
    ready_.push_back(&strand);
    work_cv_.notify_one();
}

void CaseManager::run_strand(Strand& strand)
{
    // Called without mutex_ held; the strand stays "scheduled" (owned by
    // this runner) until its queue is empty.
    while (true) {
        EventEnvelope ev;
        std::shared_ptr<Subscriber> sub;
        {
            std::lock_guard lock(mutex_);
            if (strand.queue.empty()) {
                strand.scheduled = false;
                return;
            }
            ev = std::move(strand.queue.front());
            strand.queue.pop_front();
            sub = strand.subscriber;
        }
        try {
            sub->handler(ev);
        } catch (const std::exception& e) {
            spdlog::error("cm: subscriber {} failed on {}: {}", sub->sub.subscriber_id, ev.event_id, e.what());
            std::lock_guard lock(mutex_);
            ++failures_;
        }
        {
            std::lock_guard lock(mutex_);
            if (--pending_ == 0) idle_cv_.notify_all();
        }
    }
}

void CaseManager::run_inline()
{
    {
        std::lock_guard lock(mutex_);
        if (inline_running_) return;  // reentrant publish: the outer loop delivers
        inline_running_ = true;
    }
    while (true) {
        Strand* next = nullptr;
        {
            std::lock_guard lock(mutex_);
            if (ready_.empty()) {
                inline_running_ = false;
                return;
            }
            next = ready_.front();
            ready_.pop_front();
        }
        run_strand(*next);
    }
}

void CaseManager::worker_loop()
{
    while (true) {
        Strand* next = nullptr;
        {
            std::unique_lock lock(mutex_);
            work_cv_.wait(lock, [this] { return stopping_ || !ready_.empty(); });
            if (ready_.empty()) return;
            next = ready_.front();
            ready_.pop_front();
        }
        run_strand(*next);
    }
}

void CaseManager::subscribe(Subscription sub, EventHandler handler)
{
    std::lock_guard lock(mutex_);
    if (subscribers_.count(sub.subscriber_id)) throw Conflict("duplicate subscriber '" + sub.subscriber_id + "'");
    auto id = sub.subscriber_id;
    subscribers_[id] = std::make_shared<Subscriber>(Subscriber{std::move(sub), std::move(handler)});
}

void CaseManager::unsubscribe(const std::string& subscriber_id)
{
    std::lock_guard lock(mutex_);
    subscribers_.erase(subscriber_id);
    // Drop what has not started yet; a handler already running finishes.
    for (auto& [key, strand] : strands_) {
        if (key.first != subscriber_id) continue;
        pending_ -= strand->queue.size();
        strand->queue.clear();
    }
    if (pending_ == 0) idle_cv_.notify_all();
}

void CaseManager::drain()
{
    if (workers_.empty()) {
        run_inline();
        return;
    }
    std::unique_lock lock(mutex_);
    idle_cv_.wait(lock, [this] { return pending_ == 0; });
}

std::size_t CaseManager::failed_deliveries() const
{
    std::lock_guard lock(mutex_);
    return failures_;
}

}  // namespace cig::platform
