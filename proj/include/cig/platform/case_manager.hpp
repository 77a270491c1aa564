#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cig/platform/data_platform.hpp"
#include "cig/platform/event.hpp"

namespace cig::platform {

using EventHandler = std::function<void(const EventEnvelope&)>;

/// CM: patient-scoped event bus. Every published event is archived in DP
/// and handed to each matching subscriber. Deliveries to one subscriber for
/// one patient run one at a time in seq order; different patients (or
/// subscribers) run in parallel on the worker pool.
///
/// With zero workers, delivery happens on the publishing thread before
/// publish() returns. Events published from inside a handler are queued and
/// delivered after the current handler finishes.
class CaseManager {
public:
    CaseManager(DataPlatform& platform, std::size_t workers = 0);
    ~CaseManager();
    CaseManager(const CaseManager&) = delete;
    CaseManager& operator=(const CaseManager&) = delete;

    /// Assigns seq, event_id ("ev/<patient>/<seq>") and the current virtual
    /// time, archives, then dispatches. Returns the stored envelope.
    EventEnvelope publish(EventEnvelope ev);

    /// Throws Conflict on a duplicate subscriber id. No replay of past events.
    void subscribe(Subscription sub, EventHandler handler);
    /// Queued deliveries to the subscriber are dropped. Call drain() first
    /// if the handler's owner is about to be destroyed.
    void unsubscribe(const std::string& subscriber_id);

    /// Blocks until every queued delivery has finished. Must not be called
    /// from inside a handler.
    void drain();

    /// Handler exceptions are logged and counted; delivery continues.
    std::size_t failed_deliveries() const;

private:
    struct Subscriber {
        Subscription sub;
        EventHandler handler;
    };
    struct Strand {
        std::shared_ptr<Subscriber> subscriber;
        std::deque<EventEnvelope> queue;
        bool scheduled = false;
    };

    void schedule(Strand& strand);
    void run_strand(Strand& strand);
    void run_inline();
    void worker_loop();

    DataPlatform& platform_;
    std::mutex publish_mutex_;  // seq assignment + archive order

    mutable std::mutex mutex_;
    std::condition_variable work_cv_;
    std::condition_variable idle_cv_;
    std::map<std::string, std::shared_ptr<Subscriber>> subscribers_;
    std::map<std::pair<std::string, std::string>, std::unique_ptr<Strand>> strands_;  // (subscriber, patient)
    std::deque<Strand*> ready_;
    std::size_t pending_ = 0;
    std::size_t failures_ = 0;
    bool inline_running_ = false;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

}  // namespace cig::platform
