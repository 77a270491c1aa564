#include "cig/gateway/http.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "cig/gateway/scenario.hpp"

namespace cig::gateway {

using json = nlohmann::json;

struct HttpGateway::Impl {
    Environment& env;
    httplib::Server server;
    std::mutex clock_mutex;

    explicit Impl(Environment& e) : env(e) {}
};

namespace {

void reply(httplib::Response& res, int status, const nlohmann::ordered_json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void fail(httplib::Response& res, int status, const std::string& message)
{
    reply(res, status, nlohmann::ordered_json{{"error", message}});
}

json body_of(const httplib::Request& req)
{
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw InvalidArgument("body must be a JSON object");
    return j;
}

/// Maps the environment's error types onto status codes.
template <class F>
httplib::Server::Handler guarded(F f)
{
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const GateViolation& e) {
            fail(res, 409, e.what());
        } catch (const Conflict& e) {
            fail(res, 409, e.what());
        } catch (const InvalidState& e) {
            fail(res, 409, e.what());
        } catch (const NotFound& e) {
            fail(res, 404, e.what());
        } catch (const InvalidArgument& e) {
            fail(res, 400, e.what());
        } catch (const json::exception& e) {
            fail(res, 400, e.what());
        } catch (const std::exception& e) {
            spdlog::error("http: {} {} failed: {}", req.method, req.path, e.what());
            fail(res, 500, e.what());
        }
    };
}

}  // namespace

HttpGateway::HttpGateway(Environment& env, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(env))
{
    auto& srv = impl_->server;
    auto* impl = impl_.get();

    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    srv.Get("/health", guarded([impl](const httplib::Request&, httplib::Response& res) {
                reply(res, 200,
                      {{"status", "ok"},
                       {"now", impl->env.clock().now().seconds},
                       {"patients", impl->env.platform().patients()}});
            }));

    srv.Post("/patients", guarded([impl](const httplib::Request& req, httplib::Response& res) {
                 auto j = body_of(req);
                 auto id = j.at("id").get<std::string>();
                 if (id.empty()) throw InvalidArgument("patient id must not be empty");
                 bool existed = impl->env.platform().has_patient(id);
                 impl->env.add_patient(id, j.value("name", ""));
                 reply(res, existed ? 200 : 201, {{"id", id}});
             }));

    srv.Post("/events", guarded([impl](const httplib::Request& req, httplib::Response& res) {
                 auto j = body_of(req);
                 auto type = j.at("type").get<std::string>();
                 auto patient = j.at("patient").get<std::string>();
                 std::map<std::string, std::string> payload;
                 auto body_payload = j.value("payload", json::object());
                 for (const auto& [k, v] : body_payload.items())
                     payload[k] = v.is_string() ? v.get<std::string>() : v.dump();
                 if (j.contains("at")) {
                     auto at = VirtualTime{j.at("at").get<std::int64_t>()};
                     std::lock_guard lock(impl->clock_mutex);
                     if (at < impl->env.clock().now()) throw InvalidArgument("the virtual clock cannot go back");
                     impl->env.clock().advance_to(at);
                 }
                 auto ev = impl->env.post_event(type, patient, std::move(payload));
                 reply(res, 202, {{"event_id", ev.event_id}, {"seq", ev.seq}, {"at", ev.at.seconds}});
             }));

    srv.Get(R"(/patients/([^/]+)/recommendations)",
            guarded([impl](const httplib::Request& req, httplib::Response& res) {
                auto patient = req.matches[1].str();
                std::optional<platform::ResourceStatus> status;
                if (req.has_param("status") && !req.get_param_value("status").empty()) {
                    status = platform::parse_resource_status(req.get_param_value("status"));
                    if (!status) throw InvalidArgument("unknown status '" + req.get_param_value("status") + "'");
                }
                std::optional<std::string> audience;
                if (req.has_param("audience") && !req.get_param_value("audience").empty())
                    audience = req.get_param_value("audience");
                nlohmann::ordered_json out;
                out["patient"] = patient;
                out["recommendations"] = nlohmann::ordered_json::array();
                for (const auto& c : impl->env.list_recommendations(patient, status, audience))
                    out["recommendations"].push_back(recommendation_view(c));
                reply(res, 200, out);
            }));

    srv.Post(R"(/recommendations/(.+)/response)",
             guarded([impl](const httplib::Request& req, httplib::Response& res) {
                 auto resp = response_from_json(body_of(req));
                 resp.communication_id = req.matches[1].str();
                 reply(res, 200, recommendation_view(impl->env.respond(resp)));
             }));

    srv.Get(R"(/patients/([^/]+)/trace)", guarded([impl](const httplib::Request& req, httplib::Response& res) {
                auto patient = req.matches[1].str();
                if (!impl->env.platform().has_patient(patient)) throw NotFound("unknown patient '" + patient + "'");
                reply(res, 200, patient_report(impl->env.platform(), patient));
            }));

    if (static_dir && !srv.set_mount_point("/", static_dir->string()))
        spdlog::warn("http: static directory {} not mounted", static_dir->string());
}

HttpGateway::~HttpGateway() { stop(); }

int HttpGateway::bind(const std::string& host, int port)
{
    auto& srv = impl_->server;
    int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw InvalidArgument("cannot bind " + host + ":" + std::to_string(port));
    spdlog::info("http: listening on {}:{}", host, bound);
    return bound;
}

void HttpGateway::start()
{
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpGateway::serve() { impl_->server.listen_after_bind(); }

void HttpGateway::stop()
{
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace cig::gateway
