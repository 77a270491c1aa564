#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "cig/gateway/environment.hpp"

namespace cig::gateway {

/// HTTP front door over an Environment. Handlers only publish events or
/// read platform state; there is no barrier in this mode.
///
///   GET  /health
///   POST /patients                          {"id", "name"}
///   POST /events                            {"type", "patient", "payload", "at"?}
///   GET  /patients/{id}/recommendations     ?status=&audience=
///   POST /recommendations/{id}/response     {"responder", "verdict", "chosen"}
///   GET  /patients/{id}/trace
///
/// 400 malformed, 404 unknown, 409 gate violation or already answered.
class HttpGateway {
public:
    explicit HttpGateway(Environment& env, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~HttpGateway();
    HttpGateway(const HttpGateway&) = delete;
    HttpGateway& operator=(const HttpGateway&) = delete;

    /// Port 0 picks a free port. Returns the bound port, throws on failure.
    int bind(const std::string& host, int port);
    /// Serves on a background thread until stop().
    void start();
    /// Serves on the calling thread until stop() from elsewhere.
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
};

}  // namespace cig::gateway
