#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

namespace vqol {

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

struct ServiceOptions {
    std::size_t frame_cache_entries = 256;  // per run
    std::int64_t max_page = 10000;           // records per page
};

/// JSON API over experiments and runs. `handle` is transport independent;
/// `listen` serves it over HTTP.
class Service {
public:
    explicit Service(ServiceOptions options = {});
    ~Service();
    Service(const Service &) = delete;
    Service &operator=(const Service &) = delete;

    /// `target` is the request path with an optional query string.
    HttpResponse handle(std::string_view method, std::string_view target, std::string_view body);

    /// Block until run `id` finishes; false on timeout or unknown id.
    bool wait_run(const std::string &id, std::chrono::milliseconds timeout);

    /// Serve until stop() is called. Returns false if the port cannot be bound.
    bool listen(const std::string &host, int port);
    /// Bind to an ephemeral port and serve on a background thread; returns the port.
    int listen_background(const std::string &host);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace vqol
