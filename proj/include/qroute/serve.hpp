#pragma once

// HTTP routing service: POST /route, GET /healthz over one immutable Router.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "qroute/error.hpp"
#include "qroute/router.hpp"

namespace qroute {

struct BindAddress {
    std::string host = "127.0.0.1";
    int port = 8080;
};

inline BindAddress parse_bind(const std::string& s) {
    const auto colon = s.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == s.size())
        throw UsageError("--bind expects host:port, got \"" + s + "\"");
    BindAddress b;
    b.host = s.substr(0, colon);
    try {
        std::size_t used = 0;
        b.port = std::stoi(s.substr(colon + 1), &used);
        if (used != s.size() - colon - 1 || b.port < 0 || b.port > 65535) throw std::out_of_range("port");
    } catch (const std::exception&) {
        throw UsageError("--bind has an invalid port in \"" + s + "\"");
    }
    return b;
}

struct ServeOptions {
    std::size_t batch_cap = 256;
    std::ostream* access_log = &std::cerr;
};

class RoutingService {
public:
    RoutingService(std::shared_ptr<const Router> router, ServeOptions opt)
        : router_(std::move(router)), opt_(opt), started_(std::chrono::steady_clock::now()) {
        server_.Post("/route", [this](const httplib::Request& req, httplib::Response& res) { handle_route(req, res); });
        server_.Get("/healthz", [this](const httplib::Request& req, httplib::Response& res) {
            const auto t0 = std::chrono::steady_clock::now();
            const double up = std::chrono::duration<double>(t0 - started_).count();
            nlohmann::ordered_json j{{"status", "ok"}, {"model_id", router_->model_id()}, {"uptime_seconds", up}};
            res.status = 200;
            res.set_content(j.dump(), "application/json");
            log(req, res.status, t0, "-");
        });
    }

    RoutingService(const RoutingService&) = delete;
    RoutingService& operator=(const RoutingService&) = delete;

    // Blocks until stop(). Returns false if the address cannot be bound.
    bool listen(const BindAddress& b) { return server_.listen(b.host, b.port); }

    // Binds an ephemeral port and returns it (negative on failure); call listen_after_bind() next.
    int bind_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
    bool listen_after_bind() { return server_.listen_after_bind(); }
    void stop() { server_.stop(); }
    void wait_until_ready() const { server_.wait_until_ready(); }

private:
    void fail(httplib::Response& res, int status, const std::string& message) {
        res.status = status;
        res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
    }

    void handle_route(const httplib::Request& req, httplib::Response& res) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string labels = "-";
        try {
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
            } catch (const nlohmann::json::parse_error&) {
                fail(res, 400, "request body is not valid JSON");
                log(req, res.status, t0, labels);
                return;
            }
            if (!body.is_object()) throw UsageError("request body must be a JSON object");
            std::vector<RouteResponse> out;
            bool batch = false;
            if (body.contains("queries")) {
                batch = true;
                const auto& q = body.at("queries");
                if (!q.is_array()) throw UsageError("\"queries\" must be an array of strings");
                if (q.empty()) throw UsageError("\"queries\" is empty");
                if (q.size() > opt_.batch_cap) {
                    fail(res, 413, "batch of " + std::to_string(q.size()) + " exceeds the cap of " +
                                       std::to_string(opt_.batch_cap));
                    log(req, res.status, t0, labels);
                    return;
                }
                std::vector<std::string> texts;
                for (const auto& e : q) {
                    if (!e.is_string()) throw UsageError("\"queries\" must be an array of strings");
                    texts.push_back(e.get<std::string>());
                }
                out = router_->route_texts(texts);
            } else if (body.contains("query")) {
                const auto& q = body.at("query");
                if (!q.is_string()) throw UsageError("\"query\" must be a string");
                out = router_->route_texts(std::vector<std::string>{q.get<std::string>()});
            } else if (body.contains("vector")) {
                const auto& v = body.at("vector");
                if (!v.is_array() || v.empty()) throw UsageError("\"vector\" must be a non-empty array of numbers");
                std::vector<double> vec;
                for (const auto& e : v) {
                    if (!e.is_number()) throw UsageError("\"vector\" must be a non-empty array of numbers");
                    vec.push_back(e.get<double>());
                }
                out = router_->route_vectors({vec});
            } else {
                throw UsageError("request needs \"query\", \"queries\" or \"vector\"");
            }
            nlohmann::ordered_json reply;
            if (batch) {
                reply = nlohmann::ordered_json::object();
                reply["responses"] = nlohmann::ordered_json::array();
                for (const auto& r : out) reply["responses"].push_back(r.to_json());
            } else {
                reply = out.front().to_json();
            }
            labels.clear();
            for (const auto& r : out) labels += (labels.empty() ? "" : ",") + std::string(to_string(r.label));
            res.status = 200;
            res.set_content(reply.dump(), "application/json");
        } catch (const UsageError& e) {
            fail(res, 400, e.what());
        } catch (const std::exception& e) {
            const auto id = next_error_id();
            {
                std::lock_guard<std::mutex> lk(log_mutex_);
                *opt_.access_log << "{\"error_id\":\"" << id << "\",\"detail\":" << nlohmann::json(e.what()).dump()
                                 << "}\n";
            }
            fail(res, 500, "internal error " + id);
        }
        log(req, res.status, t0, labels);
    }

    std::string next_error_id() {
        char buf[32];
        std::snprintf(buf, sizeof buf, "e%08llx", static_cast<unsigned long long>(++errors_));
        return buf;
    }

    void log(const httplib::Request& req, int status, std::chrono::steady_clock::time_point t0,
             const std::string& labels) {
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const std::time_t now = std::time(nullptr);
        char ts[32];
        std::tm tm_buf{};
        std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", gmtime_r(&now, &tm_buf));
        nlohmann::ordered_json j{{"ts", ts},           {"method", req.method}, {"path", req.path},
                                 {"status", status},   {"latency_ms", ms},     {"label", labels}};
        std::lock_guard<std::mutex> lk(log_mutex_);
        *opt_.access_log << j.dump() << '\n';
    }

    std::shared_ptr<const Router> router_;
    ServeOptions opt_;
    std::chrono::steady_clock::time_point started_;
    httplib::Server server_;
    std::mutex log_mutex_;
    std::atomic<std::uint64_t> errors_{0};
};

} // namespace qroute
