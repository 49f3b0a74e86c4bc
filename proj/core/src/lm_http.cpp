#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "icdst/lm_gateway.hpp"
#include "json_util.hpp"

namespace icdst {

using json_util::json;

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("completions URL needs a scheme: " + url);
    const auto path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) return {url, "/"};
    return {url.substr(0, path_begin), url.substr(path_begin)};
}

HttpBackend::Transport default_transport(const HttpConfig& cfg) {
    if (cfg.url.empty()) throw ConfigError("no completions URL configured (set ICDST_LM_URL)");
    auto parts = split_url(cfg.url);
    return [parts, token = cfg.token, timeout = cfg.timeout](const std::string& body) {
        // A client per call keeps concurrent requests isolated.
        httplib::Client client(parts.origin);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
        auto res = client.Post(parts.path, headers, body, "application/json");
        if (!res) return HttpReply{0, httplib::to_string(res.error())};
        return HttpReply{res->status, res->body};
    };
}

void sleep_for(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

}  // namespace

HttpConfig HttpConfig::with_env() const {
    HttpConfig out = *this;
    auto pick = [](std::string& field, const char* var) {
        if (!field.empty()) return;
        if (const char* v = std::getenv(var)) field = v;
    };
    pick(out.url, "ICDST_LM_URL");
    pick(out.token, "ICDST_LM_TOKEN");
    pick(out.model, "ICDST_LM_MODEL");
    return out;
}

HttpBackend::HttpBackend(HttpConfig cfg, Transport transport, Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
    if (cfg_.retry.max_attempts == 0) throw ConfigError("retry.max_attempts must be > 0");
    if (!transport_) transport_ = default_transport(cfg_);
    if (!sleeper_) sleeper_ = sleep_for;
}

bool HttpBackend::retryable(int status) noexcept {
    return status == 0 || status == 408 || status == 429 || (status >= 500 && status <= 599);
}

std::string HttpBackend::request_body(const CompletionRequest& req) const {
    json_util::ordered_json j;
    j["prompt"] = req.prompt;
    j["max_tokens"] = req.max_completion_units;
    j["temperature"] = req.temperature;
    j["stop"] = req.stop_sequences;
    if (!cfg_.model.empty()) j["model"] = cfg_.model;
    return j.dump();
}

CompletionResult HttpBackend::complete(const CompletionRequest& req) const {
    const auto body = request_body(req);
    HttpReply reply;
    for (std::size_t attempt = 1;; ++attempt) {
        reply = transport_(body);
        if (!retryable(reply.status)) break;
        if (attempt >= cfg_.retry.max_attempts) {
            return error_result(LmError::Kind::exhausted_retries,
                                "gave up after " + std::to_string(attempt) + " attempts; last status " +
                                    std::to_string(reply.status) + ": " + reply.body.substr(0, 200));
        }
        sleeper_(cfg_.retry.delay_after(attempt));
    }
    if (reply.status < 200 || reply.status > 299) {
        return error_result(LmError::Kind::http_status,
                            "status " + std::to_string(reply.status) + ": " + reply.body.substr(0, 200));
    }
    try {
        auto j = json::parse(reply.body);
        const auto& choice = j.at("choices").at(0);
        CompletionResult r;
        r.text = choice.at("text").get<std::string>();
        auto reason = choice.find("finish_reason");
        if (reason != choice.end() && reason->is_string() && reason->get<std::string>() == "length") {
            r.finish_reason = FinishReason::length;
        }
        return r;
    } catch (const json::exception& e) {
        return error_result(LmError::Kind::bad_response, e.what());
    }
}

}  // namespace icdst
