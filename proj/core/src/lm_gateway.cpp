#include "icdst/lm_gateway.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "json_util.hpp"

namespace icdst {

using json_util::json;

void CompletionRequest::validate() const {
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (max_completion_units == 0) throw ConfigError("max_completion_units must be > 0");
    if (stop_sequences.size() > 4) throw ConfigError("at most 4 stop sequences are allowed");
    for (const auto& s : stop_sequences) {
        if (s.empty()) throw ConfigError("stop sequences must be non-empty");
    }
}

CompletionRequest default_request(std::string prompt) {
    CompletionRequest r;
    r.prompt = std::move(prompt);
    r.max_completion_units = 120;
    r.temperature = 0.0;
    r.stop_sequences = {"--", "\n\n", "Example"};
    return r;
}

std::string_view to_string(FinishReason r) noexcept {
    switch (r) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "error";
}

std::string_view to_string(LmError::Kind k) noexcept {
    switch (k) {
        case LmError::Kind::exhausted_retries: return "ExhaustedRetries";
        case LmError::Kind::scripted_miss: return "ScriptedMiss";
        case LmError::Kind::http_status: return "HttpStatus";
        case LmError::Kind::bad_response: return "BadResponse";
        case LmError::Kind::invalid_request: return "InvalidRequest";
        case LmError::Kind::backend_failure: return "BackendFailure";
    }
    return "BackendFailure";
}

CompletionResult error_result(LmError::Kind kind, std::string message) {
    CompletionResult r;
    r.finish_reason = FinishReason::error;
    r.error = LmError{kind, std::move(message)};
    return r;
}

CompletionResult complete(const CompletionBackend& backend, const CompletionRequest& req) noexcept {
    const auto t0 = std::chrono::steady_clock::now();
    CompletionResult r;
    try {
        req.validate();
        r = backend.complete(req);
    } catch (const ConfigError& e) {
        r = error_result(LmError::Kind::invalid_request, e.what());
    } catch (const std::exception& e) {
        r = error_result(LmError::Kind::backend_failure, e.what());
    } catch (...) {
        r = error_result(LmError::Kind::backend_failure, "unknown exception");
    }
    r.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::string prompt_sha256(std::string_view prompt) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(prompt.data(), prompt.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open script file: " + path.string());
    std::map<std::string, std::string, std::less<>> by_hash;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = json::parse(line);
            by_hash[j.at("prompt_sha256").get<std::string>()] = j.at("completion").get<std::string>();
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return ScriptedBackend(std::move(by_hash));
}

CompletionResult ScriptedBackend::complete(const CompletionRequest& req) const {
    const auto hash = prompt_sha256(req.prompt);
    auto it = by_hash_.find(hash);
    if (it == by_hash_.end()) return error_result(LmError::Kind::scripted_miss, "no scripted completion for prompt " + hash);
    CompletionResult r;
    r.text = it->second;
    return r;
}

void write_script(const std::map<std::string, std::string, std::less<>>& by_hash, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write script file: " + path.string());
    for (const auto& [hash, completion] : by_hash) {
        json_util::ordered_json j;
        j["prompt_sha256"] = hash;
        j["completion"] = completion;
        out << j.dump() << '\n';
    }
}

CompletionResult EchoBackend::complete(const CompletionRequest&) const {
    CompletionResult r;
    r.text = constant_;
    return r;
}

std::chrono::milliseconds RetryPolicy::delay_after(std::size_t attempt) const {
    const double ms = static_cast<double>(base_delay.count()) * std::pow(factor, static_cast<double>(attempt - 1));
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(ms)));
}

LmGateway::LmGateway(std::shared_ptr<const CompletionBackend> backend, std::size_t max_in_flight)
    : backend_(std::move(backend)), max_in_flight_(max_in_flight) {
    if (!backend_) throw ConfigError("LmGateway needs a backend");
    if (max_in_flight_ == 0) throw ConfigError("max_in_flight must be > 0");
    slots_ = std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(max_in_flight_));
}

CompletionResult LmGateway::complete(const CompletionRequest& req) const {
    slots_->acquire();
    auto r = icdst::complete(*backend_, req);
    slots_->release();
    return r;
}

std::vector<CompletionResult> LmGateway::complete_batch(const std::vector<CompletionRequest>& reqs) const {
    std::vector<CompletionResult> out(reqs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < reqs.size(); i = next++) out[i] = complete(reqs[i]);
    };
    const std::size_t n_threads = std::min(max_in_flight_, reqs.size());
    std::vector<std::jthread> threads;
    for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    return out;
}

}  // namespace icdst
