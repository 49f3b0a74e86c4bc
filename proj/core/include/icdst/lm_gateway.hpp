#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "icdst/error.hpp"

namespace icdst {

struct CompletionRequest {
    std::string prompt;
    std::size_t max_completion_units = 120;
    double temperature = 0.0;
    std::vector<std::string> stop_sequences;

    /// Throws ConfigError when an invariant is broken.
    void validate() const;
};

/// Greedy decoding with stops at the next instruction comment, blank line or
/// example header.
CompletionRequest default_request(std::string prompt);

enum class FinishReason { stop, length, error };
std::string_view to_string(FinishReason r) noexcept;

struct LmError {
    enum class Kind {
        exhausted_retries,
        scripted_miss,
        http_status,   // non-retryable status
        bad_response,  // body could not be read as a completion
        invalid_request,
        backend_failure,
    };
    Kind kind;
    std::string message;
};
std::string_view to_string(LmError::Kind k) noexcept;

struct CompletionResult {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    std::int64_t latency_ms = 0;
    std::optional<LmError> error;

    bool ok() const noexcept { return !error.has_value(); }
};

CompletionResult error_result(LmError::Kind kind, std::string message);

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    /// Must be safe to call from several threads at once.
    virtual CompletionResult complete(const CompletionRequest& req) const = 0;
    virtual std::string_view name() const noexcept = 0;
};

/// Validates the request and runs the backend; never throws.
CompletionResult complete(const CompletionBackend& backend, const CompletionRequest& req) noexcept;

/// Lowercase hex SHA-256 of the prompt bytes.
std::string prompt_sha256(std::string_view prompt);

/// Replays completions keyed by prompt hash.
class ScriptedBackend final : public CompletionBackend {
public:
    explicit ScriptedBackend(std::map<std::string, std::string, std::less<>> by_hash) : by_hash_(std::move(by_hash)) {}
    /// Line-delimited `{"prompt_sha256", "completion"}`. Later lines win.
    static ScriptedBackend from_file(const std::filesystem::path& path);

    CompletionResult complete(const CompletionRequest& req) const override;
    std::string_view name() const noexcept override { return "scripted"; }
    std::size_t size() const noexcept { return by_hash_.size(); }

private:
    std::map<std::string, std::string, std::less<>> by_hash_;
};

void write_script(const std::map<std::string, std::string, std::less<>>& by_hash, const std::filesystem::path& path);

class EchoBackend final : public CompletionBackend {
public:
    explicit EchoBackend(std::string constant) : constant_(std::move(constant)) {}
    CompletionResult complete(const CompletionRequest&) const override;
    std::string_view name() const noexcept override { return "echo"; }

private:
    std::string constant_;
};

struct RetryPolicy {
    std::size_t max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;

    /// Delay before attempt `attempt + 1`, for attempt >= 1.
    std::chrono::milliseconds delay_after(std::size_t attempt) const;
};

struct HttpConfig {
    std::string url;  // full completions URL, e.g. http://host:8000/v1/completions
    std::string token;
    std::string model;
    std::chrono::seconds timeout{60};
    RetryPolicy retry;

    /// Reads ICDST_LM_URL, ICDST_LM_TOKEN and ICDST_LM_MODEL; fields already
    /// set are kept.
    HttpConfig with_env() const;
};

/// One POST attempt. `status` 0 means the connection failed or timed out.
struct HttpReply {
    int status = 0;
    std::string body;
};

class HttpBackend final : public CompletionBackend {
public:
    using Transport = std::function<HttpReply(const std::string& body)>;
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    /// Default transport posts to `cfg.url`; default sleeper blocks the thread.
    explicit HttpBackend(HttpConfig cfg, Transport transport = {}, Sleeper sleeper = {});

    CompletionResult complete(const CompletionRequest& req) const override;
    std::string_view name() const noexcept override { return "http"; }

    std::string request_body(const CompletionRequest& req) const;
    static bool retryable(int status) noexcept;

private:
    HttpConfig cfg_;
    Transport transport_;
    Sleeper sleeper_;
};

/// Shared front for a backend with a bound on concurrent calls.
class LmGateway {
public:
    explicit LmGateway(std::shared_ptr<const CompletionBackend> backend, std::size_t max_in_flight = 4);

    CompletionResult complete(const CompletionRequest& req) const;
    /// Result i answers request i whatever order the calls finish in.
    std::vector<CompletionResult> complete_batch(const std::vector<CompletionRequest>& reqs) const;

    const CompletionBackend& backend() const noexcept { return *backend_; }
    std::size_t max_in_flight() const noexcept { return max_in_flight_; }

private:
    std::shared_ptr<const CompletionBackend> backend_;
    std::size_t max_in_flight_;
    mutable std::unique_ptr<std::counting_semaphore<>> slots_;
};

}  // namespace icdst
