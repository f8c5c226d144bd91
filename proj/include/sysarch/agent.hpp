#pragma once

// Agent gateway: prompt rendering, chat transport (live HTTP or canned mock),
// retries, JSON payload extraction and per-role output validation.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sysarch/error.hpp"

namespace sysarch {

enum class AgentRole {
    Analyst,
    Architect,
    Designer,
    GraphExtract,
    IconExamine,
    LayoutExamine,
    SystemUnderstand,
    TextLegibility,
    DatasetFilter,
};

std::string_view to_string(AgentRole role);
std::optional<AgentRole> parse_agent_role(std::string_view text);
[[nodiscard]] bool is_evaluation_role(AgentRole role) noexcept;

enum class TransportKind { Live, Mock };

struct AgentHandle {
    AgentRole role = AgentRole::Analyst;
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o";
    double temperature = 0.0;
    int max_retries = 3;
    TransportKind transport = TransportKind::Mock;
    std::string credential_env = "OPENAI_API_KEY";
    int backoff_ms = 500;
    int timeout_s = 120;

    /// Defaults per role: evaluation agents run at temperature 0, generation agents at 0.7.
    static AgentHandle for_role(AgentRole role);
};

struct ImagePart {
    std::string mime;
    std::string base64;
};

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string text;
    std::vector<ImagePart> images;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
};

/// Wire body `{model, messages:[{role, content}], temperature}`.
nlohmann::ordered_json to_wire(const ChatRequest& request);

/// Key under which the mock transport files a request: SHA-256 over the
/// serialized message list (model and temperature are not part of it).
std::string request_digest(const ChatRequest& request);

/// Retryable transport failure (connection refused, 5xx, timeout).
class TransportFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Transport {
public:
    virtual ~Transport() = default;
    /// Returns the assistant text. Throws TransportFailure for retryable
    /// problems and Error for permanent ones.
    virtual std::string send(const AgentHandle& handle, const ChatRequest& request) = 0;
};

/// Canned responses keyed by request digest. Never touches the network.
class MockTransport final : public Transport {
public:
    MockTransport() = default;
    explicit MockTransport(std::map<std::string, std::string> replies);
    /// Loads `{"<digest>": "<reply text>", ...}` (an optional top-level
    /// `responses` object is also accepted).
    static std::shared_ptr<MockTransport> from_file(const std::string& path);

    void add(const std::string& digest, std::string reply);
    std::string send(const AgentHandle& handle, const ChatRequest& request) override;
    [[nodiscard]] std::vector<std::string> misses() const;
    [[nodiscard]] std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::string> replies_;
    std::vector<std::string> misses_;
};

/// HTTP POST to an OpenAI-compatible chat-completions endpoint.
class HttpTransport final : public Transport {
public:
    std::string send(const AgentHandle& handle, const ChatRequest& request) override;
    /// Number of HTTP requests issued by all live transports in this process.
    static std::size_t requests_issued();
};

struct ChatResult {
    std::string text;
    int attempts = 0;
};

struct LogRecord {
    std::string event;
    std::string detail;
};

using LogSink = std::function<void(const LogRecord&)>;

/// Replaces every occurrence of `secret` in `text` with `***`.
std::string redact(std::string text, std::string_view secret);

/// Extracts the first ```json fenced block, else parses the whole text (or
/// the outermost brace span). Throws NoJsonFound / JsonParseError.
nlohmann::json extract_json_payload(std::string_view raw);

struct PromptBundle {
    std::string system_text;
    std::string user_template;
};

/// Loads `<name>.system` and `<name>.user` from the embedded prompt assets.
PromptBundle load_prompt(const std::string& name);
std::vector<std::string> prompt_slots(std::string_view user_template);
/// Fills `{slot}` placeholders; throws PromptSlotMissing when one is unfilled.
std::string render_template(std::string_view user_template, const std::map<std::string, std::string>& slots);

/// Throws Error(SchemaViolation, reason) when the payload does not fit.
using PayloadValidator = std::function<void(const nlohmann::json&)>;

struct AgentTask {
    std::string prompt;  // asset name, e.g. "layout_examine"
    std::map<std::string, std::string> slots;
    std::vector<ImagePart> images;
    PayloadValidator validator;
};

class AgentGateway {
public:
    AgentGateway() = default;
    AgentGateway(std::shared_ptr<Transport> live, std::shared_ptr<Transport> mock);

    void set_log_sink(LogSink sink);
    /// Overrides how retries wait (tests use a no-op).
    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper);

    ChatResult chat_complete(const AgentHandle& handle, const std::vector<ChatMessage>& messages);

    /// Renders, calls, extracts and validates. One repair re-prompt on a schema
    /// violation, then Error(SchemaViolation).
    nlohmann::json run_agent(const AgentTask& task, const AgentHandle& handle);

    /// The handle for a role after config overrides; falls back to role defaults.
    [[nodiscard]] AgentHandle handle(AgentRole role) const;
    void set_handle(const AgentHandle& handle);

private:
    void log(const std::string& event, const std::string& detail);

    std::shared_ptr<Transport> live_;
    std::shared_ptr<Transport> mock_;
    LogSink sink_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
    std::map<AgentRole, AgentHandle> handles_;
    mutable std::mutex log_mutex_;
};

/// Encodes bytes as base64 (standard alphabet, padded).
std::string base64_encode(std::string_view bytes);
/// Reads an image file into a content part; MIME type from the extension.
ImagePart load_image(const std::string& path);

}  // namespace sysarch
