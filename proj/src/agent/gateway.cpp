#include <cstdlib>
#include <thread>

#include "sysarch/agent.hpp"

namespace sysarch {

namespace {

constexpr std::pair<AgentRole, std::string_view> kRoleNames[] = {
    {AgentRole::Analyst, "analyst"},
    {AgentRole::Architect, "architect"},
    {AgentRole::Designer, "designer"},
    {AgentRole::GraphExtract, "graph_extract"},
    {AgentRole::IconExamine, "icon_examine"},
    {AgentRole::LayoutExamine, "layout_examine"},
    {AgentRole::SystemUnderstand, "system_understand"},
    {AgentRole::TextLegibility, "text_legibility"},
    {AgentRole::DatasetFilter, "dataset_filter"},
};

nlohmann::json parse_at(std::string_view raw, std::size_t begin, std::size_t end)
{
    try {
        return nlohmann::json::parse(raw.substr(begin, end - begin));
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t offset = begin + (e.byte > 0 ? e.byte - 1 : 0);
        throw Error(ErrorCode::JsonParseError,
                    "invalid JSON near byte " + std::to_string(offset) + ": " + std::string(e.what()),
                    "@" + std::to_string(offset));
    }
}

bool is_blank(std::string_view s)
{
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

std::string_view to_string(AgentRole role)
{
    for (const auto& [r, name] : kRoleNames) {
        if (r == role) {
            return name;
        }
    }
    return "unknown";
}

std::optional<AgentRole> parse_agent_role(std::string_view text)
{
    for (const auto& [r, name] : kRoleNames) {
        if (name == text) {
            return r;
        }
    }
    return std::nullopt;
}

bool is_evaluation_role(AgentRole role) noexcept
{
    switch (role) {
    case AgentRole::Analyst:
    case AgentRole::Architect:
    case AgentRole::Designer:
        return false;
    default:
        return true;
    }
}

AgentHandle AgentHandle::for_role(AgentRole role)
{
    AgentHandle h;
    h.role = role;
    h.temperature = is_evaluation_role(role) ? 0.0 : 0.7;
    return h;
}

std::string redact(std::string text, std::string_view secret)
{
    if (secret.empty()) {
        return text;
    }
    for (auto pos = text.find(secret); pos != std::string::npos; pos = text.find(secret, pos + 3)) {
        text.replace(pos, secret.size(), "***");
    }
    return text;
}

nlohmann::json extract_json_payload(std::string_view raw)
{
    if (auto fence = raw.find("```json"); fence != std::string_view::npos) {
        const std::size_t begin = fence + 7;
        std::size_t end = raw.find("```", begin);
        if (end == std::string_view::npos) {
            end = raw.size();
        }
        if (!is_blank(raw.substr(begin, end - begin))) {
            return parse_at(raw, begin, end);
        }
    }
    if (!is_blank(raw)) {
        try {
            return nlohmann::json::parse(raw);
        } catch (const nlohmann::json::parse_error&) {
            // fall through to the brace span
        }
    }
    const auto open_obj = raw.find('{');
    const auto open_arr = raw.find('[');
    const std::size_t open = std::min(open_obj, open_arr);
    if (open == std::string_view::npos) {
        throw Error(ErrorCode::NoJsonFound, "response contains no JSON payload");
    }
    const char close_char = raw[open] == '{' ? '}' : ']';
    const auto close = raw.rfind(close_char);
    if (close == std::string_view::npos || close < open) {
        throw Error(ErrorCode::JsonParseError, "unterminated JSON starting at byte " + std::to_string(open),
                    "@" + std::to_string(open));
    }
    return parse_at(raw, open, close + 1);
}

AgentGateway::AgentGateway(std::shared_ptr<Transport> live, std::shared_ptr<Transport> mock)
    : live_(std::move(live)), mock_(std::move(mock))
{
}

void AgentGateway::set_log_sink(LogSink sink)
{
    std::lock_guard lock(log_mutex_);
    sink_ = std::move(sink);
}

void AgentGateway::set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper)
{
    sleeper_ = std::move(sleeper);
}

void AgentGateway::log(const std::string& event, const std::string& detail)
{
    std::lock_guard lock(log_mutex_);
    if (sink_) {
        sink_({event, detail});
    }
}

AgentHandle AgentGateway::handle(AgentRole role) const
{
    if (auto it = handles_.find(role); it != handles_.end()) {
        return it->second;
    }
    return AgentHandle::for_role(role);
}

void AgentGateway::set_handle(const AgentHandle& handle)
{
    handles_[handle.role] = handle;
}

ChatResult AgentGateway::chat_complete(const AgentHandle& handle, const std::vector<ChatMessage>& messages)
{
    ChatRequest request{handle.model, messages, handle.temperature};
    std::string secret;
    Transport* transport = nullptr;
    if (handle.transport == TransportKind::Mock) {
        if (!mock_) {
            throw Error(ErrorCode::AgentUnavailable, "mock transport requested but no mock responses are loaded");
        }
        transport = mock_.get();
    } else {
        const char* key = handle.credential_env.empty() ? nullptr : std::getenv(handle.credential_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw Error(ErrorCode::AuthMissing,
                        "credential environment variable `" + handle.credential_env + "` is not set");
        }
        secret = key;
        static HttpTransport default_http;
        transport = live_ ? live_.get() : &default_http;
    }

    const std::string role(to_string(handle.role));
    const int attempts_allowed = 1 + std::max(0, handle.max_retries);
    std::string last_failure;
    for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
        log("request", redact(role + " attempt " + std::to_string(attempt) + " " + to_wire(request).dump(), secret));
        try {
            std::string reply = transport->send(handle, request);
            log("response", redact(role + " attempts=" + std::to_string(attempt) + " " + reply, secret));
            return {std::move(reply), attempt};
        } catch (const TransportFailure& e) {
            last_failure = redact(e.what(), secret);
            log("transport_failure", role + " attempt " + std::to_string(attempt) + ": " + last_failure);
        }
        if (attempt < attempts_allowed) {
            const auto wait = std::chrono::milliseconds(static_cast<long>(handle.backoff_ms) << (attempt - 1));
            if (sleeper_) {
                sleeper_(wait);
            } else {
                std::this_thread::sleep_for(wait);
            }
        }
    }
    throw Error(ErrorCode::AgentUnavailable,
                role + " unavailable after " + std::to_string(attempts_allowed) + " attempts: " + last_failure);
}

nlohmann::json AgentGateway::run_agent(const AgentTask& task, const AgentHandle& handle)
{
    const PromptBundle bundle = load_prompt(task.prompt);
    std::vector<ChatMessage> messages;
    messages.push_back({"system", bundle.system_text, {}});
    messages.push_back({"user", render_template(bundle.user_template, task.slots), task.images});

    auto attempt = [&](const std::string& reply) {
        nlohmann::json payload = extract_json_payload(reply);
        if (task.validator) {
            task.validator(payload);
        }
        return payload;
    };

    ChatResult first = chat_complete(handle, messages);
    try {
        return attempt(first.text);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SchemaViolation && e.code() != ErrorCode::NoJsonFound &&
            e.code() != ErrorCode::JsonParseError) {
            throw;
        }
        log("repair", std::string(to_string(handle.role)) + ": " + e.what());
        messages.push_back({"assistant", first.text, {}});
        messages.push_back({"user",
                            "Your previous answer could not be accepted: " + std::string(e.what()) +
                                "\nReturn the corrected answer as JSON wrapped in ```json ```, containing no other text.",
                            {}});
    }
    ChatResult second = chat_complete(handle, messages);
    try {
        return attempt(second.text);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NoJsonFound || e.code() == ErrorCode::JsonParseError) {
            throw Error(ErrorCode::SchemaViolation,
                        std::string(to_string(handle.role)) + " output unusable after repair: " + e.what());
        }
        throw;
    }
}

}  // namespace sysarch
