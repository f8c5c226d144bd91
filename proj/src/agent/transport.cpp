#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>

#include <httplib.h>

#include "sysarch/agent.hpp"
#include "sysarch/util.hpp"

namespace sysarch {

nlohmann::ordered_json to_wire(const ChatRequest& request)
{
    nlohmann::ordered_json messages = nlohmann::ordered_json::array();
    for (const auto& m : request.messages) {
        nlohmann::ordered_json jm;
        jm["role"] = m.role;
        if (m.images.empty()) {
            jm["content"] = m.text;
        } else {
            nlohmann::ordered_json parts = nlohmann::ordered_json::array();
            parts.push_back({{"type", "text"}, {"text", m.text}});
            for (const auto& img : m.images) {
                nlohmann::ordered_json part;
                part["type"] = "image_url";
                part["image_url"] = {{"url", "data:" + img.mime + ";base64," + img.base64}};
                parts.push_back(std::move(part));
            }
            jm["content"] = std::move(parts);
        }
        messages.push_back(std::move(jm));
    }
    nlohmann::ordered_json body;
    body["model"] = request.model;
    body["messages"] = std::move(messages);
    body["temperature"] = request.temperature;
    return body;
}

std::string request_digest(const ChatRequest& request)
{
    nlohmann::ordered_json keyed;
    keyed["messages"] = to_wire(request)["messages"];
    return sha256_hex(keyed.dump());
}

MockTransport::MockTransport(std::map<std::string, std::string> replies) : replies_(std::move(replies)) {}

std::shared_ptr<MockTransport> MockTransport::from_file(const std::string& path)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::JsonParseError, "mock file is not valid JSON: " + std::string(e.what()), path);
    }
    if (doc.is_object() && doc.contains("responses")) {
        doc = doc["responses"];
    }
    if (!doc.is_object()) {
        throw Error(ErrorCode::TypeMismatch, "mock file must map request digests to reply strings", path);
    }
    auto mock = std::make_shared<MockTransport>();
    for (const auto& [digest, reply] : doc.items()) {
        if (!reply.is_string()) {
            throw Error(ErrorCode::TypeMismatch, "mock reply for `" + digest + "` is not a string", path);
        }
        mock->add(digest, reply.get<std::string>());
    }
    return mock;
}

void MockTransport::add(const std::string& digest, std::string reply)
{
    std::lock_guard lock(mutex_);
    replies_[digest] = std::move(reply);
}

std::string MockTransport::send(const AgentHandle& handle, const ChatRequest& request)
{
    const std::string digest = request_digest(request);
    std::lock_guard lock(mutex_);
    auto it = replies_.find(digest);
    if (it == replies_.end()) {
        misses_.push_back(digest);
        throw Error(ErrorCode::AgentUnavailable,
                    "no canned reply for " + std::string(to_string(handle.role)) + " request " + digest);
    }
    return it->second;
}

std::vector<std::string> MockTransport::misses() const
{
    std::lock_guard lock(mutex_);
    return misses_;
}

std::size_t MockTransport::size() const
{
    std::lock_guard lock(mutex_);
    return replies_.size();
}

std::string HttpTransport::send(const AgentHandle& handle, const ChatRequest& request)
{
    const auto scheme_end = handle.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::InvalidConfig, "agent endpoint must be an absolute URL: " + handle.endpoint);
    }
    const auto path_start = handle.endpoint.find('/', scheme_end + 3);
    const std::string base = handle.endpoint.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : handle.endpoint.substr(path_start);

    httplib::Headers headers;
    if (!handle.credential_env.empty()) {
        if (const char* key = std::getenv(handle.credential_env.c_str()); key != nullptr) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    note_network_request();
    httplib::Client client(base);
    client.set_connection_timeout(std::min(handle.timeout_s, 30));
    client.set_read_timeout(handle.timeout_s);
    auto res = client.Post(path, headers, to_wire(request).dump(), "application/json");
    if (!res) {
        throw TransportFailure("request failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
        throw TransportFailure("HTTP " + std::to_string(res->status));
    }
    if (res->status == 401 || res->status == 403) {
        throw Error(ErrorCode::AuthMissing, "endpoint rejected the credential (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
        throw Error(ErrorCode::AgentUnavailable, "HTTP " + std::to_string(res->status));
    }
    try {
        const auto reply = nlohmann::json::parse(res->body);
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        if (content.is_string()) {
            return content.get<std::string>();
        }
        // Some servers return content parts; concatenate their text.
        std::string text;
        for (const auto& part : content) {
            if (part.contains("text")) {
                text += part["text"].get<std::string>();
            }
        }
        return text;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::AgentUnavailable, std::string("malformed chat reply: ") + e.what());
    }
}

std::size_t HttpTransport::requests_issued()
{
    return network_requests();
}

std::string base64_encode(std::string_view bytes)
{
    static constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const auto a = static_cast<unsigned char>(bytes[i]);
        const auto b = static_cast<unsigned char>(bytes[i + 1]);
        const auto c = static_cast<unsigned char>(bytes[i + 2]);
        out.push_back(alphabet[a >> 2]);
        out.push_back(alphabet[((a & 0x3) << 4) | (b >> 4)]);
        out.push_back(alphabet[((b & 0xF) << 2) | (c >> 6)]);
        out.push_back(alphabet[c & 0x3F]);
    }
    if (i + 1 == bytes.size()) {
        const auto a = static_cast<unsigned char>(bytes[i]);
        out.push_back(alphabet[a >> 2]);
        out.push_back(alphabet[(a & 0x3) << 4]);
        out += "==";
    } else if (i + 2 == bytes.size()) {
        const auto a = static_cast<unsigned char>(bytes[i]);
        const auto b = static_cast<unsigned char>(bytes[i + 1]);
        out.push_back(alphabet[a >> 2]);
        out.push_back(alphabet[((a & 0x3) << 4) | (b >> 4)]);
        out.push_back(alphabet[(b & 0xF) << 2]);
        out.push_back('=');
    }
    return out;
}

ImagePart load_image(const std::string& path)
{
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    std::string mime = "application/octet-stream";
    if (ext == ".png") {
        mime = "image/png";
    } else if (ext == ".jpg" || ext == ".jpeg") {
        mime = "image/jpeg";
    } else if (ext == ".gif") {
        mime = "image/gif";
    } else if (ext == ".webp") {
        mime = "image/webp";
    } else if (ext == ".svg") {
        mime = "image/svg+xml";
    }
    return {mime, base64_encode(read_file(path))};
}

}  // namespace sysarch
