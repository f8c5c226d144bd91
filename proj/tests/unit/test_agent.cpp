#include <doctest.h>

#include <cstdlib>

#include "sysarch/evaluation.hpp"
#include "sysarch/util.hpp"
#include "test_support.hpp"

using namespace sysarch;
using namespace testing_support;

namespace {

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::IoError;
}

// The example output embedded in the layout-inspection prompt, verbatim.
std::string layout_prompt_example()
{
    const std::string system = load_prompt("layout_examine").system_text;
    const auto start = system.find("```json{");
    const auto end = system.find("}```", start);
    REQUIRE(start != std::string::npos);
    REQUIRE(end != std::string::npos);
    return system.substr(start, end + 4 - start);
}

ImagePart tiny_image()
{
    return ImagePart{"image/png", base64_encode("not really a png")};
}

class ScopedEnv {
public:
    ScopedEnv(const char* name, const char* value) : name_(name)
    {
        if (const char* old = std::getenv(name)) {
            old_ = old;
        }
        if (value != nullptr) {
            ::setenv(name, value, 1);
        } else {
            ::unsetenv(name);
        }
    }
    ~ScopedEnv()
    {
        if (old_) {
            ::setenv(name_.c_str(), old_->c_str(), 1);
        } else {
            ::unsetenv(name_.c_str());
        }
    }

private:
    std::string name_;
    std::optional<std::string> old_;
};

}  // namespace

TEST_SUITE("agent-gateway")
{
    TEST_CASE("JSON payload extraction")
    {
        CHECK(extract_json_payload("```json\n{\"a\":1}\n```") == nlohmann::json{{"a", 1}});
        CHECK(extract_json_payload("{\"a\":1}") == nlohmann::json{{"a", 1}});
        CHECK(extract_json_payload("Here you go:\n{\"a\": {\"b\": 2}}\nThanks.") == nlohmann::json{{"a", {{"b", 2}}}});
        CHECK(extract_json_payload("```json{\"a\":1}```") == nlohmann::json{{"a", 1}});
        CHECK(code_of([] { (void)extract_json_payload("no structured content at all"); }) == ErrorCode::NoJsonFound);
        CHECK(code_of([] { (void)extract_json_payload("```json\n{\"a\":\n```"); }) == ErrorCode::JsonParseError);
    }

    TEST_CASE("mock transport answers by message digest and never touches the network")
    {
        const std::size_t before = network_requests();
        const AgentHandle h = mock_handle(AgentRole::SystemUnderstand);
        const std::vector<ChatMessage> messages{{"system", "s", {}}, {"user", "u", {}}};
        auto mock = std::make_shared<MockTransport>();
        mock->add(request_digest({h.model, messages, h.temperature}), "canned");
        AgentGateway gw(nullptr, mock);
        const ChatResult r = gw.chat_complete(h, messages);
        CHECK(r.text == "canned");
        CHECK(r.attempts == 1);
        // Model and temperature do not take part in the digest.
        CHECK(request_digest({"other", messages, 0.9}) == request_digest({h.model, messages, 0.0}));
        CHECK(code_of([&] { (void)gw.chat_complete(h, {{"user", "different", {}}}); }) == ErrorCode::AgentUnavailable);
        CHECK(mock->misses().size() == 1);
        CHECK(network_requests() == before);
    }

    TEST_CASE("two transport failures then success takes three attempts")
    {
        ScopedEnv key("SYSARCH_TEST_CREDENTIAL", "sk-test-secret");
        auto live = std::make_shared<SequenceTransport>(std::vector<std::string>{"!fail", "!fail", "ok"});
        AgentGateway gw(live, nullptr);
        std::vector<long> waits;
        gw.set_sleeper([&](std::chrono::milliseconds ms) { waits.push_back(static_cast<long>(ms.count())); });
        std::vector<LogRecord> log;
        gw.set_log_sink([&](const LogRecord& r) { log.push_back(r); });

        AgentHandle h = AgentHandle::for_role(AgentRole::Analyst);
        h.transport = TransportKind::Live;
        h.credential_env = "SYSARCH_TEST_CREDENTIAL";
        h.max_retries = 3;
        const ChatResult r = gw.chat_complete(h, {{"user", "hello sk-test-secret", {}}});
        CHECK(r.text == "ok");
        CHECK(r.attempts == 3);
        CHECK(live->calls == 3);
        CHECK(waits == std::vector<long>{500, 1000});
        bool logged_attempts = false;
        for (const auto& rec : log) {
            CHECK(rec.detail.find("sk-test-secret") == std::string::npos);
            if (rec.event == "response" && rec.detail.find("attempts=3") != std::string::npos) {
                logged_attempts = true;
            }
        }
        CHECK(logged_attempts);
    }

    TEST_CASE("retries are bounded")
    {
        ScopedEnv key("SYSARCH_TEST_CREDENTIAL", "k");
        auto live = std::make_shared<SequenceTransport>(std::vector<std::string>{"!fail"});
        AgentGateway gw(live, nullptr);
        gw.set_sleeper([](std::chrono::milliseconds) {});
        AgentHandle h = AgentHandle::for_role(AgentRole::Analyst);
        h.transport = TransportKind::Live;
        h.credential_env = "SYSARCH_TEST_CREDENTIAL";
        h.max_retries = 1;
        CHECK(code_of([&] { (void)gw.chat_complete(h, {{"user", "x", {}}}); }) == ErrorCode::AgentUnavailable);
        CHECK(live->calls == 2);
    }

    TEST_CASE("missing credential fails before any request")
    {
        ScopedEnv key("SYSARCH_TEST_CREDENTIAL", nullptr);
        auto live = std::make_shared<SequenceTransport>(std::vector<std::string>{"ok"});
        AgentGateway gw(live, nullptr);
        AgentHandle h = AgentHandle::for_role(AgentRole::Analyst);
        h.transport = TransportKind::Live;
        h.credential_env = "SYSARCH_TEST_CREDENTIAL";
        const std::size_t before = network_requests();
        CHECK(code_of([&] { (void)gw.chat_complete(h, {{"user", "x", {}}}); }) == ErrorCode::AuthMissing);
        CHECK(live->calls == 0);
        CHECK(network_requests() == before);
    }

    TEST_CASE("the layout prompt's own example yields counts (2,1,1) and score 0.6")
    {
        auto mock = std::make_shared<SequenceTransport>(std::vector<std::string>{layout_prompt_example()});
        AgentGateway gw(nullptr, mock);
        gw.set_handle(mock_handle(AgentRole::LayoutExamine));
        const DefectCounts c = examine_layout(gw, tiny_image());
        CHECK(c == DefectCounts{2, 1, 1});
        CHECK(layout_score(c) == doctest::Approx(0.6));
    }

    TEST_CASE("system understanding is extracted")
    {
        auto mock = std::make_shared<SequenceTransport>(
            std::vector<std::string>{"```json\n{\"system_understanding\": \"A retriever feeds a writer.\"}\n```"});
        AgentGateway gw(nullptr, mock);
        gw.set_handle(mock_handle(AgentRole::SystemUnderstand));
        FlatGraph g;
        g.nodes = {{"r", "Writer", {}}};
        CHECK(understand_system(gw, tiny_image(), "desc", g) == "A retriever feeds a writer.");
    }

    TEST_CASE("icon keys outside the graph fail after one repair attempt")
    {
        auto mock = std::make_shared<SequenceTransport>(std::vector<std::string>{R"({"zz": "icon of a cat"})"});
        AgentGateway gw(nullptr, mock);
        gw.set_handle(mock_handle(AgentRole::IconExamine));
        FlatGraph g;
        g.nodes = {{"m1", "Encoder", {}}};
        CHECK(code_of([&] { (void)examine_icons(gw, tiny_image(), "desc", g); }) == ErrorCode::SchemaViolation);
        CHECK(mock->calls == 2);
        REQUIRE(mock->requests.size() == 2);
        CHECK(mock->requests[1].messages.size() == 4);
        CHECK(mock->requests[1].messages[2].role == "assistant");
    }

    TEST_CASE("a repaired answer is accepted")
    {
        auto mock = std::make_shared<SequenceTransport>(
            std::vector<std::string>{"I think the answer is unclear", R"({"m1": "icon of an encoder"})"});
        AgentGateway gw(nullptr, mock);
        gw.set_handle(mock_handle(AgentRole::IconExamine));
        FlatGraph g;
        g.nodes = {{"m1", "Encoder", {}}};
        const auto icons = examine_icons(gw, tiny_image(), "desc", g);
        CHECK(icons.at("m1") == "icon of an encoder");
    }

    TEST_CASE("payload validators")
    {
        CHECK(parse_layout_issues(nlohmann::json::parse(R"({"layout_issues":[]})")) == DefectCounts{});
        CHECK(code_of([] { (void)parse_layout_issues(nlohmann::json::parse(R"({"layout_issues":[{"type":"x","count":1}]})")); }) ==
              ErrorCode::SchemaViolation);
        CHECK(code_of([] { (void)parse_filter_confidence(nlohmann::json::parse(R"({"confidence":1.5})")); }) ==
              ErrorCode::SchemaViolation);
        CHECK(parse_filter_confidence(nlohmann::json::parse(R"({"confidence":0.75})")) == 0.75);
        CHECK(code_of([] { (void)parse_system_understanding(nlohmann::json::parse(R"({"x":1})")); }) ==
              ErrorCode::SchemaViolation);
    }

    TEST_CASE("prompt templates")
    {
        for (const char* name : {"analyst", "architect_top", "designer_module", "reroute", "graph_extract",
                                 "icon_examine", "layout_examine", "system_understand", "text_legibility",
                                 "dataset_filter"}) {
            CAPTURE(name);
            const PromptBundle p = load_prompt(name);
            CHECK_FALSE(p.system_text.empty());
            CHECK_FALSE(p.user_template.empty());
        }
        CHECK(render_template("a {x} b {y}", {{"x", "1"}, {"y", "2"}}) == "a 1 b 2");
        CHECK(code_of([] { (void)render_template("a {x}", {}); }) == ErrorCode::PromptSlotMissing);
    }

    TEST_CASE("redaction")
    {
        CHECK(redact("Bearer sk-1 and sk-1 again", "sk-1") == "Bearer *** and *** again");
        CHECK(redact("nothing", "") == "nothing");
    }

    TEST_CASE("forbidden network access is refused and the embedding provider falls back")
    {
        ScopedEnv forbid("SYSARCH_FORBID_NETWORK", "1");
        ScopedEnv key("SYSARCH_TEST_CREDENTIAL", "k");
        CHECK(code_of([] { note_network_request(); }) == ErrorCode::ProviderUnavailable);
        FallbackProvider p(
            std::make_shared<EmbeddingProvider>("http://127.0.0.1:9/v1/embeddings", "m", "SYSARCH_TEST_CREDENTIAL"));
        CHECK(p.similarity("data cleaning tool", "cleaning data tool") == doctest::Approx(1.0));
        CHECK(p.degraded());
        CHECK(p.similarity("encoder", "decoder") == 0.0);
    }
}
