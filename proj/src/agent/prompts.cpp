#include <cstdlib>
#include <filesystem>
#include <regex>

#include "sysarch/agent.hpp"
#include "sysarch/util.hpp"

namespace sysarch {

namespace detail {
const std::map<std::string, std::string>& embedded_prompts();
}

namespace {

// Prompts whose system text is shared with another asset.
const std::map<std::string, std::string>& shared_system_text()
{
    static const std::map<std::string, std::string> table = {
        {"architect_top", "graph_design"},
        {"designer_module", "graph_design"},
        {"reroute", "graph_design"},
    };
    return table;
}

// An on-disk override (SYSARCH_PROMPT_DIR/<key>.txt) wins over the copy
// compiled into the binary, so prompts can be edited without rebuilding.
std::optional<std::string> find_asset(const std::string& key)
{
    if (const char* dir = std::getenv("SYSARCH_PROMPT_DIR"); dir != nullptr && *dir != '\0') {
        const auto path = std::filesystem::path(dir) / (key + ".txt");
        if (std::filesystem::exists(path)) {
            return read_file(path);
        }
    }
    const auto& embedded = detail::embedded_prompts();
    if (auto it = embedded.find(key); it != embedded.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::string trim_trailing_newlines(std::string s)
{
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) {
        s.pop_back();
    }
    return s;
}

const std::regex& slot_pattern()
{
    static const std::regex re(R"(\{([a-z_]+)\})");
    return re;
}

}  // namespace

PromptBundle load_prompt(const std::string& name)
{
    std::string system_key = name;
    if (!find_asset(name + ".system")) {
        if (auto it = shared_system_text().find(name); it != shared_system_text().end()) {
            system_key = it->second;
        }
    }
    auto system_text = find_asset(system_key + ".system");
    auto user_text = find_asset(name + ".user");
    if (!system_text || !user_text) {
        throw Error(ErrorCode::InvalidConfig, "unknown prompt template `" + name + "`");
    }
    return {trim_trailing_newlines(*system_text), trim_trailing_newlines(*user_text)};
}

std::vector<std::string> prompt_slots(std::string_view user_template)
{
    std::vector<std::string> slots;
    const std::string text(user_template);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), slot_pattern()); it != std::sregex_iterator(); ++it) {
        std::string slot = (*it)[1].str();
        if (std::find(slots.begin(), slots.end(), slot) == slots.end()) {
            slots.push_back(std::move(slot));
        }
    }
    return slots;
}

std::string render_template(std::string_view user_template, const std::map<std::string, std::string>& slots)
{
    // Single pass so slot values that themselves contain `{word}` are never re-expanded.
    const std::string text(user_template);
    std::string out;
    std::size_t last = 0;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), slot_pattern()); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        const std::string slot = m[1].str();
        auto value = slots.find(slot);
        if (value == slots.end()) {
            throw Error(ErrorCode::PromptSlotMissing, "prompt slot `" + slot + "` is not filled");
        }
        out.append(text, last, static_cast<std::size_t>(m.position(0)) - last);
        out += value->second;
        last = static_cast<std::size_t>(m.position(0) + m.length(0));
    }
    out.append(text, last, std::string::npos);
    return out;
}

}  // namespace sysarch
