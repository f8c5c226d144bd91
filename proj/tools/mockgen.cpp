// Records canned agent replies for the bundled fixtures. A scripted transport
// answers every request deterministically from the request itself (and from
// per-sample truth files for image inputs); each request digest and its reply
// are written out as a mock-response file usable with `sysarch --mock`.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "sysarch/cli.hpp"
#include "sysarch/evaluation.hpp"
#include "sysarch/pipeline.hpp"
#include "sysarch/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace sysarch;

namespace {

std::string between(const std::string& text, const std::string& start, const std::string& end)
{
    const auto a = text.find(start);
    if (a == std::string::npos) {
        return {};
    }
    const auto from = a + start.size();
    const auto b = end.empty() ? std::string::npos : text.find(end, from);
    return text.substr(from, b == std::string::npos ? std::string::npos : b - from);
}

std::string line_after(const std::string& text, const std::string& label)
{
    return between(text, label, "\n");
}

std::string slug(const std::string& name)
{
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
    }
    while (!out.empty() && out.back() == '_') {
        out.pop_back();
    }
    return out;
}

std::string first_sentence(const std::string& paragraph)
{
    const auto dot = paragraph.find(". ");
    std::string s = dot == std::string::npos ? paragraph : paragraph.substr(0, dot + 1);
    while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) {
        s.pop_back();
    }
    return s;
}

std::string fenced(const json& payload)
{
    return "```json\n" + payload.dump(2) + "\n```";
}

struct ModuleSpec {
    std::string name;
    std::string responsibility;
};

// "A: does x; B: does y" -> [(A, does x), (B, does y)]
std::vector<ModuleSpec> parse_module_list(const std::string& text)
{
    std::vector<ModuleSpec> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            continue;
        }
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(' '));
            s.erase(s.find_last_not_of(' ') + 1);
            return s;
        };
        out.push_back({trim(item.substr(0, colon)), trim(item.substr(colon + 1))});
    }
    return out;
}

// Paper layout expected by the scripted analyst: `# Title`, an abstract
// paragraph, and `### Name` subsections whose first sentence states the
// module's responsibility.
json analyst_reply(const std::string& paper)
{
    std::string title = "System";
    std::string abstract;
    std::vector<ModuleSpec> modules;
    std::stringstream ss(paper);
    std::string line;
    std::string section;
    std::string* pending = nullptr;
    while (std::getline(ss, line)) {
        if (line.rfind("# ", 0) == 0) {
            title = line.substr(2);
        } else if (line.rfind("### ", 0) == 0) {
            modules.push_back({line.substr(4), ""});
            pending = &modules.back().responsibility;
        } else if (line.rfind("## ", 0) == 0) {
            section = line.substr(3);
            pending = section == "Abstract" ? &abstract : nullptr;
        } else if (pending != nullptr && !line.empty() && pending->empty()) {
            *pending = first_sentence(line);
        }
    }
    std::string list;
    std::string flow;
    for (const auto& m : modules) {
        list += (list.empty() ? "" : "; ") + m.name + ": " + m.responsibility;
        flow += (flow.empty() ? "" : " -> ") + m.name;
    }
    return {{"system_name", title},
            {"task_goal", abstract},
            {"modules_and_responsibilities", list},
            {"data_flow", flow},
            {"core_algorithms", "As described in the method section."},
            {"constraints", "None stated."}};
}

json architect_reply(const std::string& user)
{
    const std::string name = line_after(user, "System Name: ");
    const auto modules = parse_module_list(line_after(user, "Main Modules/Stages & Responsibilities: "));
    json root{{"type", "module"}, {"id", "system"}, {"name", name}, {"children", json::array()}, {"edges", json::array()}};
    for (std::size_t i = 0; i < modules.size(); ++i) {
        root["children"].push_back({{"type", "module"},
                                    {"id", "m_" + slug(modules[i].name)},
                                    {"name", modules[i].name},
                                    {"children", json::array()},
                                    {"edges", json::array()}});
        if (i > 0) {
            root["edges"].push_back({{"id", "e" + std::to_string(i)},
                                     {"name", "output of " + modules[i - 1].name},
                                     {"sources", json::array({"m_" + slug(modules[i - 1].name)})},
                                     {"targets", json::array({"m_" + slug(modules[i].name)})}});
        }
    }
    return root;
}

json designer_reply(const std::string& user)
{
    const std::string id = line_after(user, "- Target Module: ");
    const bool first_draft = user.find("\"revision_requirements\": none (first draft)") != std::string::npos;
    const auto modules = parse_module_list(line_after(user, "Main Modules/Stages & Responsibilities: "));
    std::size_t index = 0;
    ModuleSpec spec{id, ""};
    for (std::size_t i = 0; i < modules.size(); ++i) {
        if ("m_" + slug(modules[i].name) == id) {
            index = i;
            spec = modules[i];
        }
    }
    const std::string s = slug(spec.name);
    json core_children = json::array();
    // Every module reuses the same component id so that merging must deduplicate.
    core_children.push_back({{"type", "component-text"}, {"id", "c_role"}, {"name", "Role"}, {"children", spec.responsibility}});
    core_children.push_back({{"type", "component-icon"}, {"id", "c_icon"}, {"name", spec.name}, {"children", s + ".png"}});
    json out_children = json::array();
    out_children.push_back({{"type", "component-text"}, {"id", "c_out_" + s}, {"name", "Result"},
                            {"children", spec.name + " result"}});
    if (!first_draft) {
        out_children.push_back({{"type", "component-text"}, {"id", "c_note"}, {"name", "Note"},
                                {"children", "Checked against the other modules"}});
    }
    json edges = json::array();
    edges.push_back({{"id", "e_" + s}, {"name", "produces"}, {"sources", json::array({"t_" + s + "_core"})},
                     {"targets", json::array({"t_" + s + "_out"})}});
    // The second module of a refined design reaches into the first one; the
    // regularizer has to lift this edge to the module level.
    if (!first_draft && index == 1 && !modules.empty()) {
        edges.push_back({{"id", "e_cross"},
                         {"name", "feedback"},
                         {"sources", json::array({"t_" + s + "_core"})},
                         {"targets", json::array({"t_" + slug(modules[0].name) + "_core"})}});
    }
    return {{"type", "module"},
            {"id", id},
            {"name", spec.name},
            {"children",
             json::array({{{"type", "tool"}, {"id", "t_" + s + "_core"}, {"name", spec.name + " core"}, {"children", core_children}},
                          {{"type", "tool"}, {"id", "t_" + s + "_out"}, {"name", spec.name + " output"}, {"children", out_children}}})},
            {"edges", edges}};
}

json reroute_reply(const std::string& user)
{
    const std::string graph_text = between(user, "Graph: ", "\n\nViolations: ");
    json reroutes = json::array();
    const HierGraph g = parse_hier(graph_text, ParseOptions{false, false});
    std::map<std::string, std::string> top;  // node id -> L1 ancestor
    for (const auto& m : g.root.child_nodes()) {
        visit_nodes(m, [&](const HierNode& n, const HierNode*, const std::string&) { top.emplace(n.id, m.id); });
    }
    for (const auto& v : validate(g)) {
        if (v.code != ViolationCode::NonSiblingEdge) {
            continue;
        }
        visit_nodes(g.root, [&](const HierNode& n, const HierNode*, const std::string&) {
            for (const auto& e : n.edges) {
                if (e.id != v.subject) {
                    continue;
                }
                auto s = top.find(e.source);
                auto t = top.find(e.target);
                if (s != top.end() && t != top.end() && s->second != t->second) {
                    reroutes.push_back({{"edge_id", e.id}, {"source", s->second}, {"target", t->second}});
                }
            }
        });
    }
    return {{"reroutes", reroutes}};
}

// Truth for one diagram image: the graph it depicts.
struct ImageTruth {
    FlatGraph graph;
};

class ScriptedTransport final : public Transport {
public:
    explicit ScriptedTransport(std::map<std::string, ImageTruth> images = {},
                               std::map<std::string, std::optional<double>> confidences = {})
        : images_(std::move(images)), confidences_(std::move(confidences))
    {
        for (const char* name : {"analyst", "graph_design", "graph_extract", "icon_examine", "layout_examine",
                                 "system_understand", "text_legibility", "dataset_filter"}) {
            const std::string key = std::string(name) == "graph_design" ? "architect_top" : name;
            systems_[load_prompt(key).system_text] = name;
        }
    }

    std::string send(const AgentHandle&, const ChatRequest& request) override
    {
        const std::string reply = answer(request);
        std::lock_guard guard(mutex_);
        recorded_[request_digest(request)] = reply;
        return reply;
    }

    [[nodiscard]] ordered_json recorded() const
    {
        ordered_json out = ordered_json::object();
        for (const auto& [k, v] : recorded_) {
            out[k] = v;
        }
        return out;
    }

private:
    const ImageTruth& truth_for(const ChatRequest& req) const
    {
        for (const auto& m : req.messages) {
            for (const auto& img : m.images) {
                if (auto it = images_.find(img.base64); it != images_.end()) {
                    return it->second;
                }
            }
        }
        throw Error(ErrorCode::AgentUnavailable, "scripted transport: unknown image");
    }

    std::string answer(const ChatRequest& req) const
    {
        const std::string& system = req.messages.front().text;
        const std::string& user = req.messages.back().text;
        auto it = systems_.find(system);
        if (it == systems_.end()) {
            throw Error(ErrorCode::AgentUnavailable, "scripted transport: unrecognized system prompt");
        }
        const std::string& role = it->second;
        if (role == "analyst") {
            return fenced(analyst_reply(between(user, "Paper Text: ", "")));
        }
        if (role == "graph_design") {
            if (user.rfind("Please design only the Top-Level", 0) == 0) {
                return fenced(architect_reply(user));
            }
            if (user.rfind("Please perform sub-level design", 0) == 0) {
                return fenced(designer_reply(user));
            }
            return fenced(reroute_reply(user));
        }
        if (role == "graph_extract") {
            ordered_json doc = to_json(truth_for(req).graph);
            doc["explain"] = "Boxes and arrows read from the figure.";
            return fenced(doc);
        }
        if (role == "layout_examine") {
            const FlatGraph& g = truth_for(req).graph;
            json issues = json::array();
            const int crossings = static_cast<int>(g.edges.size() % 3);
            if (crossings > 0) {
                issues.push_back({{"type", "line_crossing"}, {"count", crossings}});
            }
            if (g.nodes.size() > 8) {
                issues.push_back({{"type", "text_overflow"}, {"count", 1}});
            }
            return fenced({{"layout_issues", issues}});
        }
        if (role == "text_legibility") {
            const FlatGraph& g = truth_for(req).graph;
            json issues = json::array();
            if (g.nodes.size() % 2 == 1) {
                issues.push_back({{"type", "Ambiguous"}, {"details", json::array({g.nodes.back().name})}});
            }
            return fenced({{"text_legibility_issues", issues}});
        }
        if (role == "icon_examine") {
            const FlatGraph g = parse_flat(between(user, "Graph Structure: ", ""));
            json out = json::object();
            for (const auto& n : g.nodes) {
                out[n.id] = n.children.empty() ? std::string{} : "icon showing " + n.name;
            }
            return fenced(out);
        }
        if (role == "system_understand") {
            const FlatGraph g = parse_flat(between(user, "Graph Structure: ", ""));
            return fenced({{"system_understanding", graph_summary(g)}});
        }
        if (role == "dataset_filter") {
            for (const auto& m : req.messages) {
                for (const auto& img : m.images) {
                    if (auto c = confidences_.find(img.base64); c != confidences_.end()) {
                        if (!c->second) {
                            throw Error(ErrorCode::AgentUnavailable, "scripted failure");
                        }
                        return fenced({{"confidence", *c->second}, {"reason", "scripted"}});
                    }
                }
            }
            throw Error(ErrorCode::AgentUnavailable, "scripted transport: unknown candidate image");
        }
        throw Error(ErrorCode::AgentUnavailable, "scripted transport: no script for " + role);
    }

    std::map<std::string, std::string> systems_;
    std::map<std::string, ImageTruth> images_;
    std::map<std::string, std::optional<double>> confidences_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> recorded_;
};

std::unique_ptr<AgentGateway> make_gateway(const std::shared_ptr<ScriptedTransport>& t)
{
    auto gw = std::make_unique<AgentGateway>(nullptr, t);
    for (AgentRole role : {AgentRole::Analyst, AgentRole::Architect, AgentRole::Designer, AgentRole::GraphExtract,
                           AgentRole::IconExamine, AgentRole::LayoutExamine, AgentRole::SystemUnderstand,
                           AgentRole::TextLegibility, AgentRole::DatasetFilter}) {
        AgentHandle h = AgentHandle::for_role(role);
        h.transport = TransportKind::Mock;
        h.max_retries = 0;
        gw->set_handle(h);
    }
    gw->set_sleeper([](std::chrono::milliseconds) {});
    return gw;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Record deterministic mock agent replies for fixtures", "sysarch_mockgen"};
    app.require_subcommand(1);
    std::string output;
    std::string paper;
    std::string dir;
    auto* gen_cmd = app.add_subcommand("generate", "Replies for the generation pipeline on one paper");
    gen_cmd->add_option("--paper", paper)->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("-o,--output", output)->required();
    auto* score_cmd = app.add_subcommand("score", "Replies for image-mode scoring of a sample directory");
    score_cmd->add_option("--batch", dir, "<sample>/{gen,gt}.png with {gen,gt}.truth.json")->required();
    score_cmd->add_option("-o,--output", output)->required();
    auto* filter_cmd = app.add_subcommand("filter", "Replies for the dataset filter");
    filter_cmd->add_option("--candidates", dir, "<paper>/{abstract.txt, images, confidences.json}")->required();
    filter_cmd->add_option("-o,--output", output)->required();
    CLI11_PARSE(app, argc, argv);

    try {
        std::shared_ptr<ScriptedTransport> transport;
        if (*gen_cmd) {
            transport = std::make_shared<ScriptedTransport>();
            auto gw = make_gateway(transport);
            (void)generate(read_file(paper), *gw);
        } else if (*score_cmd) {
            std::map<std::string, ImageTruth> images;
            const auto samples = discover_samples(dir);
            for (const auto& s : samples) {
                for (const auto& [img, side] : {std::pair{s.gen, "gen"}, std::pair{s.gt, "gt"}}) {
                    const fs::path truth = img.parent_path() / (std::string(side) + ".truth.json");
                    images[load_image(img.string()).base64] = {parse_flat(read_file(truth))};
                }
            }
            transport = std::make_shared<ScriptedTransport>(std::move(images));
            auto gw = make_gateway(transport);
            for (const auto& s : samples) {
                const ScoreReport r = score_sample(s, RunConfig{}, gw.get());
                if (r.partial()) {
                    std::cerr << s.sample_id << ": scripted run was partial\n";
                    return 1;
                }
            }
        } else if (*filter_cmd) {
            std::map<std::string, std::optional<double>> confidences;
            for (const auto& paper_dir : fs::directory_iterator(dir)) {
                const fs::path conf = paper_dir.path() / "confidences.json";
                if (!fs::is_regular_file(conf)) {
                    continue;
                }
                const json table = json::parse(read_file(conf));
                for (const auto& [image_id, value] : table.items()) {
                    for (const auto& f : fs::directory_iterator(paper_dir.path())) {
                        if (f.path().stem() == image_id && is_image_path(f.path())) {
                            confidences[load_image(f.path().string()).base64] =
                                value.is_number() ? std::optional<double>(value.get<double>()) : std::nullopt;
                        }
                    }
                }
            }
            transport = std::make_shared<ScriptedTransport>(std::map<std::string, ImageTruth>{}, std::move(confidences));
            auto gw = make_gateway(transport);
            RunConfig cfg;
            for (const auto& paper_dir : fs::directory_iterator(dir)) {
                const fs::path abstract = paper_dir.path() / "abstract.txt";
                if (!fs::is_regular_file(abstract)) {
                    continue;
                }
                const auto images = load_candidates(paper_dir.path());
                (void)filter_candidate_images(read_file(abstract), images, *gw, gw->handle(AgentRole::DatasetFilter),
                                              cfg.filter_threshold);
            }
        }
        write_file_atomic(output, transport->recorded().dump(2) + "\n");
        std::cout << "recorded " << transport->recorded().size() << " repl(ies) into " << output << "\n";
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    }
    return 0;
}
