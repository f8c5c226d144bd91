#include "sysarch/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>

#include "sysarch/evaluation.hpp"
#include "sysarch/util.hpp"

namespace sysarch {

using nlohmann::ordered_json;

namespace {

constexpr const char* kSummaryFields[] = {"system_name",     "task_goal",   "modules_and_responsibilities",
                                          "data_flow",       "core_algorithms", "constraints"};

[[noreturn]] void violation(const std::string& message)
{
    throw Error(ErrorCode::SchemaViolation, message);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

// ---------------------------------------------------------------------------
// Section-aware truncation

struct Section {
    std::string heading;
    std::string body;  // includes the heading line
};

bool is_heading(const std::string& line)
{
    static const std::regex markdown(R"(^#{1,6}\s+\S.*$)");
    static const std::regex numbered(R"(^(\d+(\.\d+)*\.?|[IVX]+\.)\s+[A-Z][^.!?]{0,80}$)");
    static const std::regex bare(
        R"(^(abstract|introduction|related work|background|method|methods|methodology|approach|experiments|results|discussion|conclusion|conclusions|references|bibliography|acknowledgements|acknowledgments|appendix)\s*:?\s*$)",
        std::regex::icase);
    if (line.size() > 100) {
        return false;
    }
    return std::regex_match(line, markdown) || std::regex_match(line, numbered) || std::regex_match(line, bare);
}

std::vector<Section> split_sections(const std::string& text)
{
    std::vector<Section> sections(1);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (is_heading(line)) {
            if (!sections.back().body.empty()) {
                sections.emplace_back();
            }
            sections.back().heading = line;
        }
        sections.back().body += line;
        sections.back().body += '\n';
    }
    if (!text.empty() && text.back() != '\n' && !sections.back().body.empty()) {
        sections.back().body.pop_back();
    }
    return sections;
}

int section_priority(const Section& s, std::size_t index)
{
    const std::string h = lower(s.heading);
    if (index == 0 || h.find("abstract") != std::string::npos) {
        return 0;
    }
    for (const char* tail : {"reference", "bibliograph", "acknowledg", "appendix"}) {
        if (h.find(tail) != std::string::npos) {
            return 3;
        }
    }
    for (const char* key : {"method", "approach", "architecture", "system", "framework", "design", "model",
                            "pipeline", "overview", "proposed"}) {
        if (h.find(key) != std::string::npos) {
            return 1;
        }
    }
    return 2;
}

// ---------------------------------------------------------------------------
// Graph-shape checks for agent output

HierGraph parse_fragment_graph(const nlohmann::json& payload)
{
    try {
        return parse_hier(payload, ParseOptions{false, false});
    } catch (const Error& e) {
        std::string msg = e.what();
        for (const auto& issue : e.issues()) {
            msg += "; " + issue.path + ": " + issue.message;
        }
        violation("graph JSON rejected: " + msg);
    }
}

HierGraph parse_top_graph(const nlohmann::json& payload)
{
    HierGraph g = parse_fragment_graph(payload);
    std::set<std::string> seen;
    seen.insert(g.root.id);
    for (const auto& m : g.root.child_nodes()) {
        if (m.kind != NodeKind::Module) {
            violation("top-level design may only contain modules, found `" + std::string(to_string(m.kind)) +
                      "` node `" + m.id + "`");
        }
        if (!m.child_nodes().empty()) {
            violation("module `" + m.id + "` must not have children in the top-level design");
        }
        if (!seen.insert(m.id).second) {
            violation("duplicate module id `" + m.id + "`");
        }
    }
    return g;
}

HierNode parse_module_fragment(const nlohmann::json& payload, const std::string& module_id)
{
    HierGraph g = parse_fragment_graph(payload);
    if (g.root.id != module_id) {
        violation("fragment root id `" + g.root.id + "` does not match target module `" + module_id + "`");
    }
    for (const auto& child : g.root.child_nodes()) {
        bool nested_module = false;
        visit_nodes(child, [&](const HierNode& n, const HierNode*, const std::string&) {
            nested_module = nested_module || n.kind == NodeKind::Module;
        });
        if (nested_module) {
            violation("module `" + module_id + "` may only contain tool and component nodes");
        }
    }
    return std::move(g.root);
}

std::vector<std::string> module_ids(const HierGraph& g)
{
    std::vector<std::string> ids;
    for (const auto& m : g.root.child_nodes()) {
        ids.push_back(m.id);
    }
    return ids;
}

std::string top_design_text(const HierGraph& top)
{
    return canonical_serialize(top);
}

// Context for one module: the other modules verbatim when that fits the
// budget, else compactly, else only their ids and names.
std::string other_modules_text(const HierGraph& current, const std::string& module_id, std::size_t budget)
{
    ordered_json others = ordered_json::array();
    ordered_json brief = ordered_json::array();
    for (const auto& m : current.root.child_nodes()) {
        if (m.id == module_id) {
            continue;
        }
        others.push_back(to_json(m));
        brief.push_back({{"id", m.id}, {"name", m.name}});
    }
    std::string text = others.dump(2);
    if (text.size() <= budget) {
        return text;
    }
    text = others.dump();
    if (text.size() <= budget) {
        return text;
    }
    text = brief.dump();
    if (text.size() > budget) {
        text.resize(budget);
    }
    return text;
}

const char* kRevisionRequirements =
    "Align terminology and data flow with the other modules; keep every id globally unique across the whole "
    "diagram; connect only objects that share the same direct parent.";

}  // namespace

// ---------------------------------------------------------------------------

ordered_json to_json(const PaperSummary& s)
{
    ordered_json out;
    out["system_name"] = s.system_name;
    out["task_goal"] = s.task_goal;
    out["modules_and_responsibilities"] = s.modules_and_responsibilities;
    out["data_flow"] = s.data_flow;
    out["core_algorithms"] = s.core_algorithms;
    out["constraints"] = s.constraints;
    return out;
}

PaperSummary parse_summary(const nlohmann::json& payload)
{
    if (!payload.is_object()) {
        violation("summary must be a JSON object");
    }
    for (const char* field : kSummaryFields) {
        if (!payload.contains(field)) {
            violation(std::string("summary is missing `") + field + "`");
        }
        if (!payload[field].is_string()) {
            violation(std::string("summary field `") + field + "` must be a string");
        }
    }
    PaperSummary s;
    s.system_name = payload["system_name"].get<std::string>();
    s.task_goal = payload["task_goal"].get<std::string>();
    s.modules_and_responsibilities = payload["modules_and_responsibilities"].get<std::string>();
    s.data_flow = payload["data_flow"].get<std::string>();
    s.core_algorithms = payload["core_algorithms"].get<std::string>();
    s.constraints = payload["constraints"].get<std::string>();
    return s;
}

std::string summary_text(const PaperSummary& s)
{
    std::string out;
    out += "System Name: " + s.system_name + "\n";
    out += "Task & Overall Goal: " + s.task_goal + "\n";
    out += "Main Modules/Stages & Responsibilities: " + s.modules_and_responsibilities + "\n";
    out += "Key Data/Information Flow: " + s.data_flow + "\n";
    out += "Core Models/Algorithms: " + s.core_algorithms + "\n";
    out += "Key Constraints or Assumptions: " + s.constraints;
    return out;
}

Truncation truncate_paper(const std::string& text, std::size_t budget)
{
    if (text.size() <= budget) {
        return {text, false};
    }
    const auto sections = split_sections(text);
    std::vector<std::size_t> order(sections.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return section_priority(sections[a], a) < section_priority(sections[b], b);
    });

    std::vector<std::string> kept(sections.size());
    std::size_t used = 0;
    for (std::size_t idx : order) {
        const std::string& body = sections[idx].body;
        if (used + body.size() <= budget) {
            kept[idx] = body;
            used += body.size();
        } else {
            // Partial section: cut at the last line break that fits, else hard.
            std::string part = body.substr(0, budget - used);
            if (auto nl = part.rfind('\n'); nl != std::string::npos && nl > 0) {
                part.resize(nl + 1);
            }
            kept[idx] = std::move(part);
            // Only the first section that overflows is cut; lower priorities are dropped.
            break;
        }
    }
    std::string out;
    for (const auto& k : kept) {
        out += k;
    }
    return {out, true};
}

PaperSummary extract_summary(const std::string& paper_text, AgentGateway& gateway, const AgentHandle& handle,
                             const PipelineConfig& cfg)
{
    if (paper_text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(ErrorCode::MissingField, "paper text is empty");
    }
    const auto input = truncate_paper(paper_text, cfg.char_budget);
    AgentTask task{"analyst", {{"paper_content", input.text}}, {},
                   [](const nlohmann::json& p) { (void)parse_summary(p); }};
    return parse_summary(gateway.run_agent(task, handle));
}

HierGraph design_top(const PaperSummary& summary, AgentGateway& gateway, const AgentHandle& handle,
                     std::vector<std::string>* warnings)
{
    AgentTask task{"architect_top", {{"user_input", summary_text(summary)}}, {},
                   [](const nlohmann::json& p) { (void)parse_top_graph(p); }};
    HierGraph top = parse_top_graph(gateway.run_agent(task, handle));
    // Module-to-module edges belong on the root; fix placement and drop anything illegal.
    top = prune_violations(top).graph;
    if (top.root.child_nodes().empty() && warnings != nullptr) {
        warnings->push_back("DEGENERATE_TOPOLOGY: the top-level design has no modules");
    }
    return top;
}

DraftOutcome draft_modules(const HierGraph& top, const PaperSummary& summary, AgentGateway& gateway,
                           const AgentHandle& handle, std::size_t concurrency)
{
    const auto ids = module_ids(top);
    const std::string top_text = top_design_text(top);
    const std::string input = summary_text(summary);
    std::vector<std::optional<HierNode>> results(ids.size());
    std::vector<std::string> errors(ids.size());

    parallel_for_capped(ids.size(), concurrency, [&](std::size_t i) {
        const std::string& id = ids[i];
        std::vector<std::string> others;
        for (const auto& other : ids) {
            if (other != id) {
                others.push_back(other);
            }
        }
        AgentTask task{"designer_module",
                       {{"module_id", id},
                        {"user_input", input},
                        {"top_design", top_text},
                        {"other_modules", nlohmann::json(others).dump()},
                        {"revision_requirements", "none (first draft)"}},
                       {},
                       [&id](const nlohmann::json& p) { (void)parse_module_fragment(p, id); }};
        try {
            results[i] = parse_module_fragment(gateway.run_agent(task, handle), id);
        } catch (const Error& e) {
            errors[i] = std::string(to_string(e.code())) + ": " + e.what();
        }
    });

    DraftOutcome out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (results[i]) {
            out.fragments.emplace(ids[i], std::move(*results[i]));
        } else {
            out.failures.emplace(ids[i], errors[i]);
        }
    }
    return out;
}

HierGraph merge_drafts(const HierGraph& top, const std::map<std::string, HierNode>& fragments)
{
    HierGraph merged = top;
    for (auto& m : merged.root.child_nodes()) {
        if (auto it = fragments.find(m.id); it != fragments.end()) {
            m.children = it->second.children;
            m.edges = it->second.edges;
        }
    }
    return merged;
}

namespace {

struct NodeEntry {
    HierNode* node;
    int parent;  // index into entries, -1 for root
    std::string original;
};

void collect_nodes(HierNode& node, int parent, std::vector<NodeEntry>& out)
{
    const int self = static_cast<int>(out.size());
    out.push_back({&node, parent, node.id});
    if (!node.has_payload()) {
        for (auto& child : node.child_nodes()) {
            collect_nodes(child, self, out);
        }
    }
}

template <typename Fn>
void for_each_edge_mut(HierNode& node, Fn&& fn)
{
    if (!node.has_payload()) {
        for (auto& child : node.child_nodes()) {
            for_each_edge_mut(child, fn);
        }
    }
    for (auto& e : node.edges) {
        fn(e, node);
    }
}

std::string fresh_id(const std::string& base, const std::set<std::string>& reserved, std::set<std::string>& taken)
{
    for (int k = 2;; ++k) {
        std::string candidate = base + "_" + std::to_string(k);
        if (!reserved.contains(candidate) && !taken.contains(candidate)) {
            taken.insert(candidate);
            return candidate;
        }
    }
}

}  // namespace

DedupResult deduplicate_ids(const HierGraph& g)
{
    DedupResult out{g, {}};
    std::vector<NodeEntry> entries;
    collect_nodes(out.graph.root, -1, entries);

    std::set<std::string> all_ids;
    std::map<std::string, std::vector<std::size_t>> by_id;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        all_ids.insert(entries[i].original);
        by_id[entries[i].original].push_back(i);
    }

    // Root and L1 modules claim their ids first so module ids never change.
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].parent <= 0) {
            order.push_back(i);
        }
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].parent > 0) {
            order.push_back(i);
        }
    }
    std::set<std::string> taken;
    for (std::size_t i : order) {
        auto& e = entries[i];
        if (taken.insert(e.original).second) {
            continue;
        }
        e.node->id = fresh_id(e.original, all_ids, taken);
        out.renamed.push_back({e.original, e.node->id, false});
    }

    auto inside = [&](std::size_t candidate, std::size_t ancestor) {
        for (int p = entries[candidate].parent; p >= 0; p = entries[static_cast<std::size_t>(p)].parent) {
            if (static_cast<std::size_t>(p) == ancestor) {
                return true;
            }
        }
        return false;
    };
    std::map<const HierNode*, std::size_t> index_of;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        index_of[entries[i].node] = i;
    }
    auto resolve = [&](const std::string& ref, std::size_t owner) -> std::string {
        auto it = by_id.find(ref);
        if (it == by_id.end()) {
            return ref;  // dangling; left for the regularizer to report
        }
        const auto& candidates = it->second;
        if (candidates.size() == 1) {
            return entries[candidates.front()].node->id;
        }
        for (std::size_t c : candidates) {
            if (entries[c].parent == static_cast<int>(owner)) {
                return entries[c].node->id;
            }
        }
        for (std::size_t c : candidates) {
            if (inside(c, owner)) {
                return entries[c].node->id;
            }
        }
        return entries[candidates.front()].node->id;
    };

    std::set<std::string> edge_ids;
    for_each_edge_mut(out.graph.root, [&](HierEdge& e, HierNode&) { edge_ids.insert(e.id); });
    std::set<std::string> taken_edges;
    for_each_edge_mut(out.graph.root, [&](HierEdge& e, HierNode& owner) {
        const std::size_t o = index_of.at(&owner);
        e.source = resolve(e.source, o);
        e.target = resolve(e.target, o);
        if (!taken_edges.insert(e.id).second) {
            const std::string original = e.id;
            e.id = fresh_id(original, edge_ids, taken_edges);
            out.renamed.push_back({original, e.id, true});
        }
    });
    return out;
}

RefineOutcome refine_sequential(const HierGraph& merged, const PaperSummary& summary, AgentGateway& gateway,
                                const AgentHandle& handle, const PipelineConfig& cfg)
{
    RefineOutcome out{merged, {}, {}};
    auto ids = module_ids(merged);
    std::sort(ids.begin(), ids.end(), natural_less);
    const std::string input = summary_text(summary);
    for (const auto& id : ids) {
        AgentTask task{"designer_module",
                       {{"module_id", id},
                        {"user_input", input},
                        {"top_design", canonical_serialize(out.graph)},
                        {"other_modules", other_modules_text(out.graph, id, cfg.char_budget)},
                        {"revision_requirements", kRevisionRequirements}},
                       {},
                       [&id](const nlohmann::json& p) { (void)parse_module_fragment(p, id); }};
        try {
            HierNode refined = parse_module_fragment(gateway.run_agent(task, handle), id);
            for (auto& m : out.graph.root.child_nodes()) {
                if (m.id == id) {
                    m.children = std::move(refined.children);
                    m.edges = std::move(refined.edges);
                }
            }
        } catch (const Error& e) {
            out.failures.emplace(id, std::string(to_string(e.code())) + ": " + e.what());
        }
    }
    auto dedup = deduplicate_ids(out.graph);
    out.graph = std::move(dedup.graph);
    out.renamed = std::move(dedup.renamed);
    return out;
}

ordered_json report_json(const PipelineArtifacts& a)
{
    ordered_json out;
    out["tool_version"] = SYSARCH_VERSION;
    out["status"] = !a.aborted.empty() ? "aborted" : (a.degraded() ? "partial" : "ok");
    if (!a.aborted.empty()) {
        out["error"] = a.aborted;
    }
    out["input_truncated"] = a.input_truncated;
    if (a.top_graph) {
        out["modules"] = module_ids(*a.top_graph);
    }
    out["warnings"] = a.warnings;
    out["draft_failures"] = a.draft_failures;
    out["refine_failures"] = a.refine_failures;
    ordered_json renamed = ordered_json::array();
    for (const auto& r : a.renamed) {
        renamed.push_back({{"from", r.from}, {"to", r.to}, {"kind", r.edge ? "edge" : "node"}});
    }
    out["renamed"] = std::move(renamed);
    if (a.regularized) {
        out["regularization"] = to_json(a.regularization);
        out["validation"] = to_json(a.final_violations);
    }
    return out;
}

void write_artifacts(const PipelineArtifacts& a, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    if (a.summary) {
        write_file_atomic(dir / "01_summary.json", to_json(*a.summary).dump(2) + "\n");
    }
    if (a.top_graph) {
        write_file_atomic(dir / "02_top.graph.json", canonical_serialize(*a.top_graph));
    }
    for (const auto& [id, fragment] : a.drafts) {
        write_file_atomic(dir / "03_drafts" / (id + ".graph.json"), canonical_serialize(HierGraph{fragment}));
    }
    if (a.refined) {
        write_file_atomic(dir / "04_refined.graph.json", canonical_serialize(*a.refined));
    }
    if (a.regularized) {
        write_file_atomic(dir / "05_final.graph.json", canonical_serialize(*a.regularized));
    }
    write_file_atomic(dir / "report.json", report_json(a).dump(2) + "\n");
}

PipelineArtifacts generate(const std::string& paper_text, AgentGateway& gateway, const PipelineConfig& cfg,
                           const std::optional<std::filesystem::path>& out_dir)
{
    PipelineArtifacts a;
    auto fail = [&](const Error& e) {
        a.aborted = std::string(to_string(e.code())) + ": " + e.what();
        if (out_dir) {
            write_artifacts(a, *out_dir);
        }
    };
    try {
        a.input_truncated = paper_text.size() > cfg.char_budget;
        a.summary = extract_summary(paper_text, gateway, gateway.handle(AgentRole::Analyst), cfg);
        a.top_graph = design_top(*a.summary, gateway, gateway.handle(AgentRole::Architect), &a.warnings);

        auto drafts = draft_modules(*a.top_graph, *a.summary, gateway, gateway.handle(AgentRole::Designer),
                                    cfg.draft_concurrency);
        a.draft_failures = drafts.failures;
        a.drafts = drafts.fragments;
        const HierGraph merged = merge_drafts(*a.top_graph, drafts.fragments);

        auto refined = refine_sequential(merged, *a.summary, gateway, gateway.handle(AgentRole::Designer), cfg);
        a.refine_failures = std::move(refined.failures);
        a.renamed = std::move(refined.renamed);
        a.refined = std::move(refined.graph);

        Regularized reg;
        try {
            reg = semantic_filter(*a.refined, gateway, gateway.handle(AgentRole::Architect));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::AgentUnavailable && e.code() != ErrorCode::SchemaViolation &&
                e.code() != ErrorCode::AuthMissing) {
                throw;
            }
            reg = prune_violations(*a.refined);
            reg.report.semantic_pass_skipped = true;
            reg.report.skip_reason = std::string(to_string(e.code())) + ": " + e.what();
        }
        a.regularization = std::move(reg.report);
        a.final_violations = validate(reg.graph);
        a.regularized = std::move(reg.graph);
        if (!a.final_violations.empty()) {
            throw Error(ErrorCode::SchemaViolation, "regularized graph still has violations");
        }
    } catch (const Error& e) {
        fail(e);
        throw;
    }
    if (out_dir) {
        write_artifacts(a, *out_dir);
    }
    return a;
}

}  // namespace sysarch
