#include "sysarch/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>

#include "sysarch/evaluation.hpp"
#include "sysarch/layout.hpp"
#include "sysarch/pipeline.hpp"
#include "sysarch/regularizer.hpp"
#include "sysarch/util.hpp"

namespace sysarch {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string error_line(const Error& e)
{
    std::string line = "error: " + std::string(to_string(e.code())) + ": " + e.what();
    if (!e.path().empty() && std::string_view(e.what()).find(e.path()) == std::string_view::npos) {
        line += " (at " + e.path() + ")";
    }
    return line;
}

void report_error(std::ostream& err, const Error& e)
{
    err << error_line(e) << "\n";
    for (const auto& issue : e.issues()) {
        err << "  " << to_string(issue.code) << " " << issue.path << ": " << issue.message << "\n";
    }
}

std::string dump(const ordered_json& doc)
{
    return doc.dump(2) + "\n";
}

void emit(const std::string& text, const std::string& path, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_file_atomic(path, text);
    }
}

void require_file(const fs::path& path, const std::string& what)
{
    if (!fs::is_regular_file(path)) {
        throw Error(ErrorCode::IoError, what + " not found: " + path.string(), path.string());
    }
}

// Options shared by every subcommand.
struct Globals {
    std::string config_path;
    std::string mock_path;
    bool verbose = false;
};

struct Session {
    RunConfig cfg;
    std::string hash;
    std::shared_ptr<AgentGateway> gateway;
};

Session open_session(const Globals& g, std::ostream& err)
{
    Session s;
    if (!g.config_path.empty()) {
        s.cfg = load_config(g.config_path);
    }
    s.hash = config_hash(s.cfg);
    const TransportKind kind = g.mock_path.empty() ? TransportKind::Live : TransportKind::Mock;
    std::shared_ptr<Transport> mock;
    if (kind == TransportKind::Mock) {
        mock = MockTransport::from_file(g.mock_path);
    }
    s.gateway = std::make_shared<AgentGateway>(kind == TransportKind::Live ? std::make_shared<HttpTransport>() : nullptr,
                                               mock);
    for (AgentRole role : {AgentRole::Analyst, AgentRole::Architect, AgentRole::Designer, AgentRole::GraphExtract,
                           AgentRole::IconExamine, AgentRole::LayoutExamine, AgentRole::SystemUnderstand,
                           AgentRole::TextLegibility, AgentRole::DatasetFilter}) {
        s.gateway->set_handle(make_handle(s.cfg, role, kind));
    }
    if (g.verbose) {
        auto lock = std::make_shared<std::mutex>();
        s.gateway->set_log_sink([&err, lock](const LogRecord& r) {
            std::lock_guard guard(*lock);
            err << "[agent] " << r.event << " " << r.detail << "\n";
        });
    }
    return s;
}

LayoutStyle style_for(const RunConfig& cfg)
{
    return cfg.layout;
}

HierGraph load_hier_strict(const std::string& path)
{
    require_file(path, "graph file");
    return parse_hier(read_file(path));
}

// Layout needs a graph that obeys the sibling-edge rule.
void require_regular(const HierGraph& g)
{
    const auto v = validate(g);
    if (!v.empty()) {
        throw Error(ErrorCode::InvalidConfig, "graph has " + std::to_string(v.size()) +
                                                  " violation(s) (first: " + std::string(to_string(v.front().code)) +
                                                  " " + v.front().path + "); regularize the graph before layout");
    }
}

ordered_json defects_json(const DefectCounts& c)
{
    return {{"crossings", c.crossings}, {"overlaps", c.overlaps}, {"overflows", c.overflows}, {"total", c.total()}};
}

// ---------------------------------------------------------------------------
// validate

int cmd_validate(const std::string& input, std::ostream& out, std::ostream& err)
{
    require_file(input, "graph file");
    HierGraph g;
    try {
        g = parse_hier(read_file(input), ParseOptions{true, false});
    } catch (const Error& e) {
        ordered_json doc;
        doc["valid"] = false;
        doc["parse_error"] = std::string(to_string(e.code()));
        ordered_json issues = ordered_json::array();
        for (const auto& i : e.issues()) {
            issues.push_back({{"code", std::string(to_string(i.code))}, {"path", i.path}, {"message", i.message}});
        }
        if (issues.empty()) {
            issues.push_back({{"code", std::string(to_string(e.code()))}, {"path", e.path()}, {"message", e.what()}});
        }
        doc["issues"] = std::move(issues);
        out << dump(doc);
        report_error(err, e);
        return ExitUsage;
    }
    const auto violations = validate(g);
    ordered_json doc;
    doc["valid"] = violations.empty();
    doc["nodes"] = count_nodes(g);
    doc["edges"] = count_edges(g);
    doc["violations"] = to_json(violations);
    out << dump(doc);
    return violations.empty() ? ExitOk : ExitUsage;
}

// ---------------------------------------------------------------------------
// regularize

struct RegularizeOpts {
    std::string input;
    std::string output;
    std::string report;
    bool semantic = false;
};

int cmd_regularize(const RegularizeOpts& o, const Globals& globals, std::ostream& out, std::ostream& err)
{
    require_file(o.input, "graph file");
    const HierGraph g = parse_hier(read_file(o.input), ParseOptions{true, false});
    Regularized reg;
    if (o.semantic) {
        Session s = open_session(globals, err);
        try {
            reg = semantic_filter(g, *s.gateway, s.gateway->handle(AgentRole::Architect));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::AgentUnavailable && e.code() != ErrorCode::SchemaViolation &&
                e.code() != ErrorCode::AuthMissing) {
                throw;
            }
            reg = prune_violations(g);
            reg.report.semantic_pass_skipped = true;
            reg.report.skip_reason = std::string(to_string(e.code())) + ": " + e.what();
            err << "warning: semantic pass skipped: " << reg.report.skip_reason << "\n";
        }
    } else {
        reg = prune_violations(g);
    }
    emit(canonical_serialize(reg.graph), o.output, out);
    if (!o.report.empty()) {
        write_file_atomic(o.report, dump(to_json(reg.report)));
    }
    return reg.report.semantic_pass_skipped ? ExitPartial : ExitOk;
}

// ---------------------------------------------------------------------------
// match

int cmd_match(const std::string& gen, const std::string& gt, const std::string& output, const Globals& globals,
              std::ostream& out)
{
    require_file(gen, "generated graph");
    require_file(gt, "reference graph");
    RunConfig cfg = globals.config_path.empty() ? RunConfig{} : load_config(globals.config_path);
    const auto provider = make_provider(cfg, false);
    const GraphInput a = load_graph_input(gen);
    const GraphInput b = load_graph_input(gt);
    const MatchResult m = match_two_rounds(a.flat, b.flat, cfg.match, *provider);
    ordered_json doc = to_json(m);
    doc["config_hash"] = config_hash(cfg);
    emit(dump(doc), output, out);
    return m.provider_degraded ? ExitPartial : ExitOk;
}

// ---------------------------------------------------------------------------
// score

std::string csv_cell(const std::optional<double>& v)
{
    return v ? format_fixed(round_to(*v * 100.0, 1), 1) : std::string{};
}

std::string scores_csv(const std::vector<ScoreReport>& reports)
{
    std::string out = "sample_id,node,edge,hierarchy,semantic,layout,icon,understanding,legibility,visual,overall,partial\n";
    for (const auto& r : reports) {
        out += r.sample_id;
        for (const auto* v : {&r.node, &r.edge, &r.hierarchy, &r.semantic, &r.layout, &r.icon, &r.understanding,
                              &r.legibility, &r.visual, &r.overall}) {
            out += "," + csv_cell(*v);
        }
        out += r.partial() ? ",true\n" : ",false\n";
    }
    return out;
}

struct ScoreOpts {
    std::string gen;
    std::string gt;
    std::string paper;
    std::string sample_id;
    std::string batch;
    std::string output;
};

bool needs_agents(const SampleInputs& in)
{
    return is_image_path(in.gen) || is_image_path(in.gt);
}

int cmd_score(const ScoreOpts& o, const Globals& globals, std::ostream& out, std::ostream& err)
{
    std::vector<SampleInputs> samples;
    if (!o.batch.empty()) {
        if (o.output.empty()) {
            throw Error(ErrorCode::InvalidConfig, "--batch needs -o <output directory>");
        }
        samples = discover_samples(o.batch);
    } else {
        if (o.gen.empty() || o.gt.empty()) {
            throw Error(ErrorCode::InvalidConfig, "score needs --gen and --gt (or --batch)");
        }
        SampleInputs in;
        in.gen = o.gen;
        in.gt = o.gt;
        if (!o.paper.empty()) {
            in.paper = o.paper;
        }
        in.sample_id = o.sample_id.empty() ? fs::path(o.gen).stem().string() : o.sample_id;
        samples.push_back(std::move(in));
    }

    const bool agents = std::any_of(samples.begin(), samples.end(), needs_agents);
    Session s;
    if (agents) {
        s = open_session(globals, err);
    } else {
        s.cfg = globals.config_path.empty() ? RunConfig{} : load_config(globals.config_path);
        s.hash = config_hash(s.cfg);
    }

    if (o.batch.empty()) {
        const ScoreReport r = score_sample(samples.front(), s.cfg, s.gateway.get());
        emit(dump(to_json(r)), o.output, out);
        return r.partial() ? ExitPartial : ExitOk;
    }

    std::vector<std::optional<ScoreReport>> reports(samples.size());
    std::vector<std::string> failures(samples.size());
    parallel_for_capped(samples.size(), s.cfg.sample_concurrency, [&](std::size_t i) {
        try {
            reports[i] = score_sample(samples[i], s.cfg, s.gateway.get());
        } catch (const Error& e) {
            failures[i] = error_line(e);
        }
    });
    fs::create_directories(o.output);
    std::vector<ScoreReport> done;
    bool partial = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!reports[i]) {
            err << samples[i].sample_id << ": " << failures[i] << "\n";
            partial = true;
            continue;
        }
        write_file_atomic(fs::path(o.output) / (samples[i].sample_id + ".json"), dump(to_json(*reports[i])));
        partial = partial || reports[i]->partial();
        done.push_back(std::move(*reports[i]));
    }
    write_file_atomic(fs::path(o.output) / "scores.csv", scores_csv(done));
    out << "scored " << done.size() << " of " << samples.size() << " sample(s) into " << o.output << "\n";
    return partial ? ExitPartial : ExitOk;
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const std::string& paper, const std::string& out_dir, const Globals& globals, std::ostream& out,
                 std::ostream& err)
{
    require_file(paper, "paper text");
    Session s = open_session(globals, err);
    PipelineArtifacts a;
    try {
        a = generate(read_file(paper), *s.gateway, s.cfg.pipeline, fs::path(out_dir));
    } catch (const Error& e) {
        report_error(err, e);
        err << "partial artifacts written to " << out_dir << "\n";
        return ExitUsage;
    }
    for (const auto& w : a.warnings) {
        err << "warning: " << w << "\n";
    }
    for (const auto& [id, why] : a.draft_failures) {
        err << "warning: draft of " << id << " failed: " << why << "\n";
    }
    for (const auto& [id, why] : a.refine_failures) {
        err << "warning: refinement of " << id << " failed: " << why << "\n";
    }
    out << "wrote " << (fs::path(out_dir) / "05_final.graph.json").string() << "\n";
    return a.degraded() ? ExitPartial : ExitOk;
}

// ---------------------------------------------------------------------------
// layout / render / export-layout

struct LayoutOpts {
    std::string input;
    std::string output;
    std::string svg;
    double units_per_inch = 0;
};

int cmd_layout(const LayoutOpts& o, const Globals& globals, std::ostream& out, std::ostream& err, bool print_defects)
{
    const HierGraph g = load_hier_strict(o.input);
    require_regular(g);
    RunConfig cfg = globals.config_path.empty() ? RunConfig{} : load_config(globals.config_path);
    LayoutStyle style = style_for(cfg);
    if (o.units_per_inch > 0) {
        style.units_per_inch = o.units_per_inch;
    }
    const LayoutGeometry geom = layout_graph(g, style);
    emit(dump(export_layout_json(g, geom, style)), o.output, out);
    if (!o.svg.empty()) {
        write_file_atomic(o.svg, emit_svg(g, geom, style));
    }
    if (print_defects) {
        const DefectCounts c = count_defects_parallel(g, geom, style);
        (o.output.empty() || o.output == "-" ? err : out) << "defects " << defects_json(c).dump() << "\n";
    }
    return ExitOk;
}

int cmd_render(const std::string& input, const std::string& output, const Globals& globals, std::ostream& out)
{
    const HierGraph g = load_hier_strict(input);
    require_regular(g);
    RunConfig cfg = globals.config_path.empty() ? RunConfig{} : load_config(globals.config_path);
    const LayoutStyle style = style_for(cfg);
    const LayoutGeometry geom = layout_graph(g, style);
    emit(emit_svg(g, geom, style), output, out);
    return ExitOk;
}

// ---------------------------------------------------------------------------
// extract

int cmd_extract(const std::string& image, const std::string& paper, const std::string& output, const Globals& globals,
                std::ostream& out, std::ostream& err)
{
    require_file(image, "image");
    std::string text;
    if (!paper.empty()) {
        require_file(paper, "paper text");
        text = read_file(paper);
    }
    Session s = open_session(globals, err);
    const FlatGraph f = extract_graph(*s.gateway, load_image(image), text);
    emit(dump(to_json(f)), output, out);
    return ExitOk;
}

// ---------------------------------------------------------------------------
// filter

std::vector<std::string> sorted_subdirs(const fs::path& dir)
{
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory()) {
            names.push_back(entry.path().filename().string());
        }
    }
    std::sort(names.begin(), names.end(), natural_less);
    return names;
}

int cmd_filter(const std::string& candidates, const std::string& output, double threshold, const Globals& globals,
               std::ostream& out, std::ostream& err)
{
    if (!fs::is_directory(candidates)) {
        throw Error(ErrorCode::IoError, "candidates directory not found: " + candidates, candidates);
    }
    Session s = open_session(globals, err);
    if (threshold < 0) {
        threshold = s.cfg.filter_threshold;
    }
    ordered_json rows = ordered_json::array();
    bool partial = false;
    for (const auto& paper_id : sorted_subdirs(candidates)) {
        const fs::path dir = fs::path(candidates) / paper_id;
        std::vector<FilterDecision> decisions;
        try {
            require_file(dir / "abstract.txt", "abstract");
            const auto images = load_candidates(dir);
            decisions = filter_candidate_images(read_file(dir / "abstract.txt"), images, *s.gateway,
                                                s.gateway->handle(AgentRole::DatasetFilter), threshold);
        } catch (const Error& e) {
            err << paper_id << ": " << error_line(e) << "\n";
            ordered_json row;
            row["paper_id"] = paper_id;
            row["image_id"] = nullptr;
            row["confidence"] = nullptr;
            row["kept"] = false;
            row["selected"] = false;
            row["undetermined"] = true;
            row["error"] = std::string(to_string(e.code())) + ": " + e.what();
            rows.push_back(std::move(row));
            partial = true;
            continue;
        }
        for (const auto& d : decisions) {
            ordered_json row;
            row["paper_id"] = paper_id;
            const ordered_json decision = to_json(d);
            for (const auto& [k, v] : decision.items()) {
                row[k] = v;
            }
            partial = partial || d.undetermined;
            rows.push_back(std::move(row));
        }
    }
    ordered_json doc;
    doc["threshold"] = threshold;
    doc["config_hash"] = s.hash;
    doc["tool_version"] = SYSARCH_VERSION;
    doc["rows"] = std::move(rows);
    emit(dump(doc), output, out);
    return partial ? ExitPartial : ExitOk;
}

// ---------------------------------------------------------------------------
// stats

struct Range {
    double sum = 0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();

    void add(double v)
    {
        sum += v;
        min = std::min(min, v);
        max = std::max(max, v);
    }
};

struct DomainStats {
    int count = 0;
    Range nodes;
    Range edges;
    Range depth;
};

ordered_json range_json(const Range& r, int count)
{
    return {{"mean", round_to(r.sum / count, 2)}, {"min", r.min}, {"max", r.max}};
}

std::string pad(const std::string& s, std::size_t width, bool left = false)
{
    if (s.size() >= width) {
        return s;
    }
    return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

int cmd_stats(const std::string& dir, const std::string& output, std::ostream& out, std::ostream& err)
{
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::IoError, "dataset directory not found: " + dir, dir);
    }
    std::map<std::string, DomainStats> domains;
    std::vector<std::string> warnings;
    for (const auto& sample : sorted_subdirs(dir)) {
        const fs::path sdir = fs::path(dir) / sample;
        fs::path graph_path = sdir / "gt.json";
        if (!fs::is_regular_file(graph_path)) {
            graph_path = sdir / "graph.json";
        }
        try {
            require_file(graph_path, "graph file (gt.json or graph.json)");
            const GraphInput in = load_graph_input(graph_path);
            std::string domain = "unknown";
            if (fs::is_regular_file(sdir / "meta.json")) {
                const json meta = json::parse(read_file(sdir / "meta.json"));
                if (meta.is_object() && meta.contains("domain") && meta["domain"].is_string()) {
                    domain = meta["domain"].get<std::string>();
                } else {
                    warnings.push_back(sample + ": meta.json has no string `domain`; counted as unknown");
                }
            } else {
                warnings.push_back(sample + ": no meta.json; counted as unknown");
            }
            auto& d = domains[domain];
            d.count += 1;
            d.nodes.add(static_cast<double>(in.flat.nodes.size()));
            d.edges.add(static_cast<double>(in.flat.edges.size()));
            d.depth.add(graph_depth(in.flat));
        } catch (const Error& e) {
            warnings.push_back(sample + ": skipped: " + std::string(to_string(e.code())) + ": " + e.what());
        } catch (const json::exception& e) {
            warnings.push_back(sample + ": skipped: " + std::string(e.what()));
        }
    }

    ordered_json doc;
    ordered_json jd = ordered_json::object();
    int total = 0;
    for (const auto& [name, d] : domains) {
        jd[name] = {{"count", d.count},
                    {"nodes", range_json(d.nodes, d.count)},
                    {"edges", range_json(d.edges, d.count)},
                    {"depth", range_json(d.depth, d.count)}};
        total += d.count;
    }
    doc["samples"] = total;
    doc["domains"] = std::move(jd);
    doc["warnings"] = warnings;
    doc["tool_version"] = SYSARCH_VERSION;
    if (!output.empty()) {
        write_file_atomic(output, dump(doc));
    }

    std::ostringstream table;
    table << pad("domain", 16, true) << pad("count", 7) << pad("nodes", 10) << pad("range", 10) << pad("edges", 10)
          << pad("range", 10) << pad("depth", 8) << pad("range", 8) << "\n";
    auto span = [](const Range& r) { return format_fixed(r.min, 0) + "-" + format_fixed(r.max, 0); };
    for (const auto& [name, d] : domains) {
        table << pad(name, 16, true) << pad(std::to_string(d.count), 7) << pad(format_fixed(d.nodes.sum / d.count, 2), 10)
              << pad(span(d.nodes), 10) << pad(format_fixed(d.edges.sum / d.count, 2), 10) << pad(span(d.edges), 10)
              << pad(format_fixed(d.depth.sum / d.count, 2), 8) << pad(span(d.depth), 8) << "\n";
    }
    out << table.str();
    if (output.empty()) {
        out << dump(doc);
    }
    for (const auto& w : warnings) {
        err << "warning: " << w << "\n";
    }
    return ExitOk;
}

// ---------------------------------------------------------------------------
// stability

struct Spread {
    std::vector<double> values;
};


int cmd_stability(const std::string& batch, int repeats, const std::string& output, const Globals& globals,
                  std::ostream& out, std::ostream& err)
{
    if (repeats < 2) {
        throw Error(ErrorCode::InvalidConfig, "--repeats must be at least 2");
    }
    const auto samples = discover_samples(batch);
    const bool agents = std::any_of(samples.begin(), samples.end(), needs_agents);

    ordered_json rows = ordered_json::array();
    double widest = 0;
    bool partial = false;
    std::string hash;
    static const std::vector<std::string> metrics{"node",          "edge",       "hierarchy", "semantic", "layout", "icon",
                                                  "understanding", "legibility", "visual",    "overall"};
    std::vector<std::map<std::string, Spread>> spreads(samples.size());
    for (int rep = 0; rep < repeats; ++rep) {
        // Every repeat gets a fresh session so no state leaks between runs.
        Session s;
        if (agents) {
            s = open_session(globals, err);
        } else {
            s.cfg = globals.config_path.empty() ? RunConfig{} : load_config(globals.config_path);
            s.hash = config_hash(s.cfg);
        }
        hash = s.hash;
        std::vector<std::optional<ScoreReport>> reports(samples.size());
        std::mutex err_mutex;
        parallel_for_capped(samples.size(), s.cfg.sample_concurrency, [&](std::size_t i) {
            try {
                reports[i] = score_sample(samples[i], s.cfg, s.gateway.get());
            } catch (const Error& e) {
                std::lock_guard guard(err_mutex);
                err << samples[i].sample_id << ": " << error_line(e) << "\n";
            }
        });
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!reports[i]) {
                partial = true;
                continue;
            }
            const ScoreReport& r = *reports[i];
            partial = partial || r.partial();
            const std::vector<const std::optional<double>*> vals{&r.node,   &r.edge,          &r.hierarchy,
                                                                 &r.semantic, &r.layout,      &r.icon,
                                                                 &r.understanding, &r.legibility, &r.visual,
                                                                 &r.overall};
            for (std::size_t k = 0; k < metrics.size(); ++k) {
                if (*vals[k]) {
                    spreads[i][metrics[k]].values.push_back(round_to(**vals[k] * 100.0, 6));
                }
            }
        }
    }

    std::ostringstream table;
    table << pad("sample", 16, true) << pad("runs", 6) << pad("min", 9) << pad("mean", 9) << pad("max", 9)
          << pad("range", 9) << "\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        ordered_json row;
        row["sample_id"] = samples[i].sample_id;
        ordered_json jm = ordered_json::object();
        for (const auto& m : metrics) {
            auto it = spreads[i].find(m);
            if (it == spreads[i].end() || it->second.values.empty()) {
                jm[m] = nullptr;
                continue;
            }
            const auto& v = it->second.values;
            const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
            double sum = 0;
            for (double x : v) {
                sum += x;
            }
            const double range = *hi - *lo;
            widest = std::max(widest, range);
            jm[m] = {{"runs", v},
                     {"min", round_to(*lo, 1)},
                     {"mean", round_to(sum / static_cast<double>(v.size()), 1)},
                     {"max", round_to(*hi, 1)},
                     {"range", round_to(range, 6)}};
            if (m == "overall") {
                table << pad(samples[i].sample_id, 16, true) << pad(std::to_string(v.size()), 6)
                      << pad(format_fixed(*lo, 1), 9) << pad(format_fixed(sum / static_cast<double>(v.size()), 1), 9)
                      << pad(format_fixed(*hi, 1), 9) << pad(format_fixed(range, 1), 9) << "\n";
            }
        }
        row["metrics"] = std::move(jm);
        rows.push_back(std::move(row));
    }
    ordered_json doc;
    doc["repeats"] = repeats;
    doc["samples"] = std::move(rows);
    doc["max_range"] = round_to(widest, 6);
    doc["config_hash"] = hash;
    doc["tool_version"] = SYSARCH_VERSION;
    if (!output.empty()) {
        write_file_atomic(output, dump(doc));
        out << table.str();
    } else {
        out << dump(doc);
    }
    return partial ? ExitPartial : ExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------
// Shared helpers

bool is_image_path(const fs::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".gif" || ext == ".webp" || ext == ".svg";
}

GraphInput load_graph_input(const fs::path& path)
{
    require_file(path, "graph file");
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, "not valid JSON: " + std::string(e.what()), path.string());
    }
    GraphInput in;
    if (doc.is_object() && doc.contains("graph")) {
        in.flat = parse_flat(doc);
    } else {
        in.hier = parse_hier(doc);
        in.flat = hier_to_flat(*in.hier);
    }
    return in;
}

int graph_depth(const FlatGraph& f)
{
    int depth = 0;
    for (const auto& [id, st] : node_stats(f)) {
        depth = std::max(depth, static_cast<int>(st.ancestor_chain.size()) + 1);
    }
    return depth;
}

std::string graph_summary(const FlatGraph& f)
{
    std::map<std::string, std::string> names;
    std::set<std::string> has_parent;
    for (const auto& n : f.nodes) {
        names[n.id] = n.name.empty() ? n.id : n.name;
        for (const auto& c : n.children) {
            has_parent.insert(c);
        }
    }
    std::string out;
    for (const auto& n : f.nodes) {
        if (!has_parent.contains(n.id)) {
            out += "The system " + names[n.id] + ".";
        }
    }
    for (const auto& n : f.nodes) {
        if (n.children.empty()) {
            continue;
        }
        out += " " + names[n.id] + " contains";
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            out += (i == 0 ? " " : ", ") + names[n.children[i]];
        }
        out += ".";
    }
    for (const auto& e : f.edges) {
        out += " " + names[e.source] + " sends " + (e.name.empty() ? std::string("data") : e.name) + " to " +
               names[e.target] + ".";
    }
    return out;
}

std::vector<SampleInputs> discover_samples(const fs::path& dir)
{
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::IoError, "sample directory not found: " + dir.string(), dir.string());
    }
    auto find_input = [](const fs::path& sdir, const std::string& stem) -> fs::path {
        for (const char* ext : {".json", ".png", ".jpg", ".jpeg", ".webp", ".gif", ".svg"}) {
            const fs::path p = sdir / (stem + ext);
            if (fs::is_regular_file(p)) {
                return p;
            }
        }
        return sdir / (stem + ".json");
    };
    std::vector<SampleInputs> samples;
    for (const auto& name : sorted_subdirs(dir)) {
        const fs::path sdir = dir / name;
        SampleInputs in;
        in.sample_id = name;
        in.gen = find_input(sdir, "gen");
        in.gt = find_input(sdir, "gt");
        if (fs::is_regular_file(sdir / "paper.txt")) {
            in.paper = sdir / "paper.txt";
        }
        samples.push_back(std::move(in));
    }
    return samples;
}

std::vector<CandidateImage> load_candidates(const fs::path& dir)
{
    std::map<std::string, std::string> captions;
    if (fs::is_regular_file(dir / "captions.json")) {
        const json doc = json::parse(read_file(dir / "captions.json"));
        if (!doc.is_object()) {
            throw Error(ErrorCode::ParseError, "captions.json must map image ids to captions",
                        (dir / "captions.json").string());
        }
        for (const auto& [k, v] : doc.items()) {
            captions[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    std::vector<CandidateImage> images;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_image_path(entry.path())) {
            continue;
        }
        CandidateImage c;
        c.id = entry.path().stem().string();
        c.path = entry.path().string();
        if (auto it = captions.find(c.id); it != captions.end()) {
            c.caption = it->second;
        } else if (auto side = fs::path(entry.path()).replace_extension(".txt"); fs::is_regular_file(side)) {
            c.caption = read_file(side);
        }
        images.push_back(std::move(c));
    }
    std::sort(images.begin(), images.end(),
              [](const CandidateImage& a, const CandidateImage& b) { return natural_less(a.id, b.id); });
    return images;
}

namespace {

std::map<std::string, std::string> module_texts(const FlatGraph& f)
{
    std::map<std::string, std::string> out;
    for (const auto& n : f.nodes) {
        out[n.id] = n.name;
    }
    return out;
}

// Layout score for graph-only inputs: defects of our own layout of the generated graph.
DefectCounts own_layout_defects(const GraphInput& gen, const LayoutStyle& style)
{
    HierGraph g = gen.hier ? *gen.hier : flat_to_hier(gen.flat).graph;
    if (!validate(g).empty()) {
        g = prune_violations(g).graph;
    }
    const LayoutGeometry geom = layout_graph(g, style);
    return count_defects_serial(g, geom, style);
}

void semantic_scores(ScoreReport& r, const FlatGraph& gen, const FlatGraph& gt, const RunConfig& cfg,
                     const SimilarityProvider& provider)
{
    const MatchResult m = match_two_rounds(gen, gt, cfg.match, provider);
    r.node = node_consistency(m, gt);
    r.edge = edge_consistency(m, gen, gt);
    r.hierarchy = hierarchy_consistency(m, gen, gt);
    r.provider_id = m.provider_id;
    if (m.provider_degraded) {
        r.notes.push_back("similarity provider degraded to tf-cosine");
    }
}

void mark_undetermined(ScoreReport& r, const std::string& what, const Error& e)
{
    r.undetermined.push_back(what);
    r.notes.push_back(what + ": " + std::string(to_string(e.code())) + ": " + e.what());
}

}  // namespace

ScoreReport score_sample(const SampleInputs& in, const RunConfig& cfg, AgentGateway* gateway)
{
    require_file(in.gen, "generated input");
    require_file(in.gt, "reference input");
    const bool gen_image = is_image_path(in.gen);
    const bool gt_image = is_image_path(in.gt);
    if (gen_image != gt_image) {
        throw Error(ErrorCode::InvalidConfig, "input-type mismatch: --gen and --gt must both be graphs or both images");
    }

    ScoreReport r;
    r.sample_id = in.sample_id;
    r.config_hash = config_hash(cfg);

    if (!gen_image) {
        const auto provider = make_provider(cfg, true);
        const GraphInput gen = load_graph_input(in.gen);
        const GraphInput gt = load_graph_input(in.gt);
        semantic_scores(r, gen.flat, gt.flat, cfg, *provider);
        r.counts = own_layout_defects(gen, cfg.layout);
        r.layout = layout_score(*r.counts, cfg.layout_delta);
        r.icon = icon_relevance({}, {}, *provider);
        r.understanding = understanding_similarity(graph_summary(gen.flat), graph_summary(gt.flat), *provider);
        r.legibility = 1.0;
        r.notes.push_back("graph-only mode: layout from generated geometry, icon neutral, understanding from graph "
                          "summaries, legibility 1.0");
        finalize_report(r, cfg.semantic, cfg.tiers);
        return r;
    }

    if (gateway == nullptr) {
        throw Error(ErrorCode::InvalidConfig, "image inputs need an agent transport");
    }
    if (!in.paper) {
        throw Error(ErrorCode::InvalidConfig, "image inputs need the paper text (paper.txt or --paper)");
    }
    require_file(*in.paper, "paper text");
    const std::string paper = read_file(*in.paper);
    const auto provider = make_provider(cfg, false);
    const ImagePart gen_img = load_image(in.gen.string());
    const ImagePart gt_img = load_image(in.gt.string());

    std::optional<FlatGraph> gen_graph;
    std::optional<FlatGraph> gt_graph;
    try {
        gen_graph = extract_graph(*gateway, gen_img, paper);
    } catch (const Error& e) {
        mark_undetermined(r, "extract_gen", e);
    }
    try {
        gt_graph = extract_graph(*gateway, gt_img, paper);
    } catch (const Error& e) {
        mark_undetermined(r, "extract_gt", e);
    }
    if (gen_graph && gt_graph) {
        semantic_scores(r, *gen_graph, *gt_graph, cfg, *provider);
    } else {
        r.undetermined.push_back("semantic");
    }

    try {
        r.counts = examine_layout(*gateway, gen_img);
        r.layout = layout_score(*r.counts, cfg.layout_delta);
    } catch (const Error& e) {
        mark_undetermined(r, "layout", e);
    }

    if (gen_graph) {
        try {
            const auto icons = examine_icons(*gateway, gen_img, paper, *gen_graph);
            r.icon = icon_relevance(icons, module_texts(*gen_graph), *provider);
        } catch (const Error& e) {
            mark_undetermined(r, "icon", e);
        }
    } else {
        r.undetermined.push_back("icon");
    }

    if (gen_graph && gt_graph) {
        try {
            const std::string s_gen = understand_system(*gateway, gen_img, paper, *gen_graph);
            const std::string s_gt = understand_system(*gateway, gt_img, paper, *gt_graph);
            r.understanding = understanding_similarity(s_gen, s_gt, *provider);
        } catch (const Error& e) {
            mark_undetermined(r, "understanding", e);
        }
    } else {
        r.undetermined.push_back("understanding");
    }

    try {
        r.legibility = text_legibility_score(examine_legibility(*gateway, gen_img), cfg.legibility_delta);
    } catch (const Error& e) {
        mark_undetermined(r, "legibility", e);
    }

    if (r.provider_id.empty()) {
        r.provider_id = provider->id();
    }
    finalize_report(r, cfg.semantic, cfg.tiers);
    return r;
}

// ---------------------------------------------------------------------------
// Entry point

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Architecture diagram generation and evaluation toolkit", "sysarch"};
    app.set_version_flag("--version", std::string(SYSARCH_VERSION));
    app.require_subcommand(1);
    app.fallthrough();

    Globals globals;
    app.add_option("--config", globals.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--mock", globals.mock_path, "Canned agent responses (digest -> reply)")->check(CLI::ExistingFile);
    app.add_flag("-v,--verbose", globals.verbose, "Log agent calls to stderr");

    std::string input;
    std::string output;

    auto* validate_cmd = app.add_subcommand("validate", "Check a graphJSON file against the schema and sibling rule");
    validate_cmd->add_option("input", input, "graphJSON file")->required();

    RegularizeOpts reg;
    auto* regularize_cmd = app.add_subcommand("regularize", "Repair or prune edges that break the sibling rule");
    regularize_cmd->add_option("input", reg.input, "graphJSON file")->required();
    regularize_cmd->add_option("-o,--output", reg.output, "Output graph (stdout when omitted)");
    regularize_cmd->add_option("--report", reg.report, "Write the regularization report here");
    regularize_cmd->add_flag("--semantic", reg.semantic, "Ask the architect agent for reroutes first");

    std::string gen;
    std::string gt;
    auto* match_cmd = app.add_subcommand("match", "Align the nodes of two graphs");
    match_cmd->add_option("--gen", gen, "Generated graph (nested or flat)")->required();
    match_cmd->add_option("--gt", gt, "Reference graph (nested or flat)")->required();
    match_cmd->add_option("-o,--output", output, "Output file (stdout when omitted)");

    ScoreOpts score;
    auto* score_cmd = app.add_subcommand("score", "Score a generated diagram against a reference");
    score_cmd->add_option("--gen", score.gen, "Generated graph or image");
    score_cmd->add_option("--gt", score.gt, "Reference graph or image");
    score_cmd->add_option("--paper", score.paper, "Paper text (image mode)");
    score_cmd->add_option("--sample-id", score.sample_id, "Sample id recorded in the report");
    score_cmd->add_option("--batch", score.batch, "Directory of <sample>/{gen,gt}.* inputs");
    score_cmd->add_option("-o,--output", score.output, "Report file, or output directory with --batch");

    std::string paper;
    auto* generate_cmd = app.add_subcommand("generate", "Run the generation pipeline on a paper");
    generate_cmd->add_option("--paper", paper, "Paper text file")->required();
    generate_cmd->add_option("--out", output, "Artifact directory")->required();

    LayoutOpts lay;
    auto* layout_cmd = app.add_subcommand("layout", "Lay out a graph and write the layout JSON");
    layout_cmd->add_option("input", lay.input, "graphJSON file")->required();
    layout_cmd->add_option("-o,--output", lay.output, "Layout JSON (stdout when omitted)");
    layout_cmd->add_option("--svg", lay.svg, "Also write the SVG rendering");

    auto* render_cmd = app.add_subcommand("render", "Render a graph to SVG");
    render_cmd->add_option("input", input, "graphJSON file")->required();
    render_cmd->add_option("-o,--output", output, "SVG file (stdout when omitted)");

    LayoutOpts exp;
    auto* export_cmd = app.add_subcommand("export-layout", "Write the layout JSON consumed by the slide exporter");
    export_cmd->add_option("input", exp.input, "graphJSON file")->required();
    export_cmd->add_option("-o,--output", exp.output, "Layout JSON (stdout when omitted)");
    export_cmd->add_option("--units-per-inch", exp.units_per_inch, "Layout units per slide inch")
        ->check(CLI::PositiveNumber);

    std::string image;
    auto* extract_cmd = app.add_subcommand("extract", "Extract a flat graph from a diagram image");
    extract_cmd->add_option("--image", image, "Diagram image")->required();
    extract_cmd->add_option("--paper", paper, "Paper text used as context");
    extract_cmd->add_option("-o,--output", output, "Output file (stdout when omitted)");

    std::string dir;
    double threshold = -1;
    auto* filter_cmd = app.add_subcommand("filter", "Pick the architecture figure among candidate images");
    filter_cmd->add_option("--candidates", dir, "Directory of <paper_id>/{abstract.txt, images}")->required();
    filter_cmd->add_option("-o,--output", output, "Manifest file (stdout when omitted)");
    filter_cmd->add_option("--threshold", threshold, "Keep images strictly above this confidence");

    auto* stats_cmd = app.add_subcommand("stats", "Per-domain dataset statistics");
    stats_cmd->add_option("dir", dir, "Directory of <sample>/{gt.json|graph.json, meta.json}")->required();
    stats_cmd->add_option("-o,--output", output, "Write the JSON report here");

    int repeats = 5;
    auto* stability_cmd = app.add_subcommand("stability", "Repeat scoring and report the spread per sample");
    stability_cmd->add_option("--batch", dir, "Directory of <sample>/{gen,gt}.* inputs")->required();
    stability_cmd->add_option("--repeats", repeats, "Runs per sample (at least 2)");
    stability_cmd->add_option("-o,--output", output, "Write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ExitOk : ExitUsage;
    }

    try {
        if (*validate_cmd) {
            return cmd_validate(input, out, err);
        }
        if (*regularize_cmd) {
            return cmd_regularize(reg, globals, out, err);
        }
        if (*match_cmd) {
            return cmd_match(gen, gt, output, globals, out);
        }
        if (*score_cmd) {
            return cmd_score(score, globals, out, err);
        }
        if (*generate_cmd) {
            return cmd_generate(paper, output, globals, out, err);
        }
        if (*layout_cmd) {
            return cmd_layout(lay, globals, out, err, true);
        }
        if (*render_cmd) {
            return cmd_render(input, output, globals, out);
        }
        if (*export_cmd) {
            return cmd_layout(exp, globals, out, err, false);
        }
        if (*extract_cmd) {
            return cmd_extract(image, paper, output, globals, out, err);
        }
        if (*filter_cmd) {
            return cmd_filter(dir, output, threshold, globals, out, err);
        }
        if (*stats_cmd) {
            return cmd_stats(dir, output, out, err);
        }
        if (*stability_cmd) {
            return cmd_stability(dir, repeats, output, globals, out, err);
        }
    } catch (const Error& e) {
        report_error(err, e);
        return ExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return ExitUsage;
    }
    return ExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.emplace_back("sysarch");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) {
        argv.push_back(s.data());
    }
    argv.push_back(nullptr);
    return run_cli(static_cast<int>(storage.size()), argv.data(), out, err);
}

}  // namespace sysarch
