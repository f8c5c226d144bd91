#include <doctest.h>

#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <unistd.h>

#include "sysarch/cli.hpp"
#include "test_support.hpp"

using namespace sysarch;
using namespace testing_support;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args)
{
    std::ostringstream out;
    std::ostringstream err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag)
        : path_(std::filesystem::temp_directory_path() / ("sysarch_cli_" + tag + "_" + std::to_string(::getpid())))
    {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

nlohmann::json json_of(const std::string& text)
{
    return nlohmann::json::parse(text);
}

struct Shape {
    int nodes = 0;
    int edges = 0;
    int depth = 0;
};

// Counts straight from the flat JSON document: every listed node and edge, and
// the longest root-to-leaf chain of node entries.
Shape shape_of(const nlohmann::json& doc)
{
    const nlohmann::json& g = doc.contains("graph") ? doc["graph"] : doc;
    std::map<std::string, std::vector<std::string>> kids;
    std::set<std::string> child_ids;
    for (const auto& n : g["nodes"]) {
        for (const auto& c : n["children"]) {
            kids[n["id"]].push_back(c);
            child_ids.insert(c);
        }
    }
    std::function<int(const std::string&)> depth = [&](const std::string& id) {
        int d = 0;
        for (const auto& c : kids[id]) {
            d = std::max(d, depth(c));
        }
        return d + 1;
    };
    Shape s;
    s.nodes = static_cast<int>(g["nodes"].size());
    s.edges = static_cast<int>(g["edges"].size());
    for (const auto& n : g["nodes"]) {
        if (!child_ids.contains(n["id"].get<std::string>())) {
            s.depth = std::max(s.depth, depth(n["id"]));
        }
    }
    return s;
}

}  // namespace

TEST_SUITE("cli-harness")
{
    TEST_CASE("a missing reference input is a usage error and writes no report")
    {
        TempDir tmp("missing");
        const auto report = tmp.path() / "report.json";
        const auto r = cli({"score", "--gen", fixture("example.graph.json").string(), "--gt",
                            (tmp.path() / "absent.json").string(), "-o", report.string()});
        CHECK(r.code == ExitUsage);
        CHECK(r.err.find("IO_ERROR") != std::string::npos);
        CHECK_FALSE(std::filesystem::exists(report));
    }

    TEST_CASE("mixing a graph and an image is a usage error")
    {
        const auto r = cli({"score", "--gen", fixture("example.graph.json").string(), "--gt",
                            fixture("case/case01/gt.png").string()});
        CHECK(r.code == ExitUsage);
        CHECK(r.err.find("input-type mismatch") != std::string::npos);
    }

    TEST_CASE("stability needs at least two repeats")
    {
        const auto r = cli({"stability", "--batch", fixture("stability").string(), "--repeats", "1"});
        CHECK(r.code == ExitUsage);
    }

    TEST_CASE("unknown configuration keys are rejected")
    {
        TempDir tmp("config");
        const auto cfg = tmp.path() / "cfg.json";
        write_file_atomic(cfg, R"({"bogus_key": 1})");
        const auto r = cli({"--config", cfg.string(), "score", "--gen", fixture("example.graph.json").string(),
                            "--gt", fixture("example.graph.json").string()});
        CHECK(r.code == ExitUsage);
        CHECK(r.err.find("bogus_key") != std::string::npos);
    }

    TEST_CASE("stats over an empty directory")
    {
        TempDir tmp("empty");
        const auto out = tmp.path() / "stats.json";
        const auto r = cli({"stats", tmp.path().string(), "-o", out.string()});
        CHECK(r.code == ExitOk);
        const auto doc = json_of(read_file(out));
        CHECK(doc["samples"] == 0);
        CHECK(doc["domains"].empty());
    }

    TEST_CASE("stats per domain match counts taken directly from the files")
    {
        TempDir tmp("stats");
        const auto out = tmp.path() / "stats.json";
        const auto r = cli({"stats", fixture("stats").string(), "-o", out.string()});
        CHECK(r.code == ExitOk);
        const auto doc = json_of(read_file(out));

        std::map<std::string, std::vector<Shape>> by_domain;
        int counted = 0;
        int broken = 0;
        for (const auto& entry : std::filesystem::directory_iterator(fixture("stats"))) {
            const auto meta = json_of(read_file(entry.path() / "meta.json"));
            nlohmann::json graph;
            try {
                graph = json_of(read_file(entry.path() / "gt.json"));
            } catch (const nlohmann::json::exception&) {
                ++broken;
                continue;
            }
            by_domain[meta["domain"]].push_back(shape_of(graph));
            ++counted;
        }
        REQUIRE(counted == 9);
        CHECK(doc["samples"] == counted);
        CHECK(doc["warnings"].size() == static_cast<std::size_t>(broken));
        CHECK(doc["domains"].size() == by_domain.size());
        for (const auto& [domain, shapes] : by_domain) {
            CAPTURE(domain);
            const auto& d = doc["domains"][domain];
            CHECK(d["count"] == shapes.size());
            auto check_field = [&](const char* field, int Shape::*member) {
                double sum = 0;
                int lo = 1 << 30;
                int hi = 0;
                for (const auto& s : shapes) {
                    sum += s.*member;
                    lo = std::min(lo, s.*member);
                    hi = std::max(hi, s.*member);
                }
                CAPTURE(field);
                CHECK(d[field]["mean"].get<double>() == doctest::Approx(sum / shapes.size()).epsilon(0.005));
                CHECK(d[field]["min"].get<double>() == lo);
                CHECK(d[field]["max"].get<double>() == hi);
            };
            check_field("nodes", &Shape::nodes);
            check_field("edges", &Shape::edges);
            check_field("depth", &Shape::depth);
        }
    }

    TEST_CASE("filter over the candidate fixture")
    {
        const auto r = cli({"--mock", fixture("mock/filter.json").string(), "filter", "--candidates",
                            fixture("filter").string()});
        // One paper's agent call fails, so the run is partial.
        CHECK(r.code == ExitPartial);
        const auto doc = json_of(r.out);
        std::map<std::string, nlohmann::json> rows;
        for (const auto& row : doc["rows"]) {
            rows[row["paper_id"].get<std::string>() + "/" + row["image_id"].get<std::string>()] = row;
        }
        REQUIRE(rows.size() == 8);
        CHECK(rows["p1/fig1"]["selected"] == true);
        CHECK(rows["p1/fig2"]["kept"] == true);
        CHECK(rows["p1/fig2"]["selected"] == false);
        CHECK(rows["p1/fig3"]["kept"] == false);
        CHECK(rows["p2/fig1"]["kept"] == false);
        CHECK(rows["p2/fig2"]["selected"] == false);
        CHECK(rows["p3/fig1"]["undetermined"] == true);
        CHECK(rows["p3/fig1"]["error"].get<std::string>().find("AGENT_UNAVAILABLE") != std::string::npos);
        // 0.75 is not above the threshold; 0.76 is.
        CHECK(rows["p4/fig1"]["kept"] == false);
        CHECK(rows["p4/fig2"]["selected"] == true);
    }

    TEST_CASE("stability under the mock transport has zero spread")
    {
        const auto r = cli({"--mock", fixture("mock/stability.json").string(), "stability", "--batch",
                            fixture("stability").string(), "--repeats", "5"});
        CHECK(r.code == ExitOk);
        const auto doc = json_of(r.out);
        CHECK(doc["samples"].size() == 10);
        CHECK(doc["max_range"] == 0.0);
    }

    TEST_CASE("scoring a graph against itself offline")
    {
        const std::string g = fixture("example.graph.json").string();
        const auto r = cli({"score", "--gen", g, "--gt", g});
        CHECK(r.code == ExitOk);
        const auto doc = json_of(r.out);
        CHECK(doc["semantic"]["combined"] == 100.0);
        CHECK(doc["layout"]["score"] == 100.0);
        // Visual is (icon neutral 0.5 + 1 + 1) / 3.
        CHECK(doc["overall"].get<double>() == doctest::Approx(0.3 * 100 + 0.3 * 100 + 0.4 * 250.0 / 3).epsilon(0.001));
        CHECK(doc["partial"] == false);
    }

    TEST_CASE("the image case reproduces its golden report")
    {
        const auto r = cli({"--mock", fixture("mock/case.json").string(), "score", "--gen",
                            fixture("case/case01/gen.png").string(), "--gt", fixture("case/case01/gt.png").string(),
                            "--paper", fixture("case/case01/paper.txt").string(), "--sample-id", "case01"});
        CHECK(r.code == ExitOk);
        CHECK(r.out == read_file(golden("case/case01.report.json")));
    }

    TEST_CASE("generate, layout and render reproduce the end-to-end goldens")
    {
        TempDir tmp("e2e");
        const auto out = tmp.path() / "run";
        REQUIRE(cli({"--mock", fixture("mock/generate.json").string(), "generate", "--paper",
                     fixture("e2e/paper.txt").string(), "--out", out.string()})
                    .code == ExitOk);
        const auto graph = out / "05_final.graph.json";
        CHECK(read_file(graph) == read_file(golden("e2e/05_final.graph.json")));
        const auto layout = tmp.path() / "layout.json";
        const auto svg = tmp.path() / "final.svg";
        CHECK(cli({"layout", graph.string(), "-o", layout.string()}).code == ExitOk);
        CHECK(cli({"render", graph.string(), "-o", svg.string()}).code == ExitOk);
        CHECK(read_file(layout) == read_file(golden("e2e/layout.json")));
        CHECK(read_file(svg) == read_file(golden("e2e/final.svg")));
    }

    TEST_CASE("unknown subcommands are usage errors")
    {
        CHECK(cli({"frobnicate"}).code == ExitUsage);
        CHECK(cli({}).code == ExitUsage);
    }
}
