// Drives the built darkscan binary end to end. The binary path arrives in
// DARKSCAN_BIN (set by ctest).

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "support/mock_webdriver.hpp"

namespace fs = std::filesystem;
namespace ts = testing_support;
using nlohmann::json;

namespace {

std::string binary() {
    const char* bin = std::getenv("DARKSCAN_BIN");
    REQUIRE(bin != nullptr);
    return bin;
}

int run(const std::string& args, const std::string& extra_env = "") {
    const std::string cmd =
        (extra_env.empty() ? "" : "env " + extra_env + " ") + binary() + " " + args +
        " >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Scratch {
    fs::path dir;

    explicit Scratch(const std::string& name) {
        dir = fs::temp_directory_path() / ("darkscan-cli-" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }

    std::string path(const std::string& rel) const { return (dir / rel).string(); }
};

}  // namespace

TEST_CASE("scan: missing input file exits 2") {
    CHECK(run("scan /nonexistent/bundle.json") == 2);
}

TEST_CASE("scan: generator fixtures drive the verdict exit codes") {
    Scratch scratch("scan");
    REQUIRE(run("gen --count 4 --dark-ratio 0.5 --seed 3 --out " + scratch.path("corpus")) == 0);

    // Items 0..1 are dark, 2..3 benign by the plan layout.
    CHECK(run("scan " + scratch.path("corpus/bundles/item-00000.json") + " --out " +
              scratch.path("r0.json")) == 3);
    CHECK(run("scan " + scratch.path("corpus/bundles/item-00003.json") + " --out " +
              scratch.path("r3.json")) == 0);

    const auto report = json::parse(read_file(scratch.path("r0.json")));
    CHECK(report["verdict"] == "dark");
    CHECK(report["report_version"] == "1.0");
}

TEST_CASE("scan: threshold overrides are honored and type-checked") {
    Scratch scratch("overrides");
    REQUIRE(run("gen --count 2 --dark-ratio 1.0 --seed 2 --out " + scratch.path("c")) == 0);
    // item-00001 is an escape-visibility dark page (kind rotation index 1);
    // seed 2 selects the low-opacity variant (0.12 effective).
    const std::string bundle = scratch.path("c/bundles/item-00001.json");
    CHECK(run("scan " + bundle + " --out " + scratch.path("a.json")) == 3);
    // Dropping the opacity threshold below the page's 0.12 clears the flag.
    CHECK(run("scan " + bundle + " --threshold escape_opacity=0.05 --out " +
              scratch.path("b.json")) == 0);
    CHECK(run("scan " + bundle + " --threshold escape_opacity=nonsense") == 2);
    CHECK(run("scan " + bundle + " --threshold no_such_threshold=1") == 2);
}

TEST_CASE("scan: summary format renders the human view") {
    Scratch scratch("summary");
    REQUIRE(run("gen --count 2 --dark-ratio 1.0 --seed 5 --out " + scratch.path("c")) == 0);
    REQUIRE(run("scan " + scratch.path("c/bundles/item-00000.json") + " --format summary --out " +
                scratch.path("s.txt")) == 3);
    const auto text = read_file(scratch.path("s.txt"));
    CHECK(text.find("verdict: DARK") != std::string::npos);
    CHECK(run("scan " + scratch.path("c/bundles/item-00000.json") + " --format nope") == 2);
}

TEST_CASE("gen: deterministic bytes and exact label counts") {
    Scratch scratch("gen");
    REQUIRE(run("gen --count 10 --dark-ratio 0.5 --seed 1 --out " + scratch.path("a")) == 0);
    REQUIRE(run("gen --count 10 --dark-ratio 0.5 --seed 1 --out " + scratch.path("b")) == 0);

    const auto manifest = json::parse(read_file(scratch.path("a/manifest.json")));
    REQUIRE(manifest.size() == 10);
    int dark = 0;
    for (const auto& item : manifest) dark += item["label"] == "dark" ? 1 : 0;
    CHECK(dark == 5);

    for (const auto& item : manifest) {
        const std::string rel = item["path"].get<std::string>();
        CHECK(read_file(scratch.dir / "a" / rel) == read_file(scratch.dir / "b" / rel));
    }
    CHECK(read_file(scratch.path("a/manifest.json")) == read_file(scratch.path("b/manifest.json")));

    CHECK(run("gen --count 0 --dark-ratio 0.5 --seed 1 --out " + scratch.path("z")) == 2);
    CHECK(run("gen --count 4 --dark-ratio 2.0 --seed 1 --out " + scratch.path("z")) == 2);
}

TEST_CASE("gen piped into eval completes without manual edits") {
    Scratch scratch("pipeline");
    REQUIRE(run("gen --count 20 --dark-ratio 0.5 --seed 9 --out " + scratch.path("c")) == 0);
    REQUIRE(run("eval " + scratch.path("c/manifest.json") + " --k 5 --seed 42 --out " +
                scratch.path("run.json")) == 0);

    const auto doc = json::parse(read_file(scratch.path("run.json")));
    CHECK(doc["folds"].size() == 5);
    CHECK(doc["aggregate"]["overall"]["metrics"]["precision"] == 1.0);
    CHECK(doc["aggregate"]["overall"]["metrics"]["recall"] == 1.0);
}

TEST_CASE("eval: k beyond the class size exits 2; runs are deterministic modulo timing") {
    Scratch scratch("evaldet");
    REQUIRE(run("gen --count 12 --dark-ratio 0.5 --seed 2 --out " + scratch.path("c")) == 0);
    CHECK(run("eval " + scratch.path("c/manifest.json") + " --k 7") == 2);
    CHECK(run("eval " + scratch.path("c/manifest.json") + " --k 1") == 2);

    REQUIRE(run("eval " + scratch.path("c/manifest.json") + " --k 3 --seed 11 --out " +
                scratch.path("a.json")) == 0);
    REQUIRE(run("eval " + scratch.path("c/manifest.json") + " --k 3 --seed 11 --out " +
                scratch.path("b.json")) == 0);
    auto a = json::parse(read_file(scratch.path("a.json")));
    auto b = json::parse(read_file(scratch.path("b.json")));
    a.erase("timing");
    b.erase("timing");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("scan runs are byte-identical for fixed inputs") {
    Scratch scratch("scandet");
    REQUIRE(run("gen --count 2 --dark-ratio 0.5 --seed 21 --out " + scratch.path("c")) == 0);
    const std::string bundle = scratch.path("c/bundles/item-00000.json");
    REQUIRE(run("scan " + bundle + " --out " + scratch.path("r1.json")) == 3);
    REQUIRE(run("scan " + bundle + " --out " + scratch.path("r2.json")) == 3);
    CHECK(read_file(scratch.path("r1.json")) == read_file(scratch.path("r2.json")));
}

TEST_CASE("rules-validate: bundled, broken and empty rule files") {
    Scratch scratch("rules");
    CHECK(run("rules-validate") == 0);

    std::ofstream bad(scratch.path("bad.yaml"));
    bad << "categories:\n  - id: broken\n    category: A\n    predicates:\n"
           "      text_matches: \"([unclosed\"\n";
    bad.close();
    CHECK(run("rules-validate " + scratch.path("bad.yaml")) == 2);

    std::ofstream empty(scratch.path("empty.yaml"));
    empty.close();
    CHECK(run("rules-validate " + scratch.path("empty.yaml")) == 0);
}

TEST_CASE("lenient flag relaxes strict bundle parsing") {
    Scratch scratch("lenient");
    REQUIRE(run("gen --count 2 --dark-ratio 0.0 --seed 4 --out " + scratch.path("c")) == 0);
    auto doc = json::parse(read_file(scratch.path("c/bundles/item-00000.json")));
    doc["snapshots"][0]["vendor_extra"] = {{"x", 1}};
    std::ofstream out(scratch.path("extra.json"), std::ios::binary);
    out << doc.dump(2) << "\n";
    out.close();

    CHECK(run("scan " + scratch.path("extra.json")) == 2);
    CHECK(run("scan --lenient " + scratch.path("extra.json")) == 0);
}

TEST_CASE("crawl: endpoint down exits 2; missing endpoint is a usage error") {
    Scratch scratch("crawl-err");
    std::ofstream plan(scratch.path("plan.json"), std::ios::binary);
    plan << ts::subscription_plan_json().dump(2);
    plan.close();

    CHECK(run("crawl --plan " + scratch.path("plan.json") + " --out " + scratch.path("b.json") +
              " --webdriver http://127.0.0.1:9 --timeout 200") == 2);
    CHECK(run("crawl --plan " + scratch.path("plan.json") + " --out " + scratch.path("b.json"),
              "DARKSCAN_WEBDRIVER_URL=") == 2);
}

TEST_CASE("crawl against the mock endpoint feeds scan (dark and benign variants)") {
    for (bool hidden : {true, false}) {
        ts::MockWebDriver mock;
        ts::install_subscription_site(mock, hidden);
        mock.start();

        Scratch scratch(hidden ? "crawl-dark" : "crawl-benign");
        std::ofstream plan(scratch.path("plan.json"), std::ios::binary);
        plan << ts::subscription_plan_json().dump(2);
        plan.close();

        // Endpoint via environment, per the external interface contract.
        CHECK(run("crawl --plan " + scratch.path("plan.json") + " --out " +
                      scratch.path("bundle.json"),
                  "DARKSCAN_WEBDRIVER_URL=" + mock.endpoint()) == 0);

        const int scan_exit = run("scan " + scratch.path("bundle.json") + " --out " +
                                  scratch.path("report.json"));
        INFO("hidden=" << hidden);
        CHECK(scan_exit == (hidden ? 3 : 0));

        const auto report = json::parse(read_file(scratch.path("report.json")));
        if (hidden) {
            bool category_a = false;
            for (const auto& f : report["findings"]) {
                for (const auto& c : f["categories"]) {
                    if (c == "A" && f["severity"].get<int>() >= 2) category_a = true;
                }
            }
            CHECK(category_a);
        }
        mock.stop();
    }
}

TEST_CASE("crawl: a timeout mid-plan exits 4 and writes the partial bundle") {
    ts::MockWebDriver mock;
    ts::install_subscription_site(mock, false);
    mock.dead_selectors.insert("#cancel");
    mock.start();

    Scratch scratch("crawl-partial");
    std::ofstream plan(scratch.path("plan.json"), std::ios::binary);
    plan << ts::subscription_plan_json().dump(2);
    plan.close();

    CHECK(run("crawl --plan " + scratch.path("plan.json") + " --out " + scratch.path("b.json") +
              " --webdriver " + mock.endpoint()) == 4);
    const auto doc = json::parse(read_file(scratch.path("b.json")));
    CHECK(doc["snapshots"].size() == 2);
    CHECK(doc["manifest"]["capture_errors"].size() == 1);
}

TEST_CASE("unknown flags and missing subcommands exit 2") {
    CHECK(run("scan") == 2);
    CHECK(run("") == 2);
    CHECK(run("gen --count 1 --out /tmp/x --no-such-flag") == 2);
}
