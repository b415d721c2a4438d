// darkscan — deterministic dark-pattern detection over captured page
// snapshots, plus the synthetic-corpus and evaluation tooling.
//
// Exit codes: 0 success (scan: benign verdict), 2 input/configuration
// error, 3 scan found a dark verdict, 4 partial capture.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "darkscan/bundle.hpp"
#include "darkscan/default_rules.hpp"
#include "darkscan/detector.hpp"
#include "darkscan/eval.hpp"
#include "darkscan/generator.hpp"
#include "darkscan/rules.hpp"
#include "darkscan/scoring.hpp"
#include "darkscan/version.hpp"
#include "darkscan/webdriver.hpp"

namespace fs = std::filesystem;
using namespace darkscan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitDark = 3;
constexpr int kExitPartialCapture = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write file: " + path);
    out << bytes;
    if (!out) throw UsageError("write failed: " + path);
}

RuleSet load_rules(const std::string& rules_path, const std::vector<std::string>& overrides) {
    RuleSet rules = rules_path.empty() ? default_rules() : parse_rules(read_file(rules_path));
    for (const auto& spec : overrides) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) {
            throw UsageError("--threshold expects name=value, got '" + spec + "'");
        }
        const std::string name = spec.substr(0, eq);
        double value = 0;
        try {
            value = std::stod(spec.substr(eq + 1));
        } catch (const std::exception&) {
            throw UsageError("--threshold " + name + ": value is not a number");
        }
        apply_threshold_override(rules.thresholds, name, value);
    }
    return rules;
}

void print_violations(const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

int cmd_scan(const std::string& bundle_path, const std::string& rules_path,
             const std::string& out_path, const std::string& format_name, bool lenient,
             const std::vector<std::string>& overrides, const std::string& timestamp) {
    const RuleSet rules = load_rules(rules_path, overrides);
    const auto format = report_format_from_name(format_name);
    if (!format) throw UsageError("unknown format: " + format_name);

    const SnapshotBundle bundle = load_snapshot_bundle(bundle_path, lenient);
    DetectorConfig cfg;
    cfg.generated_at = timestamp;
    const Report report = analyze_bundle(bundle, rules, cfg);
    const std::string bytes = render_report(report, *format);
    if (out_path.empty()) {
        std::cout << bytes;
    } else {
        write_file(out_path, bytes);
    }
    return report.dark_verdict ? kExitDark : kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const std::string& manifest_path, const std::string& rules_path, int k,
             std::uint64_t seed, const std::string& out_path,
             const std::vector<std::string>& overrides, unsigned jobs) {
    const RuleSet rules = load_rules(rules_path, overrides);
    const auto corpus = load_corpus_manifest(manifest_path);
    const EvalRun run = run_eval(corpus, rules, k, seed, jobs);
    const std::string bytes = eval_run_json(run);
    if (out_path.empty()) {
        std::cout << bytes;
    } else {
        write_file(out_path, bytes);
    }
    std::cerr << "evaluated " << run.items.size() << " items (" << run.excluded.size()
              << " excluded), mean " << run.mean_page_time_ms << " ms/page\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

int cmd_gen(int count, double dark_ratio, std::uint64_t seed, const std::string& out_dir) {
    const auto plan = corpus_plan(count, dark_ratio, seed);
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "bundles", ec);
    if (ec) throw UsageError("cannot create output directory: " + out_dir);

    json manifest = json::array();
    int dark = 0;
    for (const auto& item : plan) {
        const GeneratedPage page = generate_page(item.page, item.seed);
        const std::string rel = "bundles/" + item.filename;
        write_file((fs::path(out_dir) / rel).string(), serialize_snapshot_bundle(page.bundle));
        manifest.push_back({{"path", rel}, {"label", page.dark_label ? "dark" : "benign"}});
        dark += page.dark_label ? 1 : 0;
    }
    write_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cerr << "wrote " << plan.size() << " bundles (" << dark << " dark, "
              << (plan.size() - dark) << " benign) to " << out_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// rules-validate
// ---------------------------------------------------------------------------

int cmd_rules_validate(const std::string& rules_path) {
    RuleSet rules;
    if (rules_path.empty()) {
        rules = default_rules();
        std::cout << "validating bundled default ruleset\n";
    } else {
        rules = parse_rules(read_file(rules_path));
    }
    std::map<Category, int> per_category;
    for (const auto& rule : rules.category_rules) per_category[rule.category] += 1;
    for (Category c : kAllCategories) {
        std::cout << "category " << category_letter(c) << ": " << per_category[c] << " rule(s)\n";
    }
    std::cout << "roles: " << rules.role_rules.size() << " rule(s)\n";
    std::cout << "lexicons: " << rules.lexicons.urgency.size() << " urgency, "
              << rules.lexicons.valence.size() << " valence, "
              << rules.lexicons.deceptive_features.size() << " deceptive features\n";
    if (rules.category_rules.empty()) {
        std::cout << "warning: no category rules; nothing will ever be flagged\n";
    }
    std::cout << "ok\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// crawl
// ---------------------------------------------------------------------------

int cmd_crawl(const std::string& url, const std::string& plan_path, const std::string& out_path,
              std::string endpoint, int timeout_ms, int retries) {
    if (endpoint.empty()) {
        if (const char* env = std::getenv("DARKSCAN_WEBDRIVER_URL")) endpoint = env;
    }
    if (endpoint.empty()) {
        throw UsageError("no WebDriver endpoint; pass --webdriver or set DARKSCAN_WEBDRIVER_URL");
    }
    CapturePlan plan = plan_path.empty() ? CapturePlan{} : parse_capture_plan(read_file(plan_path));
    if (!url.empty()) plan.url = url;
    if (plan.url.empty()) throw UsageError("no target url; pass one or set it in the plan");
    if (plan.actions.empty()) {
        plan.actions = {PlanAction{PlanAction::Kind::RecordState, "", 0}};
    }
    if (timeout_ms > 0) plan.timeout_ms = timeout_ms;

    WebDriverOptions options;
    options.endpoint = endpoint;
    options.timeout_ms = plan.timeout_ms;
    options.connect_retries = retries;

    CaptureClient client(options);
    const CaptureResult result = client.run_plan(plan);
    write_file(out_path, serialize_snapshot_bundle(result.bundle));
    if (result.partial) {
        for (const auto& e : result.errors) std::cerr << "capture error: " << e << "\n";
        std::cerr << "partial capture: " << result.bundle.snapshots.size() << " state(s)\n";
        return kExitPartialCapture;
    }
    std::cerr << "captured " << result.bundle.snapshots.size() << " state(s) to " << out_path
              << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dark pattern detection over captured web-page snapshots"};
    app.set_version_flag("--version", kEngineVersion);
    app.require_subcommand(1);

    std::string rules_path, out_path, format_name = "json", timestamp, bundle_path;
    std::vector<std::string> overrides;
    bool lenient = false;

    auto* scan = app.add_subcommand("scan", "analyze a snapshot bundle and write a report");
    scan->add_option("bundle", bundle_path, "snapshot bundle JSON")->required();
    scan->add_option("--rules", rules_path, "rules YAML (default: bundled ruleset)");
    scan->add_option("--out", out_path, "report path (default: stdout)");
    scan->add_option("--format", format_name, "json|summary")->capture_default_str();
    scan->add_flag("--lenient", lenient, "accept unknown bundle keys");
    scan->add_option("--threshold", overrides, "override, e.g. escape_opacity=0.25");
    scan->add_option("--timestamp", timestamp, "canonical report timestamp");

    std::string manifest_path;
    int k = 5;
    std::uint64_t seed = 0;
    unsigned jobs = 0;
    auto* eval = app.add_subcommand("eval", "run cross-validated evaluation over a corpus");
    eval->add_option("manifest", manifest_path, "corpus manifest JSON")->required();
    eval->add_option("--rules", rules_path, "rules YAML (default: bundled ruleset)");
    eval->add_option("--k", k, "fold count")->capture_default_str();
    eval->add_option("--seed", seed, "fold shuffle seed")->capture_default_str();
    eval->add_option("--out", out_path, "eval run path (default: stdout)");
    eval->add_option("--threshold", overrides, "override, e.g. dlp_min=0.8");
    eval->add_option("--jobs", jobs, "parallel workers (default: hardware)");

    int count = 0;
    double dark_ratio = 0.5;
    std::string out_dir;
    auto* gen = app.add_subcommand("gen", "generate a labeled synthetic corpus");
    gen->add_option("--count", count, "number of bundles")->required();
    gen->add_option("--dark-ratio", dark_ratio, "fraction of dark pages")->capture_default_str();
    gen->add_option("--seed", seed, "generator seed")->capture_default_str();
    gen->add_option("--out", out_dir, "output directory")->required();

    std::string rv_path;
    auto* rules_validate =
        app.add_subcommand("rules-validate", "check a rules file and summarize it");
    rules_validate->add_option("rules", rv_path, "rules YAML (default: bundled ruleset)");

    std::string url, plan_path, endpoint;
    int timeout_ms = 0, retries = 0;
    auto* crawl = app.add_subcommand("crawl", "capture a live site through a WebDriver endpoint");
    crawl->add_option("url", url, "target url (overrides the plan's url)");
    crawl->add_option("--plan", plan_path, "capture plan JSON");
    crawl->add_option("--out", out_path, "bundle output path")->required();
    crawl->add_option("--webdriver", endpoint, "endpoint (or DARKSCAN_WEBDRIVER_URL)");
    crawl->add_option("--timeout", timeout_ms, "per-request timeout ms");
    crawl->add_option("--retries", retries, "connection retries");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInputError;
    }

    try {
        if (scan->parsed()) {
            return cmd_scan(bundle_path, rules_path, out_path, format_name, lenient, overrides,
                            timestamp);
        }
        if (eval->parsed()) {
            return cmd_eval(manifest_path, rules_path, k, seed, out_path, overrides, jobs);
        }
        if (gen->parsed()) {
            return cmd_gen(count, dark_ratio, seed, out_dir);
        }
        if (rules_validate->parsed()) {
            return cmd_rules_validate(rv_path);
        }
        if (crawl->parsed()) {
            return cmd_crawl(url, plan_path, out_path, endpoint, timeout_ms, retries);
        }
    } catch (const ParseError& e) {
        print_violations(e);
        return kExitInputError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}
