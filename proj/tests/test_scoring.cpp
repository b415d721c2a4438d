#include <catch2/catch_amalgamated.hpp>

#include "darkscan/default_rules.hpp"
#include "darkscan/detector.hpp"
#include "darkscan/scoring.hpp"

#include "support/builders.hpp"

using namespace darkscan;
namespace ts = testing_support;

namespace {

Candidate candidate(std::string element = "e1", std::string snap = "s0",
                    std::set<Category> cats = {Category::A}) {
    Candidate c;
    c.element_id = std::move(element);
    c.snapshot_id = std::move(snap);
    c.categories = std::move(cats);
    c.matched_rule_ids = {"r"};
    return c;
}

TemporalSignal loop_signal(std::string element = "e1") {
    TemporalSignal s;
    s.kind = TemporalKind::ReinforcementLoop;
    s.t_ms = 19000;
    s.evidence = LoopEvidence{42, {10000, 6000, 3000}, {0, 1, 2, 3}, std::move(element)};
    return s;
}

}  // namespace

TEST_CASE("severity mapping") {
    // Taxonomy match only.
    CHECK(score_finding(candidate(), {}, {}).severity == 1);
    // Taxonomy + escape flag + one temporal signal: 1 + 1 + 1.
    CHECK(score_finding(candidate(), {StaticFlag::Escape}, {loop_signal()}).severity == 3);
    // Taxonomy + text flag + three temporal signals: capped at 3.
    CHECK(score_finding(candidate(), {StaticFlag::Text},
                        {loop_signal(), loop_signal(), loop_signal()})
              .severity == 3);
    // Static flags alone: 2. A temporal signal alone: 2.
    CHECK(score_finding(candidate(), {StaticFlag::Salience}, {}).severity == 2);
    CHECK(score_finding(candidate(), {}, {loop_signal()}).severity == 2);
}

TEST_CASE("severity stays in {1,2,3} and never drops when signals are added") {
    ts::Rng rng(61);
    for (int trial = 0; trial < 1000; ++trial) {
        std::set<StaticFlag> flags;
        if (rng.below(2)) flags.insert(StaticFlag::Salience);
        if (rng.below(2)) flags.insert(StaticFlag::Text);
        std::vector<TemporalSignal> signals;
        const int n = rng.int_range(0, 4);
        for (int i = 0; i < n; ++i) signals.push_back(loop_signal());

        const int severity = score_finding(candidate(), flags, signals).severity;
        REQUIRE(severity >= 1);
        REQUIRE(severity <= 3);

        auto more = signals;
        more.push_back(loop_signal());
        const int with_extra = score_finding(candidate(), flags, more).severity;
        REQUIRE(with_extra >= severity);
    }
}

TEST_CASE("assemble_report verdict rules") {
    const auto& rules = default_rules();
    const auto bundle = ts::bundle_of({ts::minimal_snapshot()});

    const auto empty = assemble_report(bundle, {}, rules, "2025-03-01T00:00:00Z");
    CHECK_FALSE(empty.dark_verdict);
    CHECK(empty.findings.empty());

    auto low = score_finding(candidate(), {}, {});
    const auto benign = assemble_report(bundle, {low}, rules, "2025-03-01T00:00:00Z");
    CHECK_FALSE(benign.dark_verdict);  // severity 1 stays below the verdict bar

    auto high = score_finding(candidate(), {StaticFlag::Escape}, {loop_signal()});
    const auto dark = assemble_report(bundle, {high}, rules, "2025-03-01T00:00:00Z");
    CHECK(dark.dark_verdict);
    CHECK(dark.category_counts.at('A') == 1);
    CHECK(dark.category_counts.at('B') == 0);
}

TEST_CASE("findings are sorted by (snapshot_id, element_id)") {
    const auto& rules = default_rules();
    const auto bundle = ts::bundle_of({ts::minimal_snapshot()});
    std::vector<Finding> findings = {
        score_finding(candidate("z", "s1"), {}, {}),
        score_finding(candidate("a", "s1"), {}, {}),
        score_finding(candidate("m", "s0"), {}, {}),
    };
    const auto report = assemble_report(bundle, findings, rules, "t");
    REQUIRE(report.findings.size() == 3);
    CHECK(report.findings[0].element_id == "m");
    CHECK(report.findings[1].element_id == "a");
    CHECK(report.findings[2].element_id == "z");
}

TEST_CASE("report JSON round-trips losslessly") {
    const auto& rules = default_rules();
    const auto bundle = ts::bundle_of({ts::minimal_snapshot()});

    auto f1 = score_finding(candidate("e1", "s0", {Category::A, Category::D}),
                            {StaticFlag::Escape, StaticFlag::Salience}, {loop_signal()});
    HeuristicReadout h;
    h.element_id = "e1";
    h.salience = 2.278;
    h.salience_flag = true;
    h.escape_opacity = 0.12;
    h.escape_flag = true;
    f1.heuristic = h;
    TextReadout tr;
    tr.block_id = "b0";
    tr.dlp = 0.97;
    tr.polarity = -0.8;
    tr.urgency_density = 5.33;
    tr.text_flag = true;
    f1.text = {tr};
    PathReadout pr;
    pr.opt_in_task = "opt_in";
    pr.opt_out_task = "opt_out";
    pr.d_in = 1;
    pr.pis_flag = true;  // d_out unreachable stays nullopt
    f1.path = pr;
    f1.severity = severity_score(true, 1);

    auto latency = TemporalSignal{};
    latency.kind = TemporalKind::LatencyInjection;
    latency.t_ms = 2500;
    latency.evidence = LatencyEvidence{800, 3, 4, "e2"};
    auto relocated = TemporalSignal{};
    relocated.kind = TemporalKind::Relocation;
    relocated.t_ms = 1500;
    relocated.evidence = RelocationEvidence{"e2", 0.45, 5, 2};
    auto f2 = score_finding(candidate("e2", "s0", {Category::E}), {}, {latency, relocated});

    const auto report = assemble_report(bundle, {f1, f2}, rules, "2025-03-01T00:00:00Z");
    const auto bytes = render_report(report, ReportFormat::Json);
    const Report reparsed = parse_report(bytes);
    CHECK(reparsed == report);
    CHECK(render_report(reparsed, ReportFormat::Json) == bytes);
}

TEST_CASE("report rendering is byte-stable") {
    const auto& rules = default_rules();
    const auto bundle = ts::bundle_of({ts::minimal_snapshot()});
    const auto report =
        assemble_report(bundle, {score_finding(candidate(), {}, {})}, rules, "2025-03-01T00:00:00Z");
    CHECK(render_report(report, ReportFormat::Json) == render_report(report, ReportFormat::Json));
}

TEST_CASE("human summary lists findings by severity descending") {
    const auto& rules = default_rules();
    const auto bundle = ts::bundle_of({ts::minimal_snapshot()});

    const auto empty = assemble_report(bundle, {}, rules, "t");
    CHECK(render_report(empty, ReportFormat::HumanSummary).find("0 findings") !=
          std::string::npos);

    std::vector<Finding> findings = {
        score_finding(candidate("e1"), {}, {}),
        score_finding(candidate("e2"), {StaticFlag::Escape}, {loop_signal("e2")}),
        score_finding(candidate("e3"), {StaticFlag::Text}, {}),
    };
    const auto report = assemble_report(bundle, findings, rules, "t");
    const auto summary = render_report(report, ReportFormat::HumanSummary);
    const auto p3 = summary.find("[severity 3]");
    const auto p2 = summary.find("[severity 2]");
    const auto p1 = summary.find("[severity 1]");
    REQUIRE(p3 != std::string::npos);
    REQUIRE(p2 != std::string::npos);
    REQUIRE(p1 != std::string::npos);
    CHECK(p3 < p2);
    CHECK(p2 < p1);
}

// ---------------------------------------------------------------------------
// Pipeline behavior through analyze_bundle
// ---------------------------------------------------------------------------

TEST_CASE("analyze_bundle: findings only reference gated candidates") {
    // A hidden dismiss button that matches no taxonomy rule must not
    // produce a finding even though its escape readout flags.
    RuleSet rules = parse_rules(R"(version: "t"
categories:
  - id: C-scarcity
    category: C
    predicates:
      text_matches: "only \\d+ left"
)");
    auto snap = ts::minimal_snapshot();
    StyleInfo dim;
    dim.opacity = 0.1;
    auto ghost = ts::element("ghost", {10, 10, 20, 20}, dim, "e0");
    ghost.interactive = true;
    ghost.roles = {Role::Dismiss};
    snap.elements.push_back(ghost);

    const auto report = analyze_bundle(ts::bundle_of({snap}), rules);
    CHECK(report.findings.empty());
    CHECK_FALSE(report.dark_verdict);
}

TEST_CASE("analyze_bundle: hidden dismiss under the default rules is a dark finding") {
    auto snap = ts::minimal_snapshot();
    StyleInfo dim;
    dim.opacity = 0.1;
    auto ghost = ts::element("ghost", {10, 10, 96, 28}, dim, "e0");
    ghost.tag = "button";
    ghost.text = "close";
    ghost.interactive = true;
    snap.elements.push_back(ghost);

    const auto report = analyze_bundle(ts::bundle_of({snap}), default_rules());
    REQUIRE(report.findings.size() == 1);
    CHECK(report.findings[0].element_id == "ghost");
    CHECK(report.findings[0].categories.count(Category::A) == 1);
    CHECK(report.findings[0].static_flags.count(StaticFlag::Escape) == 1);
    CHECK(report.findings[0].severity == 2);
    CHECK(report.dark_verdict);
}

TEST_CASE("analyze_bundle derives the canonical timestamp from the input") {
    auto snap = ts::minimal_snapshot();
    snap.captured_at = "2031-05-05T12:00:00Z";
    const auto report = analyze_bundle(ts::bundle_of({snap}), default_rules());
    CHECK(report.generated_at == "2031-05-05T12:00:00Z");

    DetectorConfig cfg;
    cfg.generated_at = "1999-01-01T00:00:00Z";
    const auto pinned = analyze_bundle(ts::bundle_of({snap}), default_rules(), cfg);
    CHECK(pinned.generated_at == "1999-01-01T00:00:00Z");
}
