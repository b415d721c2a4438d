#include <catch2/catch_amalgamated.hpp>

#include "darkscan/temporal.hpp"
#include "darkscan/text.hpp"

#include "support/builders.hpp"

using namespace darkscan;
namespace ts = testing_support;

namespace {

const RoleMap kPremiumRoles = {{"upsell", {Role::PremiumPrompt}}};

std::vector<InteractionEvent> responses(std::initializer_list<std::int64_t> latencies) {
    std::vector<InteractionEvent> events;
    std::int64_t t = 0;
    for (auto l : latencies) {
        events.push_back(ts::response(t, l));
        t += 100;
    }
    return events;
}

}  // namespace

// ---------------------------------------------------------------------------
// Baseline
// ---------------------------------------------------------------------------

TEST_CASE("baseline_latency medians") {
    CHECK(baseline_latency(responses({200}), "site.test") == 200);
    CHECK(baseline_latency(responses({100, 300, 200}), "site.test") == 200);
    // Lower median pinned for even counts.
    CHECK(baseline_latency(responses({100, 200, 300, 400}), "site.test") == 200);
}

TEST_CASE("baseline_latency requires response events for the host") {
    CHECK_THROWS_AS(baseline_latency(responses({200}), "other.host"), NoBaselineError);
    const std::vector<InteractionEvent> none;
    CHECK_THROWS_AS(baseline_latency(none, "site.test"), NoBaselineError);
}

TEST_CASE("baseline is per host") {
    auto events = responses({100, 100, 100});
    events.push_back(ts::response(500, 900, "slow.host"));
    CHECK(baseline_latency(events, "site.test") == 100);
    CHECK(baseline_latency(events, "slow.host") == 900);
}

// ---------------------------------------------------------------------------
// Latency injection
// ---------------------------------------------------------------------------

namespace {

std::vector<InteractionEvent> latency_scenario(std::int64_t injected_latency,
                                               std::int64_t prompt_gap_ms,
                                               bool with_prompt = true) {
    // Baseline responses of 200 ms; one suspicious response at t=1000,
    // optionally followed by an upsell prompt.
    std::vector<InteractionEvent> events = {
        ts::response(0, 200), ts::response(100, 200), ts::response(200, 200),
        ts::response(1000, injected_latency)};
    if (with_prompt) {
        events.push_back(
            ts::prompt(1000 + prompt_gap_ms, "upsell", prompt_hash("Upgrade to Premium")));
    }
    return events;
}

}  // namespace

TEST_CASE("latency injection: excess 700 with a correlated prompt signals") {
    const auto events = latency_scenario(900, 2000);
    const auto signals = detect_latency_injection(events, kPremiumRoles, ThresholdProfile{});
    REQUIRE(signals.size() == 1);
    CHECK(signals[0].kind == TemporalKind::LatencyInjection);
    const auto& ev = std::get<LatencyEvidence>(signals[0].evidence);
    CHECK(ev.excess_ms == 700);
    CHECK(ev.element_id == "upsell");
    CHECK(ev.response_event == 3);
    CHECK(ev.prompt_event == 4);
}

TEST_CASE("latency injection: excess at or below 500 does not signal") {
    // excess 400
    CHECK(detect_latency_injection(latency_scenario(600, 1000), kPremiumRoles, ThresholdProfile{})
              .empty());
    // excess exactly 500: the paper's rule is strict
    CHECK(detect_latency_injection(latency_scenario(700, 1000), kPremiumRoles, ThresholdProfile{})
              .empty());
    // excess 501 signals
    CHECK(detect_latency_injection(latency_scenario(701, 1000), kPremiumRoles, ThresholdProfile{})
              .size() == 1);
}

TEST_CASE("latency injection requires the prompt correlation") {
    CHECK(detect_latency_injection(latency_scenario(900, 0, false), kPremiumRoles,
                                   ThresholdProfile{})
              .empty());
    // Prompt outside the 5000 ms window.
    CHECK(detect_latency_injection(latency_scenario(900, 6000), kPremiumRoles, ThresholdProfile{})
              .empty());
    // Prompt on an element without the premium-prompt role.
    const auto events = latency_scenario(900, 2000);
    CHECK(detect_latency_injection(events, RoleMap{}, ThresholdProfile{}).empty());
}

TEST_CASE("zero-excess logs never signal") {
    ts::Rng rng(43);
    for (int trial = 0; trial < 200; ++trial) {
        const std::int64_t latency = rng.int_range(50, 2000);
        std::vector<InteractionEvent> events;
        const int n = rng.int_range(1, 10);
        for (int i = 0; i < n; ++i) events.push_back(ts::response(i * 100, latency));
        events.push_back(ts::prompt(n * 100, "upsell", 7));
        REQUIRE(detect_latency_injection(events, kPremiumRoles, ThresholdProfile{}).empty());
    }
}

// ---------------------------------------------------------------------------
// Relocation
// ---------------------------------------------------------------------------

namespace {

SalienceStats flagged_stats(const std::string& id) {
    SalienceStats stats;
    stats.index[id] = 10.0;
    stats.flags[id] = true;
    return stats;
}

}  // namespace

TEST_CASE("relocation: flagged button moving 200px after a click signals") {
    // Viewport 1280x720, diagonal 1468.6; the 10% threshold is 146.9 px.
    const Viewport vp{1280, 720};
    std::vector<InteractionEvent> events = {
        ts::click(1000, "cta"),
        ts::mutation(1500, "cta", {100, 100, 200, 50}, {300, 100, 200, 50})};
    const auto signals =
        detect_relocation(events, flagged_stats("cta"), vp, ThresholdProfile{});
    REQUIRE(signals.size() == 1);
    const auto& ev = std::get<RelocationEvidence>(signals[0].evidence);
    CHECK(ev.element_id == "cta");
    CHECK(ev.move_frac == Catch::Approx(200.0 / 1468.60478).epsilon(1e-4));
    CHECK(ev.mutation_event == 1);
    CHECK(ev.input_event == 0);
}

TEST_CASE("relocation: unflagged elements never signal") {
    const Viewport vp{1280, 720};
    std::vector<InteractionEvent> events = {
        ts::click(1000, "cta"),
        ts::mutation(1500, "other", {100, 100, 200, 50}, {900, 500, 200, 50})};
    CHECK(detect_relocation(events, flagged_stats("cta"), vp, ThresholdProfile{}).empty());
    CHECK(detect_relocation(events, SalienceStats{}, vp, ThresholdProfile{}).empty());
}

TEST_CASE("relocation: short moves stay quiet") {
    const Viewport vp{1280, 720};
    std::vector<InteractionEvent> events = {
        ts::click(1000, "cta"),
        ts::mutation(1500, "cta", {100, 100, 200, 50}, {200, 100, 200, 50})};  // 100 px
    CHECK(detect_relocation(events, flagged_stats("cta"), vp, ThresholdProfile{}).empty());
}

TEST_CASE("relocation requires a recent user input") {
    const Viewport vp{1280, 720};
    // Mutation 3 s after the click: outside the 2 s window.
    std::vector<InteractionEvent> events = {
        ts::click(1000, "cta"),
        ts::mutation(4000, "cta", {100, 100, 200, 50}, {400, 400, 200, 50})};
    CHECK(detect_relocation(events, flagged_stats("cta"), vp, ThresholdProfile{}).empty());
    // Scroll counts as input.
    events[0] = ts::event(3500, EventKind::Scroll);
    CHECK(detect_relocation(events, flagged_stats("cta"), vp, ThresholdProfile{}).size() == 1);
}

// ---------------------------------------------------------------------------
// Reinforcement loops
// ---------------------------------------------------------------------------

TEST_CASE("reinforcement loop: rising frequency signals") {
    // Intervals 10 s, 6 s, 3 s: strictly decreasing.
    std::vector<InteractionEvent> events = {
        ts::prompt(0, "upsell", 99), ts::prompt(10000, "upsell", 99),
        ts::prompt(16000, "upsell", 99), ts::prompt(19000, "upsell", 99)};
    const auto signals = detect_reinforcement_loop(events, ThresholdProfile{});
    REQUIRE(signals.size() == 1);
    const auto& ev = std::get<LoopEvidence>(signals[0].evidence);
    CHECK(ev.prompt_hash == 99);
    CHECK(ev.intervals_ms == std::vector<std::int64_t>{10000, 6000, 3000});
    CHECK(ev.element_id == "upsell");
    CHECK(signals[0].t_ms == 19000);
}

TEST_CASE("reinforcement loop: below min count stays quiet") {
    std::vector<InteractionEvent> events = {ts::prompt(0, "upsell", 99),
                                            ts::prompt(5000, "upsell", 99)};
    CHECK(detect_reinforcement_loop(events, ThresholdProfile{}).empty());
}

TEST_CASE("reinforcement loop: rising intervals stay quiet") {
    std::vector<InteractionEvent> events = {
        ts::prompt(0, "upsell", 99), ts::prompt(3000, "upsell", 99),
        ts::prompt(9000, "upsell", 99), ts::prompt(19000, "upsell", 99)};
    CHECK(detect_reinforcement_loop(events, ThresholdProfile{}).empty());
}

TEST_CASE("reinforcement loop: plateaus stay quiet") {
    std::vector<InteractionEvent> events = {
        ts::prompt(0, "upsell", 99), ts::prompt(4000, "upsell", 99),
        ts::prompt(8000, "upsell", 99)};  // equal intervals
    CHECK(detect_reinforcement_loop(events, ThresholdProfile{}).empty());
}

TEST_CASE("distinct prompts do not mix") {
    std::vector<InteractionEvent> events = {
        ts::prompt(0, "a", 1),     ts::prompt(1000, "b", 2),  ts::prompt(10000, "a", 1),
        ts::prompt(11000, "b", 2), ts::prompt(16000, "a", 1), ts::prompt(17500, "b", 2),
        ts::prompt(19000, "a", 1)};
    const auto signals = detect_reinforcement_loop(events, ThresholdProfile{});
    // Hash 1 decreasing (10s,6s,3s): signals. Hash 2 (10s,6.5s) only 3 shows
    // with strictly decreasing intervals: also signals.
    REQUIRE(signals.size() == 2);
}

// ---------------------------------------------------------------------------
// Shared properties
// ---------------------------------------------------------------------------

namespace {

std::vector<InteractionEvent> shift_all(std::vector<InteractionEvent> events,
                                        std::int64_t delta) {
    for (auto& e : events) e.t_ms += delta;
    return events;
}

std::vector<InteractionEvent> rich_event_log(ts::Rng& rng) {
    std::vector<InteractionEvent> events;
    std::int64_t t = 0;
    const int n = rng.int_range(4, 20);
    for (int i = 0; i < n; ++i) {
        t += rng.int_range(10, 4000);
        switch (rng.below(4)) {
            case 0: events.push_back(ts::response(t, rng.int_range(100, 1500))); break;
            case 1: events.push_back(ts::prompt(t, "upsell", 1 + rng.below(2))); break;
            case 2: events.push_back(ts::click(t, "cta")); break;
            default:
                events.push_back(ts::mutation(t, "cta", {0, 0, 100, 40},
                                              {rng.range(0, 1200), rng.range(0, 700), 100, 40}));
        }
    }
    return events;
}

}  // namespace

TEST_CASE("temporal detection is invariant under time translation") {
    ts::Rng rng(47);
    const Viewport vp{1280, 720};
    for (int trial = 0; trial < 1000; ++trial) {
        const auto events = rich_event_log(rng);
        const std::int64_t delta = rng.int_range(-50000, 50000);
        const auto shifted = shift_all(events, delta);
        const auto stats = flagged_stats("cta");

        const auto base_lat = detect_latency_injection(events, kPremiumRoles, ThresholdProfile{});
        const auto shift_lat =
            detect_latency_injection(shifted, kPremiumRoles, ThresholdProfile{});
        REQUIRE(base_lat.size() == shift_lat.size());

        const auto base_rel = detect_relocation(events, stats, vp, ThresholdProfile{});
        const auto shift_rel = detect_relocation(shifted, stats, vp, ThresholdProfile{});
        REQUIRE(base_rel.size() == shift_rel.size());

        const auto base_loop = detect_reinforcement_loop(events, ThresholdProfile{});
        const auto shift_loop = detect_reinforcement_loop(shifted, ThresholdProfile{});
        REQUIRE(base_loop.size() == shift_loop.size());

        // Same evidence indices; timestamps shift by exactly delta.
        for (std::size_t i = 0; i < base_lat.size(); ++i) {
            REQUIRE(shift_lat[i].t_ms == base_lat[i].t_ms + delta);
            REQUIRE(std::get<LatencyEvidence>(shift_lat[i].evidence).response_event ==
                    std::get<LatencyEvidence>(base_lat[i].evidence).response_event);
        }
        for (std::size_t i = 0; i < base_loop.size(); ++i) {
            REQUIRE(std::get<LoopEvidence>(shift_loop[i].evidence).intervals_ms ==
                    std::get<LoopEvidence>(base_loop[i].evidence).intervals_ms);
        }
    }
}

TEST_CASE("signal evidence re-validates against the raw event log") {
    ts::Rng rng(53);
    const Viewport vp{1280, 720};
    const ThresholdProfile th;
    for (int trial = 0; trial < 500; ++trial) {
        const auto events = rich_event_log(rng);
        const auto stats = flagged_stats("cta");

        for (const auto& s : detect_latency_injection(events, kPremiumRoles, th)) {
            const auto& ev = std::get<LatencyEvidence>(s.evidence);
            REQUIRE(ev.response_event < events.size());
            REQUIRE(ev.prompt_event < events.size());
            const auto& resp = events[ev.response_event];
            const auto& prompt = events[ev.prompt_event];
            REQUIRE(resp.kind == EventKind::Response);
            REQUIRE(prompt.kind == EventKind::PromptShown);
            REQUIRE(*resp.latency_ms - baseline_latency(events, resp.host) == ev.excess_ms);
            REQUIRE(ev.excess_ms > th.latency_excess_ms);
            REQUIRE(prompt.t_ms >= resp.t_ms);
            REQUIRE(prompt.t_ms - resp.t_ms <= th.latency_corr_window_ms);
        }
        for (const auto& s : detect_relocation(events, stats, vp, th)) {
            const auto& ev = std::get<RelocationEvidence>(s.evidence);
            const auto& mu = events[ev.mutation_event];
            const auto& in = events[ev.input_event];
            REQUIRE(mu.kind == EventKind::Mutation);
            REQUIRE((in.kind == EventKind::Click || in.kind == EventKind::Scroll));
            REQUIRE(center_distance(*mu.old_bbox, *mu.new_bbox) / vp.diagonal() ==
                    Catch::Approx(ev.move_frac));
            REQUIRE(ev.move_frac > th.relocation_frac);
            REQUIRE(mu.t_ms - in.t_ms >= 0);
            REQUIRE(mu.t_ms - in.t_ms <= th.relocation_window_ms);
        }
        for (const auto& s : detect_reinforcement_loop(events, th)) {
            const auto& ev = std::get<LoopEvidence>(s.evidence);
            REQUIRE(ev.prompt_events.size() >= static_cast<std::size_t>(th.loop_min_count));
            for (std::size_t k = 1; k < ev.intervals_ms.size(); ++k) {
                REQUIRE(ev.intervals_ms[k] < ev.intervals_ms[k - 1]);
            }
            for (std::size_t k = 0; k < ev.prompt_events.size(); ++k) {
                REQUIRE(events[ev.prompt_events[k]].prompt_hash == ev.prompt_hash);
            }
        }
    }
}

TEST_CASE("appending qualifying events never drops existing signals") {
    // A second full loop pattern with a fresh hash adds one signal.
    std::vector<InteractionEvent> events = {
        ts::prompt(0, "upsell", 1), ts::prompt(10000, "upsell", 1),
        ts::prompt(16000, "upsell", 1), ts::prompt(19000, "upsell", 1)};
    const auto before = detect_reinforcement_loop(events, ThresholdProfile{});
    events.push_back(ts::prompt(20000, "upsell", 2));
    events.push_back(ts::prompt(30000, "upsell", 2));
    events.push_back(ts::prompt(36000, "upsell", 2));
    events.push_back(ts::prompt(39000, "upsell", 2));
    const auto after = detect_reinforcement_loop(events, ThresholdProfile{});
    CHECK(after.size() == before.size() + 1);
}
