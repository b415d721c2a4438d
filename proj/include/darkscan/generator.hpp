#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "darkscan/bundle.hpp"
#include "darkscan/errors.hpp"
#include "darkscan/metrics.hpp"
#include "darkscan/model.hpp"
#include "darkscan/text.hpp"

namespace darkscan {

// ---------------------------------------------------------------------------
// Page specs
// ---------------------------------------------------------------------------

enum class ManipulationKind {
    Salience,
    EscapeVisibility,
    PathInterference,
    DeceptiveText,
    LatencyInjection,
    Relocation,
    ReinforcementLoop,
};

inline constexpr ManipulationKind kAllManipulationKinds[] = {
    ManipulationKind::Salience,         ManipulationKind::EscapeVisibility,
    ManipulationKind::PathInterference, ManipulationKind::DeceptiveText,
    ManipulationKind::LatencyInjection, ManipulationKind::Relocation,
    ManipulationKind::ReinforcementLoop,
};

inline std::string manipulation_kind_name(ManipulationKind k) {
    switch (k) {
        case ManipulationKind::Salience: return "salience";
        case ManipulationKind::EscapeVisibility: return "escape_visibility";
        case ManipulationKind::PathInterference: return "path_interference";
        case ManipulationKind::DeceptiveText: return "deceptive_text";
        case ManipulationKind::LatencyInjection: return "latency_injection";
        case ManipulationKind::Relocation: return "relocation";
        case ManipulationKind::ReinforcementLoop: return "reinforcement_loop";
    }
    return "salience";
}

inline ManipulationKind manipulation_kind_from_name(const std::string& s) {
    for (auto k : kAllManipulationKinds) {
        if (manipulation_kind_name(k) == s) return k;
    }
    throw ConfigError("unknown manipulation kind: " + s);
}

enum class SiteFlavor { Ecommerce, EdTech, Saas, Gaming };

inline constexpr SiteFlavor kAllSiteFlavors[] = {SiteFlavor::Ecommerce, SiteFlavor::EdTech,
                                                 SiteFlavor::Saas, SiteFlavor::Gaming};

struct PageSpec {
    SiteFlavor site = SiteFlavor::Ecommerce;
    bool dark = false;
    // Dark pages embed these patterns strictly beyond thresholds; benign
    // pages place the matching near-threshold distractors strictly below.
    std::vector<ManipulationKind> kinds;
};

struct GeneratedPage {
    SnapshotBundle bundle;
    bool dark_label = false;
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

namespace gen_detail {

struct SiteVocab {
    std::string host;
    std::string path;
    std::vector<std::string> copy;
};

inline SiteVocab vocab_for(SiteFlavor flavor) {
    switch (flavor) {
        case SiteFlavor::Ecommerce:
            return {"shop.example",
                    "/catalog",
                    {"Free returns within thirty days on every order",
                     "Our spring collection arrives this week",
                     "Compare fabrics and colors on each product page"}};
        case SiteFlavor::EdTech:
            return {"learn.example",
                    "/courses",
                    {"Lessons include guided projects and peer discussion",
                     "Track progress across each course module",
                     "Mentors review submissions twice a week"}};
        case SiteFlavor::Saas:
            return {"app.example",
                    "/dashboard",
                    {"Invite your team and share dashboards",
                     "Usage reports update each morning",
                     "Connect integrations from the settings page"}};
        case SiteFlavor::Gaming:
            return {"play.example",
                    "/arcade",
                    {"New puzzle packs arrive each season",
                     "Play with friends in weekly tournaments",
                     "Replays are stored for thirty days"}};
    }
    return {"site.example", "/", {"Welcome"}};
}

// All interactive elements share this geometry and palette so benign
// pages have exactly equal salience indices (zero spread flags nothing);
// dark salience pages add one oversized outlier on top.
constexpr double kStdButtonW = 96;
constexpr double kStdButtonH = 28;
constexpr Rgb kStdButtonFg{30, 64, 175};

struct PageBuilder {
    PageSnapshot snap;
    int block_counter = 0;

    explicit PageBuilder(std::string snapshot_id, std::string url, std::string state_id = {}) {
        snap.snapshot_id = std::move(snapshot_id);
        snap.url = std::move(url);
        snap.captured_at = "2025-03-01T00:00:00Z";
        snap.viewport = {1280, 720};
        if (!state_id.empty()) snap.state_id = state_id;

        ElementNode root;
        root.id = "root";
        root.tag = "html";
        root.bbox = {0, 0, 1280, 720};
        root.style.bg = Rgb{255, 255, 255};
        snap.elements.push_back(root);

        ElementNode body;
        body.id = "body";
        body.parent_id = "root";
        body.tag = "body";
        body.bbox = {0, 0, 1280, 720};
        snap.elements.push_back(body);
    }

    ElementNode& add(ElementNode e) {
        snap.elements.push_back(std::move(e));
        return snap.elements.back();
    }

    ElementNode& add_button(const std::string& id, const std::string& text, double x, double y,
                            const std::string& parent = "body") {
        ElementNode e;
        e.id = id;
        e.parent_id = parent;
        e.tag = "button";
        e.bbox = {x, y, kStdButtonW, kStdButtonH};
        e.style.fg = kStdButtonFg;
        e.text = text;
        e.interactive = true;
        return add(std::move(e));
    }

    ElementNode& add_paragraph(const std::string& id, const std::string& text, double x, double y,
                               const std::string& parent = "body") {
        ElementNode e;
        e.id = id;
        e.parent_id = parent;
        e.tag = "p";
        e.bbox = {x, y, 560, 40};
        e.style.fg = Rgb{40, 40, 40};
        e.interactive = false;
        auto& ref = add(std::move(e));
        add_block(ref.id, text);
        return ref;
    }

    void add_block(const std::string& element_id, const std::string& raw) {
        TextBlock b;
        b.block_id = "b" + std::to_string(block_counter++);
        b.element_id = element_id;
        b.raw_text = raw;
        b.tokens = canonicalize_text(raw);
        snap.text_blocks.push_back(std::move(b));
    }

    void finish_events() {
        std::stable_sort(snap.events.begin(), snap.events.end(),
                         [](const InteractionEvent& a, const InteractionEvent& b) {
                             return a.t_ms < b.t_ms;
                         });
    }
};

inline bool has_kind(const PageSpec& spec, ManipulationKind k) {
    for (auto kind : spec.kinds) {
        if (kind == k) return true;
    }
    return false;
}

}  // namespace gen_detail

// Deterministic for fixed (spec, seed). Dark pages embed every requested
// pattern with parameters strictly beyond the default thresholds; benign
// pages carry near-threshold distractors strictly below them. The output
// always passes validate_snapshot.
inline GeneratedPage generate_page(const PageSpec& spec, std::uint64_t seed) {
    using namespace gen_detail;

    SplitMix64 rng(seed ^ 0xDA12C0DEULL);
    const SiteVocab vocab = vocab_for(spec.site);
    const std::string base_url = "https://" + vocab.host + vocab.path;

    PageBuilder page("s0", base_url, "s0");

    // Standard-button fillers: a header row plus a footer row. Dark salience
    // pages rely on n >= 9 interactive elements so the one oversized outlier
    // sits at z = sqrt(n-1) > 2.8, strictly beyond the 2-sigma rule.
    const int nav_count = 4 + static_cast<int>(rng.below(2));
    const char* nav_names[] = {"Home", "Products", "Pricing", "Support", "About"};
    for (int i = 0; i < nav_count; ++i) {
        page.add_button("nav-" + std::to_string(i), nav_names[i],
                        40 + 130.0 * i + static_cast<double>(rng.below(20)), 12);
    }
    const char* footer_names[] = {"Privacy", "Terms", "Contact", "Careers"};
    for (int i = 0; i < 4; ++i) {
        page.add_button("footer-" + std::to_string(i), footer_names[i],
                        40 + 130.0 * i + static_cast<double>(rng.below(20)), 684);
    }

    // Body copy.
    const int copy_count = 2 + static_cast<int>(rng.below(2));
    for (int i = 0; i < copy_count; ++i) {
        page.add_paragraph("p-" + std::to_string(i), vocab.copy[i % vocab.copy.size()], 80,
                           120 + 60.0 * i);
    }

    std::int64_t clock = 0;
    page.snap.events.push_back([&] {
        InteractionEvent ev;
        ev.kind = EventKind::Navigate;
        ev.t_ms = clock;
        ev.host = vocab.host;
        return ev;
    }());

    const auto push_response = [&](std::int64_t t, std::int64_t latency) {
        InteractionEvent ev;
        ev.kind = EventKind::Response;
        ev.t_ms = t;
        ev.latency_ms = latency;
        ev.host = vocab.host;
        page.snap.events.push_back(ev);
    };
    // Baseline traffic present on every page.
    push_response(20, 200);
    push_response(120, 200);
    push_response(240, 200);

    // --- Salience / relocation -------------------------------------------
    const bool wants_relocation = has_kind(spec, ManipulationKind::Relocation);
    const bool wants_salience = has_kind(spec, ManipulationKind::Salience) || wants_relocation;
    std::string outlier_id;
    if (wants_salience) {
        if (spec.dark) {
            // One oversized black-on-white call-to-action among >= 5 standard
            // buttons: its z-score is about sqrt(n-1) > 2, strictly beyond the
            // 2-sigma rule.
            ElementNode big;
            big.id = "cta-upsell";
            big.parent_id = "body";
            big.tag = "button";
            big.bbox = {120 + static_cast<double>(rng.below(80)), 480, 500, 200};
            big.style.fg = Rgb{0, 0, 0};
            big.text = "Best value - most popular choice";
            big.interactive = true;
            page.add(std::move(big));
            outlier_id = "cta-upsell";
        } else {
            // Near-threshold distractor: one more standard button; the spread
            // stays zero, so nothing can flag.
            page.add_button("cta-regular", "View details", 120, 480);
        }
    }
    if (wants_relocation) {
        const std::string target = spec.dark ? outlier_id : "nav-0";
        InteractionEvent clicked;
        clicked.kind = EventKind::Click;
        clicked.t_ms = 1000;
        clicked.element_id = "nav-1";
        clicked.host = vocab.host;
        page.snap.events.push_back(clicked);

        InteractionEvent moved;
        moved.kind = EventKind::Mutation;
        moved.t_ms = spec.dark ? 1500 : 1400;
        moved.element_id = target;
        moved.host = vocab.host;
        if (spec.dark) {
            // Center-to-center move of ~668 px against the 146.9 px threshold.
            moved.old_bbox = Box{120, 480, 500, 200};
            moved.new_bbox = Box{640, 60, 500, 200};
        } else {
            // A filler moves; it is never salience-flagged, so no signal.
            moved.old_bbox = Box{40, 12, kStdButtonW, kStdButtonH};
            moved.new_bbox = Box{700, 500, kStdButtonW, kStdButtonH};
        }
        page.snap.events.push_back(moved);
    }

    // --- Escape visibility -------------------------------------------------
    if (has_kind(spec, ManipulationKind::EscapeVisibility)) {
        ElementNode modal;
        modal.id = "modal";
        modal.parent_id = "body";
        modal.tag = "div";
        modal.bbox = {300, 200, 600, 300};
        // White keeps the dismiss button's contrast identical to the other
        // standard buttons; benign pages rely on a zero salience spread.
        modal.style.bg = Rgb{255, 255, 255};
        const bool off_viewport_variant = spec.dark && rng.below(2) == 0;
        modal.style.opacity = spec.dark && !off_viewport_variant ? 0.4 : 1.0;
        page.add(std::move(modal));
        page.add_paragraph("modal-text", "Get our weekly digest by email", 320, 260, "modal");

        ElementNode dismiss;
        dismiss.id = "modal-close";
        dismiss.parent_id = "modal";
        dismiss.tag = "button";
        dismiss.style.fg = kStdButtonFg;
        dismiss.text = "\xC3\x97";
        dismiss.interactive = true;
        if (spec.dark && off_viewport_variant) {
            dismiss.bbox = {-500, -500, kStdButtonW, kStdButtonH};
        } else {
            dismiss.bbox = {790, 210, kStdButtonW, kStdButtonH};
            // Dark: 0.4 * 0.3 = 0.12 effective, far below 0.30.
            // Benign: 0.45, comfortably above while still "dim".
            dismiss.style.opacity = spec.dark ? 0.3 : 0.45;
        }
        page.add(std::move(dismiss));
    }

    // --- Deceptive text ------------------------------------------------------
    if (has_kind(spec, ManipulationKind::DeceptiveText)) {
        if (!spec.dark) {
            // Matches the urgency taxonomy rule but stays below every
            // linguistic threshold: 1 urgency hit per 11 tokens (1.82 < 2),
            // one weak lexicon feature (DLP 0.17), neutral polarity.
            page.add_paragraph("promo", "Hurry over to explore our new spring arrivals in store",
                               80, 320);
        } else if (rng.below(2) == 0) {
            // Confirmshaming decline control.
            auto& decline = page.add_button("decline-link", "No thanks, I prefer to remain uninformed",
                                            520, 330);
            decline.tag = "a";
            page.add_block("decline-link", "No thanks, I prefer to remain uninformed");
        } else {
            // Scarcity banner.
            ElementNode banner;
            banner.id = "banner";
            banner.parent_id = "body";
            banner.tag = "div";
            banner.bbox = {80, 320, 700, 48};
            banner.style.fg = Rgb{180, 30, 30};
            page.add(std::move(banner));
            page.add_block("banner",
                           "Hurry! Only 3 left in stock. Offer expires today. "
                           "Act now before they are gone.");
        }
    }

    // --- Latency injection ---------------------------------------------------
    const bool wants_prompt_element = has_kind(spec, ManipulationKind::LatencyInjection) ||
                                      has_kind(spec, ManipulationKind::ReinforcementLoop);
    if (wants_prompt_element) {
        page.add_button("upsell-prompt", "Upgrade to Premium", 1080, 640);
    }
    if (has_kind(spec, ManipulationKind::LatencyInjection)) {
        // Baseline median is 200 ms; the suspicious response sits at
        // excess 800 (dark) or 400 (benign) against the > 500 ms rule.
        push_response(1000, spec.dark ? 1000 : 600);
        InteractionEvent prompt;
        prompt.kind = EventKind::PromptShown;
        prompt.t_ms = 2500;
        prompt.element_id = "upsell-prompt";
        prompt.prompt_hash = prompt_hash("Upgrade to Premium");
        prompt.host = vocab.host;
        page.snap.events.push_back(prompt);
    }

    // --- Reinforcement loop ----------------------------------------------------
    if (has_kind(spec, ManipulationKind::ReinforcementLoop)) {
        const std::uint64_t hash = prompt_hash("Upgrade to Premium today");
        const auto push_prompt = [&](std::int64_t t) {
            InteractionEvent ev;
            ev.kind = EventKind::PromptShown;
            ev.t_ms = t;
            ev.element_id = "upsell-prompt";
            ev.prompt_hash = hash;
            ev.host = vocab.host;
            page.snap.events.push_back(ev);
        };
        if (spec.dark) {
            // Intervals 10 s, 6 s, 3 s: strictly decreasing.
            push_prompt(3000);
            push_prompt(13000);
            push_prompt(19000);
            push_prompt(22000);
        } else {
            // Two occurrences: below the minimum count.
            push_prompt(3000);
            push_prompt(13000);
        }
    }

    page.finish_events();

    // --- Path interference (multi-state flow) ----------------------------------
    SnapshotBundle bundle;
    bundle.manifest.host = vocab.host;
    bundle.manifest.site_label = spec.dark;

    if (has_kind(spec, ManipulationKind::PathInterference)) {
        page.add_button("subscribe", "Subscribe", 1080, 80);
        page.add_button("account-link", "Account", 1080, 120);

        FlowGraph flow;
        flow.entry_state = "s0";
        flow.states = {"s0", "s-sub", "s-out"};
        flow.edges.push_back({"s0", "subscribe", "s-sub"});
        flow.tasks["opt_in"] = {"s-sub"};
        flow.tasks["opt_out"] = {"s-out"};
        flow.pairs = {{"opt_in", "opt_out"}};

        std::vector<PageSnapshot> extra_states;
        PageBuilder sub("s-sub", base_url + "/subscribed", "s-sub");
        sub.add_paragraph("p-sub", "Subscription active", 80, 120);
        extra_states.push_back(sub.snap);

        const bool unreachable_variant = spec.dark && rng.below(2) == 0;
        if (unreachable_variant) {
            // The cancel control exists on the entry page but leads nowhere:
            // the opt-out goal state has no incoming edges at all.
            page.add_button("cancel-link", "Cancel subscription", 80, 640).tag = "a";
        } else {
            // A click chain to the opt-out goal: depth 5 when dark
            // (extra = 4 > 3), depth 3 when benign (extra = 2).
            const int depth = spec.dark ? 5 : 3;
            std::string prev = "s0";
            std::string via = "account-link";
            for (int i = 1; i < depth; ++i) {
                const std::string state = "s-a" + std::to_string(i);
                PageBuilder hop(state, base_url + "/account/" + std::to_string(i), state);
                hop.add_paragraph("p-hop", "Account settings", 80, 120);
                hop.add_button("continue", "Continue", 80, 200);
                if (i + 1 == depth) {
                    hop.add_button("cancel-link", "Cancel subscription", 80, 640).tag = "a";
                }
                extra_states.push_back(hop.snap);
                flow.states.insert(state);
                flow.edges.push_back({prev, via, state});
                prev = state;
                via = "continue";
            }
            flow.edges.push_back({prev, "cancel-link", "s-out"});
        }
        PageBuilder out("s-out", base_url + "/cancelled", "s-out");
        out.add_paragraph("p-out", "Subscription cancelled", 80, 120);
        extra_states.push_back(out.snap);

        bundle.snapshots.push_back(page.snap);
        for (auto& s : extra_states) bundle.snapshots.push_back(std::move(s));
        bundle.flow = std::move(flow);
    } else {
        bundle.snapshots.push_back(page.snap);
    }

    return {std::move(bundle), spec.dark};
}

// ---------------------------------------------------------------------------
// Corpus plans
// ---------------------------------------------------------------------------

struct CorpusItemPlan {
    PageSpec page;
    std::uint64_t seed = 0;
    std::string filename;
};

// The first round(count * dark_ratio) items are dark; flavors and kinds
// rotate deterministically so a corpus covers every pattern.
inline std::vector<CorpusItemPlan> corpus_plan(int count, double dark_ratio, std::uint64_t seed) {
    if (count < 1) throw ConfigError("corpus count must be at least 1");
    if (dark_ratio < 0.0 || dark_ratio > 1.0) throw ConfigError("dark ratio must be in [0,1]");

    const int n_dark = static_cast<int>(std::llround(static_cast<double>(count) * dark_ratio));
    SplitMix64 rng(seed);
    std::vector<CorpusItemPlan> plan;
    plan.reserve(static_cast<std::size_t>(count));
    constexpr std::size_t kKindCount = std::size(kAllManipulationKinds);
    for (int i = 0; i < count; ++i) {
        CorpusItemPlan item;
        item.page.dark = i < n_dark;
        item.page.site = kAllSiteFlavors[rng.below(std::size(kAllSiteFlavors))];
        item.page.kinds.push_back(kAllManipulationKinds[static_cast<std::size_t>(i) % kKindCount]);
        if (rng.below(10) < 3) {
            const auto secondary =
                kAllManipulationKinds[(static_cast<std::size_t>(i) * 3 + 1) % kKindCount];
            if (secondary != item.page.kinds[0]) item.page.kinds.push_back(secondary);
        }
        item.seed = rng.next();
        char name[32];
        std::snprintf(name, sizeof(name), "item-%05d.json", i);
        item.filename = name;
        plan.push_back(std::move(item));
    }
    return plan;
}

}  // namespace darkscan
