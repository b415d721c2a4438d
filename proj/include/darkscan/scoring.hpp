#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "darkscan/bundle.hpp"
#include "darkscan/errors.hpp"
#include "darkscan/heuristics.hpp"
#include "darkscan/rules.hpp"
#include "darkscan/taxonomy.hpp"
#include "darkscan/temporal.hpp"
#include "darkscan/text_analysis.hpp"
#include "darkscan/version.hpp"

namespace darkscan {

enum class StaticFlag { Salience, PathInterference, Escape, Text };

inline std::string static_flag_name(StaticFlag f) {
    switch (f) {
        case StaticFlag::Salience: return "salience";
        case StaticFlag::PathInterference: return "path_interference";
        case StaticFlag::Escape: return "escape";
        case StaticFlag::Text: return "text";
    }
    return "salience";
}

inline std::optional<StaticFlag> static_flag_from_name(std::string_view s) {
    if (s == "salience") return StaticFlag::Salience;
    if (s == "path_interference") return StaticFlag::PathInterference;
    if (s == "escape") return StaticFlag::Escape;
    if (s == "text") return StaticFlag::Text;
    return std::nullopt;
}

struct Finding {
    std::string snapshot_id;
    std::string element_id;
    std::set<Category> categories;
    std::vector<std::string> matched_rule_ids;
    int severity = 1;
    std::set<StaticFlag> static_flags;
    std::vector<TemporalSignal> temporal_signals;

    // Contributing readouts.
    std::optional<HeuristicReadout> heuristic;
    std::vector<TextReadout> text;
    std::optional<PathReadout> path;

    friend bool operator==(const Finding&, const Finding&) = default;
};

// severity = min(3, base + uplift); base = 1 for the taxonomy match plus 1
// if any static flag holds; each temporal signal uplifts by +1.
inline int severity_score(bool any_static_flag, std::size_t temporal_count) {
    const int base = 1 + (any_static_flag ? 1 : 0);
    const int severity = base + static_cast<int>(temporal_count);
    return std::min(3, severity);
}

inline Finding score_finding(const Candidate& candidate,
                             std::set<StaticFlag> static_flags,
                             std::vector<TemporalSignal> temporal_signals,
                             std::optional<HeuristicReadout> heuristic = std::nullopt,
                             std::vector<TextReadout> text = {},
                             std::optional<PathReadout> path = std::nullopt) {
    Finding f;
    f.snapshot_id = candidate.snapshot_id;
    f.element_id = candidate.element_id;
    f.categories = candidate.categories;
    f.matched_rule_ids = candidate.matched_rule_ids;
    f.static_flags = std::move(static_flags);
    f.temporal_signals = std::move(temporal_signals);
    f.heuristic = std::move(heuristic);
    f.text = std::move(text);
    f.path = std::move(path);
    f.severity = severity_score(!f.static_flags.empty(), f.temporal_signals.size());
    return f;
}

struct Report {
    std::string report_version = kReportVersion;
    std::string engine_version = kEngineVersion;
    std::string generated_at;  // canonical timestamp, settable for reproducible output
    BundleManifest manifest;
    std::string rules_version;
    ThresholdProfile thresholds;
    std::vector<Finding> findings;  // sorted by (snapshot_id, element_id)
    bool dark_verdict = false;      // any finding with severity >= 2
    std::map<char, int> category_counts;

    friend bool operator==(const Report&, const Report&) = default;
};

inline Report assemble_report(const SnapshotBundle& bundle, std::vector<Finding> findings,
                              const RuleSet& rules, std::string generated_at) {
    Report r;
    r.generated_at = std::move(generated_at);
    r.manifest = bundle.manifest;
    r.rules_version = rules.version;
    r.thresholds = rules.thresholds;
    std::sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
        return std::tie(a.snapshot_id, a.element_id) < std::tie(b.snapshot_id, b.element_id);
    });
    r.findings = std::move(findings);
    for (Category c : kAllCategories) r.category_counts[category_letter(c)] = 0;
    for (const auto& f : r.findings) {
        if (f.severity >= 2) r.dark_verdict = true;
        for (Category c : f.categories) r.category_counts[category_letter(c)] += 1;
    }
    return r;
}

// ---------------------------------------------------------------------------
// JSON rendering
// ---------------------------------------------------------------------------

namespace detail {

inline json thresholds_json(const ThresholdProfile& t) {
    json v;
    v["salience_sigma"] = t.salience_sigma;
    v["pis_extra_clicks"] = t.pis_extra_clicks;
    v["escape_opacity"] = t.escape_opacity;
    v["dlp_min"] = t.dlp_min;
    v["polarity_max"] = t.polarity_max;
    v["urgency_min"] = t.urgency_min;
    v["latency_excess_ms"] = t.latency_excess_ms;
    v["latency_corr_window_ms"] = t.latency_corr_window_ms;
    v["relocation_frac"] = t.relocation_frac;
    v["relocation_window_ms"] = t.relocation_window_ms;
    v["loop_min_count"] = t.loop_min_count;
    return v;
}

inline ThresholdProfile thresholds_from_json(const json& v) {
    ThresholdProfile t;
    t.salience_sigma = v.at("salience_sigma").get<double>();
    t.pis_extra_clicks = v.at("pis_extra_clicks").get<int>();
    t.escape_opacity = v.at("escape_opacity").get<double>();
    t.dlp_min = v.at("dlp_min").get<double>();
    t.polarity_max = v.at("polarity_max").get<double>();
    t.urgency_min = v.at("urgency_min").get<double>();
    t.latency_excess_ms = v.at("latency_excess_ms").get<std::int64_t>();
    t.latency_corr_window_ms = v.at("latency_corr_window_ms").get<std::int64_t>();
    t.relocation_frac = v.at("relocation_frac").get<double>();
    t.relocation_window_ms = v.at("relocation_window_ms").get<std::int64_t>();
    t.loop_min_count = v.at("loop_min_count").get<int>();
    return t;
}

inline json temporal_signal_json(const TemporalSignal& s) {
    json v;
    v["kind"] = temporal_kind_name(s.kind);
    v["t_ms"] = s.t_ms;
    json ev;
    switch (s.kind) {
        case TemporalKind::LatencyInjection: {
            const auto& e = std::get<LatencyEvidence>(s.evidence);
            ev["excess_ms"] = e.excess_ms;
            ev["response_event"] = e.response_event;
            ev["prompt_event"] = e.prompt_event;
            ev["element_id"] = e.element_id;
            break;
        }
        case TemporalKind::Relocation: {
            const auto& e = std::get<RelocationEvidence>(s.evidence);
            ev["element_id"] = e.element_id;
            ev["move_frac"] = e.move_frac;
            ev["mutation_event"] = e.mutation_event;
            ev["input_event"] = e.input_event;
            break;
        }
        case TemporalKind::ReinforcementLoop: {
            const auto& e = std::get<LoopEvidence>(s.evidence);
            ev["prompt_hash"] = hash_hex(e.prompt_hash);
            ev["intervals_ms"] = e.intervals_ms;
            ev["prompt_events"] = e.prompt_events;
            ev["element_id"] = e.element_id;
            break;
        }
    }
    v["evidence"] = ev;
    return v;
}

inline TemporalSignal temporal_signal_from_json(const json& v) {
    TemporalSignal s;
    auto kind = temporal_kind_from_name(v.at("kind").get<std::string>());
    if (!kind) throw ParseError("unknown temporal signal kind");
    s.kind = *kind;
    s.t_ms = v.at("t_ms").get<std::int64_t>();
    const auto& ev = v.at("evidence");
    switch (s.kind) {
        case TemporalKind::LatencyInjection: {
            LatencyEvidence e;
            e.excess_ms = ev.at("excess_ms").get<std::int64_t>();
            e.response_event = ev.at("response_event").get<std::size_t>();
            e.prompt_event = ev.at("prompt_event").get<std::size_t>();
            e.element_id = ev.at("element_id").get<std::string>();
            s.evidence = e;
            break;
        }
        case TemporalKind::Relocation: {
            RelocationEvidence e;
            e.element_id = ev.at("element_id").get<std::string>();
            e.move_frac = ev.at("move_frac").get<double>();
            e.mutation_event = ev.at("mutation_event").get<std::size_t>();
            e.input_event = ev.at("input_event").get<std::size_t>();
            s.evidence = e;
            break;
        }
        case TemporalKind::ReinforcementLoop: {
            LoopEvidence e;
            std::uint64_t h = 0;
            for (char c : ev.at("prompt_hash").get<std::string>()) {
                h = (h << 4) | static_cast<std::uint64_t>(
                                   c <= '9' ? c - '0' : c - 'a' + 10);
            }
            e.prompt_hash = h;
            e.intervals_ms = ev.at("intervals_ms").get<std::vector<std::int64_t>>();
            e.prompt_events = ev.at("prompt_events").get<std::vector<std::size_t>>();
            e.element_id = ev.at("element_id").get<std::string>();
            s.evidence = e;
            break;
        }
    }
    return s;
}

inline json finding_json(const Finding& f) {
    json v;
    v["snapshot_id"] = f.snapshot_id;
    v["element_id"] = f.element_id;
    json cats = json::array();
    for (Category c : f.categories) cats.push_back(std::string(1, category_letter(c)));
    v["categories"] = cats;
    v["matched_rules"] = f.matched_rule_ids;
    v["severity"] = f.severity;
    json flags = json::array();
    for (StaticFlag fl : f.static_flags) flags.push_back(static_flag_name(fl));
    v["static_flags"] = flags;
    json signals = json::array();
    for (const auto& s : f.temporal_signals) signals.push_back(temporal_signal_json(s));
    v["temporal_signals"] = signals;

    json ev;
    if (f.heuristic) {
        ev["salience"] = {{"value", f.heuristic->salience}, {"flag", f.heuristic->salience_flag}};
        ev["escape"] = {{"opacity", f.heuristic->escape_opacity},
                        {"off_viewport", f.heuristic->off_viewport},
                        {"flag", f.heuristic->escape_flag}};
    }
    if (!f.text.empty()) {
        json blocks = json::array();
        for (const auto& t : f.text) {
            blocks.push_back({{"block_id", t.block_id},
                              {"dlp", t.dlp},
                              {"polarity", t.polarity},
                              {"urgency_density", t.urgency_density},
                              {"flag", t.text_flag}});
        }
        ev["text"] = blocks;
    }
    if (f.path) {
        json p;
        p["opt_in"] = f.path->opt_in_task;
        p["opt_out"] = f.path->opt_out_task;
        p["d_in"] = f.path->d_in ? json(*f.path->d_in) : json(nullptr);
        p["d_out"] = f.path->d_out ? json(*f.path->d_out) : json(nullptr);
        p["extra_clicks"] = f.path->extra_clicks ? json(*f.path->extra_clicks) : json(nullptr);
        p["flag"] = f.path->pis_flag;
        ev["path"] = p;
    }
    v["evidence"] = ev;
    return v;
}

inline Finding finding_from_json(const json& v) {
    Finding f;
    f.snapshot_id = v.at("snapshot_id").get<std::string>();
    f.element_id = v.at("element_id").get<std::string>();
    for (const auto& c : v.at("categories")) {
        auto cat = category_from_letter(c.get<std::string>().at(0));
        if (cat) f.categories.insert(*cat);
    }
    f.matched_rule_ids = v.at("matched_rules").get<std::vector<std::string>>();
    f.severity = v.at("severity").get<int>();
    for (const auto& fl : v.at("static_flags")) {
        auto flag = static_flag_from_name(fl.get<std::string>());
        if (flag) f.static_flags.insert(*flag);
    }
    for (const auto& s : v.at("temporal_signals")) {
        f.temporal_signals.push_back(temporal_signal_from_json(s));
    }
    const auto& ev = v.at("evidence");
    if (ev.contains("salience")) {
        HeuristicReadout h;
        h.element_id = f.element_id;
        h.salience = ev["salience"].at("value").get<double>();
        h.salience_flag = ev["salience"].at("flag").get<bool>();
        if (ev.contains("escape")) {
            h.escape_opacity = ev["escape"].at("opacity").get<double>();
            h.off_viewport = ev["escape"].at("off_viewport").get<bool>();
            h.escape_flag = ev["escape"].at("flag").get<bool>();
        }
        f.heuristic = h;
    }
    if (ev.contains("text")) {
        for (const auto& t : ev["text"]) {
            TextReadout r;
            r.block_id = t.at("block_id").get<std::string>();
            r.dlp = t.at("dlp").get<double>();
            r.polarity = t.at("polarity").get<double>();
            r.urgency_density = t.at("urgency_density").get<double>();
            r.text_flag = t.at("flag").get<bool>();
            f.text.push_back(std::move(r));
        }
    }
    if (ev.contains("path")) {
        const auto& p = ev["path"];
        PathReadout r;
        r.opt_in_task = p.at("opt_in").get<std::string>();
        r.opt_out_task = p.at("opt_out").get<std::string>();
        if (!p.at("d_in").is_null()) r.d_in = p["d_in"].get<int>();
        if (!p.at("d_out").is_null()) r.d_out = p["d_out"].get<int>();
        if (!p.at("extra_clicks").is_null()) r.extra_clicks = p["extra_clicks"].get<int>();
        r.pis_flag = p.at("flag").get<bool>();
        f.path = r;
    }
    return f;
}

}  // namespace detail

enum class ReportFormat { Json, HumanSummary };

inline std::optional<ReportFormat> report_format_from_name(std::string_view s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "summary") return ReportFormat::HumanSummary;
    return std::nullopt;
}

inline std::string render_report_json(const Report& r) {
    json v;
    v["report_version"] = r.report_version;
    v["engine_version"] = r.engine_version;
    v["generated_at"] = r.generated_at;
    json m;
    m["schema_version"] = r.manifest.schema_version;
    m["host"] = r.manifest.host;
    if (r.manifest.site_label) m["site_label"] = *r.manifest.site_label;
    if (!r.manifest.capture_errors.empty()) m["capture_errors"] = r.manifest.capture_errors;
    v["manifest"] = m;
    v["rules"] = {{"version", r.rules_version}, {"thresholds", detail::thresholds_json(r.thresholds)}};
    v["verdict"] = r.dark_verdict ? "dark" : "benign";
    json counts;
    for (const auto& [letter, n] : r.category_counts) counts[std::string(1, letter)] = n;
    v["category_counts"] = counts;
    json findings = json::array();
    for (const auto& f : r.findings) findings.push_back(detail::finding_json(f));
    v["findings"] = findings;
    return v.dump(2) + "\n";
}

// Findings listed by severity descending.
inline std::string render_report_summary(const Report& r) {
    std::ostringstream out;
    out << "darkscan report\n";
    out << "verdict: " << (r.dark_verdict ? "DARK" : "BENIGN") << "\n";
    out << "engine " << r.engine_version << ", rules " << r.rules_version << ", generated "
        << r.generated_at << "\n";
    out << r.findings.size() << " findings\n";
    std::vector<const Finding*> order;
    for (const auto& f : r.findings) order.push_back(&f);
    std::stable_sort(order.begin(), order.end(),
                     [](const Finding* a, const Finding* b) { return a->severity > b->severity; });
    for (const Finding* f : order) {
        out << "  [severity " << f->severity << "] " << f->snapshot_id << "/" << f->element_id
            << " categories=";
        bool first = true;
        for (Category c : f->categories) {
            if (!first) out << ",";
            out << category_letter(c);
            first = false;
        }
        if (!f->static_flags.empty()) {
            out << " flags=";
            first = true;
            for (StaticFlag fl : f->static_flags) {
                if (!first) out << ",";
                out << static_flag_name(fl);
                first = false;
            }
        }
        if (!f->temporal_signals.empty()) {
            out << " signals=";
            first = true;
            for (const auto& s : f->temporal_signals) {
                if (!first) out << ",";
                out << temporal_kind_name(s.kind);
                first = false;
            }
        }
        out << "\n";
    }
    return out.str();
}

inline std::string render_report(const Report& r, ReportFormat format) {
    return format == ReportFormat::Json ? render_report_json(r) : render_report_summary(r);
}

// Inverse of render_report_json; the JSON form round-trips losslessly.
inline Report parse_report(const std::string& text) {
    json v;
    try {
        v = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed report JSON: ") + e.what());
    }
    try {
        Report r;
        r.report_version = v.at("report_version").get<std::string>();
        r.engine_version = v.at("engine_version").get<std::string>();
        r.generated_at = v.at("generated_at").get<std::string>();
        const auto& m = v.at("manifest");
        r.manifest.schema_version = m.at("schema_version").get<std::string>();
        r.manifest.host = m.at("host").get<std::string>();
        if (m.contains("site_label")) r.manifest.site_label = m["site_label"].get<bool>();
        if (m.contains("capture_errors")) {
            r.manifest.capture_errors = m["capture_errors"].get<std::vector<std::string>>();
        }
        r.rules_version = v.at("rules").at("version").get<std::string>();
        r.thresholds = detail::thresholds_from_json(v.at("rules").at("thresholds"));
        r.dark_verdict = v.at("verdict").get<std::string>() == "dark";
        for (const auto& [letter, n] : v.at("category_counts").items()) {
            r.category_counts[letter.at(0)] = n.get<int>();
        }
        for (const auto& f : v.at("findings")) {
            r.findings.push_back(detail::finding_from_json(f));
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("report schema violation: ") + e.what());
    }
}

}  // namespace darkscan
