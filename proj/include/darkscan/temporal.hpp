#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "darkscan/errors.hpp"
#include "darkscan/heuristics.hpp"
#include "darkscan/model.hpp"
#include "darkscan/rules.hpp"
#include "darkscan/taxonomy.hpp"

namespace darkscan {

enum class TemporalKind { LatencyInjection, Relocation, ReinforcementLoop };

inline std::string temporal_kind_name(TemporalKind k) {
    switch (k) {
        case TemporalKind::LatencyInjection: return "latency_injection";
        case TemporalKind::Relocation: return "relocation";
        case TemporalKind::ReinforcementLoop: return "reinforcement_loop";
    }
    return "latency_injection";
}

inline std::optional<TemporalKind> temporal_kind_from_name(std::string_view s) {
    if (s == "latency_injection") return TemporalKind::LatencyInjection;
    if (s == "relocation") return TemporalKind::Relocation;
    if (s == "reinforcement_loop") return TemporalKind::ReinforcementLoop;
    return std::nullopt;
}

// Evidence indices refer to positions in the snapshot's event list so a
// signal can always be re-validated against the raw log.
struct LatencyEvidence {
    std::int64_t excess_ms = 0;
    std::size_t response_event = 0;
    std::size_t prompt_event = 0;
    std::string element_id;  // the premium-prompt element

    friend bool operator==(const LatencyEvidence&, const LatencyEvidence&) = default;
};

struct RelocationEvidence {
    std::string element_id;  // the moved, salience-flagged element
    double move_frac = 0;    // center distance / viewport diagonal
    std::size_t mutation_event = 0;
    std::size_t input_event = 0;

    friend bool operator==(const RelocationEvidence&, const RelocationEvidence&) = default;
};

struct LoopEvidence {
    std::uint64_t prompt_hash = 0;
    std::vector<std::int64_t> intervals_ms;  // strictly decreasing
    std::vector<std::size_t> prompt_events;
    std::string element_id;  // element of the last occurrence ("" if unknown)

    friend bool operator==(const LoopEvidence&, const LoopEvidence&) = default;
};

struct TemporalSignal {
    TemporalKind kind = TemporalKind::LatencyInjection;
    std::int64_t t_ms = 0;  // detection time
    std::variant<LatencyEvidence, RelocationEvidence, LoopEvidence> evidence;

    const std::string& element_id() const {
        switch (kind) {
            case TemporalKind::LatencyInjection: return std::get<LatencyEvidence>(evidence).element_id;
            case TemporalKind::Relocation: return std::get<RelocationEvidence>(evidence).element_id;
            case TemporalKind::ReinforcementLoop: return std::get<LoopEvidence>(evidence).element_id;
        }
        return std::get<LatencyEvidence>(evidence).element_id;
    }

    friend bool operator==(const TemporalSignal&, const TemporalSignal&) = default;
};

// ---------------------------------------------------------------------------
// Baseline
// ---------------------------------------------------------------------------

// Median latency of the host's own response events; lower median for even
// counts. The simplest defensible per-host baseline: network-originated
// delay shows up in the median, injected delay shows up as excess above it.
inline std::int64_t baseline_latency(std::span<const InteractionEvent> events,
                                     std::string_view host) {
    std::vector<std::int64_t> latencies;
    for (const auto& ev : events) {
        if (ev.kind == EventKind::Response && ev.host == host && ev.latency_ms) {
            latencies.push_back(*ev.latency_ms);
        }
    }
    if (latencies.empty()) {
        throw NoBaselineError("no response events for host: " + std::string(host));
    }
    std::sort(latencies.begin(), latencies.end());
    return latencies[(latencies.size() - 1) / 2];
}

// ---------------------------------------------------------------------------
// Detectors
// ---------------------------------------------------------------------------

// A signal per response whose excess over the host baseline exceeds the
// threshold and is followed, within the correlation window, by a prompt
// on a premium-prompt element.
inline std::vector<TemporalSignal> detect_latency_injection(
    std::span<const InteractionEvent> events, const RoleMap& roles,
    const ThresholdProfile& th) {
    std::vector<TemporalSignal> out;
    std::map<std::string, std::int64_t> baselines;

    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        if (ev.kind != EventKind::Response || !ev.latency_ms) continue;
        auto bit = baselines.find(ev.host);
        if (bit == baselines.end()) {
            try {
                bit = baselines.emplace(ev.host, baseline_latency(events, ev.host)).first;
            } catch (const NoBaselineError&) {
                continue;
            }
        }
        const std::int64_t excess = *ev.latency_ms - bit->second;
        if (excess <= th.latency_excess_ms) continue;

        for (std::size_t j = 0; j < events.size(); ++j) {
            const auto& pr = events[j];
            if (pr.kind != EventKind::PromptShown || !pr.element_id) continue;
            if (!roles_of(roles, *pr.element_id).count(Role::PremiumPrompt)) continue;
            const std::int64_t gap = pr.t_ms - ev.t_ms;
            if (gap < 0 || gap > th.latency_corr_window_ms) continue;
            TemporalSignal sig;
            sig.kind = TemporalKind::LatencyInjection;
            sig.t_ms = pr.t_ms;
            sig.evidence = LatencyEvidence{excess, i, j, *pr.element_id};
            out.push_back(std::move(sig));
            break;  // one signal per offending response
        }
    }
    return out;
}

// A signal per mutation that moves a salience-flagged element farther than
// relocation_frac of the viewport diagonal within the window after a user
// input event (click or scroll).
inline std::vector<TemporalSignal> detect_relocation(std::span<const InteractionEvent> events,
                                                     const SalienceStats& salience,
                                                     const Viewport& viewport,
                                                     const ThresholdProfile& th) {
    std::vector<TemporalSignal> out;
    const double diagonal = viewport.diagonal();
    if (diagonal <= 0) return out;

    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& mu = events[i];
        if (mu.kind != EventKind::Mutation || !mu.element_id || !mu.old_bbox || !mu.new_bbox) {
            continue;
        }
        if (!salience.flagged(*mu.element_id)) continue;
        const double frac = center_distance(*mu.old_bbox, *mu.new_bbox) / diagonal;
        if (frac <= th.relocation_frac) continue;

        for (std::size_t j = 0; j < events.size(); ++j) {
            const auto& in = events[j];
            if (in.kind != EventKind::Click && in.kind != EventKind::Scroll) continue;
            const std::int64_t gap = mu.t_ms - in.t_ms;
            if (gap < 0 || gap > th.relocation_window_ms) continue;
            TemporalSignal sig;
            sig.kind = TemporalKind::Relocation;
            sig.t_ms = mu.t_ms;
            sig.evidence = RelocationEvidence{*mu.element_id, frac, i, j};
            out.push_back(std::move(sig));
            break;
        }
    }
    return out;
}

// One signal per prompt hash shown at least loop_min_count times with
// strictly decreasing inter-arrival intervals (the frequency rises as the
// user hesitates). Plateaus do not fire.
inline std::vector<TemporalSignal> detect_reinforcement_loop(
    std::span<const InteractionEvent> events, const ThresholdProfile& th) {
    std::map<std::uint64_t, std::vector<std::size_t>> by_hash;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].kind == EventKind::PromptShown && events[i].prompt_hash) {
            by_hash[*events[i].prompt_hash].push_back(i);
        }
    }

    std::vector<TemporalSignal> out;
    for (const auto& [hash, indices] : by_hash) {
        if (indices.size() < static_cast<std::size_t>(th.loop_min_count)) continue;
        std::vector<std::int64_t> intervals;
        bool decreasing = true;
        for (std::size_t k = 1; k < indices.size(); ++k) {
            intervals.push_back(events[indices[k]].t_ms - events[indices[k - 1]].t_ms);
            if (k >= 2 && intervals[k - 1] >= intervals[k - 2]) {
                decreasing = false;
                break;
            }
        }
        if (!decreasing) continue;
        const auto& last = events[indices.back()];
        TemporalSignal sig;
        sig.kind = TemporalKind::ReinforcementLoop;
        sig.t_ms = last.t_ms;
        sig.evidence = LoopEvidence{hash, std::move(intervals), indices,
                                    last.element_id.value_or("")};
        out.push_back(std::move(sig));
    }
    return out;
}

// All three detectors over one snapshot's event log. Latency detection is
// skipped silently when no baseline exists.
inline std::vector<TemporalSignal> detect_temporal_signals(const PageSnapshot& snap,
                                                           const RoleMap& roles,
                                                           const SalienceStats& salience,
                                                           const ThresholdProfile& th) {
    std::vector<TemporalSignal> out = detect_latency_injection(snap.events, roles, th);
    auto moved = detect_relocation(snap.events, salience, snap.viewport, th);
    out.insert(out.end(), moved.begin(), moved.end());
    auto loops = detect_reinforcement_loop(snap.events, th);
    out.insert(out.end(), loops.begin(), loops.end());
    return out;
}

}  // namespace darkscan
