#pragma once

#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "darkscan/errors.hpp"
#include "darkscan/model.hpp"
#include "darkscan/rules.hpp"
#include "darkscan/taxonomy.hpp"

namespace darkscan {

// ---------------------------------------------------------------------------
// Color contrast (WCAG 2.x relative luminance ratio)
// ---------------------------------------------------------------------------

inline double srgb_linear(int channel) {
    const double c = channel / 255.0;
    return c <= 0.03928 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double relative_luminance(const Rgb& c) {
    return 0.2126 * srgb_linear(c.r) + 0.7152 * srgb_linear(c.g) + 0.0722 * srgb_linear(c.b);
}

// Symmetric; range [1, 21].
inline double contrast_ratio(const Rgb& a, const Rgb& b) {
    const double la = relative_luminance(a);
    const double lb = relative_luminance(b);
    const double hi = std::max(la, lb);
    const double lo = std::min(la, lb);
    return (hi + 0.05) / (lo + 0.05);
}

// Nearest ancestor's concrete background color; white at the root.
inline Rgb resolved_bg(const ElementNode& e, const PageSnapshot& snap) {
    std::unordered_map<std::string_view, const ElementNode*> by_id;
    by_id.reserve(snap.elements.size());
    for (const auto& el : snap.elements) by_id.emplace(el.id, &el);

    const ElementNode* node = &e;
    std::size_t hops = 0;
    while (node && hops <= snap.elements.size()) {
        if (node->style.bg) return *node->style.bg;
        if (!node->parent_id) break;
        auto it = by_id.find(*node->parent_id);
        node = it == by_id.end() ? nullptr : it->second;
        ++hops;
    }
    return Rgb{255, 255, 255};
}

// ---------------------------------------------------------------------------
// Salience Index
// ---------------------------------------------------------------------------

// SI = (bbox area / viewport area) * contrast(fg, resolved bg);
// 0 when the element is effectively invisible.
inline double salience_index(const ElementNode& e, const PageSnapshot& snap) {
    if (effective_opacity(e.id, snap) == 0.0) return 0.0;
    const double vp_area = snap.viewport.area();
    if (vp_area <= 0) return 0.0;
    const double area_frac = e.bbox.area() / vp_area;
    return area_frac * contrast_ratio(e.style.fg, resolved_bg(e, snap));
}

struct SalienceStats {
    std::map<std::string, double> index;  // per interactive element
    std::map<std::string, bool> flags;
    double mean = 0;
    double sigma = 0;  // population standard deviation

    bool flagged(const std::string& element_id) const {
        auto it = flags.find(element_id);
        return it != flags.end() && it->second;
    }
};

// Population statistics over the snapshot's interactive elements;
// an element flags iff SI > mean + salience_sigma * sigma (strict).
// Zero spread flags nothing.
inline SalienceStats salience_flags(const PageSnapshot& snap, const ThresholdProfile& th) {
    SalienceStats stats;
    for (const auto& e : snap.elements) {
        if (e.interactive) stats.index[e.id] = salience_index(e, snap);
    }
    if (stats.index.empty()) return stats;

    double sum = 0;
    for (const auto& [_, si] : stats.index) sum += si;
    stats.mean = sum / static_cast<double>(stats.index.size());
    double var = 0;
    for (const auto& [_, si] : stats.index) var += (si - stats.mean) * (si - stats.mean);
    var /= static_cast<double>(stats.index.size());
    stats.sigma = std::sqrt(var);

    const double threshold = stats.mean + th.salience_sigma * stats.sigma;
    for (const auto& [id, si] : stats.index) {
        stats.flags[id] = stats.sigma > 0 && si > threshold;
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Path Interference Score
// ---------------------------------------------------------------------------

struct PathReadout {
    std::string opt_in_task;
    std::string opt_out_task;
    std::optional<int> d_in;          // clicks from entry; nullopt = unreachable
    std::optional<int> d_out;
    std::optional<int> extra_clicks;  // d_out - d_in when both finite
    bool pis_flag = false;

    friend bool operator==(const PathReadout&, const PathReadout&) = default;
};

// Shortest click count from `from` to any goal state; breadth-first over
// directed edges. nullopt when no goal is reachable.
inline std::optional<int> flow_distance(const FlowGraph& flow, const std::string& from,
                                        const std::set<std::string>& goals) {
    if (goals.count(from)) return 0;
    std::map<std::string, std::vector<const FlowEdge*>> adj;
    for (const auto& e : flow.edges) adj[e.from_state].push_back(&e);

    std::map<std::string, int> dist{{from, 0}};
    std::deque<std::string> queue{from};
    while (!queue.empty()) {
        const std::string state = queue.front();
        queue.pop_front();
        const int d = dist[state];
        for (const FlowEdge* e : adj[state]) {
            if (dist.count(e->to_state)) continue;
            dist[e->to_state] = d + 1;
            if (goals.count(e->to_state)) return d + 1;
            queue.push_back(e->to_state);
        }
    }
    return std::nullopt;
}

inline PathReadout path_interference_pair(const FlowGraph& flow, const std::string& opt_in,
                                          const std::string& opt_out,
                                          const ThresholdProfile& th) {
    auto in_it = flow.tasks.find(opt_in);
    auto out_it = flow.tasks.find(opt_out);
    if (in_it == flow.tasks.end() || out_it == flow.tasks.end()) {
        throw ConfigError("task pair (" + opt_in + "," + opt_out + ") not declared in flow");
    }
    PathReadout r;
    r.opt_in_task = opt_in;
    r.opt_out_task = opt_out;
    r.d_in = flow_distance(flow, flow.entry_state, in_it->second);
    r.d_out = flow_distance(flow, flow.entry_state, out_it->second);
    if (r.d_in && r.d_out) r.extra_clicks = *r.d_out - *r.d_in;
    // An unreachable opt-out always flags (the Roach Motel shape).
    r.pis_flag = !r.d_out || (r.extra_clicks && *r.extra_clicks > th.pis_extra_clicks);
    return r;
}

// One readout per declared task pair.
inline std::vector<PathReadout> path_interference(const FlowGraph& flow,
                                                  const ThresholdProfile& th) {
    std::vector<PathReadout> out;
    out.reserve(flow.pairs.size());
    for (const auto& [opt_in, opt_out] : flow.pairs) {
        out.push_back(path_interference_pair(flow, opt_in, opt_out, th));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Escape Visibility
// ---------------------------------------------------------------------------

struct HeuristicReadout {
    std::string element_id;
    double salience = 0;
    bool salience_flag = false;
    double escape_opacity = 1.0;
    bool off_viewport = false;
    bool escape_flag = false;

    friend bool operator==(const HeuristicReadout&, const HeuristicReadout&) = default;
};

// Escape fields for every dismiss-role element: flag when the control is
// nearly invisible or outside the viewport.
inline std::vector<HeuristicReadout> escape_visibility(const PageSnapshot& snap,
                                                       const RoleMap& roles,
                                                       const ThresholdProfile& th) {
    std::vector<HeuristicReadout> out;
    for (const auto& e : snap.elements) {
        if (!roles_of(roles, e.id).count(Role::Dismiss)) continue;
        HeuristicReadout r;
        r.element_id = e.id;
        r.escape_opacity = effective_opacity(e.id, snap);
        r.off_viewport = !is_in_viewport(e.bbox, snap.viewport);
        r.escape_flag = r.escape_opacity < th.escape_opacity || r.off_viewport;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace darkscan
