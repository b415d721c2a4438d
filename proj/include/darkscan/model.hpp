#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "darkscan/errors.hpp"

namespace darkscan {

// ---------------------------------------------------------------------------
// Enums
// ---------------------------------------------------------------------------

enum class Category { A, B, C, D, E };

inline char category_letter(Category c) {
    return static_cast<char>('A' + static_cast<int>(c));
}

inline std::optional<Category> category_from_letter(char ch) {
    if (ch >= 'A' && ch <= 'E') return static_cast<Category>(ch - 'A');
    return std::nullopt;
}

inline constexpr Category kAllCategories[] = {Category::A, Category::B, Category::C,
                                              Category::D, Category::E};

enum class Role { Dismiss, ConsentAccept, ConsentDecline, PremiumPrompt };

inline std::string role_name(Role r) {
    switch (r) {
        case Role::Dismiss: return "dismiss";
        case Role::ConsentAccept: return "consent-accept";
        case Role::ConsentDecline: return "consent-decline";
        case Role::PremiumPrompt: return "premium-prompt";
    }
    return "none";
}

inline std::optional<Role> role_from_name(std::string_view s) {
    if (s == "dismiss") return Role::Dismiss;
    if (s == "consent-accept") return Role::ConsentAccept;
    if (s == "consent-decline") return Role::ConsentDecline;
    if (s == "premium-prompt") return Role::PremiumPrompt;
    return std::nullopt;
}

enum class Display { Visible, Hidden, None };

inline std::string display_name(Display d) {
    switch (d) {
        case Display::Visible: return "visible";
        case Display::Hidden: return "hidden";
        case Display::None: return "none";
    }
    return "visible";
}

inline std::optional<Display> display_from_name(std::string_view s) {
    if (s == "visible") return Display::Visible;
    if (s == "hidden") return Display::Hidden;
    if (s == "none") return Display::None;
    return std::nullopt;
}

enum class EventKind { Navigate, Click, Scroll, Mutation, PromptShown, Response };

inline std::string event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::Navigate: return "navigate";
        case EventKind::Click: return "click";
        case EventKind::Scroll: return "scroll";
        case EventKind::Mutation: return "mutation";
        case EventKind::PromptShown: return "prompt_shown";
        case EventKind::Response: return "response";
    }
    return "navigate";
}

inline std::optional<EventKind> event_kind_from_name(std::string_view s) {
    if (s == "navigate") return EventKind::Navigate;
    if (s == "click") return EventKind::Click;
    if (s == "scroll") return EventKind::Scroll;
    if (s == "mutation") return EventKind::Mutation;
    if (s == "prompt_shown") return EventKind::PromptShown;
    if (s == "response") return EventKind::Response;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

struct Rgb {
    int r = 0;
    int g = 0;
    int b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Box {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;

    double area() const { return w * h; }
    double center_x() const { return x + w / 2; }
    double center_y() const { return y + h / 2; }

    friend bool operator==(const Box&, const Box&) = default;
};

inline double center_distance(const Box& a, const Box& b) {
    const double dx = a.center_x() - b.center_x();
    const double dy = a.center_y() - b.center_y();
    return std::sqrt(dx * dx + dy * dy);
}

struct Viewport {
    double width = 0;
    double height = 0;

    double area() const { return width * height; }
    double diagonal() const { return std::sqrt(width * width + height * height); }

    friend bool operator==(const Viewport&, const Viewport&) = default;
};

struct StyleInfo {
    Rgb fg{0, 0, 0};
    std::optional<Rgb> bg;  // nullopt = transparent, resolved against ancestors
    double opacity = 1.0;
    int z_index = 0;
    Display display = Display::Visible;

    friend bool operator==(const StyleInfo&, const StyleInfo&) = default;
};

struct ElementNode {
    std::string id;
    std::optional<std::string> parent_id;
    std::string tag;
    Box bbox;
    StyleInfo style;
    std::string text;  // own text, may be empty
    bool interactive = false;
    std::set<Role> roles;  // explicit snapshot annotation; inferred roles live outside
    std::map<std::string, std::string> attrs;

    friend bool operator==(const ElementNode&, const ElementNode&) = default;
};

struct TextBlock {
    std::string block_id;
    std::string element_id;
    std::string raw_text;
    std::vector<std::string> tokens;  // filled by ingest via the canonical tokenizer

    friend bool operator==(const TextBlock&, const TextBlock&) = default;
};

struct InteractionEvent {
    std::int64_t t_ms = 0;
    EventKind kind = EventKind::Navigate;
    std::optional<std::string> element_id;
    std::optional<std::int64_t> latency_ms;     // present iff kind = response
    std::optional<std::uint64_t> prompt_hash;   // present iff kind = prompt_shown
    std::optional<Box> old_bbox;                // present iff kind = mutation
    std::optional<Box> new_bbox;                // present iff kind = mutation
    std::string host;

    friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

struct FlowEdge {
    std::string from_state;
    std::string element_id;  // element clicked
    std::string to_state;

    friend bool operator==(const FlowEdge&, const FlowEdge&) = default;
};

struct FlowGraph {
    std::string entry_state;
    std::set<std::string> states;
    std::vector<FlowEdge> edges;
    std::map<std::string, std::set<std::string>> tasks;  // task name -> accepting states
    std::vector<std::pair<std::string, std::string>> pairs;  // (opt-in task, opt-out task)

    friend bool operator==(const FlowGraph&, const FlowGraph&) = default;
};

struct PageSnapshot {
    std::string snapshot_id;
    std::string url;
    std::string captured_at;  // ISO-8601 UTC
    Viewport viewport;
    std::vector<ElementNode> elements;
    std::vector<TextBlock> text_blocks;
    std::vector<InteractionEvent> events;
    std::optional<std::string> state_id;

    // The flow-graph node this snapshot represents.
    const std::string& effective_state_id() const {
        return state_id ? *state_id : snapshot_id;
    }

    const ElementNode* find_element(std::string_view id) const {
        for (const auto& e : elements) {
            if (e.id == id) return &e;
        }
        return nullptr;
    }

    friend bool operator==(const PageSnapshot&, const PageSnapshot&) = default;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Product of style.opacity along the chain from the element to the root;
// 0 if any ancestor (or the element itself) has display hidden/none.
inline double effective_opacity(const std::string& element_id, const PageSnapshot& snap) {
    std::unordered_map<std::string_view, const ElementNode*> by_id;
    by_id.reserve(snap.elements.size());
    for (const auto& e : snap.elements) by_id.emplace(e.id, &e);

    auto it = by_id.find(element_id);
    if (it == by_id.end()) {
        throw NotFoundError("unknown element id: " + element_id);
    }

    double product = 1.0;
    std::unordered_set<std::string_view> seen;
    const ElementNode* node = it->second;
    while (node != nullptr) {
        if (!seen.insert(node->id).second) {
            throw MalformedSnapshotError("parent cycle at element: " + node->id);
        }
        if (node->style.display != Display::Visible) return 0.0;
        product *= node->style.opacity;
        if (!node->parent_id) break;
        auto pit = by_id.find(*node->parent_id);
        if (pit == by_id.end()) break;  // dangling parent: treat as root
        node = pit->second;
    }
    return product;
}

// True iff the bbox intersects [0,w] x [0,h] with positive area.
inline bool is_in_viewport(const Box& bbox, const Viewport& vp) {
    const double x0 = std::max(bbox.x, 0.0);
    const double y0 = std::max(bbox.y, 0.0);
    const double x1 = std::min(bbox.x + bbox.w, vp.width);
    const double y1 = std::min(bbox.y + bbox.h, vp.height);
    return x1 > x0 && y1 > y0;
}

struct Violation {
    std::string code;
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
};

// Reports every invariant violation; never mutates the input.
// Violations are data, not errors.
inline std::vector<Violation> validate_snapshot(const PageSnapshot& snap) {
    std::vector<Violation> out;
    const auto fail = [&](std::string code, std::string detail) {
        out.push_back({std::move(code), std::move(detail)});
    };

    if (snap.viewport.width <= 0 || snap.viewport.height <= 0) {
        fail("bad-viewport", "viewport dimensions must be positive");
    }

    std::unordered_map<std::string_view, const ElementNode*> by_id;
    for (const auto& e : snap.elements) {
        if (!by_id.emplace(e.id, &e).second) {
            fail("duplicate-id", "element id repeated: " + e.id);
        }
    }
    for (const auto& e : snap.elements) {
        if (e.parent_id && !by_id.count(*e.parent_id)) {
            fail("dangling-parent", "element " + e.id + " references missing parent " + *e.parent_id);
        }
        if (e.bbox.w < 0 || e.bbox.h < 0) {
            fail("negative-extent", "element " + e.id + " has negative width or height");
        }
        if (e.style.opacity < 0.0 || e.style.opacity > 1.0) {
            fail("bad-opacity", "element " + e.id + " opacity outside [0,1]");
        }
        const auto channel_ok = [](const Rgb& c) {
            return c.r >= 0 && c.r <= 255 && c.g >= 0 && c.g <= 255 && c.b >= 0 && c.b <= 255;
        };
        if (!channel_ok(e.style.fg) || (e.style.bg && !channel_ok(*e.style.bg))) {
            fail("bad-color", "element " + e.id + " color channel outside [0,255]");
        }
    }

    // Parent cycles: walk up from every element, bounded by element count.
    for (const auto& e : snap.elements) {
        const ElementNode* node = &e;
        std::size_t hops = 0;
        while (node->parent_id && hops <= snap.elements.size()) {
            auto pit = by_id.find(*node->parent_id);
            if (pit == by_id.end()) break;
            node = pit->second;
            ++hops;
        }
        if (hops > snap.elements.size()) {
            fail("parent-cycle", "cycle on the parent chain of element " + e.id);
            break;  // one report is enough; every member would re-detect it
        }
    }

    std::unordered_set<std::string_view> block_ids;
    for (const auto& b : snap.text_blocks) {
        if (!block_ids.insert(b.block_id).second) {
            fail("duplicate-block-id", "text block id repeated: " + b.block_id);
        }
        if (!by_id.count(b.element_id)) {
            fail("dangling-text-block", "block " + b.block_id + " references missing element " + b.element_id);
        }
    }

    for (std::size_t i = 1; i < snap.events.size(); ++i) {
        if (snap.events[i].t_ms < snap.events[i - 1].t_ms) {
            fail("unsorted-events", "event " + std::to_string(i) + " precedes its predecessor");
            break;
        }
    }
    for (std::size_t i = 0; i < snap.events.size(); ++i) {
        const auto& ev = snap.events[i];
        const std::string where = "event " + std::to_string(i);
        if (ev.latency_ms.has_value() != (ev.kind == EventKind::Response)) {
            fail("event-field-mismatch", where + ": latency_ms present iff kind=response");
        }
        if (ev.prompt_hash.has_value() != (ev.kind == EventKind::PromptShown)) {
            fail("event-field-mismatch", where + ": prompt_hash present iff kind=prompt_shown");
        }
        const bool boxes = ev.old_bbox.has_value() && ev.new_bbox.has_value();
        const bool no_boxes = !ev.old_bbox.has_value() && !ev.new_bbox.has_value();
        if (ev.kind == EventKind::Mutation ? !boxes : !no_boxes) {
            fail("event-field-mismatch", where + ": old/new bbox present iff kind=mutation");
        }
    }

    return out;
}

}  // namespace darkscan
