#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "darkscan/errors.hpp"
#include "darkscan/model.hpp"
#include "darkscan/text.hpp"
#include "darkscan/version.hpp"

namespace darkscan {

using json = nlohmann::json;

struct BundleManifest {
    std::string schema_version = kBundleSchemaVersion;
    std::string host;
    std::optional<bool> site_label;  // ground truth when known (synthetic corpora)
    std::vector<std::string> capture_errors;

    friend bool operator==(const BundleManifest&, const BundleManifest&) = default;
};

struct SnapshotBundle {
    BundleManifest manifest;
    std::vector<PageSnapshot> snapshots;
    std::optional<FlowGraph> flow;

    const PageSnapshot* snapshot_for_state(std::string_view state) const {
        for (const auto& s : snapshots) {
            if (s.effective_state_id() == state || s.snapshot_id == state) return &s;
        }
        return nullptr;
    }

    friend bool operator==(const SnapshotBundle&, const SnapshotBundle&) = default;
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

class BundleReader {
public:
    explicit BundleReader(bool lenient) : lenient_(lenient) {}

    std::vector<std::string>& errors() { return errors_; }

    void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
        if (lenient_ || !obj.is_object()) return;
        for (const auto& [key, _] : obj.items()) {
            bool known = false;
            for (auto a : allowed) {
                if (key == a) {
                    known = true;
                    break;
                }
            }
            if (!known) fail(where + ": unknown key '" + key + "'");
        }
    }

    void fail(std::string msg) { errors_.push_back(std::move(msg)); }

    std::string req_string(const json& obj, const char* key, const std::string& where) {
        if (!obj.contains(key) || !obj[key].is_string()) {
            fail(where + ": missing or non-string '" + key + "'");
            return {};
        }
        return obj[key].get<std::string>();
    }

    double req_number(const json& obj, const char* key, const std::string& where) {
        if (!obj.contains(key) || !obj[key].is_number()) {
            fail(where + ": missing or non-numeric '" + key + "'");
            return 0;
        }
        return obj[key].get<double>();
    }

    std::int64_t req_int(const json& obj, const char* key, const std::string& where) {
        if (!obj.contains(key) || !obj[key].is_number_integer()) {
            fail(where + ": missing or non-integer '" + key + "'");
            return 0;
        }
        return obj[key].get<std::int64_t>();
    }

    std::optional<Box> parse_box(const json& v, const std::string& where) {
        if (!v.is_array() || v.size() != 4 || !v[0].is_number() || !v[1].is_number() ||
            !v[2].is_number() || !v[3].is_number()) {
            fail(where + ": box must be [x,y,w,h] numbers");
            return std::nullopt;
        }
        return Box{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
    }

    std::optional<Rgb> parse_rgb(const json& v, const std::string& where) {
        if (!v.is_array() || v.size() != 3 || !v[0].is_number_integer() ||
            !v[1].is_number_integer() || !v[2].is_number_integer()) {
            fail(where + ": color must be [r,g,b] integers");
            return std::nullopt;
        }
        return Rgb{v[0].get<int>(), v[1].get<int>(), v[2].get<int>()};
    }

    StyleInfo parse_style(const json& v, const std::string& where) {
        StyleInfo st;
        if (!v.is_object()) {
            fail(where + ": style must be an object");
            return st;
        }
        check_keys(v, {"fg", "bg", "opacity", "z", "display"}, where);
        if (v.contains("fg")) {
            if (auto c = parse_rgb(v["fg"], where + ".fg")) st.fg = *c;
        }
        if (v.contains("bg")) {
            if (v["bg"].is_string()) {
                if (v["bg"].get<std::string>() != "transparent") {
                    fail(where + ": bg string must be 'transparent'");
                }
            } else if (auto c = parse_rgb(v["bg"], where + ".bg")) {
                st.bg = *c;
            }
        }
        if (v.contains("opacity")) {
            if (v["opacity"].is_number()) st.opacity = v["opacity"].get<double>();
            else fail(where + ": opacity must be a number");
        }
        if (v.contains("z")) {
            if (v["z"].is_number_integer()) st.z_index = v["z"].get<int>();
            else fail(where + ": z must be an integer");
        }
        if (v.contains("display")) {
            auto d = v["display"].is_string() ? display_from_name(v["display"].get<std::string>())
                                              : std::nullopt;
            if (!d) fail(where + ": display must be visible|hidden|none");
            else st.display = *d;
        }
        return st;
    }

    ElementNode parse_element(const json& v, const std::string& where) {
        ElementNode e;
        if (!v.is_object()) {
            fail(where + ": element must be an object");
            return e;
        }
        check_keys(v, {"id", "parent", "tag", "bbox", "style", "text", "interactive", "roles",
                       "attrs"},
                   where);
        e.id = req_string(v, "id", where);
        if (v.contains("parent")) e.parent_id = req_string(v, "parent", where);
        e.tag = req_string(v, "tag", where);
        if (v.contains("bbox")) {
            if (auto b = parse_box(v["bbox"], where + ".bbox")) e.bbox = *b;
        } else {
            fail(where + ": missing 'bbox'");
        }
        if (v.contains("style")) e.style = parse_style(v["style"], where + ".style");
        if (v.contains("text")) e.text = req_string(v, "text", where);
        if (v.contains("interactive")) {
            if (v["interactive"].is_boolean()) e.interactive = v["interactive"].get<bool>();
            else fail(where + ": interactive must be boolean");
        }
        if (v.contains("roles")) {
            if (!v["roles"].is_array()) {
                fail(where + ": roles must be an array");
            } else {
                for (const auto& r : v["roles"]) {
                    auto role = r.is_string() ? role_from_name(r.get<std::string>()) : std::nullopt;
                    if (!role) fail(where + ": unknown role annotation");
                    else e.roles.insert(*role);
                }
            }
        }
        if (v.contains("attrs")) {
            if (!v["attrs"].is_object()) {
                fail(where + ": attrs must be an object");
            } else {
                for (const auto& [k, val] : v["attrs"].items()) {
                    if (!val.is_string()) fail(where + ": attr '" + k + "' must be a string");
                    else e.attrs[k] = val.get<std::string>();
                }
            }
        }
        return e;
    }

    InteractionEvent parse_event(const json& v, const std::string& where) {
        InteractionEvent ev;
        if (!v.is_object()) {
            fail(where + ": event must be an object");
            return ev;
        }
        check_keys(v, {"t_ms", "kind", "element_id", "latency_ms", "prompt_hash", "old_bbox",
                       "new_bbox", "host"},
                   where);
        ev.t_ms = req_int(v, "t_ms", where);
        auto kind = v.contains("kind") && v["kind"].is_string()
                        ? event_kind_from_name(v["kind"].get<std::string>())
                        : std::nullopt;
        if (!kind) fail(where + ": missing or unknown event kind");
        else ev.kind = *kind;
        if (v.contains("element_id")) ev.element_id = req_string(v, "element_id", where);
        if (v.contains("latency_ms")) ev.latency_ms = req_int(v, "latency_ms", where);
        if (v.contains("prompt_hash")) {
            const std::string hex = req_string(v, "prompt_hash", where);
            std::uint64_t h = 0;
            bool ok = !hex.empty() && hex.size() <= 16;
            for (char c : hex) {
                int digit;
                if (c >= '0' && c <= '9') digit = c - '0';
                else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
                else { ok = false; break; }
                h = (h << 4) | static_cast<std::uint64_t>(digit);
            }
            if (!ok) fail(where + ": prompt_hash must be lowercase hex");
            else ev.prompt_hash = h;
        }
        if (v.contains("old_bbox")) ev.old_bbox = parse_box(v["old_bbox"], where + ".old_bbox");
        if (v.contains("new_bbox")) ev.new_bbox = parse_box(v["new_bbox"], where + ".new_bbox");
        if (v.contains("host")) ev.host = req_string(v, "host", where);
        return ev;
    }

    PageSnapshot parse_snapshot(const json& v, const std::string& where) {
        PageSnapshot s;
        if (!v.is_object()) {
            fail(where + ": snapshot must be an object");
            return s;
        }
        check_keys(v, {"snapshot_id", "url", "captured_at", "viewport", "state_id", "elements",
                       "text_blocks", "events"},
                   where);
        s.snapshot_id = req_string(v, "snapshot_id", where);
        s.url = req_string(v, "url", where);
        s.captured_at = req_string(v, "captured_at", where);
        if (v.contains("viewport") && v["viewport"].is_array() && v["viewport"].size() == 2 &&
            v["viewport"][0].is_number() && v["viewport"][1].is_number()) {
            s.viewport = {v["viewport"][0].get<double>(), v["viewport"][1].get<double>()};
        } else {
            fail(where + ": viewport must be [width,height]");
        }
        if (v.contains("state_id")) s.state_id = req_string(v, "state_id", where);
        if (v.contains("elements")) {
            if (!v["elements"].is_array()) fail(where + ": elements must be an array");
            else {
                std::size_t i = 0;
                for (const auto& el : v["elements"]) {
                    s.elements.push_back(
                        parse_element(el, where + ".elements[" + std::to_string(i++) + "]"));
                }
            }
        }
        if (v.contains("text_blocks")) {
            if (!v["text_blocks"].is_array()) fail(where + ": text_blocks must be an array");
            else {
                std::size_t i = 0;
                for (const auto& bl : v["text_blocks"]) {
                    const std::string bw = where + ".text_blocks[" + std::to_string(i++) + "]";
                    if (!bl.is_object()) {
                        fail(bw + ": block must be an object");
                        continue;
                    }
                    check_keys(bl, {"block_id", "element_id", "raw_text"}, bw);
                    TextBlock b;
                    b.block_id = req_string(bl, "block_id", bw);
                    b.element_id = req_string(bl, "element_id", bw);
                    b.raw_text = req_string(bl, "raw_text", bw);
                    s.text_blocks.push_back(std::move(b));
                }
            }
        }
        if (v.contains("events")) {
            if (!v["events"].is_array()) fail(where + ": events must be an array");
            else {
                std::size_t i = 0;
                for (const auto& ev : v["events"]) {
                    s.events.push_back(
                        parse_event(ev, where + ".events[" + std::to_string(i++) + "]"));
                }
            }
        }
        return s;
    }

    FlowGraph parse_flow(const json& v) {
        FlowGraph f;
        const std::string where = "flow";
        if (!v.is_object()) {
            fail(where + ": must be an object");
            return f;
        }
        check_keys(v, {"entry", "states", "edges", "tasks", "pairs"}, where);
        f.entry_state = req_string(v, "entry", where);
        if (v.contains("states") && v["states"].is_array()) {
            for (const auto& s : v["states"]) {
                if (s.is_string()) f.states.insert(s.get<std::string>());
                else fail(where + ": state ids must be strings");
            }
        } else {
            fail(where + ": missing 'states' array");
        }
        if (v.contains("edges")) {
            if (!v["edges"].is_array()) fail(where + ": edges must be an array");
            else {
                std::size_t i = 0;
                for (const auto& e : v["edges"]) {
                    const std::string ew = where + ".edges[" + std::to_string(i++) + "]";
                    if (!e.is_object()) {
                        fail(ew + ": edge must be an object");
                        continue;
                    }
                    check_keys(e, {"from", "element", "to"}, ew);
                    f.edges.push_back({req_string(e, "from", ew), req_string(e, "element", ew),
                                       req_string(e, "to", ew)});
                }
            }
        }
        if (v.contains("tasks")) {
            if (!v["tasks"].is_object()) fail(where + ": tasks must be an object");
            else {
                for (const auto& [name, goals] : v["tasks"].items()) {
                    std::set<std::string> goal_set;
                    if (!goals.is_array()) {
                        fail(where + ": task '" + name + "' goals must be an array");
                        continue;
                    }
                    for (const auto& g : goals) {
                        if (g.is_string()) goal_set.insert(g.get<std::string>());
                        else fail(where + ": task '" + name + "' goal ids must be strings");
                    }
                    f.tasks[name] = std::move(goal_set);
                }
            }
        }
        if (v.contains("pairs")) {
            if (!v["pairs"].is_array()) fail(where + ": pairs must be an array");
            else {
                for (const auto& p : v["pairs"]) {
                    if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string()) {
                        fail(where + ": each pair must be [opt_in, opt_out]");
                        continue;
                    }
                    f.pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
                }
            }
        }
        return f;
    }

private:
    bool lenient_;
    std::vector<std::string> errors_;
};

}  // namespace detail

// Parses and fully validates a snapshot bundle document. Every snapshot is
// run through validate_snapshot and every text block is tokenized. Throws
// ParseError listing all violations. Unknown keys are rejected unless
// `lenient` is set.
inline SnapshotBundle parse_snapshot_bundle(const std::string& text, bool lenient = false) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }

    detail::BundleReader r(lenient);
    SnapshotBundle bundle;

    if (!doc.is_object()) {
        throw ParseError("bundle document must be a JSON object");
    }
    r.check_keys(doc, {"manifest", "snapshots", "flow"}, "bundle");

    if (doc.contains("manifest") && doc["manifest"].is_object()) {
        const auto& m = doc["manifest"];
        r.check_keys(m, {"schema_version", "host", "site_label", "capture_errors"}, "manifest");
        bundle.manifest.schema_version = r.req_string(m, "schema_version", "manifest");
        bundle.manifest.host = r.req_string(m, "host", "manifest");
        if (m.contains("site_label")) {
            if (m["site_label"].is_boolean()) bundle.manifest.site_label = m["site_label"].get<bool>();
            else r.fail("manifest: site_label must be boolean");
        }
        if (m.contains("capture_errors")) {
            if (m["capture_errors"].is_array()) {
                for (const auto& e : m["capture_errors"]) {
                    if (e.is_string()) bundle.manifest.capture_errors.push_back(e.get<std::string>());
                    else r.fail("manifest: capture_errors entries must be strings");
                }
            } else {
                r.fail("manifest: capture_errors must be an array");
            }
        }
        if (bundle.manifest.schema_version != kBundleSchemaVersion) {
            r.fail("manifest: unsupported schema_version '" + bundle.manifest.schema_version +
                   "' (supported: " + kBundleSchemaVersion + ")");
        }
    } else {
        r.fail("bundle: missing 'manifest' object");
    }

    if (doc.contains("snapshots") && doc["snapshots"].is_array()) {
        std::size_t i = 0;
        for (const auto& s : doc["snapshots"]) {
            bundle.snapshots.push_back(
                r.parse_snapshot(s, "snapshots[" + std::to_string(i++) + "]"));
        }
    } else {
        r.fail("bundle: missing 'snapshots' array");
    }

    if (doc.contains("flow") && !doc["flow"].is_null()) {
        bundle.flow = r.parse_flow(doc["flow"]);
    }

    // Structural validation on top of field-level parsing.
    std::unordered_set<std::string> snapshot_ids;
    std::unordered_set<std::string> state_ids;
    for (const auto& s : bundle.snapshots) {
        if (!snapshot_ids.insert(s.snapshot_id).second) {
            r.fail("bundle: duplicate snapshot id '" + s.snapshot_id + "'");
        }
        state_ids.insert(s.effective_state_id());
        state_ids.insert(s.snapshot_id);
        for (const auto& v : validate_snapshot(s)) {
            r.fail("snapshot " + s.snapshot_id + ": " + v.code + ": " + v.detail);
        }
    }
    if (bundle.flow) {
        const auto& f = *bundle.flow;
        for (const auto& st : f.states) {
            if (!state_ids.count(st)) {
                r.fail("flow: state '" + st + "' does not resolve to any snapshot");
            }
        }
        if (f.entry_state.empty() || !f.states.count(f.entry_state)) {
            r.fail("flow: entry state missing from states");
        }
        for (const auto& e : f.edges) {
            if (!f.states.count(e.from_state) || !f.states.count(e.to_state)) {
                r.fail("flow: edge " + e.from_state + "->" + e.to_state +
                       " references undeclared state");
            }
        }
        for (const auto& [name, goals] : f.tasks) {
            if (goals.empty()) r.fail("flow: task '" + name + "' has an empty goal set");
            for (const auto& g : goals) {
                if (!f.states.count(g)) {
                    r.fail("flow: task '" + name + "' goal '" + g + "' not in states");
                }
            }
        }
        for (const auto& [a, b] : f.pairs) {
            if (!f.tasks.count(a) || !f.tasks.count(b)) {
                r.fail("flow: pair (" + a + "," + b + ") references undeclared task");
            }
        }
    }

    if (!r.errors().empty()) {
        std::ostringstream msg;
        msg << "bundle parse failed with " << r.errors().size() << " violation(s)";
        throw ParseError(msg.str(), r.errors());
    }

    // Tokenize every text block with the canonical tokenizer.
    for (auto& s : bundle.snapshots) {
        for (auto& b : s.text_blocks) {
            b.tokens = canonicalize_text(b.raw_text);
        }
    }
    return bundle;
}

inline SnapshotBundle load_snapshot_bundle(const std::string& path, bool lenient = false) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read bundle file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_snapshot_bundle(ss.str(), lenient);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline json box_json(const Box& b) { return json::array({b.x, b.y, b.w, b.h}); }

inline json rgb_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

inline std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

inline json style_json(const StyleInfo& st) {
    json v;
    v["fg"] = rgb_json(st.fg);
    if (st.bg) v["bg"] = rgb_json(*st.bg);
    else v["bg"] = "transparent";
    v["opacity"] = st.opacity;
    v["z"] = st.z_index;
    v["display"] = display_name(st.display);
    return v;
}

inline json element_json(const ElementNode& e) {
    json v;
    v["id"] = e.id;
    if (e.parent_id) v["parent"] = *e.parent_id;
    v["tag"] = e.tag;
    v["bbox"] = box_json(e.bbox);
    v["style"] = style_json(e.style);
    if (!e.text.empty()) v["text"] = e.text;
    v["interactive"] = e.interactive;
    if (!e.roles.empty()) {
        json roles = json::array();
        for (auto role : e.roles) roles.push_back(role_name(role));
        v["roles"] = roles;
    }
    if (!e.attrs.empty()) v["attrs"] = e.attrs;
    return v;
}

inline json event_json(const InteractionEvent& ev) {
    json v;
    v["t_ms"] = ev.t_ms;
    v["kind"] = event_kind_name(ev.kind);
    if (ev.element_id) v["element_id"] = *ev.element_id;
    if (ev.latency_ms) v["latency_ms"] = *ev.latency_ms;
    if (ev.prompt_hash) v["prompt_hash"] = hash_hex(*ev.prompt_hash);
    if (ev.old_bbox) v["old_bbox"] = box_json(*ev.old_bbox);
    if (ev.new_bbox) v["new_bbox"] = box_json(*ev.new_bbox);
    if (!ev.host.empty()) v["host"] = ev.host;
    return v;
}

inline json snapshot_json(const PageSnapshot& s) {
    json v;
    v["snapshot_id"] = s.snapshot_id;
    v["url"] = s.url;
    v["captured_at"] = s.captured_at;
    v["viewport"] = json::array({s.viewport.width, s.viewport.height});
    if (s.state_id) v["state_id"] = *s.state_id;
    json elements = json::array();
    for (const auto& e : s.elements) elements.push_back(element_json(e));
    v["elements"] = elements;
    if (!s.text_blocks.empty()) {
        json blocks = json::array();
        for (const auto& b : s.text_blocks) {
            blocks.push_back({{"block_id", b.block_id},
                              {"element_id", b.element_id},
                              {"raw_text", b.raw_text}});
        }
        v["text_blocks"] = blocks;
    }
    if (!s.events.empty()) {
        json events = json::array();
        for (const auto& ev : s.events) events.push_back(event_json(ev));
        v["events"] = events;
    }
    return v;
}

inline json flow_json(const FlowGraph& f) {
    json v;
    v["entry"] = f.entry_state;
    v["states"] = f.states;
    json edges = json::array();
    for (const auto& e : f.edges) {
        edges.push_back({{"from", e.from_state}, {"element", e.element_id}, {"to", e.to_state}});
    }
    v["edges"] = edges;
    if (!f.tasks.empty()) v["tasks"] = f.tasks;
    if (!f.pairs.empty()) {
        json pairs = json::array();
        for (const auto& [a, b] : f.pairs) pairs.push_back(json::array({a, b}));
        v["pairs"] = pairs;
    }
    return v;
}

}  // namespace detail

// Canonical bundle serialization: two-space indent, keys sorted, one
// trailing newline. parse(serialize(b)) == b for every valid bundle.
inline std::string serialize_snapshot_bundle(const SnapshotBundle& bundle) {
    json doc;
    json m;
    m["schema_version"] = bundle.manifest.schema_version;
    m["host"] = bundle.manifest.host;
    if (bundle.manifest.site_label) m["site_label"] = *bundle.manifest.site_label;
    if (!bundle.manifest.capture_errors.empty()) m["capture_errors"] = bundle.manifest.capture_errors;
    doc["manifest"] = m;
    json snaps = json::array();
    for (const auto& s : bundle.snapshots) snaps.push_back(detail::snapshot_json(s));
    doc["snapshots"] = snaps;
    if (bundle.flow) doc["flow"] = detail::flow_json(*bundle.flow);
    return doc.dump(2) + "\n";
}

}  // namespace darkscan
