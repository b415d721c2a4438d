#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "darkscan/bundle.hpp"
#include "darkscan/errors.hpp"
#include "darkscan/model.hpp"
#include "darkscan/text.hpp"

namespace darkscan {

// ---------------------------------------------------------------------------
// Plans
// ---------------------------------------------------------------------------

struct PlanAction {
    enum class Kind { RecordState, Click, Move, Navigate, Scroll, Wait };
    Kind kind = Kind::RecordState;
    std::string target;  // css selector (click/move) or url (navigate)
    int amount = 0;      // scroll px or wait ms
};

struct CapturePlan {
    std::string url;
    int max_states = 8;
    std::vector<PlanAction> actions;
    int politeness_ms = 0;
    int timeout_ms = 5000;
    std::map<std::string, std::string> tasks;  // task name -> url regex
    std::vector<std::pair<std::string, std::string>> pairs;
};

inline CapturePlan parse_capture_plan(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed plan JSON: ") + e.what());
    }
    CapturePlan plan;
    if (doc.contains("url")) plan.url = doc["url"].get<std::string>();
    if (doc.contains("max_states")) plan.max_states = doc["max_states"].get<int>();
    if (doc.contains("politeness_ms")) plan.politeness_ms = doc["politeness_ms"].get<int>();
    if (doc.contains("timeout_ms")) plan.timeout_ms = doc["timeout_ms"].get<int>();
    if (plan.max_states < 1) throw ConfigError("plan max_states must be at least 1");
    if (plan.timeout_ms <= 0) throw ConfigError("plan timeout_ms must be positive");
    if (doc.contains("actions")) {
        for (const auto& a : doc["actions"]) {
            PlanAction action;
            if (a.contains("record_state")) {
                action.kind = PlanAction::Kind::RecordState;
            } else if (a.contains("click")) {
                action.kind = PlanAction::Kind::Click;
                action.target = a["click"].get<std::string>();
            } else if (a.contains("move")) {
                action.kind = PlanAction::Kind::Move;
                action.target = a["move"].get<std::string>();
            } else if (a.contains("navigate")) {
                action.kind = PlanAction::Kind::Navigate;
                action.target = a["navigate"].get<std::string>();
            } else if (a.contains("scroll")) {
                action.kind = PlanAction::Kind::Scroll;
                action.amount = a["scroll"].get<int>();
            } else if (a.contains("wait")) {
                action.kind = PlanAction::Kind::Wait;
                action.amount = a["wait"].get<int>();
            } else {
                throw ParseError("unknown plan action: " + a.dump());
            }
            plan.actions.push_back(std::move(action));
        }
    }
    if (doc.contains("tasks")) {
        for (const auto& [name, pattern] : doc["tasks"].items()) {
            plan.tasks[name] = pattern.get<std::string>();
        }
    }
    if (doc.contains("pairs")) {
        for (const auto& p : doc["pairs"]) {
            plan.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
        }
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Wire protocol session
// ---------------------------------------------------------------------------

struct WebDriverOptions {
    std::string endpoint;  // http://host:port
    int connect_retries = 0;
    int timeout_ms = 5000;
};

inline std::string url_host(const std::string& url) {
    auto start = url.find("://");
    start = start == std::string::npos ? 0 : start + 3;
    const auto end = url.find_first_of(":/", start);
    return url.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

// Injected extraction script. Returns the post-layout element list with
// computed styles, viewport, navigation/resource timing entries, and the
// mutations drained from the observer installed at load time.
inline constexpr const char* kInstallObserversScript = R"JS(/* __darkscan_install__ */
(function () {
  if (window.__darkscan) return true;
  var state = { mutations: [], counter: 0 };
  var observer = new MutationObserver(function (records) {
    records.forEach(function (r) {
      var el = r.target.nodeType === 1 ? r.target : r.target.parentElement;
      if (!el || !el.getAttribute) return;
      var id = el.getAttribute('data-darkscan-id');
      if (!id) return;
      var b = el.getBoundingClientRect();
      state.mutations.push({ element_id: id, box: [b.x, b.y, b.width, b.height] });
    });
  });
  observer.observe(document.documentElement, { attributes: true, childList: true, subtree: true });
  window.__darkscan = state;
  return true;
})();
)JS";

inline constexpr const char* kExtractStateScript = R"JS(/* __darkscan_extract__ */
(function () {
  var out = { url: location.href, viewport: [innerWidth, innerHeight],
              elements: [], timing: [], mutations: [] };
  var counter = 0;
  var walk = function (el, parentId) {
    var id = el.getAttribute('data-darkscan-id');
    if (!id) { id = 'e' + (counter++); el.setAttribute('data-darkscan-id', id); }
    var cs = getComputedStyle(el);
    var b = el.getBoundingClientRect();
    var toRgb = function (c) {
      var m = c.match(/rgba?\((\d+), ?(\d+), ?(\d+)(?:, ?([0-9.]+))?\)/);
      if (!m) return null;
      if (m[4] === '0') return 'transparent';
      return [Number(m[1]), Number(m[2]), Number(m[3])];
    };
    var own = '';
    el.childNodes.forEach(function (n) { if (n.nodeType === 3) own += n.textContent; });
    out.elements.push({
      id: id, parent: parentId, tag: el.tagName.toLowerCase(),
      bbox: [b.x, b.y, b.width, b.height],
      fg: toRgb(cs.color) || [0, 0, 0], bg: toRgb(cs.backgroundColor) || 'transparent',
      opacity: Number(cs.opacity), z: Number(cs.zIndex) || 0,
      display: cs.display === 'none' ? 'none' : (cs.visibility === 'hidden' ? 'hidden' : 'visible'),
      text: own.trim(), interactive: !!(el.onclick || el.href ||
        ['a', 'button', 'input', 'select'].indexOf(el.tagName.toLowerCase()) >= 0),
      attrs: {}
    });
    for (var i = 0; i < el.children.length; i++) walk(el.children[i], id);
  };
  walk(document.documentElement, null);
  performance.getEntriesByType('resource').concat(performance.getEntriesByType('navigation'))
    .forEach(function (e) {
      out.timing.push({ host: new URL(e.name, location.href).hostname,
                        latency_ms: Math.round(e.responseEnd - e.startTime) });
    });
  if (window.__darkscan) {
    out.mutations = window.__darkscan.mutations.splice(0);
  }
  return out;
})();
)JS";

class WebDriverSession {
public:
    static WebDriverSession create(const WebDriverOptions& options, const json& capabilities) {
        WebDriverSession session(options);
        json body;
        body["capabilities"] = {{"alwaysMatch", capabilities}};
        const std::string payload = body.dump();

        httplib::Result res;
        for (int attempt = 0;; ++attempt) {
            res = session.client_->Post("/session", payload, "application/json");
            if (res) break;
            if (attempt >= options.connect_retries) {
                throw ConnectionError("cannot reach WebDriver endpoint " + options.endpoint);
            }
        }
        const json reply = session.parse_reply(*res);
        if (res->status != 200) {
            throw CapabilityError("session creation rejected (HTTP " +
                                      std::to_string(res->status) + ")",
                                  res->body);
        }
        if (!reply.contains("value") || !reply["value"].contains("sessionId")) {
            throw ProtocolError("session reply lacks a sessionId", res->body);
        }
        session.id_ = reply["value"]["sessionId"].get<std::string>();
        return session;
    }

    WebDriverSession(WebDriverSession&& other) noexcept = default;
    WebDriverSession& operator=(WebDriverSession&&) noexcept = default;
    WebDriverSession(const WebDriverSession&) = delete;
    WebDriverSession& operator=(const WebDriverSession&) = delete;

    ~WebDriverSession() {
        if (!id_.empty() && client_) {
            // Teardown is always attempted; failures are not interesting here.
            client_->Delete("/session/" + id_);
        }
    }

    const std::string& id() const { return id_; }

    void quit() {
        if (!id_.empty() && client_) {
            client_->Delete("/session/" + id_);
            id_.clear();
        }
    }

    void navigate(const std::string& url) {
        post("/url", json{{"url", url}});
    }

    std::string current_url() {
        const json v = get("/url");
        return v.is_string() ? v.get<std::string>() : "";
    }

    json execute_script(const std::string& script, const json& args = json::array()) {
        return post("/execute/sync", json{{"script", script}, {"args", args}});
    }

    std::string find_element(const std::string& css) {
        const json v = post("/element", json{{"using", "css selector"}, {"value", css}});
        for (const auto& [key, value] : v.items()) {
            if (value.is_string()) return value.get<std::string>();
        }
        throw ProtocolError("element reply lacks an element id", v.dump());
    }

    void click(const std::string& element_id) {
        post("/element/" + element_id + "/click", json::object());
    }

    // Pointer move over an element, to surface hover-revealed content.
    void move_to(const std::string& element_id) {
        json pointer;
        pointer["type"] = "pointer";
        pointer["id"] = "mouse";
        pointer["parameters"] = {{"pointerType", "mouse"}};
        json move;
        move["type"] = "pointerMove";
        move["duration"] = 0;
        move["origin"] = {{"element-6066-11e4-a52e-4f735466cecf", element_id}};
        move["x"] = 0;
        move["y"] = 0;
        pointer["actions"] = json::array({move});
        post("/actions", json{{"actions", json::array({pointer})}});
    }

private:
    explicit WebDriverSession(const WebDriverOptions& options)
        : client_(std::make_unique<httplib::Client>(options.endpoint)) {
        client_->set_connection_timeout(0, options.timeout_ms * 1000);
        client_->set_read_timeout(0, options.timeout_ms * 1000);
    }

    json parse_reply(const httplib::Response& res) const {
        try {
            return json::parse(res.body);
        } catch (const json::exception&) {
            throw ProtocolError("endpoint returned malformed JSON", res.body);
        }
    }

    json post(const std::string& path, const json& body) {
        auto res = client_->Post("/session/" + id_ + path, body.dump(), "application/json");
        if (!res) throw ConnectionError("lost connection to WebDriver endpoint");
        const json reply = parse_reply(*res);
        if (res->status != 200) {
            std::string error = "WebDriver error";
            if (reply.contains("value") && reply["value"].contains("error")) {
                error = reply["value"]["error"].get<std::string>();
            }
            throw CaptureError(error + " (HTTP " + std::to_string(res->status) + ") at " + path);
        }
        return reply.contains("value") ? reply["value"] : json(nullptr);
    }

    json get(const std::string& path) {
        auto res = client_->Get("/session/" + id_ + path);
        if (!res) throw ConnectionError("lost connection to WebDriver endpoint");
        const json reply = parse_reply(*res);
        if (res->status != 200) throw CaptureError("WebDriver error at " + path);
        return reply.contains("value") ? reply["value"] : json(nullptr);
    }

    std::unique_ptr<httplib::Client> client_;
    std::string id_;
};

// ---------------------------------------------------------------------------
// Capture client
// ---------------------------------------------------------------------------

struct CaptureResult {
    SnapshotBundle bundle;
    bool partial = false;
    std::vector<std::string> errors;
};

struct RequestLogEntry {
    std::string host;
    std::int64_t t_ms = 0;
};

class CaptureClient {
public:
    explicit CaptureClient(WebDriverOptions options) : options_(std::move(options)) {}

    const std::vector<RequestLogEntry>& request_log() const { return request_log_; }

    // Builds one PageSnapshot from the injected extraction script's output.
    PageSnapshot snapshot_from_extraction(const json& extracted, const std::string& snapshot_id,
                                          std::string captured_at) const {
        PageSnapshot snap;
        snap.snapshot_id = snapshot_id;
        snap.state_id = snapshot_id;
        snap.url = extracted.value("url", "");
        snap.captured_at = std::move(captured_at);
        if (extracted.contains("viewport") && extracted["viewport"].is_array() &&
            extracted["viewport"].size() == 2) {
            snap.viewport = {extracted["viewport"][0].get<double>(),
                             extracted["viewport"][1].get<double>()};
        }
        if (!extracted.contains("elements") || !extracted["elements"].is_array()) {
            throw ProtocolError("extraction result lacks an elements array", extracted.dump());
        }
        for (const auto& el : extracted["elements"]) {
            ElementNode e;
            e.id = el.value("id", "");
            if (el.contains("parent") && el["parent"].is_string()) {
                e.parent_id = el["parent"].get<std::string>();
            }
            e.tag = el.value("tag", "div");
            if (el.contains("bbox") && el["bbox"].is_array() && el["bbox"].size() == 4) {
                e.bbox = {el["bbox"][0].get<double>(), el["bbox"][1].get<double>(),
                          el["bbox"][2].get<double>(), el["bbox"][3].get<double>()};
            }
            if (el.contains("fg") && el["fg"].is_array()) {
                e.style.fg = {el["fg"][0].get<int>(), el["fg"][1].get<int>(),
                              el["fg"][2].get<int>()};
            }
            if (el.contains("bg") && el["bg"].is_array()) {
                e.style.bg = Rgb{el["bg"][0].get<int>(), el["bg"][1].get<int>(),
                                 el["bg"][2].get<int>()};
            }
            if (el.contains("opacity")) e.style.opacity = el["opacity"].get<double>();
            if (el.contains("z")) e.style.z_index = el["z"].get<int>();
            if (el.contains("display")) {
                auto d = display_from_name(el["display"].get<std::string>());
                if (d) e.style.display = *d;
            }
            e.text = el.value("text", "");
            e.interactive = el.value("interactive", false);
            if (el.contains("attrs") && el["attrs"].is_object()) {
                for (const auto& [k, v] : el["attrs"].items()) {
                    if (v.is_string()) e.attrs[k] = v.get<std::string>();
                }
            }
            if (!e.text.empty()) {
                TextBlock b;
                b.block_id = "b-" + e.id;
                b.element_id = e.id;
                b.raw_text = e.text;
                b.tokens = canonicalize_text(b.raw_text);
                snap.text_blocks.push_back(std::move(b));
            }
            snap.elements.push_back(std::move(e));
        }
        return snap;
    }

    CaptureResult run_plan(const CapturePlan& plan) {
        if (plan.url.empty()) throw ConfigError("capture plan requires a url");
        CaptureResult result;
        const std::string target_host = url_host(plan.url);
        result.bundle.manifest.host = target_host;

        const auto started = std::chrono::steady_clock::now();
        const auto now_ms = [&] {
            return std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                .count();
        };

        json capabilities = json::object();
        capabilities["goog:chromeOptions"] = {{"args", {"--headless=new"}}};
        capabilities["moz:firefoxOptions"] = {{"args", {"-headless"}}};

        std::optional<WebDriverSession> session;
        try {
            session = WebDriverSession::create(options_, capabilities);
        } catch (const CaptureError&) {
            throw;  // endpoint/capability failures abort before any capture
        }

        std::vector<InteractionEvent> pending;  // events since last record
        FlowGraph flow;
        std::map<std::string, std::string> state_by_url;
        std::string current_state;
        std::optional<std::pair<std::string, std::string>> last_click;  // (state, element)

        const auto polite = [&](const std::string& host) {
            if (plan.politeness_ms > 0 && !request_log_.empty()) {
                for (auto it = request_log_.rbegin(); it != request_log_.rend(); ++it) {
                    if (it->host != host) continue;
                    const std::int64_t gap = now_ms() - it->t_ms;
                    if (gap < plan.politeness_ms) {
                        std::this_thread::sleep_for(
                            std::chrono::milliseconds(plan.politeness_ms - gap));
                    }
                    break;
                }
            }
            request_log_.push_back({host, now_ms()});
        };

        const auto navigate_to = [&](const std::string& raw_url) {
            std::string url = raw_url;
            if (!url.empty() && url[0] == '/') {
                const auto cut = plan.url.find('/', plan.url.find("://") + 3);
                url = (cut == std::string::npos ? plan.url : plan.url.substr(0, cut)) + url;
            }
            polite(url_host(url));
            session->navigate(url);
            session->execute_script(kInstallObserversScript);
            InteractionEvent ev;
            ev.kind = EventKind::Navigate;
            ev.t_ms = now_ms();
            ev.host = url_host(url);
            pending.push_back(ev);
            last_click.reset();
            auto it = state_by_url.find(url);
            current_state = it == state_by_url.end() ? "" : it->second;
        };

        const auto record_state = [&] {
            const json extracted = session->execute_script(kExtractStateScript);
            const std::string url = extracted.value("url", "");
            auto known = state_by_url.find(url);
            if (known != state_by_url.end()) {
                // Re-visiting an already-captured state: drain events into it.
                for (auto& s : result.bundle.snapshots) {
                    if (s.snapshot_id == known->second) {
                        for (auto& ev : pending) s.events.push_back(std::move(ev));
                        break;
                    }
                }
                pending.clear();
                if (last_click && last_click->first != known->second) {
                    flow.edges.push_back({last_click->first, last_click->second, known->second});
                    last_click.reset();
                }
                current_state = known->second;
                return;
            }
            if (result.bundle.snapshots.size() >= static_cast<std::size_t>(plan.max_states)) {
                result.errors.push_back("max_states reached; state not recorded: " + url);
                pending.clear();
                return;
            }
            const std::string state_id = "s" + std::to_string(result.bundle.snapshots.size());
            PageSnapshot snap =
                snapshot_from_extraction(extracted, state_id, iso_timestamp_now());

            if (extracted.contains("timing") && extracted["timing"].is_array()) {
                for (const auto& t : extracted["timing"]) {
                    InteractionEvent ev;
                    ev.kind = EventKind::Response;
                    ev.t_ms = now_ms();
                    ev.latency_ms = t.value("latency_ms", 0);
                    ev.host = t.value("host", target_host);
                    pending.push_back(ev);
                }
            }
            if (extracted.contains("mutations") && extracted["mutations"].is_array()) {
                for (const auto& m : extracted["mutations"]) {
                    if (!m.contains("old") || !m.contains("new")) continue;
                    InteractionEvent ev;
                    ev.kind = EventKind::Mutation;
                    ev.t_ms = now_ms();
                    ev.element_id = m.value("element_id", "");
                    ev.old_bbox = Box{m["old"][0].get<double>(), m["old"][1].get<double>(),
                                      m["old"][2].get<double>(), m["old"][3].get<double>()};
                    ev.new_bbox = Box{m["new"][0].get<double>(), m["new"][1].get<double>(),
                                      m["new"][2].get<double>(), m["new"][3].get<double>()};
                    ev.host = target_host;
                    pending.push_back(ev);
                }
            }
            snap.events = std::move(pending);
            pending.clear();

            result.bundle.snapshots.push_back(std::move(snap));
            state_by_url[url] = state_id;
            flow.states.insert(state_id);
            if (flow.entry_state.empty()) flow.entry_state = state_id;
            if (last_click && last_click->first != state_id) {
                flow.edges.push_back({last_click->first, last_click->second, state_id});
                last_click.reset();
            }
            current_state = state_id;
        };

        try {
            navigate_to(plan.url);
            for (const auto& action : plan.actions) {
                switch (action.kind) {
                    case PlanAction::Kind::RecordState:
                        record_state();
                        break;
                    case PlanAction::Kind::Click: {
                        polite(target_host);
                        const std::string element = session->find_element(action.target);
                        session->click(element);
                        InteractionEvent ev;
                        ev.kind = EventKind::Click;
                        ev.t_ms = now_ms();
                        ev.element_id = element;
                        ev.host = target_host;
                        pending.push_back(ev);
                        if (!current_state.empty()) last_click = {{current_state, element}};
                        break;
                    }
                    case PlanAction::Kind::Move: {
                        polite(target_host);
                        session->move_to(session->find_element(action.target));
                        break;
                    }
                    case PlanAction::Kind::Navigate:
                        navigate_to(action.target);
                        break;
                    case PlanAction::Kind::Scroll: {
                        session->execute_script(
                            "window.scrollBy(0, " + std::to_string(action.amount) + ");");
                        InteractionEvent ev;
                        ev.kind = EventKind::Scroll;
                        ev.t_ms = now_ms();
                        ev.host = target_host;
                        pending.push_back(ev);
                        break;
                    }
                    case PlanAction::Kind::Wait:
                        std::this_thread::sleep_for(std::chrono::milliseconds(action.amount));
                        break;
                }
            }
        } catch (const Error& e) {
            result.errors.push_back(e.what());
            result.partial = true;
        }

        // Events observed after the final record stay with the last state.
        if (!pending.empty() && !result.bundle.snapshots.empty()) {
            auto& last = result.bundle.snapshots.back();
            for (auto& ev : pending) last.events.push_back(std::move(ev));
        }

        if (!flow.states.empty()) {
            for (const auto& [name, pattern] : plan.tasks) {
                std::regex re(pattern);
                std::set<std::string> goals;
                for (const auto& [url, state] : state_by_url) {
                    if (std::regex_search(url, re)) goals.insert(state);
                }
                if (!goals.empty()) flow.tasks[name] = std::move(goals);
            }
            for (const auto& [a, b] : plan.pairs) {
                if (flow.tasks.count(a) && flow.tasks.count(b)) flow.pairs.emplace_back(a, b);
            }
            result.bundle.flow = std::move(flow);
        }
        result.bundle.manifest.capture_errors = result.errors;
        return result;
    }

    static std::string iso_timestamp_now() {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

private:
    WebDriverOptions options_;
    std::vector<RequestLogEntry> request_log_;
};

}  // namespace darkscan
