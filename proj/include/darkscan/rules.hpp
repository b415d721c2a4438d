#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "darkscan/errors.hpp"
#include "darkscan/model.hpp"

namespace darkscan {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

// Conjunction of element predicates; every present clause must hold.
struct ElementPredicates {
    std::optional<std::vector<std::string>> tag_in;
    std::optional<Role> role_is;
    std::optional<std::string> text_matches;  // regex source, case-insensitive search
    std::optional<std::pair<std::string, std::string>> attr_equals;
    std::optional<bool> interactive_is;

    std::shared_ptr<const std::regex> compiled_text;  // derived from text_matches

    bool empty() const {
        return !tag_in && !role_is && !text_matches && !attr_equals && !interactive_is;
    }

    friend bool operator==(const ElementPredicates& a, const ElementPredicates& b) {
        return a.tag_in == b.tag_in && a.role_is == b.role_is &&
               a.text_matches == b.text_matches && a.attr_equals == b.attr_equals &&
               a.interactive_is == b.interactive_is;
    }
};

struct CategoryRule {
    std::string rule_id;
    Category category = Category::A;
    ElementPredicates predicates;

    friend bool operator==(const CategoryRule&, const CategoryRule&) = default;
};

struct RoleRule {
    std::string rule_id;
    Role role = Role::Dismiss;
    ElementPredicates predicates;

    friend bool operator==(const RoleRule&, const RoleRule&) = default;
};

struct Lexicons {
    std::vector<std::string> urgency;                 // tokens or multi-word phrases
    std::map<std::string, double> valence;            // token -> score in [-1,1]
    std::map<std::string, double> deceptive_features; // unigram/bigram -> weight
    double bias = 0.0;

    friend bool operator==(const Lexicons&, const Lexicons&) = default;
};

struct ThresholdProfile {
    double salience_sigma = 2.0;
    int pis_extra_clicks = 3;
    double escape_opacity = 0.30;
    double dlp_min = 0.75;
    double polarity_max = -0.4;
    double urgency_min = 2.0;
    std::int64_t latency_excess_ms = 500;
    std::int64_t latency_corr_window_ms = 5000;
    double relocation_frac = 0.10;
    std::int64_t relocation_window_ms = 2000;
    int loop_min_count = 3;

    friend bool operator==(const ThresholdProfile&, const ThresholdProfile&) = default;
};

struct RuleSet {
    std::string version;
    std::vector<CategoryRule> category_rules;
    std::vector<RoleRule> role_rules;
    Lexicons lexicons;
    ThresholdProfile thresholds;

    friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

// ---------------------------------------------------------------------------
// Threshold validation and overrides
// ---------------------------------------------------------------------------

inline std::vector<std::string> validate_thresholds(const ThresholdProfile& t) {
    std::vector<std::string> problems;
    const auto positive = [&](double v, const char* name) {
        if (!(v > 0)) problems.push_back(std::string(name) + " must be strictly positive");
    };
    positive(t.salience_sigma, "salience_sigma");
    positive(t.pis_extra_clicks, "pis_extra_clicks");
    positive(t.escape_opacity, "escape_opacity");
    positive(t.dlp_min, "dlp_min");
    positive(t.urgency_min, "urgency_min");
    positive(static_cast<double>(t.latency_excess_ms), "latency_excess_ms");
    positive(static_cast<double>(t.latency_corr_window_ms), "latency_corr_window_ms");
    positive(t.relocation_frac, "relocation_frac");
    positive(static_cast<double>(t.relocation_window_ms), "relocation_window_ms");
    positive(t.loop_min_count, "loop_min_count");
    if (t.polarity_max < -1.0 || t.polarity_max > 1.0) {
        problems.push_back("polarity_max must be in [-1,1]");
    }
    return problems;
}

// Applies one `name=value` override; unknown names and fractional values
// for integer thresholds are configuration errors.
inline void apply_threshold_override(ThresholdProfile& t, const std::string& name, double value) {
    const auto whole = [&](const char* field) {
        if (value != std::floor(value)) {
            throw ConfigError(std::string("threshold ") + field + " requires an integer value");
        }
    };
    if (name == "salience_sigma") t.salience_sigma = value;
    else if (name == "pis_extra_clicks") { whole(name.c_str()); t.pis_extra_clicks = static_cast<int>(value); }
    else if (name == "escape_opacity") t.escape_opacity = value;
    else if (name == "dlp_min") t.dlp_min = value;
    else if (name == "polarity_max") t.polarity_max = value;
    else if (name == "urgency_min") t.urgency_min = value;
    else if (name == "latency_excess_ms") { whole(name.c_str()); t.latency_excess_ms = static_cast<std::int64_t>(value); }
    else if (name == "latency_corr_window_ms") { whole(name.c_str()); t.latency_corr_window_ms = static_cast<std::int64_t>(value); }
    else if (name == "relocation_frac") t.relocation_frac = value;
    else if (name == "relocation_window_ms") { whole(name.c_str()); t.relocation_window_ms = static_cast<std::int64_t>(value); }
    else if (name == "loop_min_count") { whole(name.c_str()); t.loop_min_count = static_cast<int>(value); }
    else throw ConfigError("unknown threshold name: " + name);

    auto problems = validate_thresholds(t);
    if (!problems.empty()) {
        throw ConfigError("invalid threshold override " + name + ": " + problems.front());
    }
}

// ---------------------------------------------------------------------------
// YAML parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string yaml_where(const YAML::Node& node) {
    if (node.Mark().line >= 0) {
        return " (line " + std::to_string(node.Mark().line + 1) + ")";
    }
    return "";
}

inline std::shared_ptr<const std::regex> compile_rule_regex(const std::string& source) {
    return std::make_shared<const std::regex>(
        source, std::regex::ECMAScript | std::regex::icase);
}

inline ElementPredicates parse_predicates(const YAML::Node& node, const std::string& rule_id,
                                          std::vector<std::string>& errors) {
    ElementPredicates p;
    if (!node || !node.IsMap()) {
        errors.push_back("rule " + rule_id + ": predicates must be a map" + yaml_where(node));
        return p;
    }
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        const YAML::Node& v = kv.second;
        try {
            if (key == "tag_in") {
                p.tag_in = v.as<std::vector<std::string>>();
            } else if (key == "role_is") {
                auto role = role_from_name(v.as<std::string>());
                if (!role) {
                    errors.push_back("rule " + rule_id + ": unknown role '" + v.as<std::string>() +
                                     "'" + yaml_where(v));
                } else {
                    p.role_is = *role;
                }
            } else if (key == "text_matches") {
                p.text_matches = v.as<std::string>();
                try {
                    p.compiled_text = compile_rule_regex(*p.text_matches);
                } catch (const std::regex_error& e) {
                    errors.push_back("rule " + rule_id + ": bad regex: " + e.what() + yaml_where(v));
                }
            } else if (key == "attr_equals") {
                p.attr_equals = {v["name"].as<std::string>(), v["value"].as<std::string>()};
            } else if (key == "interactive_is") {
                p.interactive_is = v.as<bool>();
            } else {
                errors.push_back("rule " + rule_id + ": unknown predicate '" + key + "'" +
                                 yaml_where(kv.first));
            }
        } catch (const YAML::Exception& e) {
            errors.push_back("rule " + rule_id + ": bad predicate value for '" + key +
                             "': " + e.what());
        }
    }
    if (p.empty()) {
        errors.push_back("rule " + rule_id + ": at least one predicate required" + yaml_where(node));
    }
    return p;
}

}  // namespace detail

// Parses the YAML rules document. Omitted threshold fields keep their
// defaults. Throws ParseError carrying every problem found.
inline RuleSet parse_rules(const std::string& text) {
    std::vector<std::string> errors;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ParseError(std::string("malformed YAML: ") + e.what());
    }

    RuleSet rs;
    if (root.IsNull() || !root.IsDefined()) {
        return rs;  // empty document: zero rules, default thresholds
    }
    if (!root.IsMap()) {
        throw ParseError("rules document must be a YAML map");
    }

    for (const auto& kv : root) {
        const std::string key = kv.first.as<std::string>();
        if (key != "version" && key != "categories" && key != "roles" && key != "lexicons" &&
            key != "thresholds") {
            errors.push_back("unknown top-level key '" + key + "'" + detail::yaml_where(kv.first));
        }
    }

    if (root["version"]) rs.version = root["version"].as<std::string>();

    if (const auto cats = root["categories"]) {
        for (const auto& entry : cats) {
            CategoryRule rule;
            rule.rule_id = entry["id"] ? entry["id"].as<std::string>() : "<unnamed>";
            if (!entry["category"]) {
                errors.push_back("rule " + rule.rule_id + ": missing category" +
                                 detail::yaml_where(entry));
            } else {
                const std::string letter = entry["category"].as<std::string>();
                auto cat = letter.size() == 1 ? category_from_letter(letter[0]) : std::nullopt;
                if (!cat) {
                    errors.push_back("rule " + rule.rule_id + ": unknown category '" + letter +
                                     "'" + detail::yaml_where(entry["category"]));
                } else {
                    rule.category = *cat;
                }
            }
            rule.predicates = detail::parse_predicates(entry["predicates"], rule.rule_id, errors);
            rs.category_rules.push_back(std::move(rule));
        }
    }

    if (const auto roles = root["roles"]) {
        for (const auto& entry : roles) {
            RoleRule rule;
            rule.rule_id = entry["id"] ? entry["id"].as<std::string>() : "<unnamed>";
            if (!entry["role"]) {
                errors.push_back("rule " + rule.rule_id + ": missing role" +
                                 detail::yaml_where(entry));
            } else {
                auto role = role_from_name(entry["role"].as<std::string>());
                if (!role) {
                    errors.push_back("rule " + rule.rule_id + ": unknown role '" +
                                     entry["role"].as<std::string>() + "'" +
                                     detail::yaml_where(entry["role"]));
                } else {
                    rule.role = *role;
                }
            }
            rule.predicates = detail::parse_predicates(entry["predicates"], rule.rule_id, errors);
            rs.role_rules.push_back(std::move(rule));
        }
    }

    if (const auto lex = root["lexicons"]) {
        if (lex["urgency"]) rs.lexicons.urgency = lex["urgency"].as<std::vector<std::string>>();
        if (lex["valence"]) {
            for (const auto& kv : lex["valence"]) {
                const double score = kv.second.as<double>();
                if (score < -1.0 || score > 1.0) {
                    errors.push_back("valence score for '" + kv.first.as<std::string>() +
                                     "' outside [-1,1]" + detail::yaml_where(kv.second));
                }
                rs.lexicons.valence[kv.first.as<std::string>()] = score;
            }
        }
        if (lex["deceptive_features"]) {
            for (const auto& kv : lex["deceptive_features"]) {
                rs.lexicons.deceptive_features[kv.first.as<std::string>()] = kv.second.as<double>();
            }
        }
        if (lex["bias"]) rs.lexicons.bias = lex["bias"].as<double>();
    }

    if (const auto th = root["thresholds"]) {
        for (const auto& kv : th) {
            const std::string name = kv.first.as<std::string>();
            double value = 0;
            try {
                value = kv.second.as<double>();
            } catch (const YAML::Exception&) {
                errors.push_back("threshold " + name + ": not a number" +
                                 detail::yaml_where(kv.second));
                continue;
            }
            try {
                apply_threshold_override(rs.thresholds, name, value);
            } catch (const ConfigError& e) {
                errors.push_back(std::string(e.what()) + detail::yaml_where(kv.second));
            }
        }
    }

    for (const auto& problem : validate_thresholds(rs.thresholds)) {
        errors.push_back("threshold: " + problem);
    }

    if (!errors.empty()) {
        std::ostringstream msg;
        msg << "rules parse failed with " << errors.size() << " problem(s)";
        throw ParseError(msg.str(), errors);
    }
    return rs;
}

// ---------------------------------------------------------------------------
// YAML serialization (used by the idempotence check and rules tooling)
// ---------------------------------------------------------------------------

namespace detail {

inline void emit_predicates(YAML::Emitter& out, const ElementPredicates& p) {
    out << YAML::Key << "predicates" << YAML::Value << YAML::BeginMap;
    if (p.tag_in) out << YAML::Key << "tag_in" << YAML::Value << YAML::Flow << *p.tag_in;
    if (p.role_is) out << YAML::Key << "role_is" << YAML::Value << role_name(*p.role_is);
    if (p.text_matches) out << YAML::Key << "text_matches" << YAML::Value << *p.text_matches;
    if (p.attr_equals) {
        out << YAML::Key << "attr_equals" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << p.attr_equals->first;
        out << YAML::Key << "value" << YAML::Value << p.attr_equals->second;
        out << YAML::EndMap;
    }
    if (p.interactive_is) out << YAML::Key << "interactive_is" << YAML::Value << *p.interactive_is;
    out << YAML::EndMap;
}

}  // namespace detail

inline std::string serialize_rules(const RuleSet& rs) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "version" << YAML::Value << rs.version;

    out << YAML::Key << "categories" << YAML::Value << YAML::BeginSeq;
    for (const auto& rule : rs.category_rules) {
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << rule.rule_id;
        out << YAML::Key << "category" << YAML::Value << std::string(1, category_letter(rule.category));
        detail::emit_predicates(out, rule.predicates);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "roles" << YAML::Value << YAML::BeginSeq;
    for (const auto& rule : rs.role_rules) {
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << rule.rule_id;
        out << YAML::Key << "role" << YAML::Value << role_name(rule.role);
        detail::emit_predicates(out, rule.predicates);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "lexicons" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "urgency" << YAML::Value << rs.lexicons.urgency;
    out << YAML::Key << "valence" << YAML::Value << rs.lexicons.valence;
    out << YAML::Key << "deceptive_features" << YAML::Value << rs.lexicons.deceptive_features;
    out << YAML::Key << "bias" << YAML::Value << rs.lexicons.bias;
    out << YAML::EndMap;

    const auto& t = rs.thresholds;
    out << YAML::Key << "thresholds" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "salience_sigma" << YAML::Value << t.salience_sigma;
    out << YAML::Key << "pis_extra_clicks" << YAML::Value << t.pis_extra_clicks;
    out << YAML::Key << "escape_opacity" << YAML::Value << t.escape_opacity;
    out << YAML::Key << "dlp_min" << YAML::Value << t.dlp_min;
    out << YAML::Key << "polarity_max" << YAML::Value << t.polarity_max;
    out << YAML::Key << "urgency_min" << YAML::Value << t.urgency_min;
    out << YAML::Key << "latency_excess_ms" << YAML::Value << t.latency_excess_ms;
    out << YAML::Key << "latency_corr_window_ms" << YAML::Value << t.latency_corr_window_ms;
    out << YAML::Key << "relocation_frac" << YAML::Value << t.relocation_frac;
    out << YAML::Key << "relocation_window_ms" << YAML::Value << t.relocation_window_ms;
    out << YAML::Key << "loop_min_count" << YAML::Value << t.loop_min_count;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace darkscan
