#pragma once

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "darkscan/model.hpp"
#include "darkscan/rules.hpp"

namespace darkscan {

// An element that passed taxonomy gating.
struct Candidate {
    std::string element_id;
    std::string snapshot_id;
    std::set<Category> categories;             // non-empty by construction
    std::vector<std::string> matched_rule_ids; // every rule that fired

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

using RoleMap = std::map<std::string, std::set<Role>>;

namespace detail {

// Text visible "through" an element: its own text and text blocks, plus
// direct children's (buttons often wrap their label in a span).
inline std::vector<std::string> element_text_pieces(const ElementNode& e,
                                                    const PageSnapshot& snap) {
    std::vector<std::string> pieces;
    const auto add_for = [&](const std::string& id, const std::string& own_text) {
        if (!own_text.empty()) pieces.push_back(own_text);
        for (const auto& b : snap.text_blocks) {
            if (b.element_id == id && !b.raw_text.empty()) pieces.push_back(b.raw_text);
        }
    };
    add_for(e.id, e.text);
    for (const auto& child : snap.elements) {
        if (child.parent_id && *child.parent_id == e.id) add_for(child.id, child.text);
    }
    return pieces;
}

inline bool predicates_match(const ElementPredicates& p, const ElementNode& e,
                             const std::set<Role>& roles,
                             const std::vector<std::string>& text_pieces) {
    if (p.tag_in) {
        if (std::find(p.tag_in->begin(), p.tag_in->end(), e.tag) == p.tag_in->end()) return false;
    }
    if (p.role_is && !roles.count(*p.role_is)) return false;
    if (p.interactive_is && *p.interactive_is != e.interactive) return false;
    if (p.attr_equals) {
        auto it = e.attrs.find(p.attr_equals->first);
        if (it == e.attrs.end() || it->second != p.attr_equals->second) return false;
    }
    if (p.text_matches) {
        if (!p.compiled_text) return false;  // regex failed to compile upstream
        bool any = false;
        for (const auto& piece : text_pieces) {
            if (std::regex_search(piece, *p.compiled_text)) {
                any = true;
                break;
            }
        }
        if (!any) return false;
    }
    return true;
}

}  // namespace detail

// Applies role rules to every element. Explicit snapshot annotations win
// outright; rules only fill in elements with no annotation.
inline RoleMap infer_roles(const PageSnapshot& snap, const RuleSet& rules) {
    RoleMap out;
    for (const auto& e : snap.elements) {
        if (!e.roles.empty()) {
            out[e.id] = e.roles;
            continue;
        }
        std::set<Role> inferred;
        const auto pieces = detail::element_text_pieces(e, snap);
        for (const auto& rule : rules.role_rules) {
            if (detail::predicates_match(rule.predicates, e, e.roles, pieces)) {
                inferred.insert(rule.role);
            }
        }
        if (!inferred.empty()) out[e.id] = std::move(inferred);
    }
    return out;
}

inline const std::set<Role>& roles_of(const RoleMap& roles, const std::string& element_id) {
    static const std::set<Role> kEmpty;
    auto it = roles.find(element_id);
    return it == roles.end() ? kEmpty : it->second;
}

// Union of categories over all rules whose full conjunction holds.
inline std::set<Category> match_categories(const ElementNode& e, const PageSnapshot& snap,
                                           const RuleSet& rules, const RoleMap& roles) {
    std::set<Category> cats;
    const auto pieces = detail::element_text_pieces(e, snap);
    for (const auto& rule : rules.category_rules) {
        if (detail::predicates_match(rule.predicates, e, roles_of(roles, e.id), pieces)) {
            cats.insert(rule.category);
        }
    }
    return cats;
}

// The gating stage: exactly the elements with a non-empty category match,
// ordered by element id.
inline std::vector<Candidate> candidate_set(const PageSnapshot& snap, const RuleSet& rules,
                                            const RoleMap& roles) {
    std::vector<const ElementNode*> order;
    order.reserve(snap.elements.size());
    for (const auto& e : snap.elements) order.push_back(&e);
    std::sort(order.begin(), order.end(),
              [](const ElementNode* a, const ElementNode* b) { return a->id < b->id; });

    std::vector<Candidate> out;
    for (const ElementNode* e : order) {
        Candidate c;
        c.element_id = e->id;
        c.snapshot_id = snap.snapshot_id;
        const auto pieces = detail::element_text_pieces(*e, snap);
        for (const auto& rule : rules.category_rules) {
            if (detail::predicates_match(rule.predicates, *e, roles_of(roles, e->id), pieces)) {
                c.categories.insert(rule.category);
                c.matched_rule_ids.push_back(rule.rule_id);
            }
        }
        if (!c.categories.empty()) out.push_back(std::move(c));
    }
    return out;
}

}  // namespace darkscan
