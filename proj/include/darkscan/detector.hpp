#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "darkscan/bundle.hpp"
#include "darkscan/default_rules.hpp"
#include "darkscan/heuristics.hpp"
#include "darkscan/scoring.hpp"
#include "darkscan/taxonomy.hpp"
#include "darkscan/temporal.hpp"
#include "darkscan/text_analysis.hpp"

namespace darkscan {

struct DetectorConfig {
    // Canonical report timestamp. Empty derives it from the first
    // snapshot's captured_at so identical inputs give identical bytes.
    std::string generated_at;
    // Classifier override; null uses the ruleset's lexicon-logistic model.
    const DeceptiveLanguageClassifier* classifier = nullptr;
};

// The four-stage pipeline over one bundle: taxonomy gating, interface
// heuristics, text analysis, temporal signals, fused into scored findings.
inline Report analyze_bundle(const SnapshotBundle& bundle, const RuleSet& rules,
                             const DetectorConfig& cfg = {}) {
    LexiconLogisticClassifier default_classifier(
        rules.lexicons, rules.version.empty() ? "unversioned" : rules.version);
    const DeceptiveLanguageClassifier& classifier =
        cfg.classifier ? *cfg.classifier : default_classifier;

    // Bundle-level path interference, attributed to Category A candidates.
    std::vector<PathReadout> path_readouts;
    if (bundle.flow && !bundle.flow->pairs.empty()) {
        path_readouts = path_interference(*bundle.flow, rules.thresholds);
    }
    std::optional<PathReadout> flagged_path;
    for (const auto& r : path_readouts) {
        if (r.pis_flag) {
            flagged_path = r;
            break;
        }
    }

    std::vector<Finding> findings;
    for (const auto& snap : bundle.snapshots) {
        const RoleMap roles = infer_roles(snap, rules);
        const SalienceStats salience = salience_flags(snap, rules.thresholds);

        std::map<std::string, HeuristicReadout> escapes;
        for (auto& r : escape_visibility(snap, roles, rules.thresholds)) {
            escapes.emplace(r.element_id, std::move(r));
        }

        std::map<std::string, std::vector<TextReadout>> text_by_element;
        for (const auto& block : snap.text_blocks) {
            text_by_element[block.element_id].push_back(
                analyze_block(block, classifier, rules.lexicons, rules.thresholds));
        }

        const std::vector<TemporalSignal> signals =
            detect_temporal_signals(snap, roles, salience, rules.thresholds);

        std::map<std::string, std::vector<std::string>> children;
        for (const auto& e : snap.elements) {
            if (e.parent_id) children[*e.parent_id].push_back(e.id);
        }

        for (const auto& candidate : candidate_set(snap, rules, roles)) {
            const std::string& id = candidate.element_id;

            // Text readouts visible through this element: own blocks plus
            // direct children's, mirroring the taxonomy text view.
            std::vector<TextReadout> text;
            if (auto it = text_by_element.find(id); it != text_by_element.end()) {
                text.insert(text.end(), it->second.begin(), it->second.end());
            }
            if (auto ch = children.find(id); ch != children.end()) {
                for (const auto& child_id : ch->second) {
                    if (auto it = text_by_element.find(child_id); it != text_by_element.end()) {
                        text.insert(text.end(), it->second.begin(), it->second.end());
                    }
                }
            }

            std::set<StaticFlag> flags;
            if (salience.flagged(id)) flags.insert(StaticFlag::Salience);
            auto esc = escapes.find(id);
            if (esc != escapes.end() && esc->second.escape_flag) flags.insert(StaticFlag::Escape);
            for (const auto& t : text) {
                if (t.text_flag) {
                    flags.insert(StaticFlag::Text);
                    break;
                }
            }
            std::optional<PathReadout> path;
            if (flagged_path && candidate.categories.count(Category::A)) {
                flags.insert(StaticFlag::PathInterference);
                path = flagged_path;
            }

            std::vector<TemporalSignal> element_signals;
            for (const auto& s : signals) {
                if (s.element_id() == id) element_signals.push_back(s);
            }

            std::optional<HeuristicReadout> heuristic;
            auto si = salience.index.find(id);
            if (si != salience.index.end() || esc != escapes.end()) {
                HeuristicReadout h;
                h.element_id = id;
                if (si != salience.index.end()) {
                    h.salience = si->second;
                    h.salience_flag = salience.flagged(id);
                }
                if (esc != escapes.end()) {
                    h.escape_opacity = esc->second.escape_opacity;
                    h.off_viewport = esc->second.off_viewport;
                    h.escape_flag = esc->second.escape_flag;
                }
                heuristic = std::move(h);
            }

            findings.push_back(score_finding(candidate, std::move(flags),
                                             std::move(element_signals), std::move(heuristic),
                                             std::move(text), std::move(path)));
        }
    }

    std::string generated_at = cfg.generated_at;
    if (generated_at.empty()) {
        generated_at = bundle.snapshots.empty() ? "1970-01-01T00:00:00Z"
                                                : bundle.snapshots.front().captured_at;
    }
    return assemble_report(bundle, std::move(findings), rules, std::move(generated_at));
}

}  // namespace darkscan
