#pragma once

#include <string>

#include "darkscan/rules.hpp"

namespace darkscan {

// The bundled ruleset. Category predicates and role rules are an
// operationalization of the taxonomy exemplars; the lexicon feature
// weights were hand-tuned against the bundled corpus phrases.
// Thresholds carry the calibrated defaults and live in data so they
// can be recalibrated without a rebuild.
inline const std::string& default_rules_text() {
    static const std::string text = R"RULES(version: "1.0"
categories:
  # Category A - Obstruction (Roach Motel, hidden escape controls)
  - id: A-dismiss-control
    category: A
    predicates:
      role_is: dismiss
  - id: A-cancel-path
    category: A
    predicates:
      text_matches: "cancel|unsubscribe|opt[ -]?out"
      interactive_is: true
  # Category B - Sneaking (Disguised Ads)
  - id: B-disguised-ad
    category: B
    predicates:
      tag_in: [a, div, img]
      attr_equals: {name: data-ad, value: "true"}
  # Category C - Urgency (Artificial Scarcity)
  - id: C-scarcity
    category: C
    predicates:
      text_matches: "only \\d+ left|act now|hurry|expires|last chance|limited time"
  # Category D - Social Proof (Fake Popularity cues)
  - id: D-social-proof
    category: D
    predicates:
      text_matches: "most popular|best value|\\d+ (people|others) (bought|viewed|joined)"
  # Guilt-framed decline controls (confirmshaming) lean on perceived
  # social judgment; grouped under D.
  - id: D-confirmshame
    category: D
    predicates:
      role_is: consent-decline
      text_matches: "uninformed|miss out|rather"
  # Category E - Nagging (repetitive interruptions, upsell prompts)
  - id: E-upsell-prompt
    category: E
    predicates:
      role_is: premium-prompt
  - id: E-newsletter-nag
    category: E
    predicates:
      text_matches: "join our newsletter|sign up for updates"
      interactive_is: true
roles:
  - id: role-dismiss
    role: dismiss
    predicates:
      text_matches: "^(×|x|✕|close|dismiss|skip|not now|maybe later|cancel.*|unsubscribe)$"
      interactive_is: true
  - id: role-consent-accept
    role: consent-accept
    predicates:
      text_matches: "^(accept( all)?|agree|i agree|allow( all)?|got it|ok(ay)?)$"
      interactive_is: true
  - id: role-consent-decline
    role: consent-decline
    predicates:
      text_matches: "^(decline|reject( all)?|refuse|no,? thanks.*)$"
      interactive_is: true
  - id: role-premium-prompt
    role: premium-prompt
    predicates:
      text_matches: "upgrade|premium|go pro|unlock pro|try pro"
      interactive_is: true
lexicons:
  urgency:
    - act now
    - last chance
    - limited time
    - ends soon
    - hurry
    - expires
    - today
    - tonight
    - now
    - instantly
  valence:
    uninformed: -0.8
    miss: -0.7
    lose: -0.7
    regret: -0.8
    gone: -0.5
    risk: -0.6
    fail: -0.7
    worst: -0.8
    afraid: -0.6
    penalty: -0.6
    great: 0.7
    best: 0.6
    save: 0.5
    enjoy: 0.6
    free: 0.4
    easy: 0.5
    love: 0.8
    perfect: 0.8
  deceptive_features:
    "no thanks": 2.2
    "i prefer": 1.2
    "remain uninformed": 2.6
    "uninformed": 0.8
    "act now": 1.8
    "hurry": 1.4
    "expires": 1.2
    "last chance": 1.8
    "limited time": 1.6
    "only": 0.6
    "left": 0.6
    "hidden fees": 2.0
    "auto renews": 1.4
  bias: -3.0
thresholds:
  salience_sigma: 2.0
  pis_extra_clicks: 3
  escape_opacity: 0.30
  dlp_min: 0.75
  polarity_max: -0.4
  urgency_min: 2.0
  latency_excess_ms: 500
  latency_corr_window_ms: 5000
  relocation_frac: 0.10
  relocation_window_ms: 2000
  loop_min_count: 3
)RULES";
    return text;
}

inline const RuleSet& default_rules() {
    static const RuleSet rs = parse_rules(default_rules_text());
    return rs;
}

}  // namespace darkscan
