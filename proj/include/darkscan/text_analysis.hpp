#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "darkscan/errors.hpp"
#include "darkscan/model.hpp"
#include "darkscan/rules.hpp"
#include "darkscan/text.hpp"

namespace darkscan {

struct ClassifierDescriptor {
    std::string name;
    std::string version;
};

// Seam for the deceptive-language model. Implementations must be
// deterministic for fixed tokens and version and must score in [0,1].
class DeceptiveLanguageClassifier {
public:
    virtual ~DeceptiveLanguageClassifier() = default;
    virtual double score(std::span<const std::string> tokens) const = 0;
    virtual ClassifierDescriptor descriptor() const = 0;
};

// The bundled default: a transparent logistic model over distinct
// unigram/bigram features from the ruleset lexicon.
class LexiconLogisticClassifier final : public DeceptiveLanguageClassifier {
public:
    LexiconLogisticClassifier(const Lexicons& lexicons, std::string version)
        : lexicons_(lexicons), version_(std::move(version)) {}

    double score(std::span<const std::string> tokens) const override {
        double x = lexicons_.bias;
        std::set<std::string> seen;  // set semantics: each feature counts once
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            auto uni = lexicons_.deceptive_features.find(tokens[i]);
            if (uni != lexicons_.deceptive_features.end() && seen.insert(tokens[i]).second) {
                x += uni->second;
            }
            if (i + 1 < tokens.size()) {
                const std::string bigram = tokens[i] + " " + tokens[i + 1];
                auto bi = lexicons_.deceptive_features.find(bigram);
                if (bi != lexicons_.deceptive_features.end() && seen.insert(bigram).second) {
                    x += bi->second;
                }
            }
        }
        return 1.0 / (1.0 + std::exp(-x));
    }

    ClassifierDescriptor descriptor() const override {
        return {"lexicon-logistic", version_};
    }

private:
    Lexicons lexicons_;
    std::string version_;
};

// Fixed-output stub; used to test the flag rule in isolation.
class ConstantClassifier final : public DeceptiveLanguageClassifier {
public:
    explicit ConstantClassifier(double value) : value_(value) {}

    double score(std::span<const std::string>) const override { return value_; }

    ClassifierDescriptor descriptor() const override { return {"constant", "1"}; }

private:
    double value_;
};

inline double dlp_score(std::span<const std::string> tokens,
                        const DeceptiveLanguageClassifier& classifier) {
    const double s = classifier.score(tokens);
    if (!(s >= 0.0 && s <= 1.0)) {
        const auto d = classifier.descriptor();
        throw ClassifierError("classifier returned score outside [0,1]", d.name, d.version);
    }
    return s;
}

// Mean lexicon score over tokens present in the lexicon; 0 with no hits.
inline double sentiment_polarity(std::span<const std::string> tokens,
                                 const std::map<std::string, double>& valence) {
    double sum = 0;
    std::size_t hits = 0;
    for (const auto& t : tokens) {
        auto it = valence.find(t);
        if (it != valence.end()) {
            sum += it->second;
            ++hits;
        }
    }
    return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

// Time-pressure hits per 20 words. Multi-word phrases match as contiguous
// token runs and count as one hit; matching is greedy longest-first.
inline double urgency_density(std::span<const std::string> tokens,
                              const std::vector<std::string>& urgency) {
    if (tokens.empty()) return 0.0;

    std::vector<std::vector<std::string>> phrases;
    phrases.reserve(urgency.size());
    for (const auto& entry : urgency) phrases.push_back(canonicalize_text(entry));
    std::sort(phrases.begin(), phrases.end(),
              [](const auto& a, const auto& b) { return a.size() > b.size(); });

    std::size_t hits = 0;
    std::size_t i = 0;
    while (i < tokens.size()) {
        std::size_t consumed = 0;
        for (const auto& phrase : phrases) {
            if (phrase.empty() || phrase.size() > tokens.size() - i) continue;
            bool match = true;
            for (std::size_t k = 0; k < phrase.size(); ++k) {
                if (tokens[i + k] != phrase[k]) {
                    match = false;
                    break;
                }
            }
            if (match) {
                consumed = phrase.size();
                break;
            }
        }
        if (consumed > 0) {
            ++hits;
            i += consumed;
        } else {
            ++i;
        }
    }
    return (static_cast<double>(hits) / static_cast<double>(tokens.size())) * 20.0;
}

// The compound rule: DLP >= min AND (polarity <= max OR urgency >= min).
inline bool text_flag(double dlp, double polarity, double urgency, const ThresholdProfile& th) {
    return dlp >= th.dlp_min && (polarity <= th.polarity_max || urgency >= th.urgency_min);
}

struct TextReadout {
    std::string block_id;
    double dlp = 0;
    double polarity = 0;
    double urgency_density = 0;
    bool text_flag = false;

    friend bool operator==(const TextReadout&, const TextReadout&) = default;
};

inline TextReadout analyze_block(const TextBlock& block,
                                 const DeceptiveLanguageClassifier& classifier,
                                 const Lexicons& lexicons, const ThresholdProfile& th) {
    TextReadout r;
    r.block_id = block.block_id;
    r.dlp = dlp_score(block.tokens, classifier);
    r.polarity = sentiment_polarity(block.tokens, lexicons.valence);
    r.urgency_density = urgency_density(block.tokens, lexicons.urgency);
    r.text_flag = text_flag(r.dlp, r.polarity, r.urgency_density, th);
    return r;
}

}  // namespace darkscan
