#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "darkscan/errors.hpp"

namespace darkscan {

// ---------------------------------------------------------------------------
// Deterministic shuffling (shared with the generator; <random>
// distributions are implementation-defined, which would break
// cross-platform byte stability)
// ---------------------------------------------------------------------------

struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    int int_range(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }
};

// ---------------------------------------------------------------------------
// Stratified folds
// ---------------------------------------------------------------------------

// Deterministic stratified k-fold split: per-class shuffle with the seeded
// generator, then round-robin dealing, so per-fold class counts differ from
// the corpus ratio by at most one item.
inline std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<bool>& labels,
                                                              int k, std::uint64_t seed) {
    if (k < 2) throw StratificationError("k must be at least 2");
    std::vector<std::size_t> positives, negatives;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] ? positives : negatives).push_back(i);
    }
    if (positives.size() < static_cast<std::size_t>(k) ||
        negatives.size() < static_cast<std::size_t>(k)) {
        throw StratificationError("each class needs at least k items (k=" + std::to_string(k) +
                                  ", positives=" + std::to_string(positives.size()) +
                                  ", negatives=" + std::to_string(negatives.size()) + ")");
    }

    SplitMix64 rng(seed);
    rng.shuffle(positives);
    rng.shuffle(negatives);

    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < positives.size(); ++i) {
        folds[i % static_cast<std::size_t>(k)].push_back(positives[i]);
    }
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        folds[i % static_cast<std::size_t>(k)].push_back(negatives[i]);
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

// ---------------------------------------------------------------------------
// Confusion metrics
// ---------------------------------------------------------------------------

struct Confusion {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;

    friend bool operator==(const Confusion&, const Confusion&) = default;
};

// Undefined ratios (zero denominators) stay nullopt rather than crashing.
struct ConfusionMetrics {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;

    friend bool operator==(const ConfusionMetrics&, const ConfusionMetrics&) = default;
};

inline ConfusionMetrics metrics_from(const Confusion& c) {
    ConfusionMetrics m;
    if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0) {
        m.f1 = 2 * (*m.precision) * (*m.recall) / (*m.precision + *m.recall);
    } else if (m.precision && m.recall) {
        m.f1 = 0.0;
    }
    return m;
}

inline Confusion confusion_counts(const std::vector<bool>& predictions,
                                  const std::vector<bool>& labels) {
    if (predictions.size() != labels.size()) {
        throw UsageError("predictions and labels differ in length");
    }
    Confusion c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            (predictions[i] ? c.tp : c.fn) += 1;
        } else {
            (predictions[i] ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

inline ConfusionMetrics confusion_metrics(const std::vector<bool>& predictions,
                                          const std::vector<bool>& labels) {
    return metrics_from(confusion_counts(predictions, labels));
}

// ---------------------------------------------------------------------------
// AUROC (Mann-Whitney formulation, ties at one half)
// ---------------------------------------------------------------------------

inline std::optional<double> auroc(const std::vector<double>& scores,
                                   const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) {
        throw UsageError("scores and labels differ in length");
    }
    std::size_t n_pos = 0, n_neg = 0;
    for (bool l : labels) (l ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    // Average ranks over the pooled sample, ties sharing their mean rank.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]]) rank_sum_pos += mean_rank;
        }
        i = j + 1;
    }

    const double u = rank_sum_pos - static_cast<double>(n_pos) *
                                        (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace darkscan
