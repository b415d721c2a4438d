#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "darkscan/bundle.hpp"
#include "darkscan/detector.hpp"
#include "darkscan/errors.hpp"
#include "darkscan/metrics.hpp"
#include "darkscan/rules.hpp"

namespace darkscan {

struct CorpusItem {
    std::string path;
    bool dark = false;
};

// Corpus manifest: a JSON array of {path, label}; paths resolve relative
// to the manifest's directory.
inline std::vector<CorpusItem> load_corpus_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw ParseError("cannot read corpus manifest: " + manifest_path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed corpus manifest: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("corpus manifest must be a JSON array");

    const auto base = std::filesystem::path(manifest_path).parent_path();
    std::vector<CorpusItem> items;
    for (const auto& entry : doc) {
        if (!entry.is_object() || !entry.contains("path") || !entry.contains("label")) {
            throw ParseError("corpus manifest entries must be {path, label}");
        }
        const std::string label = entry["label"].get<std::string>();
        if (label != "dark" && label != "benign") {
            throw ParseError("corpus label must be 'dark' or 'benign', got '" + label + "'");
        }
        CorpusItem item;
        item.path = (base / entry["path"].get<std::string>()).string();
        item.dark = label == "dark";
        items.push_back(std::move(item));
    }
    return items;
}

struct ItemResult {
    std::string path;
    bool label = false;
    int score = 0;       // max finding severity, 0 with no findings
    bool verdict = false;
    double elapsed_ms = 0;
};

struct FoldBlock {
    std::vector<std::size_t> indices;
    Confusion confusion;
    ConfusionMetrics metrics;
    std::optional<double> auroc_value;
};

struct MetricSpread {
    double mean = 0;
    double sd = 0;  // sample SD across folds
};

struct EvalRun {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<ItemResult> items;  // successfully analyzed items
    std::vector<std::pair<std::string, std::string>> excluded;  // (path, error)
    std::vector<FoldBlock> folds;
    Confusion overall;
    ConfusionMetrics overall_metrics;
    std::optional<double> overall_auroc;
    std::map<std::string, MetricSpread> aggregate;  // across folds
    double mean_page_time_ms = 0;                   // wall clock
};

namespace detail {

inline void accumulate_spread(std::map<std::string, MetricSpread>& out, const std::string& name,
                              const std::vector<double>& values) {
    if (values.empty()) return;
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd =
        values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
    out[name] = {mean, sd};
}

}  // namespace detail

// Runs the detector with one fixed configuration over every corpus item
// (no per-fold threshold fitting; folds report metric dispersion only).
// Unreadable items are excluded and listed. Items run in parallel.
inline EvalRun run_eval(const std::vector<CorpusItem>& corpus, const RuleSet& rules, int k,
                        std::uint64_t seed, unsigned parallelism = 0) {
    EvalRun run;
    run.k = k;
    run.seed = seed;

    struct Slot {
        std::optional<ItemResult> result;
        std::optional<std::string> error;
    };
    std::vector<Slot> slots(corpus.size());

    if (parallelism == 0) parallelism = std::max(1u, std::thread::hardware_concurrency());
    parallelism = std::min<unsigned>(parallelism, 16);

    std::atomic<std::size_t> cursor{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= corpus.size()) return;
            const auto started = std::chrono::steady_clock::now();
            try {
                const SnapshotBundle bundle = load_snapshot_bundle(corpus[i].path);
                const Report report = analyze_bundle(bundle, rules);
                ItemResult r;
                r.path = corpus[i].path;
                r.label = corpus[i].dark;
                r.verdict = report.dark_verdict;
                for (const auto& f : report.findings) r.score = std::max(r.score, f.severity);
                r.elapsed_ms = std::chrono::duration<double, std::milli>(
                                   std::chrono::steady_clock::now() - started)
                                   .count();
                slots[i].result = std::move(r);
            } catch (const Error& e) {
                slots[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < parallelism; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].result) {
            run.items.push_back(std::move(*slots[i].result));
        } else {
            run.excluded.emplace_back(corpus[i].path, slots[i].error.value_or("unknown error"));
        }
    }

    std::vector<bool> labels;
    std::vector<bool> verdicts;
    std::vector<double> scores;
    double total_ms = 0;
    for (const auto& item : run.items) {
        labels.push_back(item.label);
        verdicts.push_back(item.verdict);
        scores.push_back(static_cast<double>(item.score));
        total_ms += item.elapsed_ms;
    }
    run.mean_page_time_ms = run.items.empty() ? 0 : total_ms / static_cast<double>(run.items.size());

    const auto folds = stratified_folds(labels, k, seed);
    std::vector<double> precisions, recalls, f1s, aurocs;
    for (const auto& fold : folds) {
        FoldBlock block;
        block.indices = fold;
        std::vector<bool> fold_labels, fold_verdicts;
        std::vector<double> fold_scores;
        for (std::size_t idx : fold) {
            fold_labels.push_back(labels[idx]);
            fold_verdicts.push_back(verdicts[idx]);
            fold_scores.push_back(scores[idx]);
        }
        block.confusion = confusion_counts(fold_verdicts, fold_labels);
        block.metrics = metrics_from(block.confusion);
        block.auroc_value = auroc(fold_scores, fold_labels);
        if (block.metrics.precision) precisions.push_back(*block.metrics.precision);
        if (block.metrics.recall) recalls.push_back(*block.metrics.recall);
        if (block.metrics.f1) f1s.push_back(*block.metrics.f1);
        if (block.auroc_value) aurocs.push_back(*block.auroc_value);
        run.folds.push_back(std::move(block));
    }
    detail::accumulate_spread(run.aggregate, "precision", precisions);
    detail::accumulate_spread(run.aggregate, "recall", recalls);
    detail::accumulate_spread(run.aggregate, "f1", f1s);
    detail::accumulate_spread(run.aggregate, "auroc", aurocs);

    run.overall = confusion_counts(verdicts, labels);
    run.overall_metrics = metrics_from(run.overall);
    run.overall_auroc = auroc(scores, labels);
    return run;
}

// Wall-clock numbers live exclusively under "timing" so determinism checks
// can strip one key.
inline std::string eval_run_json(const EvalRun& run) {
    json v;
    v["eval_version"] = "1.0";
    v["k"] = run.k;
    v["seed"] = run.seed;

    json items = json::array();
    for (const auto& item : run.items) {
        items.push_back({{"path", item.path},
                         {"label", item.label ? "dark" : "benign"},
                         {"score", item.score},
                         {"verdict", item.verdict ? "dark" : "benign"}});
    }
    v["items"] = items;

    json excluded = json::array();
    for (const auto& [path, error] : run.excluded) {
        excluded.push_back({{"path", path}, {"error", error}});
    }
    v["excluded"] = excluded;

    const auto metrics_json = [](const ConfusionMetrics& m,
                                 const std::optional<double>& auc) {
        json mv;
        mv["precision"] = m.precision ? json(*m.precision) : json(nullptr);
        mv["recall"] = m.recall ? json(*m.recall) : json(nullptr);
        mv["f1"] = m.f1 ? json(*m.f1) : json(nullptr);
        mv["auroc"] = auc ? json(*auc) : json(nullptr);
        return mv;
    };
    const auto confusion_json = [](const Confusion& c) {
        return json{{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
    };

    json folds = json::array();
    for (const auto& fold : run.folds) {
        json fv;
        fv["indices"] = fold.indices;
        fv["confusion"] = confusion_json(fold.confusion);
        fv["metrics"] = metrics_json(fold.metrics, fold.auroc_value);
        folds.push_back(fv);
    }
    v["folds"] = folds;

    json agg;
    for (const auto& [name, spread] : run.aggregate) {
        agg[name] = {{"mean", spread.mean}, {"sd", spread.sd}};
    }
    agg["overall"] = {{"confusion", confusion_json(run.overall)},
                      {"metrics", metrics_json(run.overall_metrics, run.overall_auroc)}};
    v["aggregate"] = agg;

    v["timing"] = {{"mean_page_time_ms", run.mean_page_time_ms}};
    return v.dump(2) + "\n";
}

}  // namespace darkscan
