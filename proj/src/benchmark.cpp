#include "kgi/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "kgi/error.hpp"
#include "kgi/random.hpp"

namespace kgi {

double grade_value(Grade g) {
    switch (g) {
        case Grade::kUnreasonable: return 0.0;
        case Grade::kPartial: return 0.5;
        case Grade::kReasonable: return 1.0;
    }
    return 0.0;
}

std::optional<Grade> grade_from_value(double v) {
    if (v == 0.0) return Grade::kUnreasonable;
    if (v == 0.5) return Grade::kPartial;
    if (v == 1.0) return Grade::kReasonable;
    return std::nullopt;
}

std::string_view grade_name(Grade g) {
    switch (g) {
        case Grade::kUnreasonable: return "unreasonable";
        case Grade::kPartial: return "partial";
        case Grade::kReasonable: return "reasonable";
    }
    return "unreasonable";
}

std::optional<Grade> parse_grade_name(std::string_view name) {
    if (name == "unreasonable") return Grade::kUnreasonable;
    if (name == "partial" || name == "partially_reasonable" || name == "partially reasonable") return Grade::kPartial;
    if (name == "reasonable") return Grade::kReasonable;
    return std::nullopt;
}

std::string_view tier_name(RuleTier t) {
    switch (t) {
        case RuleTier::kH: return "H";
        case RuleTier::kL: return "L";
        case RuleTier::kO: return "O";
    }
    return "O";
}

std::optional<RuleTier> parse_tier_name(std::string_view name) {
    if (name == "H") return RuleTier::kH;
    if (name == "L") return RuleTier::kL;
    if (name == "O") return RuleTier::kO;
    return std::nullopt;
}

std::string_view score_source_name(ScoreSource s) {
    switch (s) {
        case ScoreSource::kAnnotated: return "annotated";
        case ScoreSource::kTier: return "tier";
        case ScoreSource::kCalibrated: return "calibrated";
    }
    return "tier";
}

// ---- tiers ---------------------------------------------------------------

RuleTier TierAssignment::tier_of(const Rule& rule) const {
    const auto it = tiers.find(rule);
    return it == tiers.end() ? RuleTier::kO : it->second;
}

TierAssignment classify_rules(const RuleSet& all_rules, const RuleSet& mined, double confidence_threshold) {
    TierAssignment out;
    auto mined_tier = [&](const Rule& rule) -> RuleTier {
        const RuleEntry* entry = mined.find(rule);
        if (entry == nullptr) return RuleTier::kO;
        if (!entry->stats || !entry->stats->confidence) return RuleTier::kO;
        return *entry->stats->confidence >= confidence_threshold ? RuleTier::kH : RuleTier::kL;
    };

    std::size_t undefined = 0;
    for (const auto& [rule, entry] : mined) {
        if (!entry.stats || !entry.stats->confidence) ++undefined;
    }
    if (undefined > 0) {
        out.warnings.push_back(std::to_string(undefined) +
                               " mined rule(s) without a defined confidence were treated as unmined (tier O)");
    }

    for (const auto& [rule, entry] : all_rules) {
        const RuleTier t = mined_tier(rule);
        out.tiers.emplace(rule, t);
        ++out.rule_counts[static_cast<std::size_t>(t)];
        out.path_counts[static_cast<std::size_t>(t)] += entry.path_count;
    }
    for (const auto& [rule, entry] : mined) {
        if (!out.tiers.contains(rule)) out.tiers.emplace(rule, mined_tier(rule));
    }
    return out;
}

// ---- annotation sampling and aggregation ---------------------------------

AnnotationSampling sample_annotation_tasks(std::span<const PathSet> path_sets, std::span<const Rule> h_rules,
                                           std::size_t per_rule, std::uint64_t seed) {
    std::map<Rule, std::set<Path>> by_rule;
    for (const Rule& r : h_rules) by_rule.try_emplace(r);
    for (const PathSet& set : path_sets) {
        for (const Path& p : set.paths) {
            if (p.empty()) continue;
            const auto it = by_rule.find(abstract_path(p, set.query.relation));
            if (it != by_rule.end()) it->second.insert(p);
        }
    }

    AnnotationSampling out;
    Rng rng(seed);
    for (auto& [rule, paths] : by_rule) {
        if (paths.empty()) {
            out.warnings.push_back("H rule with no matching path excluded from annotation");
            continue;
        }
        std::vector<Path> candidates(paths.begin(), paths.end());
        AnnotationSample sample{rule, {}};
        for (std::size_t i : rng.sample_indices(candidates.size(), per_rule)) {
            sample.paths.push_back(std::move(candidates[i]));
        }
        out.total_paths += sample.paths.size();
        out.samples.push_back(std::move(sample));
    }
    return out;
}

double aggregate_rule_score(std::span<const double> path_scores) {
    if (path_scores.empty()) throw ValidationError("cannot aggregate an empty score list");
    std::vector<double> sorted(path_scores.begin(), path_scores.end());
    for (double s : sorted) {
        if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("path score outside [0, 1]");
    }
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double s : sorted) sum += s;
    return sum / static_cast<double>(sorted.size());
}

double aggregate_rule_score(std::span<const Grade> grades) {
    std::vector<double> values;
    values.reserve(grades.size());
    for (Grade g : grades) values.push_back(grade_value(g));
    return aggregate_rule_score(values);
}

// ---- benchmark -----------------------------------------------------------

Benchmark::Benchmark(BenchmarkKind kind, BenchmarkConfig config, std::map<Rule, BenchmarkEntry> entries,
                     std::optional<double> h1, std::optional<double> h2)
    : kind_(kind), config_(config), entries_(std::move(entries)), h1_(h1), h2_(h2) {
    if (config_.max_hops < 1) throw ValidationError("benchmark max_hops must be >= 1");
    if (h1_ && h2_ && *h1_ > *h2_) throw ValidationError("benchmark thresholds require h1 <= h2");
}

double Benchmark::fallback_score() const { return kind_ == BenchmarkKind::kA ? config_.o_score : 0.0; }

RuleScore Benchmark::score(const Rule& rule) const {
    if (rule.body.size() > static_cast<std::size_t>(config_.max_hops)) return {config_.overlength_score, true};
    const auto it = entries_.find(rule);
    return {it == entries_.end() ? fallback_score() : it->second.score, false};
}

Benchmark build_a_benchmark(std::span<const AnnotatedRuleScore> annotated, const TierAssignment& tiers,
                            const BenchmarkConfig& config) {
    std::map<Rule, BenchmarkEntry> entries;
    for (const auto& [rule, tier] : tiers.tiers) {
        switch (tier) {
            case RuleTier::kL: entries[rule] = {config.l_score, ScoreSource::kTier}; break;
            case RuleTier::kO: entries[rule] = {config.o_score, ScoreSource::kTier}; break;
            // H rules without annotations fall back to the O score.
            case RuleTier::kH: entries[rule] = {config.o_score, ScoreSource::kTier}; break;
        }
    }
    for (const AnnotatedRuleScore& a : annotated) {
        if (tiers.tier_of(a.rule) != RuleTier::kH) {
            throw ValidationError("annotated rule is not an H-tier rule");
        }
        if (!(a.score >= 0.0 && a.score <= 1.0)) throw ValidationError("annotated rule score outside [0, 1]");
        entries[a.rule] = {a.score, ScoreSource::kAnnotated};
    }
    return Benchmark(BenchmarkKind::kA, config, std::move(entries));
}

RuleScore score_path(const Benchmark& benchmark, const Path& path, RelationId head_relation) {
    if (path.empty()) return {benchmark.fallback_score(), false};
    return benchmark.score(abstract_path(path, head_relation));
}

// ---- calibration ---------------------------------------------------------

Grade classify_confidence(double confidence, double h1, double h2) {
    if (confidence < h1) return Grade::kUnreasonable;
    if (confidence < h2) return Grade::kPartial;
    return Grade::kReasonable;
}

double micro_f1(const std::array<std::array<std::size_t, 3>, 3>& confusion) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        tp += confusion[c][c];
        for (std::size_t o = 0; o < 3; ++o) {
            if (o == c) continue;
            fp += confusion[o][c];  // predicted c, golden o
            fn += confusion[c][o];  // golden c, predicted o
        }
    }
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

CalibrationResult calibrate_thresholds(const RuleSet& mined, const std::map<Rule, Grade>& golden_labels) {
    if (golden_labels.empty()) throw ValidationError("calibration needs at least one labeled rule");

    struct Labeled {
        double confidence;
        Grade label;
    };
    std::vector<Labeled> items;
    items.reserve(golden_labels.size());
    for (const auto& [rule, label] : golden_labels) {
        const auto c = mined.confidence(rule);
        if (!c) throw ValidationError("labeled rule has no defined confidence in the mined set");
        items.push_back({*c, label});
    }
    std::sort(items.begin(), items.end(), [](const Labeled& a, const Labeled& b) { return a.confidence < b.confidence; });

    std::vector<double> candidates{0.0};
    for (const Labeled& it : items) candidates.push_back(it.confidence);
    candidates.push_back(std::nextafter(1.0, 2.0));
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    // below[g][k] = labeled rules of class g with confidence < candidates[k].
    const std::size_t m = candidates.size();
    std::array<std::vector<std::int64_t>, 3> below;
    for (auto& b : below) b.assign(m, 0);
    std::array<std::int64_t, 3> totals{};
    {
        std::size_t pos = 0;
        std::array<std::int64_t, 3> run{};
        for (std::size_t k = 0; k < m; ++k) {
            while (pos < items.size() && items[pos].confidence < candidates[k]) {
                ++run[static_cast<std::size_t>(items[pos].label)];
                ++pos;
            }
            for (std::size_t g = 0; g < 3; ++g) below[g][k] = run[g];
        }
        for (const Labeled& it : items) ++totals[static_cast<std::size_t>(it.label)];
    }
    constexpr auto U = static_cast<std::size_t>(Grade::kUnreasonable);
    constexpr auto P = static_cast<std::size_t>(Grade::kPartial);
    constexpr auto R = static_cast<std::size_t>(Grade::kReasonable);

    // correct(i, j) = A(i) + B(j) for i <= j, so a suffix maximum of B gives
    // the best j for every i. Ties keep the smallest index on both sides.
    std::vector<std::int64_t> best_b(m);
    std::vector<std::size_t> best_j(m);
    for (std::size_t k = m; k-- > 0;) {
        const std::int64_t b = below[P][k] + totals[R] - below[R][k];
        if (k + 1 == m || b >= best_b[k + 1]) {
            best_b[k] = b;
            best_j[k] = k;
        } else {
            best_b[k] = best_b[k + 1];
            best_j[k] = best_j[k + 1];
        }
    }
    std::int64_t best = std::numeric_limits<std::int64_t>::min();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::int64_t value = below[U][i] - below[P][i] + best_b[i];
        if (value > best) {
            best = value;
            bi = i;
            bj = best_j[i];
        }
    }

    CalibrationResult result;
    result.h1 = candidates[bi];
    result.h2 = candidates[bj];
    result.labeled = items.size();
    std::size_t correct = 0;
    for (const Labeled& it : items) {
        const Grade predicted = classify_confidence(it.confidence, result.h1, result.h2);
        ++result.confusion[static_cast<std::size_t>(it.label)][static_cast<std::size_t>(predicted)];
        if (predicted == it.label) ++correct;
    }
    result.micro_f1 = micro_f1(result.confusion);
    result.accuracy = static_cast<double>(correct) / static_cast<double>(items.size());
    return result;
}

Benchmark build_r_benchmark(const RuleSet& mined, const CalibrationResult& calibration, const BenchmarkConfig& config) {
    std::map<Rule, BenchmarkEntry> entries;
    for (const auto& [rule, entry] : mined) {
        if (!entry.stats || !entry.stats->confidence) continue;
        const Grade g = classify_confidence(*entry.stats->confidence, calibration.h1, calibration.h2);
        entries[rule] = {grade_value(g), ScoreSource::kCalibrated};
    }
    return Benchmark(BenchmarkKind::kR, config, std::move(entries), calibration.h1, calibration.h2);
}

// ---- statistics ----------------------------------------------------------

std::size_t histogram_bin(double value, std::size_t bins) {
    if (bins == 0) return 0;
    if (!(value > 0.0)) return 0;
    const auto b = static_cast<std::size_t>(std::floor(value * static_cast<double>(bins)));
    return std::min(b, bins - 1);
}

BenchmarkStats benchmark_stats(const Benchmark& benchmark, const RuleSet& all_rules,
                               std::span<const AnnotatedRuleScore> annotated, const BenchmarkStatsOptions& options) {
    if (options.score_bins == 0 || options.confidence_bins == 0) throw ValidationError("histogram needs >= 1 bin");
    BenchmarkStats out;
    out.score_histogram.assign(options.score_bins, 0);
    out.confidence_score_joint.assign(options.confidence_bins, std::vector<std::size_t>(options.score_bins, 0));

    std::map<RelationId, std::pair<double, std::size_t>> per_relation;
    for (const auto& [rule, entry] : all_rules) {
        const double s = benchmark.score(rule).score;
        ++out.score_histogram[histogram_bin(s, options.score_bins)];
        auto& acc = per_relation[rule.head];
        acc.first += s;
        ++acc.second;
        if (entry.stats && entry.stats->confidence) {
            ++out.confidence_score_joint[histogram_bin(*entry.stats->confidence, options.confidence_bins)]
                                        [histogram_bin(s, options.score_bins)];
        }
    }

    for (const auto& [relation, acc] : per_relation) {
        if (acc.second < options.min_rules_per_relation) continue;
        out.relation_means.push_back({relation, acc.first / static_cast<double>(acc.second), acc.second});
    }
    out.top = out.relation_means;
    std::stable_sort(out.top.begin(), out.top.end(),
                     [](const RelationMean& a, const RelationMean& b) { return a.mean > b.mean; });
    out.bottom = out.relation_means;
    std::stable_sort(out.bottom.begin(), out.bottom.end(),
                     [](const RelationMean& a, const RelationMean& b) { return a.mean < b.mean; });
    if (out.top.size() > options.list_size) out.top.resize(options.list_size);
    if (out.bottom.size() > options.list_size) out.bottom.resize(options.list_size);

    for (const AnnotatedRuleScore& a : annotated) ++out.sampled_path_counts[a.sampled_paths.size()];
    return out;
}

}  // namespace kgi
