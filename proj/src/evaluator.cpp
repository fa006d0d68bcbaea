#include "kgi/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "kgi/error.hpp"
#include "kgi/random.hpp"

namespace kgi {

std::optional<std::size_t> gold_rank(const PredictionRecord& record, const KnowledgeGraph* filter_kg) {
    std::unordered_set<EntityId> seen;
    seen.reserve(record.ranking.size());
    std::optional<std::size_t> rank;
    std::size_t position = 0;
    for (const RankedPrediction& p : record.ranking) {
        if (!seen.insert(p.tail).second) throw ValidationError("duplicate tail in ranking");
        if (rank) continue;
        if (p.tail == record.gold_tail) {
            rank = position + 1;
            continue;
        }
        if (filter_kg != nullptr && filter_kg->is_known_fact({record.head, record.relation, p.tail})) continue;
        ++position;
    }
    return rank;
}

LinkMetrics link_prediction_metrics(std::span<const PredictionRecord> records, const KnowledgeGraph* filter_kg) {
    if (records.empty()) throw ValidationError("link prediction metrics need at least one record");
    LinkMetrics m;
    for (const PredictionRecord& r : records) {
        const auto rank = gold_rank(r, filter_kg);
        if (!rank) continue;
        m.mrr += 1.0 / static_cast<double>(*rank);
        if (*rank <= 1) m.hits1 += 1;
        if (*rank <= 3) m.hits3 += 1;
        if (*rank <= 10) m.hits10 += 1;
    }
    const double n = static_cast<double>(records.size());
    m.mrr /= n;
    m.hits1 /= n;
    m.hits3 /= n;
    m.hits10 /= n;
    return m;
}

std::optional<std::size_t> best_path_index(const KnowledgeGraph& kg, const PredictionRecord& record) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < record.paths.size(); ++i) {
        const ClaimedPath& c = record.paths[i];
        if (!is_valid_walk(kg, c.path, record.head, record.gold_tail)) continue;
        if (!best) {
            best = i;
            continue;
        }
        const ClaimedPath& b = record.paths[*best];
        // Path's ordering is length-first, which is the tie-break we want.
        if (c.score > b.score || (c.score == b.score && c.path < b.path)) best = i;
    }
    return best;
}

namespace {

struct Tally {
    std::size_t triples = 0;
    std::size_t found = 0;
    double score_sum = 0;
};

void finish(EvaluationReport& report, const Tally& t) {
    report.triples = t.triples;
    report.found = t.found;
    report.pr = t.triples == 0 ? 0.0 : static_cast<double>(t.found) / static_cast<double>(t.triples);
    if (t.found > 0) report.li = t.score_sum / static_cast<double>(t.found);
    report.gi = global_interpretability(report.pr, report.li);
}

}  // namespace

double path_recall(const KnowledgeGraph& kg, std::span<const PredictionRecord> records) {
    if (records.empty()) return 0.0;
    std::size_t found = 0;
    for (const PredictionRecord& r : records) {
        if (best_path_index(kg, r)) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(records.size());
}

std::optional<double> local_interpretability(const Benchmark& benchmark, const KnowledgeGraph& kg,
                                             std::span<const PredictionRecord> records) {
    std::size_t found = 0;
    double sum = 0;
    for (const PredictionRecord& r : records) {
        const auto best = best_path_index(kg, r);
        if (!best) continue;
        ++found;
        sum += score_path(benchmark, r.paths[*best].path, r.relation).score;
    }
    if (found == 0) return std::nullopt;
    return sum / static_cast<double>(found);
}

double global_interpretability(double pr, std::optional<double> li) { return li ? pr * *li : 0.0; }

void validate_coverage(std::span<const Triple> test_triples, std::span<const PredictionRecord> records) {
    std::unordered_map<Triple, int> remaining;
    for (const Triple& t : test_triples) remaining[t] = 1;
    for (const PredictionRecord& r : records) {
        const auto it = remaining.find(r.triple());
        if (it == remaining.end()) throw ValidationError("record for a triple that is not in the test set");
        if (it->second == 0) throw ValidationError("more than one record for the same test triple");
        it->second = 0;
    }
    for (const auto& [triple, left] : remaining) {
        if (left != 0) throw ValidationError("test triple without a prediction record");
    }
}

EvaluationReport evaluate(const Benchmark& benchmark, const KnowledgeGraph& kg,
                          std::span<const PredictionRecord> records, const EvaluateOptions& options) {
    if (options.check_coverage) validate_coverage(kg.test(), records);
    EvaluationReport report;
    report.filtered = options.filtered;
    const KnowledgeGraph* filter = options.filtered ? &kg : nullptr;
    if (!records.empty()) report.link = link_prediction_metrics(records, filter);

    Tally tally;
    std::size_t overlength = 0;
    report.details.reserve(records.size());
    for (const PredictionRecord& r : records) {
        TripleDetail d;
        d.triple = r.triple();
        d.rank = gold_rank(r, filter);
        ++tally.triples;
        if (const auto best = best_path_index(kg, r)) {
            d.cnt = 1;
            d.best_path = r.paths[*best].path;
            d.model_score = r.paths[*best].score;
            const RuleScore s = score_path(benchmark, *d.best_path, r.relation);
            d.path_score = s.score;
            d.overlength = s.overlength;
            if (s.overlength) ++overlength;
            ++tally.found;
            tally.score_sum += s.score;
        }
        report.details.push_back(std::move(d));
    }
    finish(report, tally);
    if (overlength > 0) {
        report.warnings.push_back(std::to_string(overlength) +
                                  " best path(s) exceed the benchmark hop bound and were scored with the "
                                  "over-length fallback");
    }
    if (!report.li) report.warnings.push_back("no record has a valid path; LI undefined and GI set to 0");
    return report;
}

EvaluationReport upper_bound(const Benchmark& benchmark, const KnowledgeGraph& kg, std::span<const PathSet> path_sets) {
    (void)kg;
    EvaluationReport report;
    Tally tally;
    report.details.reserve(path_sets.size());
    for (const PathSet& set : path_sets) {
        TripleDetail d;
        d.triple = set.query;
        ++tally.triples;
        std::optional<double> best;
        for (const Path& p : set.paths) {
            const RuleScore s = score_path(benchmark, p, set.query.relation);
            if (!best || s.score > *best) {
                best = s.score;
                d.best_path = p;
                d.overlength = s.overlength;
            }
        }
        if (best) {
            d.cnt = 1;
            d.path_score = *best;
            ++tally.found;
            tally.score_sum += *best;
        }
        report.details.push_back(std::move(d));
    }
    finish(report, tally);
    return report;
}

GoldenSampling golden_sample(const KnowledgeGraph& kg, std::span<const ModelPredictions> models,
                             const GoldenSampleOptions& options) {
    GoldenSampling out;
    Rng rng(options.seed);
    for (const ModelPredictions& m : models) {
        std::vector<GoldenTask> candidates;
        for (const PredictionRecord& r : m.records) {
            if (options.exclude.contains({m.model, r.triple()})) continue;
            if (const auto best = best_path_index(kg, r)) {
                candidates.push_back({m.model, r.triple(), r.paths[*best].path});
            }
        }
        const auto quota_it = options.quota.find(m.model);
        const std::size_t want = quota_it == options.quota.end() ? options.per_model : quota_it->second;
        if (candidates.empty()) {
            out.warnings.push_back("model '" + m.model + "' has no valid path left to sample; excluded");
            out.per_model[m.model] = 0;
            continue;
        }
        if (candidates.size() < want) {
            out.warnings.push_back("model '" + m.model + "' has only " + std::to_string(candidates.size()) +
                                   " valid paths; wanted " + std::to_string(want));
        }
        const auto picked = rng.sample_indices(candidates.size(), want);
        out.per_model[m.model] = picked.size();
        for (std::size_t i : picked) out.tasks.push_back(std::move(candidates[i]));
    }
    rng.shuffle(out.tasks);
    return out;
}

double golden_interpretability(double pr, std::span<const Grade> kept_labels) {
    if (kept_labels.empty()) return 0.0;
    return pr * aggregate_rule_score(kept_labels);
}

AbsDiffResult abs_diff_avg(const std::map<std::string, double>& benchmark_scores,
                           const std::map<std::string, double>& golden_scores) {
    AbsDiffResult out;
    double sum = 0;
    for (const auto& [model, gi] : benchmark_scores) {
        const auto it = golden_scores.find(model);
        if (it == golden_scores.end()) {
            out.mismatched.push_back(model);
            continue;
        }
        out.models.push_back(model);
        sum += std::abs(gi - it->second);
    }
    for (const auto& [model, gi] : golden_scores) {
        if (!benchmark_scores.contains(model)) out.mismatched.push_back(model);
    }
    if (out.models.empty()) throw ValidationError("no model appears in both score maps");
    out.value = sum / static_cast<double>(out.models.size());
    return out;
}

}  // namespace kgi
