#pragma once

// Scores model prediction dumps: link prediction (MRR, Hits@N) and
// interpretability (path recall, local and global interpretability).

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgi/benchmark.hpp"
#include "kgi/kg_store.hpp"
#include "kgi/path_engine.hpp"

namespace kgi {

struct RankedPrediction {
    EntityId tail;
    double score = 0;
};

struct ClaimedPath {
    Path path;
    double score = 0;
};

struct PredictionRecord {
    EntityId head;
    RelationId relation;
    EntityId gold_tail;
    std::vector<RankedPrediction> ranking;  // best first
    std::vector<ClaimedPath> paths;         // may be empty

    Triple triple() const { return {head, relation, gold_tail}; }
};

struct LinkMetrics {
    double mrr = 0;
    double hits1 = 0;
    double hits3 = 0;
    double hits10 = 0;
};

// 1-based rank of the gold tail, nullopt when it is absent. With
// filter_kg, other known true tails for (head, relation) are skipped.
// Throws ValidationError on a repeated tail.
std::optional<std::size_t> gold_rank(const PredictionRecord& record, const KnowledgeGraph* filter_kg = nullptr);

LinkMetrics link_prediction_metrics(std::span<const PredictionRecord> records,
                                    const KnowledgeGraph* filter_kg = nullptr);

// Index into record.paths of the best valid path: highest model score, then
// shorter, then canonical order. nullopt when no claimed path is valid.
std::optional<std::size_t> best_path_index(const KnowledgeGraph& kg, const PredictionRecord& record);

double path_recall(const KnowledgeGraph& kg, std::span<const PredictionRecord> records);
// nullopt when no record has a valid path.
std::optional<double> local_interpretability(const Benchmark& benchmark, const KnowledgeGraph& kg,
                                             std::span<const PredictionRecord> records);
double global_interpretability(double pr, std::optional<double> li);

struct TripleDetail {
    Triple triple;
    int cnt = 0;
    std::optional<std::size_t> rank;
    std::optional<Path> best_path;
    double model_score = 0;
    double path_score = 0;
    bool overlength = false;
};

struct EvaluationReport {
    std::optional<LinkMetrics> link;  // absent for the upper bound
    double pr = 0;
    std::optional<double> li;
    double gi = 0;
    std::size_t triples = 0;
    std::size_t found = 0;
    bool filtered = false;
    std::vector<TripleDetail> details;
    std::vector<std::string> warnings;
};

// Throws ValidationError unless records cover test_triples one-to-one.
void validate_coverage(std::span<const Triple> test_triples, std::span<const PredictionRecord> records);

struct EvaluateOptions {
    bool filtered = false;
    // Require one record per triple of kg.test().
    bool check_coverage = true;
};

EvaluationReport evaluate(const Benchmark& benchmark, const KnowledgeGraph& kg,
                          std::span<const PredictionRecord> records, const EvaluateOptions& options = {});

// Credits every triple with its best-scoring collected path.
EvaluationReport upper_bound(const Benchmark& benchmark, const KnowledgeGraph& kg,
                             std::span<const PathSet> path_sets);

// ---- golden protocol -----------------------------------------------------

struct ModelPredictions {
    std::string model;
    std::vector<PredictionRecord> records;
};

struct GoldenTask {
    std::string model;
    Triple triple;
    Path path;
};

struct GoldenSampleOptions {
    std::size_t per_model = 300;
    std::uint64_t seed = 0;
    // (model, triple) pairs already sampled; used when topping up.
    std::set<std::pair<std::string, Triple>> exclude;
    // Per-model sample size overriding per_model (top-up requests).
    std::map<std::string, std::size_t> quota;
};

struct GoldenSampling {
    std::vector<GoldenTask> tasks;  // models merged and shuffled
    std::map<std::string, std::size_t> per_model;
    std::vector<std::string> warnings;
};

// Seeded sample of each model's best valid paths, merged into one
// model-blind shuffled stream.
GoldenSampling golden_sample(const KnowledgeGraph& kg, std::span<const ModelPredictions> models,
                             const GoldenSampleOptions& options = {});

// Golden GI of a model: its path recall times the mean of the kept labels.
double golden_interpretability(double pr, std::span<const Grade> kept_labels);

struct AbsDiffResult {
    double value = 0;
    std::vector<std::string> models;      // compared
    std::vector<std::string> mismatched;  // in only one map
};

// Mean |benchmark GI - golden GI| over models present in both maps. Throws
// ValidationError when the intersection is empty.
AbsDiffResult abs_diff_avg(const std::map<std::string, double>& benchmark_scores,
                           const std::map<std::string, double>& golden_scores);

}  // namespace kgi
