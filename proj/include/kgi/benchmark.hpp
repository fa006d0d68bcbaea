#pragma once

// Interpretability benchmarks: a total scoring function over rules, built
// either from human grades (kind A, with tier fallbacks for unannotated
// rules) or from mined-rule confidence cut at calibrated thresholds (kind R).

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgi/path_engine.hpp"
#include "kgi/rule_engine.hpp"

namespace kgi {

// Three-grade judgment scale shared by annotation and calibration.
enum class Grade : std::uint8_t { kUnreasonable = 0, kPartial = 1, kReasonable = 2 };

inline constexpr std::array<Grade, 3> kAllGrades{Grade::kUnreasonable, Grade::kPartial, Grade::kReasonable};

double grade_value(Grade g);  // 0, 0.5, 1
std::optional<Grade> grade_from_value(double v);
std::string_view grade_name(Grade g);  // "unreasonable", "partial", "reasonable"
std::optional<Grade> parse_grade_name(std::string_view name);

// ---- tiers ---------------------------------------------------------------

enum class RuleTier : std::uint8_t { kH, kL, kO };

std::string_view tier_name(RuleTier t);
std::optional<RuleTier> parse_tier_name(std::string_view name);

inline constexpr double kDefaultTierThreshold = 0.01;
inline constexpr double kDefaultLScore = 0.005;
inline constexpr double kDefaultOScore = 0.069;

struct TierAssignment {
    // Covers every rule of the abstracted set plus mined rules outside it,
    // so L membership is known for rules no test path produced.
    std::map<Rule, RuleTier> tiers;
    // Counts over the abstracted set only, indexed by RuleTier.
    std::array<std::size_t, 3> rule_counts{};
    std::array<std::size_t, 3> path_counts{};
    std::vector<std::string> warnings;

    RuleTier tier_of(const Rule& rule) const;
};

// H: mined and c >= threshold; L: mined and c < threshold; O: not mined.
// A mined rule without a defined confidence is treated as not mined.
TierAssignment classify_rules(const RuleSet& all_rules, const RuleSet& mined,
                              double confidence_threshold = kDefaultTierThreshold);

// ---- annotation sampling and aggregation ---------------------------------

struct AnnotationSample {
    Rule rule;
    std::vector<Path> paths;
};

struct AnnotationSampling {
    std::vector<AnnotationSample> samples;  // rule order
    std::vector<std::string> warnings;
    std::size_t total_paths = 0;
};

// Up to per_rule distinct paths per H rule, sampled uniformly without
// replacement under seed; all of them when fewer exist.
AnnotationSampling sample_annotation_tasks(std::span<const PathSet> path_sets, std::span<const Rule> h_rules,
                                           std::size_t per_rule = 10, std::uint64_t seed = 0);

// Mean of per-path scores in [0,1]. The sum runs over the sorted values so the
// result is independent of input order. Throws ValidationError when empty or
// out of range.
double aggregate_rule_score(std::span<const double> path_scores);
double aggregate_rule_score(std::span<const Grade> grades);

struct AnnotatedRuleScore {
    Rule rule;
    std::vector<Path> sampled_paths;
    std::vector<double> path_scores;
    double score = 0;
};

// ---- benchmark -----------------------------------------------------------

enum class BenchmarkKind : std::uint8_t { kA, kR };
enum class ScoreSource : std::uint8_t { kAnnotated, kTier, kCalibrated };

std::string_view score_source_name(ScoreSource s);

struct BenchmarkConfig {
    double l_score = kDefaultLScore;
    double o_score = kDefaultOScore;
    int max_hops = kDefaultMaxHops;
    double overlength_score = 0.0;
};

struct BenchmarkEntry {
    double score = 0;
    ScoreSource source = ScoreSource::kTier;
};

struct RuleScore {
    double score = 0;
    bool overlength = false;
};

class Benchmark {
public:
    Benchmark(BenchmarkKind kind, BenchmarkConfig config, std::map<Rule, BenchmarkEntry> entries,
              std::optional<double> h1 = std::nullopt, std::optional<double> h2 = std::nullopt);

    BenchmarkKind kind() const { return kind_; }
    const BenchmarkConfig& config() const { return config_; }
    std::optional<double> h1() const { return h1_; }
    std::optional<double> h2() const { return h2_; }
    const std::map<Rule, BenchmarkEntry>& entries() const { return entries_; }

    // Score for rules without an entry: the O-tier score for kind A, 0 for kind R.
    double fallback_score() const;

    // Total over syntactically valid rules.
    RuleScore score(const Rule& rule) const;

private:
    BenchmarkKind kind_;
    BenchmarkConfig config_;
    std::map<Rule, BenchmarkEntry> entries_;
    std::optional<double> h1_;
    std::optional<double> h2_;
};

// Annotated H rules keep their mean score; other rules get the L or O
// fallback. Throws ValidationError if an annotated rule is not tier H.
Benchmark build_a_benchmark(std::span<const AnnotatedRuleScore> annotated, const TierAssignment& tiers,
                            const BenchmarkConfig& config = {});

// S(p) = S(abstract_path(p)). Never throws for a non-empty path; an empty
// path scores the fallback.
RuleScore score_path(const Benchmark& benchmark, const Path& path, RelationId head_relation);

// ---- calibration ---------------------------------------------------------

// Type(f): unreasonable below h1, partial in [h1, h2), reasonable at or above h2.
Grade classify_confidence(double confidence, double h1, double h2);

struct CalibrationResult {
    double h1 = 0;
    double h2 = 0;
    double micro_f1 = 0;
    double accuracy = 0;
    // confusion[golden][predicted], indexed by Grade.
    std::array<std::array<std::size_t, 3>, 3> confusion{};
    std::size_t labeled = 0;
};

// Micro-averaged F1 from a confusion matrix (pooled TP/FP/FN over classes).
double micro_f1(const std::array<std::array<std::size_t, 3>, 3>& confusion);

// Candidate thresholds: 0, every distinct confidence among labeled rules,
// and a value just above 1. Picks h1 <= h2 maximizing Micro-F1, smallest
// (h1, h2) among ties. Runs in O(m log m) for m labeled rules.
CalibrationResult calibrate_thresholds(const RuleSet& mined, const std::map<Rule, Grade>& golden_labels);

Benchmark build_r_benchmark(const RuleSet& mined, const CalibrationResult& calibration,
                            const BenchmarkConfig& config = {});

// ---- statistics ----------------------------------------------------------

struct BenchmarkStatsOptions {
    std::size_t min_rules_per_relation = 10;
    std::size_t list_size = 20;
    std::size_t score_bins = 10;
    std::size_t confidence_bins = 10;
};

struct RelationMean {
    RelationId relation;
    double mean = 0;
    std::size_t rules = 0;
};

struct BenchmarkStats {
    std::vector<std::size_t> score_histogram;
    std::vector<RelationMean> relation_means;  // relations meeting the rule-count filter, by id
    std::vector<RelationMean> top;             // highest mean first
    std::vector<RelationMean> bottom;          // lowest mean first
    // joint[confidence_bin][score_bin] over rules with a defined confidence.
    std::vector<std::vector<std::size_t>> confidence_score_joint;
    // number of sampled paths -> number of annotated rules.
    std::map<std::size_t, std::size_t> sampled_path_counts;
};

std::size_t histogram_bin(double value, std::size_t bins);

BenchmarkStats benchmark_stats(const Benchmark& benchmark, const RuleSet& all_rules,
                               std::span<const AnnotatedRuleScore> annotated = {},
                               const BenchmarkStatsOptions& options = {});

}  // namespace kgi
