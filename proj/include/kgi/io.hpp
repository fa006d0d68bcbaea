#pragma once

// JSONL/JSON artifact formats exchanged between pipeline stages. Names are
// resolved against a KnowledgeGraph; inverse relations use the "^-1" suffix.
//
// A path is {"relations": [...], "entities": [...]} where entities lists the
// entity reached by each step. Readers also accept the head prepended
// (one more entity than relations).

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgi/annotation.hpp"
#include "kgi/benchmark.hpp"
#include "kgi/evaluator.hpp"
#include "kgi/kg_store.hpp"
#include "kgi/path_engine.hpp"
#include "kgi/rule_engine.hpp"

namespace kgi::io {

using nlohmann::json;

// Calls fn(record, line_no) for each non-empty line. JSON syntax errors and
// any kgi::Error thrown by fn surface as ParseError carrying the line.
void for_each_jsonl(std::istream& in, const std::function<void(const json&, std::size_t)>& fn);

json path_to_json(const KnowledgeGraph& kg, const Path& path);
Path path_from_json(const KnowledgeGraph& kg, EntityId head, const json& j);

json rule_to_json(const KnowledgeGraph& kg, const Rule& rule);  // {"head", "body"}
Rule rule_from_json(const KnowledgeGraph& kg, const json& j);

// paths.jsonl
void write_paths(std::ostream& out, const KnowledgeGraph& kg, std::span<const PathSet> sets);
std::vector<PathSet> read_paths(std::istream& in, const KnowledgeGraph& kg);

// rules.jsonl. Stats are present on read iff the record has "head_count".
void write_rules(std::ostream& out, const KnowledgeGraph& kg, const RuleSet& rules);
RuleSet read_rules(std::istream& in, const KnowledgeGraph& kg, RuleProvenance provenance = RuleProvenance::kAbstracted);

// tiers.jsonl: {"head", "body", "tier", "confidence", "abstracted", "paths"}.
void write_tiers(std::ostream& out, const KnowledgeGraph& kg, const TierAssignment& tiers, const RuleSet& all_rules,
                 const RuleSet& mined);
TierAssignment read_tiers(std::istream& in, const KnowledgeGraph& kg);

// benchmark.jsonl: header record then one record per rule.
void write_benchmark(std::ostream& out, const KnowledgeGraph& kg, const Benchmark& benchmark);
Benchmark read_benchmark(std::istream& in, const KnowledgeGraph& kg);

// predictions.jsonl
void write_predictions(std::ostream& out, const KnowledgeGraph& kg, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(std::istream& in, const KnowledgeGraph& kg);

// report.json: metrics x100 rounded to one decimal, full precision under "raw".
json report_to_json(const KnowledgeGraph& kg, const EvaluationReport& report, bool include_details = true);
double display_percent(double fraction);

json calibration_to_json(const CalibrationResult& c);
CalibrationResult calibration_from_json(const json& j);

// Rule-level golden labels: {"head", "body", "label": "unreasonable"|"partial"|"reasonable"}.
std::map<Rule, Grade> read_rule_labels(std::istream& in, const KnowledgeGraph& kg);

// Annotated rule scores from an a_benchmark label export: complete labels
// grouped by rule, each rule scored with the mean of its path values.
std::vector<AnnotatedRuleScore> read_annotated_rules(std::istream& in, const KnowledgeGraph& kg);

// Annotation task carrying a path by surface strings.
AnnotationTask make_annotation_task(const KnowledgeGraph& kg, std::string task_id, Protocol protocol,
                                    const Path& path, RelationId head_relation, const Rule* rule = nullptr,
                                    std::string model = {});

json stats_to_json(const KnowledgeGraph& kg, const BenchmarkStats& stats);

}  // namespace kgi::io
