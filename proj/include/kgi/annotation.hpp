#pragma once

// Annotation task store: dispenses path-grading tasks to annotators, records
// judgments in an append-only log and aggregates them per protocol.
//
//   a_benchmark: complete once required_annotators (10) judgments exist;
//                value = mean grade.
//   golden:      decided once required_annotators (3) judgments exist;
//                complete with the majority class when at least two agree,
//                discarded when all three differ.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgi/benchmark.hpp"
#include "kgi/kg_store.hpp"
#include "kgi/random.hpp"
#include "json.hpp"

namespace kgi {

enum class Protocol : std::uint8_t { kABenchmark, kGolden };

std::string_view protocol_name(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view name);
int default_required_annotators(Protocol p);

// A path by surface strings: entities has one more element than relations.
struct PathPayload {
    std::string head_relation;
    std::vector<std::string> entities;
    std::vector<std::string> relations;
};

struct RulePayload {
    std::string head;
    std::vector<std::string> body;
};

struct AnnotationTask {
    std::string task_id;
    Protocol protocol = Protocol::kABenchmark;
    int required_annotators = 10;
    std::optional<RulePayload> rule;
    PathPayload path;
    // Source model for golden tasks. Never shown to annotators.
    std::string model;
};

struct Judgment {
    std::string task_id;
    std::string annotator_id;
    Grade grade = Grade::kUnreasonable;
    std::int64_t timestamp_ms = 0;
};

enum class LabelStatus : std::uint8_t { kPending, kComplete, kDiscarded };

std::string_view label_status_name(LabelStatus s);

struct AggregatedLabel {
    std::string task_id;
    LabelStatus status = LabelStatus::kPending;
    std::optional<double> value;       // a_benchmark mean, or the golden class value
    std::optional<Grade> majority;     // golden only
    std::size_t judgments = 0;
};

// Pure fold over the judgments of one task.
AggregatedLabel aggregate_label(const AnnotationTask& task, std::span<const Judgment> judgments);

// JSON forms used by the log, the HTTP API and label export.
nlohmann::json task_to_json(const AnnotationTask& task);
AnnotationTask task_from_json(const nlohmann::json& j);  // throws ValidationError
// What an annotator sees: node/edge lists only, no protocol or model.
nlohmann::json task_payload(const AnnotationTask& task);
nlohmann::json judgment_to_json(const Judgment& j);
Judgment judgment_from_json(const nlohmann::json& j);  // throws ValidationError
nlohmann::json label_to_json(const AnnotationTask& task, const AggregatedLabel& label);

struct StoreOptions {
    // Empty: in-memory only. Otherwise holds snapshot.jsonl and log.jsonl.
    std::filesystem::path directory;
    std::uint64_t seed = 0;
    // Write a snapshot and truncate the log every this many appended records (0 = never).
    std::size_t snapshot_every = 10000;
    // Validates path surface strings when set.
    const KnowledgeGraph* kg = nullptr;
    std::function<std::int64_t()> clock;  // ms since epoch; defaults to system clock
};

struct Progress {
    std::map<std::string, std::map<std::string, std::size_t>> by_protocol;  // protocol -> status -> count
    std::size_t tasks = 0;
    std::size_t judgments = 0;
};

class AnnotationStore {
public:
    explicit AnnotationStore(StoreOptions options = {});

    AnnotationStore(const AnnotationStore&) = delete;
    AnnotationStore& operator=(const AnnotationStore&) = delete;

    // All-or-nothing. ConflictError if any id exists or repeats in the batch.
    std::size_t create_tasks(std::span<const AnnotationTask> tasks);

    // A pending task this annotator has not judged, uniformly at random.
    std::optional<AnnotationTask> next_task(const std::string& annotator_id);

    // NotFoundError, ConflictError (repeat judgment or task already full).
    AggregatedLabel submit_judgment(const std::string& task_id, const std::string& annotator_id, Grade grade);

    AggregatedLabel label(const std::string& task_id) const;
    // Complete labels (and discarded ones when asked) in task_id order.
    std::vector<nlohmann::json> export_labels(Protocol protocol, bool include_discarded = false) const;
    Progress progress() const;

    std::size_t task_count() const;
    std::vector<Judgment> judgments(const std::string& task_id) const;

    // Compacts log into snapshot. No-op for in-memory stores.
    void snapshot();

private:
    struct TaskState {
        AnnotationTask task;
        std::vector<Judgment> judgments;
        AggregatedLabel label;
    };

    void replay();
    void replay_file(const std::filesystem::path& file);
    void apply_task(AnnotationTask task);
    bool apply_judgment(const Judgment& j);
    void append(const nlohmann::json& record);
    void snapshot_locked();
    void maybe_snapshot_locked();
    void validate(const AnnotationTask& task) const;

    StoreOptions options_;
    mutable std::mutex mu_;
    std::map<std::string, TaskState> tasks_;
    std::vector<std::string> order_;  // creation order, for seeded selection
    Rng rng_;
    std::ofstream log_;
    std::size_t appended_since_snapshot_ = 0;
};

}  // namespace kgi
