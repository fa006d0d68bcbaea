#include "kgi/annotation.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "kgi/error.hpp"

namespace kgi {

using nlohmann::json;

std::string_view protocol_name(Protocol p) { return p == Protocol::kGolden ? "golden" : "a_benchmark"; }

std::optional<Protocol> parse_protocol(std::string_view name) {
    if (name == "a_benchmark") return Protocol::kABenchmark;
    if (name == "golden") return Protocol::kGolden;
    return std::nullopt;
}

int default_required_annotators(Protocol p) { return p == Protocol::kGolden ? 3 : 10; }

std::string_view label_status_name(LabelStatus s) {
    switch (s) {
        case LabelStatus::kPending: return "pending";
        case LabelStatus::kComplete: return "complete";
        case LabelStatus::kDiscarded: return "discarded";
    }
    return "pending";
}

AggregatedLabel aggregate_label(const AnnotationTask& task, std::span<const Judgment> judgments) {
    AggregatedLabel label;
    label.task_id = task.task_id;
    label.judgments = judgments.size();
    if (judgments.size() < static_cast<std::size_t>(task.required_annotators)) return label;

    std::vector<Grade> grades;
    grades.reserve(judgments.size());
    for (const Judgment& j : judgments) grades.push_back(j.grade);

    if (task.protocol == Protocol::kABenchmark) {
        label.status = LabelStatus::kComplete;
        label.value = aggregate_rule_score(grades);
        return label;
    }

    std::array<std::size_t, 3> counts{};
    for (Grade g : grades) ++counts[static_cast<std::size_t>(g)];
    const auto top = std::max_element(counts.begin(), counts.end());
    const bool unique_top = std::count(counts.begin(), counts.end(), *top) == 1;
    if (*top >= 2 && unique_top) {
        label.status = LabelStatus::kComplete;
        label.majority = static_cast<Grade>(top - counts.begin());
        label.value = grade_value(*label.majority);
    } else {
        label.status = LabelStatus::kDiscarded;
    }
    return label;
}

// ---- JSON ------------------------------------------------------------------

namespace {

template <typename T>
T require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("field '") + key + "' has the wrong type");
    }
}

json path_json(const PathPayload& p) {
    return json{{"head_relation", p.head_relation}, {"entities", p.entities}, {"relations", p.relations}};
}

}  // namespace

json task_to_json(const AnnotationTask& task) {
    json j{{"task_id", task.task_id},
           {"protocol", protocol_name(task.protocol)},
           {"required_annotators", task.required_annotators},
           {"path", path_json(task.path)}};
    if (task.rule) j["rule"] = json{{"head", task.rule->head}, {"body", task.rule->body}};
    if (!task.model.empty()) j["model"] = task.model;
    return j;
}

AnnotationTask task_from_json(const json& j) {
    AnnotationTask t;
    t.task_id = require<std::string>(j, "task_id");
    const auto protocol = parse_protocol(require<std::string>(j, "protocol"));
    if (!protocol) throw ValidationError("protocol must be 'a_benchmark' or 'golden'");
    t.protocol = *protocol;
    t.required_annotators =
        j.contains("required_annotators") ? require<int>(j, "required_annotators") : default_required_annotators(t.protocol);
    const json& path = j.contains("path") ? j.at("path") : json();
    t.path.head_relation = require<std::string>(path, "head_relation");
    t.path.entities = require<std::vector<std::string>>(path, "entities");
    t.path.relations = require<std::vector<std::string>>(path, "relations");
    if (j.contains("rule") && !j.at("rule").is_null()) {
        const json& r = j.at("rule");
        t.rule = RulePayload{require<std::string>(r, "head"), require<std::vector<std::string>>(r, "body")};
    }
    if (j.contains("model")) t.model = require<std::string>(j, "model");
    return t;
}

json task_payload(const AnnotationTask& task) {
    json nodes = json::array();
    for (std::size_t i = 0; i < task.path.entities.size(); ++i) {
        nodes.push_back(json{{"id", i}, {"label", task.path.entities[i]}});
    }
    json edges = json::array();
    for (std::size_t i = 0; i < task.path.relations.size(); ++i) {
        edges.push_back(json{{"source", i}, {"target", i + 1}, {"label", task.path.relations[i]}});
    }
    const std::size_t last = task.path.entities.empty() ? 0 : task.path.entities.size() - 1;
    return json{{"task_id", task.task_id},
                {"nodes", std::move(nodes)},
                {"edges", std::move(edges)},
                {"head", json{{"source", 0}, {"target", last}, {"label", task.path.head_relation}}},
                {"options", json::array({"reasonable", "partial", "unreasonable"})}};
}

json judgment_to_json(const Judgment& j) {
    return json{{"task_id", j.task_id},
                {"annotator", j.annotator_id},
                {"grade", grade_value(j.grade)},
                {"timestamp_ms", j.timestamp_ms}};
}

Judgment judgment_from_json(const json& j) {
    Judgment out;
    out.task_id = require<std::string>(j, "task_id");
    out.annotator_id = require<std::string>(j, "annotator");
    if (out.annotator_id.empty()) throw ValidationError("annotator id must not be empty");
    const json& g = j.contains("grade") ? j.at("grade") : json();
    std::optional<Grade> grade;
    if (g.is_number()) {
        grade = grade_from_value(g.get<double>());
    } else if (g.is_string()) {
        grade = parse_grade_name(g.get<std::string>());
    }
    if (!grade) throw ValidationError("grade must be one of 0, 0.5, 1");
    out.grade = *grade;
    if (j.contains("timestamp_ms")) out.timestamp_ms = require<std::int64_t>(j, "timestamp_ms");
    return out;
}

json label_to_json(const AnnotationTask& task, const AggregatedLabel& label) {
    json j = task_to_json(task);
    j["status"] = label_status_name(label.status);
    j["judgments"] = label.judgments;
    j["value"] = label.value ? json(*label.value) : json(nullptr);
    if (label.majority) j["class"] = grade_name(*label.majority);
    return j;
}

// ---- store -----------------------------------------------------------------

namespace {

std::int64_t system_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

AnnotationStore::AnnotationStore(StoreOptions options) : options_(std::move(options)), rng_(options_.seed) {
    if (!options_.clock) options_.clock = system_ms;
    if (!options_.directory.empty()) {
        std::filesystem::create_directories(options_.directory);
        replay();
        log_.open(options_.directory / "log.jsonl", std::ios::app);
        if (!log_) throw FileError("cannot open annotation log in " + options_.directory.string());
    }
}

void AnnotationStore::replay() {
    replay_file(options_.directory / "snapshot.jsonl");
    replay_file(options_.directory / "log.jsonl");
}

void AnnotationStore::replay_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) return;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception&) {
            // A torn final write is the only expected damage; stop there.
            break;
        }
        const std::string type = record.value("type", "");
        try {
            if (type == "task") {
                AnnotationTask task = task_from_json(record.at("task"));
                if (!tasks_.contains(task.task_id)) apply_task(std::move(task));
            } else if (type == "judgment") {
                apply_judgment(judgment_from_json(record.at("judgment")));
            }
        } catch (const Error& e) {
            throw ParseError(file.string() + ": " + e.what(), line_no);
        }
    }
}

void AnnotationStore::apply_task(AnnotationTask task) {
    const std::string id = task.task_id;
    TaskState state{std::move(task), {}, {}};
    state.label = aggregate_label(state.task, state.judgments);
    tasks_.emplace(id, std::move(state));
    order_.push_back(id);
}

bool AnnotationStore::apply_judgment(const Judgment& j) {
    const auto it = tasks_.find(j.task_id);
    if (it == tasks_.end()) return false;
    TaskState& state = it->second;
    for (const Judgment& existing : state.judgments) {
        if (existing.annotator_id == j.annotator_id) return false;
    }
    if (state.judgments.size() >= static_cast<std::size_t>(state.task.required_annotators)) return false;
    state.judgments.push_back(j);
    state.label = aggregate_label(state.task, state.judgments);
    return true;
}

void AnnotationStore::append(const json& record) {
    if (!log_.is_open()) return;
    log_ << record.dump() << '\n';
    log_.flush();
    if (!log_) throw FileError("failed to append to annotation log");
    ++appended_since_snapshot_;
}

// Called after the appended records are applied, so the snapshot never
// misses a record the truncated log held.
void AnnotationStore::maybe_snapshot_locked() {
    if (options_.snapshot_every > 0 && appended_since_snapshot_ >= options_.snapshot_every) snapshot_locked();
}

void AnnotationStore::validate(const AnnotationTask& task) const {
    if (task.task_id.empty()) throw ValidationError("task_id must not be empty");
    if (task.required_annotators < 1) throw ValidationError("required_annotators must be >= 1");
    if (task.path.relations.empty()) throw ValidationError("task path has no steps");
    if (task.path.entities.size() != task.path.relations.size() + 1) {
        throw ValidationError("task path needs exactly one more entity than relations");
    }
    if (task.path.head_relation.empty()) throw ValidationError("task path needs a head relation");
    if (options_.kg == nullptr) return;
    for (const auto& e : task.path.entities) {
        if (!options_.kg->find_entity(e)) throw ValidationError("task " + task.task_id + ": unknown entity " + e);
    }
    for (const auto& r : task.path.relations) {
        if (!options_.kg->find_relation(r)) throw ValidationError("task " + task.task_id + ": unknown relation " + r);
    }
    if (!options_.kg->find_relation(task.path.head_relation)) {
        throw ValidationError("task " + task.task_id + ": unknown relation " + task.path.head_relation);
    }
}

std::size_t AnnotationStore::create_tasks(std::span<const AnnotationTask> tasks) {
    std::lock_guard lock(mu_);
    std::set<std::string> batch;
    for (const AnnotationTask& t : tasks) {
        validate(t);
        if (tasks_.contains(t.task_id) || !batch.insert(t.task_id).second) {
            throw ConflictError("task id already exists: " + t.task_id);
        }
    }
    for (const AnnotationTask& t : tasks) {
        append(json{{"type", "task"}, {"task", task_to_json(t)}});
        apply_task(t);
    }
    maybe_snapshot_locked();
    return tasks.size();
}

std::optional<AnnotationTask> AnnotationStore::next_task(const std::string& annotator_id) {
    std::lock_guard lock(mu_);
    std::vector<const TaskState*> eligible;
    for (const std::string& id : order_) {
        const TaskState& s = tasks_.at(id);
        if (s.judgments.size() >= static_cast<std::size_t>(s.task.required_annotators)) continue;
        const bool judged = std::any_of(s.judgments.begin(), s.judgments.end(),
                                        [&](const Judgment& j) { return j.annotator_id == annotator_id; });
        if (!judged) eligible.push_back(&s);
    }
    if (eligible.empty()) return std::nullopt;
    return eligible[rng_.below(eligible.size())]->task;
}

AggregatedLabel AnnotationStore::submit_judgment(const std::string& task_id, const std::string& annotator_id,
                                                 Grade grade) {
    std::lock_guard lock(mu_);
    if (annotator_id.empty()) throw ValidationError("annotator id must not be empty");
    const auto it = tasks_.find(task_id);
    if (it == tasks_.end()) throw NotFoundError("unknown task: " + task_id);
    const TaskState& s = it->second;
    for (const Judgment& j : s.judgments) {
        if (j.annotator_id == annotator_id) throw ConflictError("annotator already judged task " + task_id);
    }
    if (s.judgments.size() >= static_cast<std::size_t>(s.task.required_annotators)) {
        throw ConflictError("task " + task_id + " already has all required judgments");
    }
    const Judgment j{task_id, annotator_id, grade, options_.clock()};
    append(json{{"type", "judgment"}, {"judgment", judgment_to_json(j)}});
    apply_judgment(j);
    maybe_snapshot_locked();
    return it->second.label;
}

AggregatedLabel AnnotationStore::label(const std::string& task_id) const {
    std::lock_guard lock(mu_);
    const auto it = tasks_.find(task_id);
    if (it == tasks_.end()) throw NotFoundError("unknown task: " + task_id);
    return it->second.label;
}

std::vector<json> AnnotationStore::export_labels(Protocol protocol, bool include_discarded) const {
    std::lock_guard lock(mu_);
    std::vector<json> out;
    for (const auto& [id, s] : tasks_) {
        if (s.task.protocol != protocol) continue;
        if (s.label.status == LabelStatus::kComplete ||
            (include_discarded && s.label.status == LabelStatus::kDiscarded)) {
            out.push_back(label_to_json(s.task, s.label));
        }
    }
    return out;
}

Progress AnnotationStore::progress() const {
    std::lock_guard lock(mu_);
    Progress p;
    for (Protocol proto : {Protocol::kABenchmark, Protocol::kGolden}) {
        auto& counts = p.by_protocol[std::string(protocol_name(proto))];
        for (LabelStatus st : {LabelStatus::kPending, LabelStatus::kComplete, LabelStatus::kDiscarded}) {
            counts[std::string(label_status_name(st))] = 0;
        }
    }
    for (const auto& [id, s] : tasks_) {
        ++p.by_protocol[std::string(protocol_name(s.task.protocol))][std::string(label_status_name(s.label.status))];
        p.judgments += s.judgments.size();
    }
    p.tasks = tasks_.size();
    return p;
}

std::size_t AnnotationStore::task_count() const {
    std::lock_guard lock(mu_);
    return tasks_.size();
}

std::vector<Judgment> AnnotationStore::judgments(const std::string& task_id) const {
    std::lock_guard lock(mu_);
    const auto it = tasks_.find(task_id);
    if (it == tasks_.end()) throw NotFoundError("unknown task: " + task_id);
    return it->second.judgments;
}

void AnnotationStore::snapshot() {
    std::lock_guard lock(mu_);
    snapshot_locked();
}

void AnnotationStore::snapshot_locked() {
    if (options_.directory.empty()) return;
    const auto tmp = options_.directory / "snapshot.jsonl.tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw FileError("cannot write annotation snapshot");
        for (const std::string& id : order_) {
            out << json{{"type", "task"}, {"task", task_to_json(tasks_.at(id).task)}}.dump() << '\n';
        }
        for (const std::string& id : order_) {
            for (const Judgment& j : tasks_.at(id).judgments) {
                out << json{{"type", "judgment"}, {"judgment", judgment_to_json(j)}}.dump() << '\n';
            }
        }
        if (!out) throw FileError("cannot write annotation snapshot");
    }
    std::filesystem::rename(tmp, options_.directory / "snapshot.jsonl");
    // Replay skips records already present, so a crash before this
    // truncation only leaves redundant log lines.
    log_.close();
    log_.open(options_.directory / "log.jsonl", std::ios::trunc);
    appended_since_snapshot_ = 0;
}

}  // namespace kgi
