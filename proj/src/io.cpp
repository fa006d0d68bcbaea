#include "kgi/io.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "kgi/error.hpp"

namespace kgi::io {

namespace {

template <typename T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return field<T>(j, key);
}

json nullable(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void for_each_jsonl(std::istream& in, const std::function<void(const json&, std::size_t)>& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        try {
            fn(record, line_no);
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(e.what(), line_no);
        }
    }
}

json path_to_json(const KnowledgeGraph& kg, const Path& path) {
    json relations = json::array();
    json entities = json::array();
    for (const Step& s : path.steps) {
        relations.push_back(kg.relation_name(s.relation));
        entities.push_back(kg.entity_name(s.entity));
    }
    return json{{"relations", std::move(relations)}, {"entities", std::move(entities)}};
}

Path path_from_json(const KnowledgeGraph& kg, EntityId head, const json& j) {
    const auto relations = field<std::vector<std::string>>(j, "relations");
    auto entities = field<std::vector<std::string>>(j, "entities");
    if (entities.size() == relations.size() + 1) {
        if (kg.entity(entities.front()) != head) throw ValidationError("path does not start at the record head");
        entities.erase(entities.begin());
    }
    if (entities.size() != relations.size()) {
        throw ValidationError("path needs one entity per relation (optionally preceded by the head)");
    }
    Path p{head, {}};
    p.steps.reserve(relations.size());
    for (std::size_t i = 0; i < relations.size(); ++i) {
        p.steps.push_back({kg.relation(relations[i]), kg.entity(entities[i])});
    }
    return p;
}

json rule_to_json(const KnowledgeGraph& kg, const Rule& rule) {
    json body = json::array();
    for (RelationId r : rule.body) body.push_back(kg.relation_name(r));
    return json{{"head", kg.relation_name(rule.head)}, {"body", std::move(body)}};
}

Rule rule_from_json(const KnowledgeGraph& kg, const json& j) {
    Rule rule{kg.relation(field<std::string>(j, "head")), {}};
    for (const auto& name : field<std::vector<std::string>>(j, "body")) rule.body.push_back(kg.relation(name));
    if (rule.body.empty()) throw ValidationError("rule body is empty");
    return rule;
}

// ---- paths -------------------------------------------------------------------

void write_paths(std::ostream& out, const KnowledgeGraph& kg, std::span<const PathSet> sets) {
    for (const PathSet& set : sets) {
        json paths = json::array();
        for (const Path& p : set.paths) paths.push_back(path_to_json(kg, p));
        const json record{{"head", kg.entity_name(set.query.head)},
                          {"relation", kg.relation_name(set.query.relation)},
                          {"tail", kg.entity_name(set.query.tail)},
                          {"paths", std::move(paths)}};
        out << record.dump() << '\n';
    }
}

std::vector<PathSet> read_paths(std::istream& in, const KnowledgeGraph& kg) {
    std::vector<PathSet> sets;
    for_each_jsonl(in, [&](const json& j, std::size_t) {
        PathSet set;
        set.query = {kg.entity(field<std::string>(j, "head")), kg.relation(field<std::string>(j, "relation")),
                     kg.entity(field<std::string>(j, "tail"))};
        const json paths = j.contains("paths") ? j.at("paths") : json::array();
        if (!paths.is_array()) throw ValidationError("'paths' must be an array");
        for (const json& p : paths) set.paths.push_back(path_from_json(kg, set.query.head, p));
        std::sort(set.paths.begin(), set.paths.end());
        set.paths.erase(std::unique(set.paths.begin(), set.paths.end()), set.paths.end());
        sets.push_back(std::move(set));
    });
    return sets;
}

// ---- rules -------------------------------------------------------------------

void write_rules(std::ostream& out, const KnowledgeGraph& kg, const RuleSet& rules) {
    for (const auto& [rule, entry] : rules) {
        json j = rule_to_json(kg, rule);
        j["paths"] = entry.path_count;
        if (entry.stats) {
            const RuleStats& s = *entry.stats;
            j["confidence"] = nullable(s.confidence);
            j["head_coverage"] = nullable(s.head_coverage);
            j["support"] = s.support;
            j["body_count"] = s.body_count;
            j["head_count"] = s.head_count;
            j["approximate"] = s.approximate;
        } else {
            j["confidence"] = nullptr;
            j["head_coverage"] = nullptr;
            j["support"] = 0;
            j["body_count"] = 0;
        }
        out << j.dump() << '\n';
    }
}

RuleSet read_rules(std::istream& in, const KnowledgeGraph& kg, RuleProvenance provenance) {
    RuleSet rules(provenance);
    for_each_jsonl(in, [&](const json& j, std::size_t) {
        const Rule rule = rule_from_json(kg, j);
        if (rules.contains(rule)) throw ValidationError("duplicate rule");
        RuleEntry& entry = rules.add(rule, j.contains("paths") ? field<std::size_t>(j, "paths") : 0);
        if (j.contains("head_count")) {
            RuleStats s;
            s.support = field<std::uint64_t>(j, "support");
            s.body_count = field<std::uint64_t>(j, "body_count");
            s.head_count = field<std::uint64_t>(j, "head_count");
            s.confidence = optional_field<double>(j, "confidence");
            s.head_coverage = optional_field<double>(j, "head_coverage");
            s.approximate = j.value("approximate", false);
            entry.stats = s;
        } else if (const auto c = optional_field<double>(j, "confidence")) {
            // Externally mined rules may carry only a confidence.
            RuleStats s;
            s.confidence = c;
            s.head_coverage = optional_field<double>(j, "head_coverage");
            if (j.contains("support")) s.support = field<std::uint64_t>(j, "support");
            if (j.contains("body_count")) s.body_count = field<std::uint64_t>(j, "body_count");
            entry.stats = s;
        }
        if (entry.stats && entry.stats->confidence &&
            !(*entry.stats->confidence >= 0.0 && *entry.stats->confidence <= 1.0)) {
            throw ValidationError("confidence outside [0, 1]");
        }
    });
    return rules;
}

// ---- tiers -------------------------------------------------------------------

void write_tiers(std::ostream& out, const KnowledgeGraph& kg, const TierAssignment& tiers, const RuleSet& all_rules,
                 const RuleSet& mined) {
    for (const auto& [rule, tier] : tiers.tiers) {
        json j = rule_to_json(kg, rule);
        j["tier"] = tier_name(tier);
        j["confidence"] = nullable(mined.confidence(rule));
        const RuleEntry* entry = all_rules.find(rule);
        j["abstracted"] = entry != nullptr;
        j["paths"] = entry != nullptr ? entry->path_count : 0;
        out << j.dump() << '\n';
    }
}

TierAssignment read_tiers(std::istream& in, const KnowledgeGraph& kg) {
    TierAssignment tiers;
    for_each_jsonl(in, [&](const json& j, std::size_t) {
        const Rule rule = rule_from_json(kg, j);
        const auto tier = parse_tier_name(field<std::string>(j, "tier"));
        if (!tier) throw ValidationError("tier must be H, L or O");
        if (!tiers.tiers.emplace(rule, *tier).second) throw ValidationError("duplicate rule");
        if (j.value("abstracted", true)) {
            ++tiers.rule_counts[static_cast<std::size_t>(*tier)];
            tiers.path_counts[static_cast<std::size_t>(*tier)] += j.value("paths", std::size_t{0});
        }
    });
    return tiers;
}

// ---- benchmark ---------------------------------------------------------------

void write_benchmark(std::ostream& out, const KnowledgeGraph& kg, const Benchmark& benchmark) {
    const BenchmarkConfig& c = benchmark.config();
    const json header{{"kind", benchmark.kind() == BenchmarkKind::kA ? "A" : "R"},
                      {"L_score", c.l_score},
                      {"O_score", c.o_score},
                      {"h1", nullable(benchmark.h1())},
                      {"h2", nullable(benchmark.h2())},
                      {"max_hops", c.max_hops},
                      {"overlength_score", c.overlength_score}};
    out << header.dump() << '\n';
    for (const auto& [rule, entry] : benchmark.entries()) {
        json j = rule_to_json(kg, rule);
        j["score"] = entry.score;
        j["source"] = score_source_name(entry.source);
        out << j.dump() << '\n';
    }
}

Benchmark read_benchmark(std::istream& in, const KnowledgeGraph& kg) {
    std::optional<BenchmarkKind> kind;
    BenchmarkConfig config;
    std::optional<double> h1, h2;
    std::map<Rule, BenchmarkEntry> entries;
    for_each_jsonl(in, [&](const json& j, std::size_t line) {
        if (!kind) {
            if (line != 1 || !j.contains("kind")) throw ValidationError("first record must be the benchmark header");
            const auto k = field<std::string>(j, "kind");
            if (k != "A" && k != "R") throw ValidationError("benchmark kind must be A or R");
            kind = k == "A" ? BenchmarkKind::kA : BenchmarkKind::kR;
            config.l_score = optional_field<double>(j, "L_score").value_or(kDefaultLScore);
            config.o_score = optional_field<double>(j, "O_score").value_or(kDefaultOScore);
            config.max_hops = optional_field<int>(j, "max_hops").value_or(kDefaultMaxHops);
            config.overlength_score = optional_field<double>(j, "overlength_score").value_or(0.0);
            h1 = optional_field<double>(j, "h1");
            h2 = optional_field<double>(j, "h2");
            return;
        }
        const Rule rule = rule_from_json(kg, j);
        const double score = field<double>(j, "score");
        if (!(score >= 0.0 && score <= 1.0)) throw ValidationError("score outside [0, 1]");
        const auto source = field<std::string>(j, "source");
        ScoreSource src;
        if (source == "annotated") {
            src = ScoreSource::kAnnotated;
        } else if (source == "tier") {
            src = ScoreSource::kTier;
        } else if (source == "calibrated") {
            src = ScoreSource::kCalibrated;
        } else {
            throw ValidationError("unknown score source '" + source + "'");
        }
        if (!entries.emplace(rule, BenchmarkEntry{score, src}).second) throw ValidationError("duplicate rule");
    });
    if (!kind) throw ParseError("benchmark file has no header");
    return Benchmark(*kind, config, std::move(entries), h1, h2);
}

// ---- predictions -------------------------------------------------------------

void write_predictions(std::ostream& out, const KnowledgeGraph& kg, std::span<const PredictionRecord> records) {
    for (const PredictionRecord& r : records) {
        json ranking = json::array();
        for (const RankedPrediction& p : r.ranking) {
            ranking.push_back(json{{"tail", kg.entity_name(p.tail)}, {"score", p.score}});
        }
        json paths = json::array();
        for (const ClaimedPath& c : r.paths) {
            json p = path_to_json(kg, c.path);
            p["score"] = c.score;
            paths.push_back(std::move(p));
        }
        const json j{{"head", kg.entity_name(r.head)},
                     {"relation", kg.relation_name(r.relation)},
                     {"gold_tail", kg.entity_name(r.gold_tail)},
                     {"ranking", std::move(ranking)},
                     {"paths", std::move(paths)}};
        out << j.dump() << '\n';
    }
}

std::vector<PredictionRecord> read_predictions(std::istream& in, const KnowledgeGraph& kg) {
    std::vector<PredictionRecord> records;
    for_each_jsonl(in, [&](const json& j, std::size_t) {
        PredictionRecord r;
        r.head = kg.entity(field<std::string>(j, "head"));
        r.relation = kg.relation(field<std::string>(j, "relation"));
        r.gold_tail = kg.entity(field<std::string>(j, "gold_tail"));
        if (j.contains("ranking") && !j.at("ranking").is_null()) {
            for (const json& p : j.at("ranking")) {
                r.ranking.push_back({kg.entity(field<std::string>(p, "tail")), p.value("score", 0.0)});
            }
        }
        if (j.contains("paths") && !j.at("paths").is_null()) {
            for (const json& p : j.at("paths")) {
                r.paths.push_back({path_from_json(kg, r.head, p), p.value("score", 0.0)});
            }
        }
        records.push_back(std::move(r));
    });
    return records;
}

// ---- report ------------------------------------------------------------------

double display_percent(double fraction) { return std::round(fraction * 1000.0) / 10.0; }

json report_to_json(const KnowledgeGraph& kg, const EvaluationReport& report, bool include_details) {
    json display{{"PR", display_percent(report.pr)},
                 {"LI", report.li ? json(display_percent(*report.li)) : json(nullptr)},
                 {"GI", display_percent(report.gi)}};
    json raw{{"PR", report.pr}, {"LI", nullable(report.li)}, {"GI", report.gi}};
    if (report.link) {
        const LinkMetrics& m = *report.link;
        display["MRR"] = display_percent(m.mrr);
        display["Hits@1"] = display_percent(m.hits1);
        display["Hits@3"] = display_percent(m.hits3);
        display["Hits@10"] = display_percent(m.hits10);
        raw["MRR"] = m.mrr;
        raw["Hits@1"] = m.hits1;
        raw["Hits@3"] = m.hits3;
        raw["Hits@10"] = m.hits10;
    }
    json j{{"metrics", std::move(display)},
           {"raw", std::move(raw)},
           {"triples", report.triples},
           {"found", report.found},
           {"filtered", report.filtered},
           {"warnings", report.warnings}};
    if (include_details) {
        json details = json::array();
        for (const TripleDetail& d : report.details) {
            json row{{"head", kg.entity_name(d.triple.head)},
                     {"relation", kg.relation_name(d.triple.relation)},
                     {"tail", kg.entity_name(d.triple.tail)},
                     {"cnt", d.cnt},
                     {"rank", d.rank ? json(*d.rank) : json(nullptr)}};
            if (d.best_path) {
                row["best_path"] = path_to_json(kg, *d.best_path);
                row["model_score"] = d.model_score;
                row["path_score"] = d.path_score;
                row["overlength"] = d.overlength;
            }
            details.push_back(std::move(row));
        }
        j["details"] = std::move(details);
    }
    return j;
}

json calibration_to_json(const CalibrationResult& c) {
    json confusion = json::array();
    for (const auto& row : c.confusion) confusion.push_back(row);
    return json{{"h1", c.h1},
                {"h2", c.h2},
                {"micro_f1", c.micro_f1},
                {"accuracy", c.accuracy},
                {"labeled", c.labeled},
                {"confusion", std::move(confusion)},
                {"classes", json::array({"unreasonable", "partial", "reasonable"})}};
}

CalibrationResult calibration_from_json(const json& j) {
    CalibrationResult c;
    c.h1 = field<double>(j, "h1");
    c.h2 = field<double>(j, "h2");
    if (c.h1 > c.h2) throw ValidationError("calibration requires h1 <= h2");
    c.micro_f1 = j.value("micro_f1", 0.0);
    c.accuracy = j.value("accuracy", 0.0);
    c.labeled = j.value("labeled", std::size_t{0});
    if (j.contains("confusion")) {
        const auto rows = field<std::vector<std::vector<std::size_t>>>(j, "confusion");
        if (rows.size() != 3) throw ValidationError("confusion must be 3x3");
        for (std::size_t a = 0; a < 3; ++a) {
            if (rows[a].size() != 3) throw ValidationError("confusion must be 3x3");
            for (std::size_t b = 0; b < 3; ++b) c.confusion[a][b] = rows[a][b];
        }
    }
    return c;
}

std::map<Rule, Grade> read_rule_labels(std::istream& in, const KnowledgeGraph& kg) {
    std::map<Rule, Grade> labels;
    for_each_jsonl(in, [&](const json& j, std::size_t) {
        const Rule rule = rule_from_json(kg, j);
        const auto g = parse_grade_name(field<std::string>(j, "label"));
        if (!g) throw ValidationError("label must be unreasonable, partial or reasonable");
        if (!labels.emplace(rule, *g).second) throw ValidationError("duplicate rule label");
    });
    return labels;
}

std::vector<AnnotatedRuleScore> read_annotated_rules(std::istream& in, const KnowledgeGraph& kg) {
    std::map<Rule, AnnotatedRuleScore> by_rule;
    for_each_jsonl(in, [&](const json& j, std::size_t) {
        if (field<std::string>(j, "protocol") != "a_benchmark") return;
        if (field<std::string>(j, "status") != "complete") return;
        if (!j.contains("rule")) throw ValidationError("a_benchmark label lacks its rule");
        const Rule rule = rule_from_json(kg, j.at("rule"));
        const json& path = j.at("path");
        const auto entities = field<std::vector<std::string>>(path, "entities");
        if (entities.empty()) throw ValidationError("label path has no entities");
        const Path p = path_from_json(kg, kg.entity(entities.front()), path);
        const double value = field<double>(j, "value");
        AnnotatedRuleScore& a = by_rule[rule];
        a.rule = rule;
        a.sampled_paths.push_back(p);
        a.path_scores.push_back(value);
    });
    std::vector<AnnotatedRuleScore> out;
    out.reserve(by_rule.size());
    for (auto& [rule, a] : by_rule) {
        a.score = aggregate_rule_score(a.path_scores);
        out.push_back(std::move(a));
    }
    return out;
}

AnnotationTask make_annotation_task(const KnowledgeGraph& kg, std::string task_id, Protocol protocol,
                                    const Path& path, RelationId head_relation, const Rule* rule, std::string model) {
    AnnotationTask t;
    t.task_id = std::move(task_id);
    t.protocol = protocol;
    t.required_annotators = default_required_annotators(protocol);
    t.path.head_relation = kg.relation_name(head_relation);
    t.path.entities.push_back(kg.entity_name(path.head));
    for (const Step& s : path.steps) {
        t.path.relations.push_back(kg.relation_name(s.relation));
        t.path.entities.push_back(kg.entity_name(s.entity));
    }
    if (rule != nullptr) {
        RulePayload r{kg.relation_name(rule->head), {}};
        for (RelationId b : rule->body) r.body.push_back(kg.relation_name(b));
        t.rule = std::move(r);
    }
    t.model = std::move(model);
    return t;
}

json stats_to_json(const KnowledgeGraph& kg, const BenchmarkStats& stats) {
    auto means = [&](const std::vector<RelationMean>& list) {
        json arr = json::array();
        for (const RelationMean& m : list) {
            arr.push_back(json{{"relation", kg.relation_name(m.relation)}, {"mean", m.mean}, {"rules", m.rules}});
        }
        return arr;
    };
    json counts = json::array();
    for (const auto& [paths, rules] : stats.sampled_path_counts) {
        counts.push_back(json{{"sampled_paths", paths}, {"rules", rules}});
    }
    return json{{"score_histogram", stats.score_histogram},
                {"relation_means", means(stats.relation_means)},
                {"top_relations", means(stats.top)},
                {"bottom_relations", means(stats.bottom)},
                {"confidence_score_joint", stats.confidence_score_joint},
                {"sampled_path_counts", std::move(counts)}};
}

}  // namespace kgi::io
