#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgi/annotation.hpp"
#include "kgi/annotation_server.hpp"
#include "kgi/benchmark.hpp"
#include "kgi/error.hpp"
#include "kgi/evaluator.hpp"
#include "kgi/io.hpp"
#include "kgi/kg_store.hpp"
#include "kgi/parallel.hpp"
#include "kgi/path_engine.hpp"
#include "kgi/rule_engine.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace kgi;

namespace {

struct Options {
    std::string kg, train, valid, test;
    int max_hops = kDefaultMaxHops;
    double min_confidence = 0.001;
    double min_hc = 0.001;
    double h_threshold = kDefaultTierThreshold;
    double l_score = kDefaultLScore;
    double o_score = kDefaultOScore;
    std::size_t per_rule = 10;
    std::uint64_t seed = 0;
    std::string benchmark;
    std::vector<std::string> predictions;
    std::string out;
    unsigned threads = 0;

    // stage-specific
    std::vector<double> ratios{0.9, 0.05, 0.05};
    std::string queries = "test";
    bool keep_query_edge = false;
    std::string paths, rules, mined, tiers, tiers_out, annotations, calibration, labels, golden_labels;
    std::uint64_t pair_cap = 0;
    std::string protocol = "a_benchmark";
    std::size_t per_model = 300;
    std::string kind;
    std::size_t top_k = 100;
    bool filtered = false;
    bool no_details = false;
    std::string predictions_out;
    std::vector<std::string> reports;
    std::size_t min_rules = 10;
    std::size_t list_size = 20;
    std::string store, host = "127.0.0.1", tasks;
    int port = 8080;
    std::size_t snapshot_every = 10000;
};

// ---- files ---------------------------------------------------------------

std::ifstream open_in(const std::string& path) {
    if (path.empty()) throw ValidationError("missing input path");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open input file: " + path);
    return in;
}

json read_json_file(const std::string& path) {
    std::ifstream in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string require(const std::string& value, const char* flag) {
    if (value.empty()) throw ValidationError(std::string("missing required option ") + flag);
    return value;
}

// Writes through a temp file and renames, so a failed run never leaves a
// half-written artifact. Empty path or "-" means stdout.
template <typename Fn>
void write_out(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FileError("cannot open output file: " + path);
        fn(out);
        if (!out) throw FileError("write failed: " + path);
    }
    fs::rename(tmp, target);
}

void write_json(const std::string& path, const json& j) {
    write_out(path, [&](std::ostream& o) { o << j.dump(2) << "\n"; });
}

void warn(const std::string& message) { std::cerr << json{{"warning", message}}.dump() << "\n"; }

// name=path pairs for per-model inputs.
std::vector<std::pair<std::string, std::string>> named_files(const std::vector<std::string>& specs, const char* flag) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const std::string& s : specs) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
            throw ValidationError(std::string(flag) + " expects model=path, got '" + s + "'");
        }
        out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
}

// ---- KG ------------------------------------------------------------------

KnowledgeGraph load_raw_kg(const Options& o) {
    if (!o.train.empty() || !o.valid.empty() || !o.test.empty()) {
        return load_kg_split_files(require(o.train, "--train"), require(o.valid, "--valid"),
                                   require(o.test, "--test"));
    }
    if (o.kg.empty()) throw ValidationError("no knowledge graph given (--kg or --train/--valid/--test)");
    if (fs::is_directory(o.kg)) {
        const fs::path d(o.kg);
        return load_kg_split_files((d / "train.tsv").string(), (d / "valid.tsv").string(),
                                   (d / "test.tsv").string());
    }
    return load_kg_file(o.kg);
}

KnowledgeGraph load_graph(const Options& o) { return augment_inverses(load_raw_kg(o)); }

// ---- subcommands ---------------------------------------------------------

void cmd_import(const Options& o) {
    const KnowledgeGraph kg = load_raw_kg(o);
    const LoadReport& r = kg.load_report();
    write_json(o.out, json{{"entities", kg.entity_count()},
                           {"relations", kg.relation_count()},
                           {"triples", kg.triple_count()},
                           {"train", kg.train().size()},
                           {"valid", kg.valid().size()},
                           {"test", kg.test().size()},
                           {"lines", r.lines},
                           {"duplicates", r.duplicates},
                           {"split", kg.is_split()}});
}

void cmd_split(const Options& o) {
    if (o.ratios.size() != 3) throw ValidationError("--ratios expects train,valid,test");
    const KnowledgeGraph kg = load_kg_file(require(o.kg, "--kg"));
    const KnowledgeGraph s = split_kg(kg, {o.ratios[0], o.ratios[1], o.ratios[2]}, o.seed);
    const fs::path dir(require(o.out, "--out"));
    for (auto [name, part] : {std::pair{"train.tsv", Partition::kTrain}, std::pair{"valid.tsv", Partition::kValid},
                              std::pair{"test.tsv", Partition::kTest}}) {
        write_out((dir / name).string(), [&](std::ostream& out) { write_triples_tsv(out, s, s.partition(part)); });
    }
    std::cout << json{{"train", s.train().size()}, {"valid", s.valid().size()}, {"test", s.test().size()}}.dump()
              << "\n";
}

std::span<const Triple> query_partition(const KnowledgeGraph& kg, const std::string& name) {
    if (name == "test") return kg.test();
    if (name == "valid") return kg.valid();
    if (name == "train") return kg.train();
    throw ValidationError("--queries must be train, valid or test");
}

void cmd_enumerate(const Options& o) {
    const KnowledgeGraph kg = load_graph(o);
    const auto queries = query_partition(kg, o.queries);
    if (queries.empty()) warn("no " + o.queries + " triples to enumerate");
    CollectOptions co;
    co.enumerate.max_hops = o.max_hops;
    co.enumerate.exclude_query_edge = !o.keep_query_edge;
    co.threads = o.threads;
    const PathCollection pc = collect_all_paths(kg, queries, co);
    for (const QueryFailure& f : pc.failures) warn("query " + std::to_string(f.index) + ": " + f.message);
    write_out(o.out, [&](std::ostream& out) { io::write_paths(out, kg, pc.sets); });
}

std::vector<PathSet> load_paths(const KnowledgeGraph& kg, const std::string& path) {
    std::ifstream in = open_in(path);
    return io::read_paths(in, kg);
}

RuleSet load_rules(const KnowledgeGraph& kg, const std::string& path,
                   RuleProvenance prov = RuleProvenance::kAbstracted) {
    std::ifstream in = open_in(path);
    return io::read_rules(in, kg, prov);
}

void cmd_abstract(const Options& o) {
    const KnowledgeGraph kg = load_graph(o);
    const auto sets = load_paths(kg, require(o.paths, "--paths"));
    const RuleSet rules = abstract_all(sets);
    write_out(o.out, [&](std::ostream& out) { io::write_rules(out, kg, rules); });
}

void cmd_stats(const Options& o) {
    const KnowledgeGraph kg = load_graph(o);
    RuleSet rules = load_rules(kg, require(o.rules, "--rules"));
    compute_all_stats(kg, rules, {o.pair_cap, o.seed}, o.threads);
    write_out(o.out, [&](std::ostream& out) { io::write_rules(out, kg, rules); });
}

void cmd_prune(const Options& o) {
    const KnowledgeGraph kg = load_graph(o);
    RuleSet all = load_rules(kg, require(o.rules, "--rules"));
    compute_all_stats(kg, all, {o.pair_cap, o.seed}, o.threads);
    MiningOptions mo;
    mo.min_confidence = o.min_confidence;
    mo.min_head_coverage = o.min_hc;
    mo.stats = {o.pair_cap, o.seed};
    mo.threads = o.threads;
    const RuleSet mined = mine_ruleset(kg, all, mo);
    write_out(o.out, [&](std::ostream& out) { io::write_rules(out, kg, mined); });
    if (!o.tiers_out.empty()) {
        const TierAssignment tiers = classify_rules(all, mined, o.h_threshold);
        for (const std::string& w : tiers.warnings) warn(w);
        write_out(o.tiers_out, [&](std::ostream& out) { io::write_tiers(out, kg, tiers, all, mined); });
    }
}

TierAssignment load_tiers(const KnowledgeGraph& kg, const std::string& path) {
    std::ifstream in = open_in(path);
    return io::read_tiers(in, kg);
}

std::vector<PredictionRecord> load_predictions(const KnowledgeGraph& kg, const std::string& path) {
    std::ifstream in = open_in(path);
    return io::read_predictions(in, kg);
}

std::string numbered(char prefix, std::size_t i) {
    std::ostringstream s;
    s << prefix << std::setw(6) << std::setfill('0') << i;
    return s.str();
}

void cmd_sample(const Options& o) {
    const KnowledgeGraph kg = load_graph(o);
    const auto proto = parse_protocol(o.protocol);
    if (!proto) throw ValidationError("--protocol must be a_benchmark or golden");
    json tasks = json::array();
    if (*proto == Protocol::kABenchmark) {
        const auto sets = load_paths(kg, require(o.paths, "--paths"));
        const TierAssignment tiers = load_tiers(kg, require(o.tiers, "--tiers"));
        std::vector<Rule> h_rules;
        for (const auto& [rule, tier] : tiers.tiers) {
            if (tier == RuleTier::kH) h_rules.push_back(rule);
        }
        const AnnotationSampling s = sample_annotation_tasks(sets, h_rules, o.per_rule, o.seed);
        for (const std::string& w : s.warnings) warn(w);
        std::size_t n = 0;
        for (const AnnotationSample& sample : s.samples) {
            for (const Path& p : sample.paths) {
                tasks.push_back(task_to_json(
                    io::make_annotation_task(kg, numbered('a', ++n), *proto, p, sample.rule.head, &sample.rule)));
            }
        }
    } else {
        if (o.predictions.empty()) throw ValidationError("golden sampling needs --predictions model=file");
        std::vector<ModelPredictions> models;
        for (const auto& [name, file] : named_files(o.predictions, "--predictions")) {
            models.push_back({name, load_predictions(kg, file)});
        }
        GoldenSampleOptions go;
        go.per_model = o.per_model;
        go.seed = o.seed;
        const GoldenSampling s = golden_sample(kg, models, go);
        for (const std::string& w : s.warnings) warn(w);
        std::size_t n = 0;
        for (const GoldenTask& t : s.tasks) {
            tasks.push_back(task_to_json(
                io::make_annotation_task(kg, numbered('g', ++n), *proto, t.path, t.triple.relation, nullptr, t.model)));
        }
    }
    write_json(o.out, tasks);
}

BenchmarkConfig benchmark_config(const Options& o) {
    BenchmarkConfig c;
    c.l_score = o.l_score;
    c.o_score = o.o_score;
    c.max_hops = o.max_hops;
    return c;
}

RuleSet load_mined(const KnowledgeGraph& kg, const std::string& path) {
    RuleSet mined = load_rules(kg, path, RuleProvenance::kMined);
    for (const auto& [rule, entry] : mined) {
        if (!entry.stats || !entry.stats->confidence) {
            throw ValidationError("mined rule without confidence in " + path);
        }
    }
    return mined;
}

void cmd_build_benchmark(const Options& o) {
    const KnowledgeGraph kg = load_graph(o);
    std::optional<Benchmark> b;
    if (o.kind == "A") {
        if (o.annotations.empty()) throw ValidationError("--kind A requires --annotations");
        const TierAssignment tiers = load_tiers(kg, require(o.tiers, "--tiers"));
        std::ifstream in = open_in(o.annotations);
        const auto annotated = io::read_annotated_rules(in, kg);
        b.emplace(build_a_benchmark(annotated, tiers, benchmark_config(o)));
    } else if (o.kind == "R") {
        const RuleSet mined = load_mined(kg, require(o.mined, "--mined"));
        const CalibrationResult cal = io::calibration_from_json(read_json_file(require(o.calibration, "--calibration")));
        b.emplace(build_r_benchmark(mined, cal, benchmark_config(o)));
    } else {
        throw ValidationError("--kind must be A or R");
    }
    write_out(o.out, [&](std::ostream& out) { io::write_benchmark(out, kg, *b); });
}

void cmd_calibrate(const Options& o) {
    const KnowledgeGraph kg = load_graph(o);
    const RuleSet mined = load_mined(kg, require(o.mined, "--mined"));
    std::ifstream in = open_in(require(o.labels, "--labels"));
    const auto labels = io::read_rule_labels(in, kg);
    write_json(o.out, io::calibration_to_json(calibrate_thresholds(mined, labels)));
}

Benchmark load_benchmark(const KnowledgeGraph& kg, const std::string& path) {
    std::ifstream in = open_in(path);
    return io::read_benchmark(in, kg);
}

// Max-aggregation predictions from a mined rule set. The gold tail's witness
// path is claimed with the confidence of its best rule.
std::vector<PredictionRecord> rule_model_predictions(const KnowledgeGraph& kg, const RuleSet& mined,
                                                     std::size_t top_k, unsigned threads) {
    std::vector<ScoredRule> scored;
    for (const auto& [rule, entry] : mined) scored.push_back({rule, *entry.stats->confidence});
    const auto test = kg.test();
    std::vector<PredictionRecord> out(test.size());
    parallel_for(test.size(), threads ? threads : default_threads(), [&](std::size_t i) {
        const Triple& q = test[i];
        PredictionRecord r{q.head, q.relation, q.tail, {}, {}};
        for (const RankedTail& t : rank_tails_max_aggregation(kg, scored, q.head, q.relation, top_k)) {
            r.ranking.push_back({t.tail, t.confidences.front()});
            if (t.tail == q.tail) r.paths.push_back({t.best_path, t.confidences.front()});
        }
        out[i] = std::move(r);
    });
    return out;
}

void cmd_evaluate(const Options& o) {
    const KnowledgeGraph kg = load_graph(o);
    const Benchmark b = load_benchmark(kg, require(o.benchmark, "--benchmark"));
    std::vector<PredictionRecord> records;
    if (!o.rules.empty()) {
        if (!o.predictions.empty()) throw ValidationError("give either --predictions or --rules, not both");
        records = rule_model_predictions(kg, load_mined(kg, o.rules), o.top_k, o.threads);
        if (!o.predictions_out.empty()) {
            write_out(o.predictions_out, [&](std::ostream& out) { io::write_predictions(out, kg, records); });
        }
    } else {
        if (o.predictions.size() != 1) throw ValidationError("evaluate needs exactly one --predictions file");
        records = load_predictions(kg, o.predictions.front());
    }
    EvaluateOptions eo;
    eo.filtered = o.filtered;
    const EvaluationReport rep = evaluate(b, kg, records, eo);
    for (const std::string& w : rep.warnings) warn(w);
    write_json(o.out, io::report_to_json(kg, rep, !o.no_details));
}

void cmd_upper_bound(const Options& o) {
    const KnowledgeGraph kg = load_graph(o);
    const Benchmark b = load_benchmark(kg, require(o.benchmark, "--benchmark"));
    const auto sets = load_paths(kg, require(o.paths, "--paths"));
    const EvaluationReport rep = upper_bound(b, kg, sets);
    for (const std::string& w : rep.warnings) warn(w);
    write_json(o.out, io::report_to_json(kg, rep, !o.no_details));
}

void cmd_compare(const Options& o) {
    if (o.reports.empty()) throw ValidationError("compare needs --report model=report.json");
    std::map<std::string, double> bench_gi, golden_gi, pr;
    for (const auto& [name, file] : named_files(o.reports, "--report")) {
        const json r = read_json_file(file);
        if (!r.contains("raw") || !r["raw"].contains("PR") || !r["raw"].contains("GI")) {
            throw ValidationError(file + ": report lacks raw PR/GI");
        }
        bench_gi[name] = r["raw"]["GI"].get<double>();
        pr[name] = r["raw"]["PR"].get<double>();
    }
    std::map<std::string, std::vector<Grade>> kept;
    std::ifstream in = open_in(require(o.golden_labels, "--golden-labels"));
    io::for_each_jsonl(in, [&](const json& j, std::size_t) {
        if (j.value("protocol", "") != "golden" || j.value("status", "") != "complete") return;
        const auto g = parse_grade_name(j.at("class").get<std::string>());
        if (!g) throw ValidationError("unknown class");
        kept[j.at("model").get<std::string>()].push_back(*g);
    });
    json models = json::object();
    for (const auto& [name, p] : pr) {
        const auto it = kept.find(name);
        if (it == kept.end() || it->second.empty()) {
            warn("no golden labels for model " + name);
            continue;
        }
        golden_gi[name] = golden_interpretability(p, it->second);
        models[name] = {{"benchmark_GI", io::display_percent(bench_gi[name])},
                        {"golden_GI", io::display_percent(golden_gi[name])},
                        {"labels", it->second.size()},
                        {"raw", {{"benchmark_GI", bench_gi[name]}, {"golden_GI", golden_gi[name]}}}};
    }
    const AbsDiffResult d = abs_diff_avg(bench_gi, golden_gi);
    for (const std::string& m : d.mismatched) warn("model only on one side: " + m);
    write_json(o.out, json{{"models", models},
                           {"abs_diff_avg", io::display_percent(d.value)},
                           {"raw", {{"abs_diff_avg", d.value}}},
                           {"compared", d.models}});
}

void cmd_report_stats(const Options& o) {
    const KnowledgeGraph kg = load_graph(o);
    const Benchmark b = load_benchmark(kg, require(o.benchmark, "--benchmark"));
    const RuleSet all = load_rules(kg, require(o.rules, "--rules"));
    std::vector<AnnotatedRuleScore> annotated;
    if (!o.annotations.empty()) {
        std::ifstream in = open_in(o.annotations);
        annotated = io::read_annotated_rules(in, kg);
    }
    BenchmarkStatsOptions so;
    so.min_rules_per_relation = o.min_rules;
    so.list_size = o.list_size;
    write_json(o.out, io::stats_to_json(kg, benchmark_stats(b, all, annotated, so)));
}

void cmd_serve(const Options& o) {
    std::optional<KnowledgeGraph> kg;
    if (!o.kg.empty() || !o.train.empty()) kg.emplace(load_graph(o));
    StoreOptions so;
    so.directory = require(o.store, "--store");
    so.seed = o.seed;
    so.snapshot_every = o.snapshot_every;
    so.kg = kg ? &*kg : nullptr;
    AnnotationStore store(so);
    if (!o.tasks.empty()) {
        const json arr = read_json_file(o.tasks);
        if (!arr.is_array()) throw ValidationError(o.tasks + ": expected a JSON array of tasks");
        std::vector<AnnotationTask> fresh;
        for (const json& t : arr) {
            AnnotationTask task = task_from_json(t);
            try {
                store.label(task.task_id);
            } catch (const NotFoundError&) {
                fresh.push_back(std::move(task));
            }
        }
        std::cerr << json{{"loaded_tasks", store.create_tasks(fresh)}}.dump() << "\n";
    }

    // Block termination signals here so every thread inherits the mask; a
    // dedicated thread waits for them and stops the server.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    AnnotationServer server(store);
    const int port = server.bind(o.host, o.port);
    if (port < 0) throw Error("cannot bind " + o.host + ":" + std::to_string(o.port));
    std::cout << json{{"listening", o.host + ":" + std::to_string(port)}}.dump() << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
    });
    server.serve();
    // serve() can return without a signal (stop from elsewhere); wake the waiter.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    store.snapshot();
}

int exit_code(const Error& e) {
    if (dynamic_cast<const FileError*>(&e)) return 2;
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
        dynamic_cast<const LookupError*>(&e)) {
        return 3;
    }
    return 1;
}

void report_error(const char* kind, const std::string& message, std::size_t line = 0) {
    json j{{"error", kind}, {"message", message}};
    if (line) j["line"] = line;
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Knowledge graph path interpretability toolkit"};
    app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
    app.require_subcommand(1, 1);
    app.fallthrough();

    // Shared options live on the root so a config file can set them at top level.
    app.add_option("--kg", o.kg, "Triple file (TSV) or a directory with train/valid/test.tsv");
    app.add_option("--train", o.train, "Train TSV");
    app.add_option("--valid", o.valid, "Valid TSV");
    app.add_option("--test", o.test, "Test TSV");
    app.add_option("--max-hops", o.max_hops, "Maximum path length")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--min-confidence", o.min_confidence, "Mining confidence threshold")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--min-hc", o.min_hc, "Mining head-coverage threshold")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--h-threshold", o.h_threshold, "Confidence separating tiers H and L")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--l-score", o.l_score, "Score of L-tier rules")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    app.add_option("--o-score", o.o_score, "Score of O-tier rules")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    app.add_option("--per-rule", o.per_rule, "Paths sampled per H rule")->capture_default_str();
    app.add_option("--seed", o.seed, "Seed for randomized steps")->capture_default_str();
    app.add_option("--benchmark", o.benchmark, "benchmark.jsonl");
    app.add_option("--predictions", o.predictions, "predictions.jsonl (model=file for golden sampling)");
    app.add_option("--out", o.out, "Output file (stdout when omitted)");
    app.add_option("--threads", o.threads, "Worker threads, 0 = all cores")->capture_default_str();

    auto* import = app.add_subcommand("import", "Load a KG and report counts");
    auto* split = app.add_subcommand("split", "Split --kg into train/valid/test.tsv under --out");
    split->add_option("--ratios", o.ratios, "train,valid,test")->delimiter(',')->capture_default_str();

    auto* enumerate = app.add_subcommand("enumerate-paths", "Collect paths for query triples");
    enumerate->add_option("--queries", o.queries, "Partition to enumerate: test, valid or train")->capture_default_str();
    enumerate->add_flag("--keep-query-edge", o.keep_query_edge, "Allow paths through the query edge itself");

    auto* abstract = app.add_subcommand("abstract", "Abstract paths into rules");
    abstract->add_option("--paths", o.paths, "paths.jsonl");

    auto* stats = app.add_subcommand("stats-rules", "Compute confidence and head coverage");
    stats->add_option("--rules", o.rules, "rules.jsonl");
    stats->add_option("--pair-cap", o.pair_cap, "Sampled grounding budget, 0 = exact")->capture_default_str();

    auto* prune = app.add_subcommand("prune", "Keep rules meeting the mining thresholds");
    prune->add_option("--rules", o.rules, "rules.jsonl (stats computed when absent)");
    prune->add_option("--tiers-out", o.tiers_out, "Also write tiers.jsonl");
    prune->add_option("--pair-cap", o.pair_cap, "Sampled grounding budget, 0 = exact")->capture_default_str();

    auto* sample = app.add_subcommand("sample-annotation", "Write annotation tasks as a JSON array");
    sample->add_option("--protocol", o.protocol, "a_benchmark or golden")->capture_default_str();
    sample->add_option("--paths", o.paths, "paths.jsonl (a_benchmark)");
    sample->add_option("--tiers", o.tiers, "tiers.jsonl (a_benchmark)");
    sample->add_option("--per-model", o.per_model, "Paths per model (golden)")->capture_default_str();

    auto* build = app.add_subcommand("build-benchmark", "Build an A or R benchmark");
    build->add_option("--kind", o.kind, "A or R")->required();
    build->add_option("--tiers", o.tiers, "tiers.jsonl (A)");
    build->add_option("--annotations", o.annotations, "a_benchmark label export (A)");
    build->add_option("--mined", o.mined, "mined rules (R)");
    build->add_option("--calibration", o.calibration, "calibration.json (R)");

    auto* calibrate = app.add_subcommand("calibrate", "Fit confidence thresholds to rule labels");
    calibrate->add_option("--mined", o.mined, "mined rules");
    calibrate->add_option("--labels", o.labels, "rule labels jsonl");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a model against a benchmark");
    evaluate_cmd->add_option("--rules", o.rules, "Mined rules; evaluates their max-aggregation model");
    evaluate_cmd->add_option("--top-k", o.top_k, "Ranking depth for --rules, 0 = all")->capture_default_str();
    evaluate_cmd->add_option("--predictions-out", o.predictions_out, "Write the --rules model predictions");
    evaluate_cmd->add_flag("--filtered", o.filtered, "Filtered link-prediction ranks");
    evaluate_cmd->add_flag("--no-details", o.no_details, "Omit per-triple details");

    auto* ub = app.add_subcommand("upper-bound", "Best achievable scores from collected paths");
    ub->add_option("--paths", o.paths, "paths.jsonl");
    ub->add_flag("--no-details", o.no_details, "Omit per-triple details");

    auto* compare = app.add_subcommand("compare", "Benchmark vs golden GI per model");
    compare->add_option("--report", o.reports, "model=report.json")->required();
    compare->add_option("--golden-labels", o.golden_labels, "golden label export");

    auto* report = app.add_subcommand("report-stats", "Benchmark statistics");
    report->add_option("--rules", o.rules, "rules.jsonl with stats");
    report->add_option("--annotations", o.annotations, "a_benchmark label export");
    report->add_option("--min-rules", o.min_rules, "Rules needed for a relation to be listed")->capture_default_str();
    report->add_option("--list-size", o.list_size, "Top/bottom list size")->capture_default_str();

    auto* serve = app.add_subcommand("serve-annotation", "Run the annotation HTTP service");
    serve->add_option("--store", o.store, "Store directory");
    serve->add_option("--host", o.host)->capture_default_str();
    serve->add_option("--port", o.port)->capture_default_str();
    serve->add_option("--tasks", o.tasks, "JSON array of tasks to load (existing ids skipped)");
    serve->add_option("--snapshot-every", o.snapshot_every)->capture_default_str();

    const std::vector<std::pair<CLI::App*, void (*)(const Options&)>> commands{
        {import, cmd_import},       {split, cmd_split},         {enumerate, cmd_enumerate},
        {abstract, cmd_abstract},   {stats, cmd_stats},         {prune, cmd_prune},
        {sample, cmd_sample},       {build, cmd_build_benchmark}, {calibrate, cmd_calibrate},
        {evaluate_cmd, cmd_evaluate}, {ub, cmd_upper_bound},    {compare, cmd_compare},
        {report, cmd_report_stats}, {serve, cmd_serve}};

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::FileError& e) {
        report_error("file_error", e.what());
        return 2;
    } catch (const CLI::ParseError& e) {
        report_error("usage_error", e.what());
        return 1;
    }

    try {
        for (const auto& [sub, fn] : commands) {
            if (sub->parsed()) fn(o);
        }
        return 0;
    } catch (const ParseError& e) {
        report_error(e.kind(), e.what(), e.line());
        return exit_code(e);
    } catch (const Error& e) {
        report_error(e.kind(), e.what());
        return exit_code(e);
    } catch (const std::exception& e) {
        report_error("error", e.what());
        return 1;
    }
}
