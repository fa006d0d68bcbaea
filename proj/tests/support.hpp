#pragma once

// Test fixtures and independent oracles. Nothing here calls into the
// enumeration or counting code it is used to check: the oracles work off
// the raw triple list, never the KnowledgeGraph adjacency index.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "kgi/benchmark.hpp"
#include "kgi/evaluator.hpp"
#include "kgi/kg_store.hpp"
#include "kgi/path_engine.hpp"
#include "kgi/rule_engine.hpp"

namespace kgi::testing {

using NamedTriple = std::tuple<std::string, std::string, std::string>;

inline std::string to_tsv(const std::vector<NamedTriple>& triples) {
    std::string out;
    for (const auto& [h, r, t] : triples) out += h + "\t" + r + "\t" + t + "\n";
    return out;
}

// Unsplit, augmented KG where every triple is train.
inline KnowledgeGraph train_kg(const std::vector<NamedTriple>& triples) {
    std::istringstream in(to_tsv(triples));
    return augment_inverses(load_kg(in));
}

// Pre-split, augmented KG.
inline KnowledgeGraph split_kg_of(const std::vector<NamedTriple>& train, const std::vector<NamedTriple>& valid,
                                  const std::vector<NamedTriple>& test) {
    std::istringstream a(to_tsv(train)), b(to_tsv(valid)), c(to_tsv(test));
    return augment_inverses(load_kg_split(a, b, c));
}

struct RandomKgSpec {
    int max_entities = 50;
    int max_relations = 8;
    int max_triples = 300;
};

// Random triples over e0..e{n-1} and r0..r{m-1}; may contain duplicates and
// self-loops on purpose.
inline std::vector<NamedTriple> random_triples(std::mt19937_64& rng, const RandomKgSpec& spec = {}) {
    auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const int n = uniform(2, spec.max_entities);
    const int m = uniform(1, spec.max_relations);
    const int t = uniform(1, spec.max_triples);
    std::vector<NamedTriple> out;
    out.reserve(static_cast<std::size_t>(t));
    for (int i = 0; i < t; ++i) {
        out.emplace_back("e" + std::to_string(uniform(0, n - 1)), "r" + std::to_string(uniform(0, m - 1)),
                         "e" + std::to_string(uniform(0, n - 1)));
    }
    return out;
}

// Edge list of the augmented graph, built straight from the triple list.
struct RawGraph {
    // (head, relation id, tail) over the ids assigned by kg, inverses included.
    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> edges;
    std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> edge_set;
    std::size_t entities = 0;
    std::size_t relation_ids = 0;

    RawGraph(const KnowledgeGraph& kg, std::span<const Triple> train) {
        entities = kg.entity_count();
        relation_ids = kg.relation_count() * 2;
        for (const Triple& t : train) {
            edge_set.emplace(t.head.value, t.relation.value, t.tail.value);
            edge_set.emplace(t.tail.value, t.relation.value ^ 1u, t.head.value);
        }
        edges.assign(edge_set.begin(), edge_set.end());
    }
};

// Every walk of 1..max_hops edges from head to tail by exhaustive DFS over
// the full edge list (no pruning, no index).
inline std::set<std::vector<std::uint32_t>> oracle_walks(const RawGraph& g, std::uint32_t head, std::uint32_t tail,
                                                         int max_hops, bool exclude,
                                                         std::uint32_t query_relation = 0) {
    std::set<std::vector<std::uint32_t>> out;
    std::vector<std::uint32_t> seq;  // r1, e1, r2, e2, ...
    auto dfs = [&](auto&& self, std::uint32_t at, int depth) -> void {
        if (depth > 0 && at == tail) out.insert(seq);
        if (depth == max_hops) return;
        for (const auto& [h, r, t] : g.edges) {
            if (h != at) continue;
            if (exclude && ((h == head && r == query_relation && t == tail) ||
                            (h == tail && r == (query_relation ^ 1u) && t == head))) {
                continue;
            }
            seq.push_back(r);
            seq.push_back(t);
            self(self, t, depth + 1);
            seq.pop_back();
            seq.pop_back();
        }
    };
    dfs(dfs, head, 0);
    return out;
}

inline std::vector<std::uint32_t> flatten(const Path& p) {
    std::vector<std::uint32_t> seq;
    for (const Step& s : p.steps) {
        seq.push_back(s.relation.value);
        seq.push_back(s.entity.value);
    }
    return seq;
}

struct OracleCounts {
    std::uint64_t support = 0;
    std::uint64_t body_count = 0;
};

// Distinct (X, Y) pairs connected by the body chain, via boolean relation
// matrices multiplied with explicit nested loops over X, A, Y.
inline OracleCounts oracle_rule_counts(const RawGraph& g, const Rule& rule) {
    const std::size_t n = g.entities;
    using Matrix = std::vector<std::vector<char>>;
    auto relation_matrix = [&](std::uint32_t r) {
        Matrix m(n, std::vector<char>(n, 0));
        for (const auto& [h, rr, t] : g.edges) {
            if (rr == r) m[h][t] = 1;
        }
        return m;
    };
    Matrix reach = relation_matrix(rule.body.front().value);
    for (std::size_t i = 1; i < rule.body.size(); ++i) {
        const Matrix next = relation_matrix(rule.body[i].value);
        Matrix product(n, std::vector<char>(n, 0));
        for (std::size_t x = 0; x < n; ++x) {
            for (std::size_t a = 0; a < n; ++a) {
                if (!reach[x][a]) continue;
                for (std::size_t y = 0; y < n; ++y) {
                    if (next[a][y]) product[x][y] = 1;
                }
            }
        }
        reach = std::move(product);
    }
    OracleCounts c;
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < n; ++y) {
            if (!reach[x][y]) continue;
            ++c.body_count;
            if (g.edge_set.contains({static_cast<std::uint32_t>(x), rule.head.value, static_cast<std::uint32_t>(y)})) {
                ++c.support;
            }
        }
    }
    return c;
}

struct OracleCalibration {
    double h1 = 0;
    double h2 = 0;
    std::size_t correct = 0;
    double micro_f1 = 0;
};

// Exhaustive search over every (h1 <= h2) pair of the candidate grid, each
// pair scored by a fresh pass over all labeled items; pooled micro-F1 from
// per-class TP/FP/FN. Ties keep the first pair in (h1, h2) order.
inline OracleCalibration oracle_calibrate(const std::vector<std::pair<double, int>>& items) {
    std::set<double> grid{0.0, std::nextafter(1.0, 2.0)};
    for (const auto& [c, label] : items) grid.insert(c);
    const std::vector<double> g(grid.begin(), grid.end());
    OracleCalibration best;
    bool have = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = i; j < g.size(); ++j) {
            std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
            for (int cls = 0; cls < 3; ++cls) {
                for (const auto& [c, label] : items) {
                    const int pred = c >= g[j] ? 2 : (c >= g[i] ? 1 : 0);
                    if (pred == cls && label == cls) ++tp;
                    if (pred == cls && label != cls) ++fp;
                    if (pred != cls && label == cls) ++fn;
                }
            }
            for (const auto& [c, label] : items) {
                const int pred = c >= g[j] ? 2 : (c >= g[i] ? 1 : 0);
                if (pred == label) ++correct;
            }
            if (!have || correct > best.correct) {
                have = true;
                const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
                const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
                best = {g[i], g[j], correct, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
            }
        }
    }
    return best;
}

// Random labeled mined set for calibration checks.
struct CalibrationInstance {
    RuleSet mined{RuleProvenance::kMined};
    std::map<Rule, Grade> labels;
    std::vector<std::pair<double, int>> items;
};

inline CalibrationInstance random_calibration_instance(std::mt19937_64& rng, std::size_t max_rules = 60) {
    CalibrationInstance inst;
    const std::size_t n = 1 + rng() % max_rules;
    // coarse confidence grid so ties and duplicates occur
    const int levels = 1 + static_cast<int>(rng() % 20);
    for (std::size_t k = 0; k < n; ++k) {
        const Rule r{RelationId{0}, {RelationId{static_cast<std::uint32_t>(k)}}};
        const double c = static_cast<double>(rng() % (levels + 1)) / levels;
        const auto label = static_cast<int>(rng() % 3);
        RuleStats st;
        st.body_count = 1;
        st.confidence = c;
        inst.mined.add(r);
        inst.mined.set_stats(r, st);
        inst.labels[r] = static_cast<Grade>(label);
        inst.items.emplace_back(c, label);
    }
    return inst;
}

// Random split KG: every triple lands in train except a handful held out
// as test (never duplicated in train).
inline KnowledgeGraph random_split_kg(std::mt19937_64& rng, const RandomKgSpec& spec = {25, 4, 120},
                                      std::size_t test_size = 12) {
    auto triples = random_triples(rng, spec);
    std::set<NamedTriple> uniq(triples.begin(), triples.end());
    std::vector<NamedTriple> all(uniq.begin(), uniq.end());
    std::shuffle(all.begin(), all.end(), rng);
    const std::size_t k = std::min(test_size, all.size() / 2);
    std::vector<NamedTriple> test(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<NamedTriple> train(all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    return split_kg_of(train, {}, test);
}

// Kind-A benchmark assigning a random score in [0,1] to every rule the path
// sets abstract to.
inline Benchmark random_benchmark(std::mt19937_64& rng, std::span<const PathSet> sets) {
    std::map<Rule, BenchmarkEntry> entries;
    for (const PathSet& s : sets) {
        for (const Path& p : s.paths) {
            Rule r{s.query.relation, {}};
            for (const Step& st : p.steps) r.body.push_back(st.relation);
            if (!entries.contains(r)) {
                entries[r] = {static_cast<double>(rng() % 1001) / 1000.0, ScoreSource::kAnnotated};
            }
        }
    }
    return Benchmark(BenchmarkKind::kA, BenchmarkConfig{}, std::move(entries));
}

// A fake model: random ranking over all entities; per triple zero to three
// claimed paths drawn from the true path set, plus sometimes a bogus path.
inline std::vector<PredictionRecord> random_records(std::mt19937_64& rng, const KnowledgeGraph& kg,
                                                    std::span<const PathSet> sets) {
    std::vector<PredictionRecord> out;
    for (const PathSet& s : sets) {
        PredictionRecord r{s.query.head, s.query.relation, s.query.tail, {}, {}};
        std::vector<std::uint32_t> ents(kg.entity_count());
        for (std::uint32_t e = 0; e < ents.size(); ++e) ents[e] = e;
        std::shuffle(ents.begin(), ents.end(), rng);
        const std::size_t keep = rng() % (ents.size() + 1);
        for (std::size_t i = 0; i < keep; ++i) {
            r.ranking.push_back({EntityId{ents[i]}, 1.0 - static_cast<double>(i) / static_cast<double>(ents.size())});
        }
        if (!s.paths.empty()) {
            const std::size_t n = rng() % 4;
            for (std::size_t i = 0; i < n; ++i) {
                r.paths.push_back({s.paths[rng() % s.paths.size()], static_cast<double>(rng() % 7) / 7.0});
            }
        }
        if (rng() % 3 == 0) {
            Path bogus{s.query.head, {{RelationId{static_cast<std::uint32_t>(rng() % (kg.relation_count() * 2))},
                                       EntityId{static_cast<std::uint32_t>(rng() % kg.entity_count())}},
                                      {RelationId{0}, s.query.tail}}};
            r.paths.push_back({bogus, static_cast<double>(rng() % 7) / 7.0});
        }
        out.push_back(std::move(r));
    }
    return out;
}

// True if every step of p is an edge of g and p runs from -> to.
inline bool oracle_valid(const RawGraph& g, const Path& p, std::uint32_t from, std::uint32_t to) {
    if (p.steps.empty() || p.head.value != from || p.steps.back().entity.value != to) return false;
    std::uint32_t at = from;
    for (const Step& s : p.steps) {
        if (!g.edge_set.contains({at, s.relation.value, s.entity.value})) return false;
        at = s.entity.value;
    }
    return true;
}


// Planted pipeline fixture, 40 entities.
//   r(X,Y) <- p(X,A), q(A,Y): ten groundings, all with r (2 held out as test).
//   s(X,Y) <- u(X,Y): four groundings, two with s (1 held out as test).
// Test paths abstract to exactly three rules: r <- p.q, s <- u, s <- u.u^-1.u.
struct PlantedFixture {
    std::vector<NamedTriple> train, valid, test;
};

inline std::string ent(int i) { return "e" + std::to_string(i); }

inline PlantedFixture planted_fixture() {
    PlantedFixture f;
    for (int i = 0; i < 10; ++i) {
        f.train.emplace_back(ent(i), "p", ent(10 + i));
        f.train.emplace_back(ent(10 + i), "q", ent(20 + i));
        (i < 8 ? f.train : f.test).emplace_back(ent(i), "r", ent(20 + i));
    }
    for (int i = 0; i < 4; ++i) f.train.emplace_back(ent(30 + i), "u", ent(34 + i));
    f.train.emplace_back(ent(30), "s", ent(34));
    f.test.emplace_back(ent(31), "s", ent(35));
    f.train.emplace_back(ent(38), "t", ent(39));
    f.valid.emplace_back(ent(0), "t", ent(39));
    return f;
}

// Ten scripted grades per path, keyed by the rule body.
inline std::vector<Grade> planted_grades(const std::vector<std::string>& body) {
    auto make = [](int unreasonable, int partial, int reasonable) {
        std::vector<Grade> g;
        g.insert(g.end(), unreasonable, Grade::kUnreasonable);
        g.insert(g.end(), partial, Grade::kPartial);
        g.insert(g.end(), reasonable, Grade::kReasonable);
        return g;
    };
    if (body == std::vector<std::string>{"p", "q"}) return make(0, 3, 7);    // 0.85
    if (body == std::vector<std::string>{"u"}) return make(0, 10, 0);        // 0.5
    return make(4, 6, 0);                                                    // 0.3
}

// Oracle model: ranks every gold tail first. Claims p.q for e8 (score 0.85),
// nothing for e9, and both u paths for e31 with the longer one preferred (0.3).
inline std::string planted_predictions_jsonl() {
    return R"({"head":"e8","relation":"r","gold_tail":"e28","ranking":[{"tail":"e28","score":0.9},{"tail":"e29","score":0.1}],"paths":[{"relations":["p","q"],"entities":["e18","e28"],"score":0.9}]})"
           "\n"
           R"({"head":"e9","relation":"r","gold_tail":"e29","ranking":[{"tail":"e29","score":0.8}],"paths":[]})"
           "\n"
           R"({"head":"e31","relation":"s","gold_tail":"e35","ranking":[{"tail":"e35","score":0.7},{"tail":"e34","score":0.2}],"paths":[{"relations":["u"],"entities":["e35"],"score":0.4},{"relations":["u","u^-1","u"],"entities":["e35","e31","e35"],"score":0.6}]})"
           "\n";
}

// Found 2 of 3 triples; best-path scores 0.85 and 0.3.
inline double planted_expected_gi() { return (2.0 / 3.0) * ((0.85 + 0.3) / 2.0); }

}  // namespace kgi::testing
