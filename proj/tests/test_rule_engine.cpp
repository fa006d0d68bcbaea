#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "kgi/error.hpp"
#include "kgi/rule_engine.hpp"
#include "support.hpp"

using namespace kgi;
namespace kt = kgi::testing;

namespace {

// x_i -p-> a_i -q-> y_i for i < n; r(x_i, y_i) for i < with_head.
std::vector<kt::NamedTriple> planted_chain(int n, int with_head) {
    std::vector<kt::NamedTriple> out;
    for (int i = 0; i < n; ++i) {
        const std::string s = std::to_string(i);
        out.emplace_back("x" + s, "p", "a" + s);
        out.emplace_back("a" + s, "q", "y" + s);
        if (i < with_head) out.emplace_back("x" + s, "r", "y" + s);
    }
    return out;
}

Rule rule_of(const KnowledgeGraph& kg, const char* head, std::initializer_list<const char*> body) {
    Rule r{kg.relation(head), {}};
    for (const char* b : body) r.body.push_back(kg.relation(b));
    return r;
}

// Entities reachable from head by the body chain, from the raw edge list.
std::set<std::uint32_t> oracle_tails(const kt::RawGraph& g, const Rule& rule, std::uint32_t head) {
    std::set<std::uint32_t> frontier{head};
    for (RelationId r : rule.body) {
        std::set<std::uint32_t> next;
        for (const auto& [h, rr, t] : g.edges) {
            if (rr == r.value && frontier.contains(h)) next.insert(t);
        }
        frontier = std::move(next);
    }
    return frontier;
}

}  // namespace

TEST_CASE("abstract_path: instrument example") {
    const KnowledgeGraph kg = kt::train_kg(
        {{"SherylCrow", "occupation", "guitarist"}, {"guitarist", "uses", "guitar"}, {"Slash", "instrument", "guitar"}});
    const Path p{kg.entity("SherylCrow"),
                 {{kg.relation("occupation"), kg.entity("guitarist")}, {kg.relation("uses"), kg.entity("guitar")}}};
    const Rule r = abstract_path(p, kg.relation("instrument"));
    CHECK(r == rule_of(kg, "instrument", {"occupation", "uses"}));
}

TEST_CASE("abstract_path: single atom, entity independence, empty") {
    const KnowledgeGraph kg = kt::train_kg({{"a", "r1", "b"}, {"c", "r1", "d"}, {"a", "r", "b"}});
    const RelationId r1 = kg.relation("r1");
    const Rule one = abstract_path({kg.entity("a"), {{r1, kg.entity("b")}}}, kg.relation("r"));
    CHECK(one.body == std::vector<RelationId>{r1});
    const Rule other = abstract_path({kg.entity("c"), {{r1, kg.entity("d")}}}, kg.relation("r"));
    CHECK(one == other);
    CHECK_THROWS_AS(abstract_path({kg.entity("a"), {}}, kg.relation("r")), ValidationError);
}

TEST_CASE("abstract_all: dedup with path counts") {
    const KnowledgeGraph kg = kt::train_kg({{"a", "p", "b"}, {"a", "r", "b"}, {"c", "s", "d"}});
    const RelationId p = kg.relation("p"), r = kg.relation("r"), s = kg.relation("s");
    std::vector<PathSet> sets(2);
    sets[0].query = {kg.entity("a"), r, kg.entity("b")};
    sets[1].query = {kg.entity("c"), r, kg.entity("d")};
    for (int i = 0; i < 10; ++i) sets[i % 2].paths.push_back({EntityId{static_cast<std::uint32_t>(i)}, {{p, EntityId{0}}}});
    sets[1].paths.push_back({kg.entity("c"), {{s, kg.entity("d")}}});
    const RuleSet rules = abstract_all(sets);
    CHECK(rules.size() == 2);
    const RuleEntry* e = rules.find({r, {p}});
    REQUIRE(e != nullptr);
    CHECK(e->path_count == 10);
    CHECK_FALSE(e->stats.has_value());
    CHECK(rules.find({r, {s}})->path_count == 1);
    CHECK(abstract_all(std::vector<PathSet>{}).empty());
}

TEST_CASE("compute_stats: planted half-confidence chain") {
    const KnowledgeGraph kg = kt::train_kg(planted_chain(4, 2));
    const RuleStats s = compute_stats(kg, rule_of(kg, "r", {"p", "q"}));
    CHECK(s.body_count == 4);
    CHECK(s.support == 2);
    CHECK(s.head_count == 2);
    REQUIRE(s.confidence);
    CHECK(*s.confidence == 0.5);
    REQUIRE(s.head_coverage);
    CHECK(*s.head_coverage == 1.0);
    CHECK_FALSE(s.approximate);
}

TEST_CASE("compute_stats: full confidence and ungroundable body") {
    const KnowledgeGraph kg = kt::train_kg(planted_chain(3, 3));
    const RuleStats full = compute_stats(kg, rule_of(kg, "r", {"p", "q"}));
    CHECK(full.confidence == 1.0);
    const RuleStats none = compute_stats(kg, rule_of(kg, "r", {"q", "p"}));
    CHECK(none.body_count == 0);
    CHECK_FALSE(none.confidence.has_value());
}

TEST_CASE("compute_stats: distinct pairs, not groundings") {
    // two middle entities give two groundings of the same (X, Y) pair
    const KnowledgeGraph kg =
        kt::train_kg({{"x", "p", "a"}, {"x", "p", "b"}, {"a", "q", "y"}, {"b", "q", "y"}, {"x", "r", "y"}});
    const RuleStats s = compute_stats(kg, rule_of(kg, "r", {"p", "q"}));
    CHECK(s.body_count == 1);
    CHECK(s.support == 1);
}

TEST_CASE("compute_stats equals matrix oracle on random KGs") {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 20; ++round) {
        const auto triples = kt::random_triples(rng, {25, 5, 120});
        const KnowledgeGraph kg = kt::train_kg(triples);
        const kt::RawGraph g(kg, kg.train());
        const auto nrel = static_cast<std::uint32_t>(kg.relation_count() * 2);
        for (int i = 0; i < 15; ++i) {
            Rule rule{RelationId{static_cast<std::uint32_t>(rng() % kg.relation_count()) * 2}, {}};
            const std::size_t len = 1 + rng() % 3;
            for (std::size_t k = 0; k < len; ++k) rule.body.push_back(RelationId{static_cast<std::uint32_t>(rng() % nrel)});
            const RuleStats s = compute_stats(kg, rule);
            const kt::OracleCounts o = kt::oracle_rule_counts(g, rule);
            CHECK(s.support == o.support);
            CHECK(s.body_count == o.body_count);
            CHECK(s.head_count == kg.relation_frequency(rule.head));
            CHECK(s.support <= s.body_count);
        }
    }
}

TEST_CASE("compute_stats sampling mode is flagged and seeded") {
    const KnowledgeGraph kg = kt::train_kg(planted_chain(200, 100));
    const Rule r = rule_of(kg, "r", {"p", "q"});
    const RuleStats a = compute_stats(kg, r, {50, 3});
    const RuleStats b = compute_stats(kg, r, {50, 3});
    CHECK(a.approximate);
    CHECK(a.support == b.support);
    CHECK(a.body_count == b.body_count);
    REQUIRE(a.confidence);
    CHECK(*a.confidence == doctest::Approx(0.5).epsilon(0.25));
    // cap above the pair population is exact
    const RuleStats big = compute_stats(kg, r, {100000, 3});
    CHECK(big.body_count == 200);
    CHECK(big.support == 100);
}

TEST_CASE("mine_ruleset thresholds") {
    const KnowledgeGraph kg = kt::train_kg(planted_chain(20, 10));
    RuleSet cands;
    const Rule planted = rule_of(kg, "r", {"p", "q"});
    const Rule dead = rule_of(kg, "r", {"q", "p"});
    const Rule echo = rule_of(kg, "r", {"r"});
    cands.add(planted, 3);
    cands.add(dead, 1);
    cands.add(echo, 1);
    const RuleSet mined = mine_ruleset(kg, cands);
    CHECK(mined.provenance() == RuleProvenance::kMined);
    CHECK(mined.contains(planted));
    CHECK(mined.contains(echo));
    CHECK_FALSE(mined.contains(dead));
    CHECK(*mined.confidence(planted) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(mined.find(planted)->path_count == 3);

    MiningOptions strict;
    strict.min_confidence = 1.0;
    strict.min_head_coverage = 1.0;
    const RuleSet only_perfect = mine_ruleset(kg, cands, strict);
    CHECK(only_perfect.size() == 1);
    CHECK(only_perfect.contains(echo));

    CHECK(mine_ruleset(kg, RuleSet{}).empty());
    MiningOptions bad;
    bad.min_confidence = 1.5;
    CHECK_THROWS_AS(mine_ruleset(kg, cands, bad), ValidationError);
}

TEST_CASE("match_rule groundings") {
    const KnowledgeGraph kg =
        kt::train_kg({{"x", "p", "a"}, {"x", "p", "b"}, {"a", "q", "y"}, {"b", "q", "y"}, {"b", "q", "z"}, {"x", "r", "y"}});
    const Rule r = rule_of(kg, "r", {"p", "q"});
    const auto gs = match_rule(kg, r, kg.entity("x"), kg.relation("r"));
    REQUIRE(gs.size() == 3);
    for (std::size_t i = 0; i < gs.size(); ++i) {
        CHECK(gs[i].tail == gs[i].path.target());
        CHECK(is_valid_walk(kg, gs[i].path, kg.entity("x"), gs[i].tail));
        CHECK(abstract_path(gs[i].path, r.head) == r);
        if (i > 0) CHECK(gs[i - 1].path < gs[i].path);
    }
    CHECK_THROWS_AS(match_rule(kg, r, kg.entity("x"), kg.relation("p")), ValidationError);
    CHECK(match_rule(kg, r, kg.entity("y"), kg.relation("r")).empty());
}

TEST_CASE("confidence vector ordering") {
    using V = std::vector<double>;
    CHECK(confidence_vector_before(V{0.9, 0.1}, V{0.9}));
    CHECK_FALSE(confidence_vector_before(V{0.9}, V{0.9, 0.1}));
    CHECK(confidence_vector_before(V{0.9, 0.1}, V{0.8, 0.8}));
    CHECK_FALSE(confidence_vector_before(V{0.5}, V{0.5}));
    CHECK(confidence_vector_before(V{0.1}, V{}));
}

TEST_CASE("max aggregation matches a naive oracle") {
    std::mt19937_64 rng(4);
    for (int round = 0; round < 15; ++round) {
        const auto triples = kt::random_triples(rng, {20, 3, 60});
        const KnowledgeGraph kg = kt::train_kg(triples);
        const kt::RawGraph g(kg, kg.train());
        const RelationId head_rel{0};
        std::vector<ScoredRule> rules;
        for (int i = 0; i < 8; ++i) {
            Rule r{head_rel, {}};
            const std::size_t len = 1 + rng() % 2;
            for (std::size_t k = 0; k < len; ++k) {
                r.body.push_back(RelationId{static_cast<std::uint32_t>(rng() % (kg.relation_count() * 2))});
            }
            rules.push_back({r, static_cast<double>(rng() % 5) / 4.0});
        }
        rules.push_back(rules.front());  // duplicate counted once
        rules.push_back({Rule{RelationId{2}, {RelationId{0}}}, 1.0});  // other head, ignored
        const EntityId head{static_cast<std::uint32_t>(rng() % kg.entity_count())};
        const auto ranked = rank_tails_max_aggregation(kg, rules, head, head_rel);

        std::map<Rule, double> best;
        for (const ScoredRule& sr : rules) {
            if (sr.rule.head != head_rel) continue;
            auto [it, fresh] = best.emplace(sr.rule, sr.confidence);
            if (!fresh) it->second = std::max(it->second, sr.confidence);
        }
        std::map<std::uint32_t, std::vector<double>> expect;
        for (const auto& [rule, c] : best) {
            for (std::uint32_t t : oracle_tails(g, rule, head.value)) expect[t].push_back(c);
        }
        for (auto& [t, v] : expect) std::sort(v.rbegin(), v.rend());
        std::vector<std::pair<std::vector<double>, std::uint32_t>> order;
        for (const auto& [t, v] : expect) order.emplace_back(v, t);
        // descending lexicographic on the vectors, longer wins on a shared prefix
        std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return std::lexicographical_compare(b.first.begin(), b.first.end(), a.first.begin(), a.first.end());
            return a.second < b.second;
        });
        REQUIRE(ranked.size() == order.size());
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            CHECK(ranked[i].tail.value == order[i].second);
            CHECK(ranked[i].confidences == order[i].first);
            CHECK(ranked[i].best_rule.head == head_rel);
            CHECK(is_valid_walk(kg, ranked[i].best_path, head, ranked[i].tail));
        }
        const auto top3 = rank_tails_max_aggregation(kg, rules, head, head_rel, 3);
        CHECK(top3.size() == std::min<std::size_t>(3, ranked.size()));
    }
}

TEST_CASE("max aggregation from a mined rule set") {
    const KnowledgeGraph kg = kt::train_kg(planted_chain(4, 2));
    RuleSet cands;
    cands.add(rule_of(kg, "r", {"p", "q"}));
    const RuleSet mined = mine_ruleset(kg, cands);
    const auto ranked = rank_tails_max_aggregation(kg, mined, kg.entity("x3"), kg.relation("r"));
    REQUIRE(ranked.size() == 1);
    CHECK(ranked[0].tail == kg.entity("y3"));
    CHECK(ranked[0].confidences == std::vector<double>{0.5});
}

TEST_CASE("compute_all_stats is thread-count independent") {
    std::mt19937_64 rng(8);
    const auto triples = kt::random_triples(rng, {30, 4, 150});
    const KnowledgeGraph kg = kt::train_kg(triples);
    RuleSet a, b;
    for (std::uint32_t h = 0; h < kg.relation_count(); ++h) {
        for (std::uint32_t x = 0; x < kg.relation_count() * 2; ++x) {
            for (std::uint32_t y = 0; y < kg.relation_count() * 2; ++y) {
                a.add({RelationId{2 * h}, {RelationId{x}, RelationId{y}}});
                b.add({RelationId{2 * h}, {RelationId{x}, RelationId{y}}});
            }
        }
    }
    compute_all_stats(kg, a, {}, 1);
    compute_all_stats(kg, b, {}, 4);
    auto ib = b.begin();
    for (const auto& [rule, entry] : a) {
        REQUIRE(entry.stats);
        CHECK(entry.stats->support == ib->second.stats->support);
        CHECK(entry.stats->body_count == ib->second.stats->body_count);
        ++ib;
    }
}
