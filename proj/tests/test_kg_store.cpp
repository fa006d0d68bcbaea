#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "kgi/error.hpp"
#include "kgi/kg_store.hpp"
#include "support.hpp"

using namespace kgi;
using kgi::testing::NamedTriple;

namespace {

KnowledgeGraph parse(const std::string& text) {
    std::istringstream in(text);
    return load_kg(in);
}

std::multiset<Triple> all_triples(const KnowledgeGraph& kg) {
    std::multiset<Triple> out;
    for (auto p : {Partition::kTrain, Partition::kValid, Partition::kTest}) {
        for (const Triple& t : kg.partition(p)) out.insert(t);
    }
    return out;
}

}  // namespace

TEST_CASE("load: dedup and counts") {
    const KnowledgeGraph kg = parse("a\tr1\tb\nb\tr2\tc\na\tr1\tb\n");
    CHECK(kg.entity_count() == 3);
    CHECK(kg.relation_count() == 2);
    CHECK(kg.triple_count() == 2);
    CHECK(kg.load_report().duplicates == 1);
    CHECK(kg.load_report().lines == 3);
    CHECK_FALSE(kg.is_split());
}

TEST_CASE("load: empty stream") {
    const KnowledgeGraph kg = parse("");
    CHECK(kg.entity_count() == 0);
    CHECK(kg.relation_count() == 0);
    CHECK(kg.triple_count() == 0);
}

TEST_CASE("load: blank lines and CRLF") {
    const KnowledgeGraph kg = parse("\na\tr\tb\r\n\n");
    CHECK(kg.triple_count() == 1);
    CHECK(kg.find_entity("b").has_value());
}

TEST_CASE("load: malformed lines carry line numbers") {
    SUBCASE("two fields") {
        try {
            parse("a\tr\tb\nx\ty\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }
    SUBCASE("four fields") { CHECK_THROWS_AS(parse("a\tr\tb\tc\n"), ParseError); }
    SUBCASE("empty entity") { CHECK_THROWS_AS(parse("\tr\tb\n"), ParseError); }
    SUBCASE("empty relation") { CHECK_THROWS_AS(parse("a\t\tb\n"), ParseError); }
    SUBCASE("reserved suffix") { CHECK_THROWS_AS(parse("a\tr^-1\tb\n"), ParseError); }
}

TEST_CASE("interning round-trips surface strings") {
    std::mt19937_64 rng(3);
    const auto triples = kgi::testing::random_triples(rng);
    const KnowledgeGraph kg = kgi::testing::train_kg(triples);
    for (const auto& [h, r, t] : triples) {
        CHECK(kg.entity_name(kg.entity(h)) == h);
        CHECK(kg.relation_name(kg.relation(r)) == r);
        CHECK(kg.entity_name(kg.entity(t)) == t);
        const RelationId inv = kg.relation(r + "^-1");
        CHECK(inv.is_inverse());
        CHECK(inv.inverse() == kg.relation(r));
        CHECK(kg.relation_name(inv) == r + "^-1");
    }
    CHECK_THROWS_AS(kg.entity("nope"), LookupError);
    CHECK_THROWS_AS(kg.relation("nope"), LookupError);
}

TEST_CASE("relation id inverse is an involution") {
    for (std::uint32_t b = 0; b < 20; ++b) {
        const RelationId r = RelationId::base_of(b);
        CHECK(r.inverse().inverse() == r);
        CHECK(r.inverse() != r);
        CHECK(r.inverse().base() == b);
        CHECK_FALSE(r.is_inverse());
    }
}

TEST_CASE("split: sizes, remainder and determinism") {
    auto corpus = [](int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += "e" + std::to_string(i) + "\tr\te" + std::to_string(i + 1) + "\n";
        return parse(s);
    };
    const KnowledgeGraph k100 = corpus(100);
    const KnowledgeGraph s100 = split_kg(k100, {}, 7);
    CHECK(s100.train().size() == 90);
    CHECK(s100.valid().size() == 5);
    CHECK(s100.test().size() == 5);
    CHECK(s100.is_split());

    const KnowledgeGraph k101 = corpus(101);
    const KnowledgeGraph a = split_kg(k101, {}, 7);
    const KnowledgeGraph b = split_kg(k101, {}, 7);
    CHECK(a.train().size() == 91);
    CHECK(a.valid().size() == 5);
    CHECK(a.test().size() == 5);
    CHECK(std::ranges::equal(a.train(), b.train()));
    CHECK(std::ranges::equal(a.valid(), b.valid()));
    CHECK(std::ranges::equal(a.test(), b.test()));

    // disjoint and exhaustive
    CHECK(all_triples(a) == all_triples(k101));
    const auto pooled = all_triples(a);
    const std::set<Triple> seen(pooled.begin(), pooled.end());
    CHECK(seen.size() == 101);

    const KnowledgeGraph c = split_kg(k101, {}, 8);
    CHECK_FALSE(std::ranges::equal(a.test(), c.test()));
}

TEST_CASE("split: bad ratios and order errors") {
    const KnowledgeGraph kg = parse("a\tr\tb\n");
    CHECK_THROWS_AS(split_kg(kg, {0.5, 0.2, 0.2}, 1), ValidationError);
    CHECK_THROWS_AS(split_kg(kg, {1.2, -0.1, -0.1}, 1), ValidationError);
    CHECK_THROWS_AS(split_kg(augment_inverses(kg), {}, 1), ValidationError);
}

TEST_CASE("augment: definition examples") {
    SUBCASE("single edge") {
        const KnowledgeGraph kg = augment_inverses(parse("a\tr1\tb\n"));
        const EntityId a = kg.entity("a"), b = kg.entity("b");
        const RelationId r = kg.relation("r1");
        CHECK(kg.edge_count() == 2);
        CHECK(kg.has_edge(a, r, b));
        CHECK(kg.has_edge(b, r.inverse(), a));
        CHECK_FALSE(kg.has_edge(b, r, a));
        CHECK(kg.is_augmented());
    }
    SUBCASE("self loop") {
        const KnowledgeGraph kg = augment_inverses(parse("a\tr1\ta\n"));
        const EntityId a = kg.entity("a");
        const RelationId r = kg.relation("r1");
        CHECK(kg.edge_count() == 2);
        CHECK(kg.has_edge(a, r, a));
        CHECK(kg.has_edge(a, r.inverse(), a));
    }
    SUBCASE("twice is an error") {
        const KnowledgeGraph kg = augment_inverses(parse("a\tr1\tb\n"));
        CHECK_THROWS_AS(augment_inverses(kg), ValidationError);
    }
    SUBCASE("n triples give 2n edges") {
        const KnowledgeGraph kg = augment_inverses(parse("a\tr\tb\nb\tr\tc\nc\ts\ta\n"));
        CHECK(kg.edge_count() == 6);
    }
}

TEST_CASE("augment: valid and test stay out of the index") {
    const KnowledgeGraph kg = kgi::testing::split_kg_of({{"a", "r", "b"}}, {{"b", "r", "c"}}, {{"c", "r", "a"}});
    const RelationId r = kg.relation("r");
    CHECK(kg.has_edge(kg.entity("a"), r, kg.entity("b")));
    CHECK_FALSE(kg.has_edge(kg.entity("b"), r, kg.entity("c")));
    CHECK_FALSE(kg.has_edge(kg.entity("c"), r, kg.entity("a")));
    CHECK(kg.is_known_fact({kg.entity("c"), r, kg.entity("a")}));
    CHECK(kg.valid().size() == 1);
    CHECK(kg.test().size() == 1);
}

TEST_CASE("load_kg_split: cross-file duplicate stays in the first partition") {
    const KnowledgeGraph kg =
        kgi::testing::split_kg_of({{"a", "r", "b"}}, {{"a", "r", "b"}, {"b", "r", "c"}}, {{"b", "r", "c"}});
    CHECK(kg.train().size() == 1);
    CHECK(kg.valid().size() == 1);
    CHECK(kg.test().empty());
    CHECK(kg.load_report().duplicates == 2);
}

TEST_CASE("adjacency index reconstructs the augmented train set") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 25; ++round) {
        const auto triples = kgi::testing::random_triples(rng);
        const KnowledgeGraph kg = kgi::testing::train_kg(triples);
        std::set<std::tuple<std::string, std::string, std::string>> expected;
        for (const auto& [h, r, t] : triples) {
            expected.emplace(h, r, t);
            expected.emplace(t, r + "^-1", h);
        }
        std::set<std::tuple<std::string, std::string, std::string>> from_out, from_neighbors, from_in;
        for (std::uint32_t e = 0; e < kg.entity_count(); ++e) {
            const auto edges = kg.out_edges(EntityId{e});
            for (std::size_t i = 0; i < edges.size(); ++i) {
                from_out.emplace(kg.entity_name(EntityId{e}), kg.relation_name(edges.relations[i]),
                                 kg.entity_name(edges.entities[i]));
            }
            const auto in = kg.in_edges(EntityId{e});
            for (std::size_t i = 0; i < in.size(); ++i) {
                from_in.emplace(kg.entity_name(in.entities[i]), kg.relation_name(in.relations[i]),
                                kg.entity_name(EntityId{e}));
            }
            for (std::uint32_t r = 0; r < kg.relation_count() * 2; ++r) {
                for (EntityId t : kg.neighbors(EntityId{e}, RelationId{r})) {
                    from_neighbors.emplace(kg.entity_name(EntityId{e}), kg.relation_name(RelationId{r}),
                                           kg.entity_name(t));
                }
            }
        }
        CHECK(from_out == expected);
        CHECK(from_in == expected);
        CHECK(from_neighbors == expected);
        CHECK(kg.edge_count() == expected.size());
    }
}

TEST_CASE("relation frequency counts train triples of the base") {
    const KnowledgeGraph kg = kgi::testing::train_kg({{"a", "r", "b"}, {"b", "r", "c"}, {"a", "s", "c"}});
    CHECK(kg.relation_frequency(kg.relation("r")) == 2);
    CHECK(kg.relation_frequency(kg.relation("r^-1")) == 2);
    CHECK(kg.relation_frequency(kg.relation("s")) == 1);
}

TEST_CASE("write_triples_tsv round-trips") {
    const KnowledgeGraph kg = parse("a\tr\tb\nb\ts\tc\n");
    std::ostringstream out;
    write_triples_tsv(out, kg, kg.train());
    const KnowledgeGraph again = parse(out.str());
    CHECK(again.triple_count() == 2);
    CHECK(again.entity_count() == 3);
}

TEST_CASE("missing file") { CHECK_THROWS_AS(load_kg_file("/nonexistent/kg.tsv"), FileError); }
