#pragma once

// Interned, indexed knowledge-graph triples with train/valid/test partitions.
//
// Relation ids interleave base and inverse relations: base relation b has id
// 2b and its inverse r^-1 has id 2b+1, so inverse(inverse(r)) == r is a bit
// flip. Inverse ids only appear in the adjacency index after
// augment_inverses().

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgi {

struct EntityId {
    std::uint32_t value = 0;
    friend constexpr auto operator<=>(EntityId, EntityId) = default;
};

struct RelationId {
    std::uint32_t value = 0;

    static constexpr RelationId base_of(std::uint32_t base, bool inverse = false) {
        return RelationId{(base << 1) | (inverse ? 1u : 0u)};
    }
    constexpr bool is_inverse() const { return (value & 1u) != 0; }
    constexpr RelationId inverse() const { return RelationId{value ^ 1u}; }
    constexpr std::uint32_t base() const { return value >> 1; }

    friend constexpr auto operator<=>(RelationId, RelationId) = default;
};

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;
    friend constexpr auto operator<=>(const Triple&, const Triple&) = default;
};

}  // namespace kgi

template <>
struct std::hash<kgi::EntityId> {
    std::size_t operator()(kgi::EntityId e) const noexcept { return std::hash<std::uint32_t>{}(e.value); }
};

template <>
struct std::hash<kgi::RelationId> {
    std::size_t operator()(kgi::RelationId r) const noexcept { return std::hash<std::uint32_t>{}(r.value); }
};

template <>
struct std::hash<kgi::Triple> {
    std::size_t operator()(const kgi::Triple& t) const noexcept {
        std::uint64_t h = (static_cast<std::uint64_t>(t.head.value) << 32) | t.tail.value;
        h ^= static_cast<std::uint64_t>(t.relation.value) * 0x9E3779B97F4A7C15ull;
        return std::hash<std::uint64_t>{}(h);
    }
};

namespace kgi {

// Suffix naming the synthetic inverse of a relation. Rejected in input files.
inline constexpr std::string_view kInverseMarker = "^-1";

enum class Partition : std::uint8_t { kTrain, kValid, kTest };

struct LoadReport {
    std::size_t lines = 0;       // non-empty lines read
    std::size_t duplicates = 0;  // lines dropped as exact repeats
    std::size_t entities = 0;
    std::size_t relations = 0;
    std::size_t triples = 0;
};

struct SplitRatios {
    double train = 0.9;
    double valid = 0.05;
    double test = 0.05;
};

enum class KgFormat { kTsv };

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    std::size_t entity_count() const { return entity_names_.size(); }
    // Number of base relations; the augmented graph uses twice as many ids.
    std::size_t relation_count() const { return relation_names_.size(); }
    std::size_t triple_count() const { return train_.size() + valid_.size() + test_.size(); }

    const std::string& entity_name(EntityId e) const { return entity_names_.at(e.value); }
    std::string relation_name(RelationId r) const;

    std::optional<EntityId> find_entity(std::string_view name) const;
    // Accepts "name^-1" for inverse relations.
    std::optional<RelationId> find_relation(std::string_view name) const;
    // Throwing variants (LookupError).
    EntityId entity(std::string_view name) const;
    RelationId relation(std::string_view name) const;

    bool valid_entity(EntityId e) const { return e.value < entity_names_.size(); }
    bool valid_relation(RelationId r) const { return r.base() < relation_names_.size(); }

    std::span<const Triple> train() const { return train_; }
    std::span<const Triple> valid() const { return valid_; }
    std::span<const Triple> test() const { return test_; }
    std::span<const Triple> partition(Partition p) const;

    bool is_split() const { return split_; }
    bool is_augmented() const { return augmented_; }
    const LoadReport& load_report() const { return report_; }

    // Adjacency of the indexed train graph (augmented once inverses are added).
    struct Edges {
        std::span<const RelationId> relations;
        std::span<const EntityId> entities;
        std::size_t size() const { return relations.size(); }
    };
    Edges out_edges(EntityId head) const;
    Edges in_edges(EntityId tail) const;
    std::span<const EntityId> neighbors(EntityId head, RelationId relation) const;
    bool has_edge(EntityId head, RelationId relation, EntityId tail) const;
    bool has_edge(const Triple& t) const { return has_edge(t.head, t.relation, t.tail); }
    std::size_t edge_count() const { return out_.relation.size(); }

    // Train triples carrying relation r (inverse ids count their base).
    std::size_t relation_frequency(RelationId r) const;

    // True if t is in any partition (for filtered ranking).
    bool is_known_fact(const Triple& t) const;

    friend KnowledgeGraph load_kg(std::istream& in, KgFormat format);
    friend KnowledgeGraph load_kg_split(std::istream& train, std::istream& valid, std::istream& test);
    friend KnowledgeGraph split_kg(const KnowledgeGraph& kg, const SplitRatios& ratios,
                                   std::uint64_t seed);
    friend KnowledgeGraph augment_inverses(const KnowledgeGraph& kg);

private:
    struct Csr {
        std::vector<std::uint32_t> offsets;  // entity_count + 1
        std::vector<RelationId> relation;    // sorted by (node, relation, other)
        std::vector<EntityId> other;
    };

    EntityId intern_entity(std::string_view name);
    RelationId intern_relation(std::string_view name);
    void rebuild_index();
    static Edges slice(const Csr& csr, EntityId node);

    std::vector<std::string> entity_names_;
    std::unordered_map<std::string, std::uint32_t> entity_index_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, std::uint32_t> relation_index_;

    std::vector<Triple> train_;
    std::vector<Triple> valid_;
    std::vector<Triple> test_;
    std::vector<std::size_t> relation_frequency_;  // per base relation, over train
    std::unordered_set<Triple> facts_;             // union of all partitions

    Csr out_;
    Csr in_;
    bool split_ = false;
    bool augmented_ = false;
    LoadReport report_;
};

// Reads one triple per line, head<TAB>relation<TAB>tail. Everything loaded
// lands in the train partition until split_kg() is applied.
KnowledgeGraph load_kg(std::istream& in, KgFormat format = KgFormat::kTsv);
KnowledgeGraph load_kg_file(const std::string& path);

// Pre-split corpus. A triple repeated across files is kept in the first
// partition it appears in (train, then valid, then test) and counted as a
// duplicate.
KnowledgeGraph load_kg_split(std::istream& train, std::istream& valid, std::istream& test);
KnowledgeGraph load_kg_split_files(const std::string& train, const std::string& valid,
                                   const std::string& test);

// Deterministic shuffle-and-cut of every triple in kg. valid and test get
// floor(n * ratio); the remainder goes to train.
KnowledgeGraph split_kg(const KnowledgeGraph& kg, const SplitRatios& ratios, std::uint64_t seed);

// Adds (t, r^-1, h) for every train triple (h, r, t) to the adjacency index.
KnowledgeGraph augment_inverses(const KnowledgeGraph& kg);

void write_triples_tsv(std::ostream& out, const KnowledgeGraph& kg, std::span<const Triple> triples);

}  // namespace kgi

