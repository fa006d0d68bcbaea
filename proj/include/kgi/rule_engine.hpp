#pragma once

// Chain Horn rules r(X,Y) <- r1(X,A1) ^ ... ^ rn(A(n-1),Y): abstraction from
// paths, grounding statistics, matching and max-aggregation ranking.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "kgi/kg_store.hpp"
#include "kgi/path_engine.hpp"

namespace kgi {

struct Rule {
    RelationId head;
    std::vector<RelationId> body;

    std::size_t length() const { return body.size(); }
    friend bool operator==(const Rule&, const Rule&) = default;
    friend auto operator<=>(const Rule&, const Rule&) = default;
};

}  // namespace kgi

template <>
struct std::hash<kgi::Rule> {
    std::size_t operator()(const kgi::Rule& r) const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ull ^ r.head.value;
        for (kgi::RelationId b : r.body) h = (h ^ b.value) * 0x100000001b3ull;
        return static_cast<std::size_t>(h);
    }
};

namespace kgi {

struct RuleStats {
    std::uint64_t support = 0;     // distinct (X,Y) body groundings with the head triple in train
    std::uint64_t body_count = 0;  // distinct (X,Y) body groundings
    std::uint64_t head_count = 0;  // train triples carrying the head relation
    std::optional<double> confidence;     // undefined when body_count == 0
    std::optional<double> head_coverage;  // undefined when head_count == 0
    bool approximate = false;             // counts extrapolated from a sample
};

enum class RuleProvenance { kAbstracted, kMined };

struct RuleEntry {
    std::optional<RuleStats> stats;
    std::size_t path_count = 0;  // paths abstracting to the rule
};

class RuleSet {
public:
    explicit RuleSet(RuleProvenance provenance = RuleProvenance::kAbstracted) : provenance_(provenance) {}

    RuleProvenance provenance() const { return provenance_; }
    void set_provenance(RuleProvenance p) { provenance_ = p; }

    // Inserts the rule if absent and adds path_count to its tally.
    RuleEntry& add(const Rule& rule, std::size_t path_count = 0);
    void set_stats(const Rule& rule, const RuleStats& stats);

    bool contains(const Rule& rule) const { return entries_.contains(rule); }
    const RuleEntry* find(const Rule& rule) const;
    std::optional<double> confidence(const Rule& rule) const;

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    using Map = std::map<Rule, RuleEntry>;
    Map::const_iterator begin() const { return entries_.begin(); }
    Map::const_iterator end() const { return entries_.end(); }
    Map::iterator begin() { return entries_.begin(); }
    Map::iterator end() { return entries_.end(); }

private:
    RuleProvenance provenance_;
    Map entries_;
};

// Drops the entities of a path: head_relation(X,Y) <- r1(X,A1) ^ ... ^ rn(.,Y).
// Throws ValidationError on an empty path.
Rule abstract_path(const Path& path, RelationId head_relation);

// One rule per distinct relation sequence per query relation, with path counts.
RuleSet abstract_all(std::span<const PathSet> path_sets);

struct StatsOptions {
    // 0 = exact. Otherwise body groundings are drawn from heads visited in a
    // seeded random order until about pair_cap pairs are seen, and the
    // counts are scaled up to the full head population.
    std::uint64_t pair_cap = 0;
    std::uint64_t seed = 0;
};

RuleStats compute_stats(const KnowledgeGraph& kg, const Rule& rule, const StatsOptions& options = {});

// Fills stats for every rule lacking them, in parallel.
void compute_all_stats(const KnowledgeGraph& kg, RuleSet& rules, const StatsOptions& options = {},
                       unsigned threads = 0);

struct MiningOptions {
    double min_confidence = 0.001;
    double min_head_coverage = 0.001;
    StatsOptions stats;
    unsigned threads = 0;
};

// Candidates with defined stats meeting both thresholds (>=). Stats missing
// on candidates are computed first.
RuleSet mine_ruleset(const KnowledgeGraph& kg, const RuleSet& candidates, const MiningOptions& options = {});

struct RuleGrounding {
    EntityId tail;
    Path path;
};

// All body groundings from head, in canonical path order. Throws
// ValidationError if relation differs from the rule head.
std::vector<RuleGrounding> match_rule(const KnowledgeGraph& kg, const Rule& rule, EntityId head,
                                      RelationId relation);

struct ScoredRule {
    Rule rule;
    double confidence = 0;
};

struct RankedTail {
    EntityId tail;
    std::vector<double> confidences;  // one per distinct firing rule, descending
    Path best_path;                   // witness from the highest-confidence rule
    Rule best_rule;
};

// Max aggregation: tails ordered by descending confidence vectors compared
// lexicographically (a vector that extends an equal prefix ranks higher),
// then by ascending tail id. top_k == 0 keeps every tail. A rule listed more
// than once counts once, at its highest confidence.
std::vector<RankedTail> rank_tails_max_aggregation(const KnowledgeGraph& kg, std::span<const ScoredRule> rules,
                                                   EntityId head, RelationId relation, std::size_t top_k = 0);
std::vector<RankedTail> rank_tails_max_aggregation(const KnowledgeGraph& kg, const RuleSet& mined, EntityId head,
                                                   RelationId relation, std::size_t top_k = 0);

// Strict "ranks before" on descending confidence vectors.
bool confidence_vector_before(std::span<const double> a, std::span<const double> b);

}  // namespace kgi
