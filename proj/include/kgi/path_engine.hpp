#pragma once

// Bounded walk enumeration between entity pairs over the indexed train graph.

#include <compare>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kgi/kg_store.hpp"

namespace kgi {

inline constexpr int kDefaultMaxHops = 3;

struct Step {
    RelationId relation;
    EntityId entity;
    friend constexpr auto operator<=>(const Step&, const Step&) = default;
};

// A grounded walk head -r1-> e1 -r2-> ... -rn-> en; the target is en.
struct Path {
    EntityId head;
    std::vector<Step> steps;

    std::size_t length() const { return steps.size(); }
    bool empty() const { return steps.empty(); }
    EntityId target() const { return steps.empty() ? head : steps.back().entity; }

    friend bool operator==(const Path&, const Path&) = default;
    // Canonical order: shorter first, then head, then steps lexicographically.
    friend std::strong_ordering operator<=>(const Path& a, const Path& b) {
        if (auto c = a.steps.size() <=> b.steps.size(); c != 0) return c;
        if (auto c = a.head <=> b.head; c != 0) return c;
        return std::lexicographical_compare_three_way(a.steps.begin(), a.steps.end(), b.steps.begin(),
                                                      b.steps.end());
    }
};

struct PathSet {
    Triple query;
    std::vector<Path> paths;  // canonical order, no duplicates
};

struct EnumerateOptions {
    int max_hops = kDefaultMaxHops;
    // Never step along (h, r, t) or (t, r^-1, h) of the query itself.
    bool exclude_query_edge = true;
};

// Every walk of 1..max_hops steps from query.head to query.tail. Entity
// revisits and immediate backtracking are allowed. Throws LookupError for
// ids outside the KG and ValidationError for max_hops < 1.
PathSet enumerate_paths(const KnowledgeGraph& kg, const Triple& query, const EnumerateOptions& options = {});

// True if path starts at from, ends at to, has at least one step and every
// step is an edge of the indexed graph.
bool is_valid_walk(const KnowledgeGraph& kg, const Path& path, EntityId from, EntityId to);

// The Cnt indicator: 1 if any claimed path is a valid walk head -> tail.
int cnt(const KnowledgeGraph& kg, const Triple& query, std::span<const Path> claimed);

struct QueryFailure {
    std::size_t index = 0;
    std::string message;
};

struct PathCollection {
    std::vector<PathSet> sets;  // one per input query, input order
    std::vector<QueryFailure> failures;
    std::size_t total_paths = 0;
};

struct CollectOptions {
    EnumerateOptions enumerate;
    unsigned threads = 0;  // 0 = hardware concurrency
    // Called with (queries done, total) from worker threads.
    std::function<void(std::size_t, std::size_t)> progress;
};

// enumerate_paths over a batch. A failing query leaves an empty PathSet in
// its slot and is listed in failures; the rest of the batch still runs.
PathCollection collect_all_paths(const KnowledgeGraph& kg, std::span<const Triple> queries,
                                 const CollectOptions& options = {});

}  // namespace kgi
