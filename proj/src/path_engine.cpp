#include "kgi/path_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>

#include "kgi/error.hpp"
#include "kgi/parallel.hpp"

namespace kgi {

namespace {

constexpr std::uint8_t kUnreached = std::numeric_limits<std::uint8_t>::max();

// Hop distance from every entity to target, up to `limit` hops, following
// edges backwards.
std::vector<std::uint8_t> distances_to(const KnowledgeGraph& kg, EntityId target, int limit) {
    std::vector<std::uint8_t> dist(kg.entity_count(), kUnreached);
    std::vector<EntityId> frontier{target};
    dist[target.value] = 0;
    for (int d = 1; d <= limit && !frontier.empty(); ++d) {
        std::vector<EntityId> next;
        for (EntityId v : frontier) {
            for (EntityId u : kg.in_edges(v).entities) {
                if (dist[u.value] == kUnreached) {
                    dist[u.value] = static_cast<std::uint8_t>(d);
                    next.push_back(u);
                }
            }
        }
        frontier = std::move(next);
    }
    return dist;
}

class WalkEnumerator {
public:
    WalkEnumerator(const KnowledgeGraph& kg, const Triple& query, const EnumerateOptions& options)
        : kg_(kg), query_(query), options_(options),
          dist_(distances_to(kg, query.tail, options.max_hops - 1)) {
        current_.head = query.head;
    }

    std::vector<Path> run() {
        extend(query_.head);
        return std::move(found_);
    }

private:
    bool excluded(EntityId from, RelationId r, EntityId to) const {
        if (!options_.exclude_query_edge) return false;
        return (from == query_.head && r == query_.relation && to == query_.tail) ||
               (from == query_.tail && r == query_.relation.inverse() && to == query_.head);
    }

    void extend(EntityId at) {
        const int depth = static_cast<int>(current_.steps.size());
        if (depth > 0 && at == query_.tail) found_.push_back(current_);
        if (depth == options_.max_hops) return;
        const int remaining = options_.max_hops - depth - 1;
        const auto edges = kg_.out_edges(at);
        for (std::size_t i = 0; i < edges.size(); ++i) {
            const EntityId next = edges.entities[i];
            if (dist_[next.value] == kUnreached || dist_[next.value] > remaining) continue;
            const RelationId r = edges.relations[i];
            if (excluded(at, r, next)) continue;
            current_.steps.push_back({r, next});
            extend(next);
            current_.steps.pop_back();
        }
    }

    const KnowledgeGraph& kg_;
    Triple query_;
    EnumerateOptions options_;
    std::vector<std::uint8_t> dist_;
    Path current_;
    std::vector<Path> found_;
};

}  // namespace

PathSet enumerate_paths(const KnowledgeGraph& kg, const Triple& query, const EnumerateOptions& options) {
    if (options.max_hops < 1) throw ValidationError("max_hops must be >= 1");
    if (options.max_hops > 250) throw ValidationError("max_hops too large");
    if (!kg.valid_entity(query.head)) throw LookupError("unknown head entity id " + std::to_string(query.head.value));
    if (!kg.valid_entity(query.tail)) throw LookupError("unknown tail entity id " + std::to_string(query.tail.value));

    PathSet out{query, WalkEnumerator(kg, query, options).run()};
    std::sort(out.paths.begin(), out.paths.end());
    out.paths.erase(std::unique(out.paths.begin(), out.paths.end()), out.paths.end());
    return out;
}

bool is_valid_walk(const KnowledgeGraph& kg, const Path& path, EntityId from, EntityId to) {
    if (path.empty() || path.head != from || path.target() != to) return false;
    EntityId at = path.head;
    for (const Step& s : path.steps) {
        if (!kg.valid_entity(at) || !kg.valid_relation(s.relation)) return false;
        if (!kg.has_edge(at, s.relation, s.entity)) return false;
        at = s.entity;
    }
    return true;
}

int cnt(const KnowledgeGraph& kg, const Triple& query, std::span<const Path> claimed) {
    for (const Path& p : claimed) {
        if (is_valid_walk(kg, p, query.head, query.tail)) return 1;
    }
    return 0;
}

PathCollection collect_all_paths(const KnowledgeGraph& kg, std::span<const Triple> queries,
                                 const CollectOptions& options) {
    PathCollection out;
    out.sets.resize(queries.size());
    std::vector<std::string> errors(queries.size());
    std::vector<char> failed(queries.size(), 0);
    std::atomic<std::size_t> done{0};

    parallel_for(queries.size(), options.threads, [&](std::size_t i) {
        try {
            out.sets[i] = enumerate_paths(kg, queries[i], options.enumerate);
        } catch (const Error& e) {
            out.sets[i] = PathSet{queries[i], {}};
            failed[i] = 1;
            errors[i] = e.what();
        }
        const std::size_t n = ++done;
        if (options.progress) options.progress(n, queries.size());
    });

    for (std::size_t i = 0; i < queries.size(); ++i) {
        if (failed[i]) out.failures.push_back({i, std::move(errors[i])});
        out.total_paths += out.sets[i].paths.size();
    }
    return out;
}

}  // namespace kgi
