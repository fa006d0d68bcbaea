#include "kgi/rule_engine.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "kgi/error.hpp"
#include "kgi/parallel.hpp"
#include "kgi/random.hpp"

namespace kgi {

RuleEntry& RuleSet::add(const Rule& rule, std::size_t path_count) {
    RuleEntry& entry = entries_[rule];
    entry.path_count += path_count;
    return entry;
}

void RuleSet::set_stats(const Rule& rule, const RuleStats& stats) { entries_[rule].stats = stats; }

const RuleEntry* RuleSet::find(const Rule& rule) const {
    const auto it = entries_.find(rule);
    return it == entries_.end() ? nullptr : &it->second;
}

std::optional<double> RuleSet::confidence(const Rule& rule) const {
    const RuleEntry* entry = find(rule);
    if (entry == nullptr || !entry->stats) return std::nullopt;
    return entry->stats->confidence;
}

Rule abstract_path(const Path& path, RelationId head_relation) {
    if (path.empty()) throw ValidationError("cannot abstract an empty path");
    Rule rule{head_relation, {}};
    rule.body.reserve(path.length());
    for (const Step& s : path.steps) rule.body.push_back(s.relation);
    return rule;
}

RuleSet abstract_all(std::span<const PathSet> path_sets) {
    RuleSet rules(RuleProvenance::kAbstracted);
    for (const PathSet& set : path_sets) {
        for (const Path& p : set.paths) rules.add(abstract_path(p, set.query.relation), 1);
    }
    return rules;
}

namespace {

void check_rule(const KnowledgeGraph& kg, const Rule& rule) {
    if (rule.body.empty()) throw ValidationError("rule body is empty");
    if (!kg.valid_relation(rule.head)) throw LookupError("rule head relation not in KG");
    for (RelationId r : rule.body) {
        if (!kg.valid_relation(r)) throw LookupError("rule body relation not in KG");
    }
}

// Distinct endpoints Y of body chains starting at X, using an epoch-stamped
// visited array so no per-head clearing is needed.
class ChainWalker {
public:
    explicit ChainWalker(const KnowledgeGraph& kg) : kg_(kg), stamp_(kg.entity_count(), 0) {}

    const std::vector<EntityId>& endpoints(EntityId x, std::span<const RelationId> body) {
        frontier_.assign(1, x);
        for (RelationId r : body) {
            next_.clear();
            ++epoch_;
            for (EntityId u : frontier_) {
                for (EntityId v : kg_.neighbors(u, r)) {
                    if (stamp_[v.value] != epoch_) {
                        stamp_[v.value] = epoch_;
                        next_.push_back(v);
                    }
                }
            }
            frontier_.swap(next_);
            if (frontier_.empty()) break;
        }
        return frontier_;
    }

private:
    const KnowledgeGraph& kg_;
    std::vector<std::uint32_t> stamp_;
    std::uint32_t epoch_ = 0;
    std::vector<EntityId> frontier_;
    std::vector<EntityId> next_;
};

}  // namespace

RuleStats compute_stats(const KnowledgeGraph& kg, const Rule& rule, const StatsOptions& options) {
    check_rule(kg, rule);
    RuleStats stats;
    stats.head_count = kg.relation_frequency(rule.head);

    std::vector<EntityId> heads;
    for (std::uint32_t e = 0; e < kg.entity_count(); ++e) {
        if (!kg.neighbors(EntityId{e}, rule.body.front()).empty()) heads.push_back(EntityId{e});
    }
    if (options.pair_cap > 0) {
        Rng rng(options.seed);
        rng.shuffle(heads);
    }

    ChainWalker walker(kg);
    std::uint64_t support = 0;
    std::uint64_t body = 0;
    std::size_t visited = 0;
    for (EntityId x : heads) {
        if (options.pair_cap > 0 && body >= options.pair_cap) break;
        ++visited;
        for (EntityId y : walker.endpoints(x, rule.body)) {
            ++body;
            if (kg.has_edge(x, rule.head, y)) ++support;
        }
    }

    if (visited < heads.size()) {
        stats.approximate = true;
        const double scale = static_cast<double>(heads.size()) / static_cast<double>(visited);
        stats.support = static_cast<std::uint64_t>(std::llround(static_cast<double>(support) * scale));
        stats.body_count = static_cast<std::uint64_t>(std::llround(static_cast<double>(body) * scale));
        stats.body_count = std::max(stats.body_count, stats.support);
    } else {
        stats.support = support;
        stats.body_count = body;
    }
    if (body > 0) stats.confidence = static_cast<double>(support) / static_cast<double>(body);
    if (stats.head_count > 0) {
        stats.head_coverage =
            std::min(1.0, static_cast<double>(stats.support) / static_cast<double>(stats.head_count));
    }
    return stats;
}

void compute_all_stats(const KnowledgeGraph& kg, RuleSet& rules, const StatsOptions& options, unsigned threads) {
    std::vector<RuleSet::Map::iterator> pending;
    for (auto it = rules.begin(); it != rules.end(); ++it) {
        if (!it->second.stats) pending.push_back(it);
    }
    std::vector<RuleStats> results(pending.size());
    parallel_for(pending.size(), threads,
                 [&](std::size_t i) { results[i] = compute_stats(kg, pending[i]->first, options); });
    for (std::size_t i = 0; i < pending.size(); ++i) pending[i]->second.stats = results[i];
}

RuleSet mine_ruleset(const KnowledgeGraph& kg, const RuleSet& candidates, const MiningOptions& options) {
    if (options.min_confidence < 0 || options.min_confidence > 1 || options.min_head_coverage < 0 ||
        options.min_head_coverage > 1) {
        throw ValidationError("mining thresholds must lie in [0, 1]");
    }
    RuleSet scored = candidates;
    compute_all_stats(kg, scored, options.stats, options.threads);

    RuleSet mined(RuleProvenance::kMined);
    for (const auto& [rule, entry] : scored) {
        const RuleStats& s = *entry.stats;
        if (!s.confidence || !s.head_coverage) continue;
        if (*s.confidence >= options.min_confidence && *s.head_coverage >= options.min_head_coverage) {
            RuleEntry& out = mined.add(rule, entry.path_count);
            out.stats = s;
        }
    }
    return mined;
}

std::vector<RuleGrounding> match_rule(const KnowledgeGraph& kg, const Rule& rule, EntityId head, RelationId relation) {
    if (rule.head != relation) throw ValidationError("rule head does not match the query relation");
    check_rule(kg, rule);
    std::vector<RuleGrounding> out;
    if (!kg.valid_entity(head)) return out;

    Path current{head, {}};
    auto walk = [&](auto&& self, EntityId at) -> void {
        const std::size_t depth = current.steps.size();
        if (depth == rule.body.size()) {
            out.push_back({at, current});
            return;
        }
        const RelationId r = rule.body[depth];
        for (EntityId next : kg.neighbors(at, r)) {
            current.steps.push_back({r, next});
            self(self, next);
            current.steps.pop_back();
        }
    };
    walk(walk, head);
    // Neighbor lists are sorted, so DFS order is already canonical.
    return out;
}

bool confidence_vector_before(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] != b[i]) return a[i] > b[i];
    }
    return a.size() > b.size();
}

std::vector<RankedTail> rank_tails_max_aggregation(const KnowledgeGraph& kg, std::span<const ScoredRule> rules,
                                                   EntityId head, RelationId relation, std::size_t top_k) {
    std::vector<const ScoredRule*> firing;
    for (const ScoredRule& r : rules) {
        if (r.rule.head == relation) firing.push_back(&r);
    }
    // One entry per rule, at its highest confidence.
    std::sort(firing.begin(), firing.end(), [](const ScoredRule* a, const ScoredRule* b) {
        if (a->rule != b->rule) return a->rule < b->rule;
        return a->confidence > b->confidence;
    });
    firing.erase(std::unique(firing.begin(), firing.end(),
                             [](const ScoredRule* a, const ScoredRule* b) { return a->rule == b->rule; }),
                 firing.end());
    std::stable_sort(firing.begin(), firing.end(),
                     [](const ScoredRule* a, const ScoredRule* b) { return a->confidence > b->confidence; });

    std::vector<RankedTail> ranked;
    std::unordered_map<EntityId, std::size_t> slot;
    std::unordered_set<EntityId> seen_this_rule;
    for (const ScoredRule* r : firing) {
        seen_this_rule.clear();
        for (RuleGrounding& g : match_rule(kg, r->rule, head, relation)) {
            auto [it, inserted] = slot.try_emplace(g.tail, ranked.size());
            if (inserted) {
                ranked.push_back({g.tail, {}, std::move(g.path), r->rule});
            }
            RankedTail& entry = ranked[it->second];
            // A rule contributes once per tail however many groundings it has.
            if (seen_this_rule.insert(g.tail).second) entry.confidences.push_back(r->confidence);
        }
    }

    std::sort(ranked.begin(), ranked.end(), [](const RankedTail& a, const RankedTail& b) {
        if (confidence_vector_before(a.confidences, b.confidences)) return true;
        if (confidence_vector_before(b.confidences, a.confidences)) return false;
        return a.tail < b.tail;
    });
    if (top_k > 0 && ranked.size() > top_k) ranked.resize(top_k);
    return ranked;
}

std::vector<RankedTail> rank_tails_max_aggregation(const KnowledgeGraph& kg, const RuleSet& mined, EntityId head,
                                                   RelationId relation, std::size_t top_k) {
    std::vector<ScoredRule> rules;
    for (const auto& [rule, entry] : mined) {
        if (rule.head != relation || !entry.stats || !entry.stats->confidence) continue;
        rules.push_back({rule, *entry.stats->confidence});
    }
    return rank_tails_max_aggregation(kg, rules, head, relation, top_k);
}

}  // namespace kgi
