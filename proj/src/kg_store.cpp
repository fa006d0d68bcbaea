#include "kgi/kg_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

#include "kgi/error.hpp"
#include "kgi/random.hpp"

namespace kgi {

namespace {

bool ends_with_marker(std::string_view name) {
    return name.size() >= kInverseMarker.size() &&
           name.substr(name.size() - kInverseMarker.size()) == kInverseMarker;
}

struct RawTriple {
    std::string_view head;
    std::string_view relation;
    std::string_view tail;
};

RawTriple parse_line(std::string_view line, std::size_t line_no) {
    std::string_view fields[3];
    std::size_t count = 0;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', start);
        const std::string_view field =
            line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start);
        if (count < 3) fields[count] = field;
        ++count;
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    if (count != 3) {
        throw ParseError("expected 3 tab-separated fields, found " + std::to_string(count), line_no);
    }
    if (fields[0].empty() || fields[2].empty()) throw ParseError("empty entity name", line_no);
    if (fields[1].empty()) throw ParseError("empty relation name", line_no);
    if (ends_with_marker(fields[1])) {
        throw ParseError("relation name uses the reserved inverse suffix '" +
                             std::string(kInverseMarker) + "'",
                         line_no);
    }
    return {fields[0], fields[1], fields[2]};
}

// Calls fn(raw, line_no) for every non-empty line.
template <typename Fn>
std::size_t for_each_line(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t non_empty = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
        if (view.empty()) continue;
        ++non_empty;
        fn(parse_line(view, line_no), line_no);
    }
    if (in.bad()) throw FileError("read failure at line " + std::to_string(line_no + 1));
    return non_empty;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open input file: " + path);
    return in;
}

}  // namespace

std::string KnowledgeGraph::relation_name(RelationId r) const {
    const std::string& base = relation_names_.at(r.base());
    return r.is_inverse() ? base + std::string(kInverseMarker) : base;
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view name) const {
    const auto it = entity_index_.find(std::string(name));
    if (it == entity_index_.end()) return std::nullopt;
    return EntityId{it->second};
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view name) const {
    bool inverse = false;
    if (ends_with_marker(name)) {
        inverse = true;
        name.remove_suffix(kInverseMarker.size());
    }
    const auto it = relation_index_.find(std::string(name));
    if (it == relation_index_.end()) return std::nullopt;
    return RelationId::base_of(it->second, inverse);
}

EntityId KnowledgeGraph::entity(std::string_view name) const {
    if (auto e = find_entity(name)) return *e;
    throw LookupError("unknown entity: " + std::string(name));
}

RelationId KnowledgeGraph::relation(std::string_view name) const {
    if (auto r = find_relation(name)) return *r;
    throw LookupError("unknown relation: " + std::string(name));
}

std::span<const Triple> KnowledgeGraph::partition(Partition p) const {
    switch (p) {
        case Partition::kTrain: return train_;
        case Partition::kValid: return valid_;
        case Partition::kTest: return test_;
    }
    return {};
}

EntityId KnowledgeGraph::intern_entity(std::string_view name) {
    auto [it, inserted] =
        entity_index_.try_emplace(std::string(name), static_cast<std::uint32_t>(entity_names_.size()));
    if (inserted) entity_names_.emplace_back(name);
    return EntityId{it->second};
}

RelationId KnowledgeGraph::intern_relation(std::string_view name) {
    auto [it, inserted] = relation_index_.try_emplace(std::string(name),
                                                      static_cast<std::uint32_t>(relation_names_.size()));
    if (inserted) relation_names_.emplace_back(name);
    return RelationId::base_of(it->second);
}

KnowledgeGraph::Edges KnowledgeGraph::slice(const Csr& csr, EntityId node) {
    if (node.value + 1 >= csr.offsets.size()) return {};
    const std::size_t lo = csr.offsets[node.value];
    const std::size_t hi = csr.offsets[node.value + 1];
    return {std::span<const RelationId>(csr.relation).subspan(lo, hi - lo),
            std::span<const EntityId>(csr.other).subspan(lo, hi - lo)};
}

KnowledgeGraph::Edges KnowledgeGraph::out_edges(EntityId head) const { return slice(out_, head); }
KnowledgeGraph::Edges KnowledgeGraph::in_edges(EntityId tail) const { return slice(in_, tail); }

std::span<const EntityId> KnowledgeGraph::neighbors(EntityId head, RelationId relation) const {
    const Edges edges = out_edges(head);
    const auto lo = std::lower_bound(edges.relations.begin(), edges.relations.end(), relation);
    const auto hi = std::upper_bound(lo, edges.relations.end(), relation);
    const std::size_t first = static_cast<std::size_t>(lo - edges.relations.begin());
    return edges.entities.subspan(first, static_cast<std::size_t>(hi - lo));
}

bool KnowledgeGraph::has_edge(EntityId head, RelationId relation, EntityId tail) const {
    const auto tails = neighbors(head, relation);
    return std::binary_search(tails.begin(), tails.end(), tail);
}

std::size_t KnowledgeGraph::relation_frequency(RelationId r) const {
    return r.base() < relation_frequency_.size() ? relation_frequency_[r.base()] : 0;
}

bool KnowledgeGraph::is_known_fact(const Triple& t) const { return facts_.contains(t); }

void KnowledgeGraph::rebuild_index() {
    std::vector<Triple> edges(train_.begin(), train_.end());
    if (augmented_) {
        edges.reserve(train_.size() * 2);
        for (const Triple& t : train_) edges.push_back({t.tail, t.relation.inverse(), t.head});
    }

    relation_frequency_.assign(relation_names_.size(), 0);
    for (const Triple& t : train_) ++relation_frequency_[t.relation.base()];

    facts_.clear();
    facts_.reserve(triple_count());
    for (auto part : {&train_, &valid_, &test_}) facts_.insert(part->begin(), part->end());

    const std::size_t n = entity_names_.size();
    auto build = [n](std::vector<Triple>& sorted, Csr& csr, bool reversed) {
        auto key = [reversed](const Triple& t) {
            return reversed ? std::tuple(t.tail, t.relation, t.head) : std::tuple(t.head, t.relation, t.tail);
        };
        std::sort(sorted.begin(), sorted.end(), [&](const Triple& a, const Triple& b) { return key(a) < key(b); });
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        csr.offsets.assign(n + 1, 0);
        csr.relation.resize(sorted.size());
        csr.other.resize(sorted.size());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const Triple& t = sorted[i];
            const EntityId node = reversed ? t.tail : t.head;
            ++csr.offsets[node.value + 1];
            csr.relation[i] = t.relation;
            csr.other[i] = reversed ? t.head : t.tail;
        }
        for (std::size_t i = 0; i < n; ++i) csr.offsets[i + 1] += csr.offsets[i];
    };
    build(edges, out_, false);
    build(edges, in_, true);
}

KnowledgeGraph load_kg(std::istream& in, KgFormat format) {
    if (format != KgFormat::kTsv) throw ValidationError("unsupported KG format");
    KnowledgeGraph kg;
    std::unordered_set<Triple> seen;
    kg.report_.lines = for_each_line(in, [&](const RawTriple& raw, std::size_t) {
        const Triple t{kg.intern_entity(raw.head), kg.intern_relation(raw.relation), kg.intern_entity(raw.tail)};
        if (seen.insert(t).second) {
            kg.train_.push_back(t);
        } else {
            ++kg.report_.duplicates;
        }
    });
    kg.report_.entities = kg.entity_count();
    kg.report_.relations = kg.relation_count();
    kg.report_.triples = kg.train_.size();
    kg.rebuild_index();
    return kg;
}

KnowledgeGraph load_kg_file(const std::string& path) {
    auto in = open_input(path);
    return load_kg(in, KgFormat::kTsv);
}

KnowledgeGraph load_kg_split(std::istream& train, std::istream& valid, std::istream& test) {
    KnowledgeGraph kg;
    std::unordered_set<Triple> seen;
    auto read = [&](std::istream& in, std::vector<Triple>& part) {
        kg.report_.lines += for_each_line(in, [&](const RawTriple& raw, std::size_t) {
            const Triple t{kg.intern_entity(raw.head), kg.intern_relation(raw.relation),
                           kg.intern_entity(raw.tail)};
            if (seen.insert(t).second) {
                part.push_back(t);
            } else {
                ++kg.report_.duplicates;
            }
        });
    };
    read(train, kg.train_);
    read(valid, kg.valid_);
    read(test, kg.test_);
    kg.split_ = true;
    kg.report_.entities = kg.entity_count();
    kg.report_.relations = kg.relation_count();
    kg.report_.triples = kg.triple_count();
    kg.rebuild_index();
    return kg;
}

KnowledgeGraph load_kg_split_files(const std::string& train, const std::string& valid, const std::string& test) {
    auto a = open_input(train);
    auto b = open_input(valid);
    auto c = open_input(test);
    return load_kg_split(a, b, c);
}

KnowledgeGraph split_kg(const KnowledgeGraph& kg, const SplitRatios& ratios, std::uint64_t seed) {
    if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0) {
        throw ValidationError("split ratios must be non-negative");
    }
    if (std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
        throw ValidationError("split ratios must sum to 1");
    }
    if (kg.augmented_) throw ValidationError("cannot re-split a KG after inverse augmentation");

    std::vector<Triple> all;
    all.reserve(kg.triple_count());
    for (auto part : {&kg.train_, &kg.valid_, &kg.test_}) all.insert(all.end(), part->begin(), part->end());

    Rng rng(seed);
    rng.shuffle(all);

    const std::size_t n = all.size();
    // The epsilon keeps exact products such as 100 * 0.05 from flooring down.
    auto cut = [n](double ratio) {
        return std::min<std::size_t>(n, static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9)));
    };
    const std::size_t n_valid = cut(ratios.valid);
    const std::size_t n_test = std::min(n - n_valid, cut(ratios.test));

    KnowledgeGraph out = kg;
    out.valid_.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_valid));
    out.test_.assign(all.begin() + static_cast<std::ptrdiff_t>(n_valid),
                     all.begin() + static_cast<std::ptrdiff_t>(n_valid + n_test));
    out.train_.assign(all.begin() + static_cast<std::ptrdiff_t>(n_valid + n_test), all.end());
    out.split_ = true;
    out.rebuild_index();
    return out;
}

KnowledgeGraph augment_inverses(const KnowledgeGraph& kg) {
    if (kg.augmented_) throw ValidationError("inverse relations already present");
    KnowledgeGraph out = kg;
    out.augmented_ = true;
    out.rebuild_index();
    return out;
}

void write_triples_tsv(std::ostream& out, const KnowledgeGraph& kg, std::span<const Triple> triples) {
    for (const Triple& t : triples) {
        out << kg.entity_name(t.head) << '\t' << kg.relation_name(t.relation) << '\t' << kg.entity_name(t.tail)
            << '\n';
    }
}

}  // namespace kgi
