#pragma once

// Materialized transitive closure of the subclass-of / subproperty-of
// hierarchy. After build_closure, "is X an instance of T, directly or by
// inheritance" is a hash lookup plus a binary search.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "tablink/entity_id.hpp"
#include "tablink/error.hpp"
#include "tablink/kb_model.hpp"

namespace tablink {

class TypeClosure {
public:
    TypeClosure() = default;

    // Strict ancestors of t in ascending order; empty for unknown ids.
    std::span<const EntityId> ancestors(EntityId t) const {
        auto it = ancestors_.find(t);
        if (it == ancestors_.end()) return {};
        return it->second;
    }

    bool is_ancestor(EntityId ancestor, EntityId of) const {
        auto a = ancestors(of);
        return std::binary_search(a.begin(), a.end(), ancestor);
    }

    bool contains(EntityId t) const { return ancestors_.contains(t); }
    std::size_t size() const { return ancestors_.size(); }

    // Every type in the closure universe, ascending.
    std::vector<EntityId> types() const {
        std::vector<EntityId> out;
        out.reserve(ancestors_.size());
        for (const auto& [t, _] : ancestors_) out.push_back(t);
        std::sort(out.begin(), out.end());
        return out;
    }

    // Adds or replaces the ancestor list of a type. The list is sorted and
    // deduplicated; the type itself is removed.
    void set(EntityId t, std::vector<EntityId> anc) {
        std::sort(anc.begin(), anc.end());
        anc.erase(std::unique(anc.begin(), anc.end()), anc.end());
        std::erase(anc, t);
        ancestors_[t] = std::move(anc);
    }

    friend bool operator==(const TypeClosure&, const TypeClosure&) = default;

private:
    std::unordered_map<EntityId, std::vector<EntityId>> ancestors_;
};

struct ClosureBuild {
    TypeClosure closure;
    std::vector<TypeEdge> rejected;  // ill-kinded edges, in input order
};

namespace detail {

inline std::vector<int> merge_sorted(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace detail

// Reachability over child->parent edges with cycles collapsed by Tarjan's
// SCC algorithm. Members of a cycle are ancestors of one another but never of
// themselves. `extra_nodes` adds types with no edges (e.g. direct types of
// records) to the universe so they answer with an empty ancestor list.
inline ClosureBuild build_closure(std::span<const TypeEdge> edges, std::span<const EntityId> extra_nodes = {}) {
    ClosureBuild out;
    std::vector<EntityId> nodes(extra_nodes.begin(), extra_nodes.end());
    std::vector<TypeEdge> good;
    good.reserve(edges.size());
    for (const auto& e : edges) {
        if (!e.well_kinded()) {
            out.rejected.push_back(e);
            continue;
        }
        good.push_back(e);
        nodes.push_back(e.child);
        nodes.push_back(e.parent);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    const int n = static_cast<int>(nodes.size());
    auto index_of = [&](EntityId id) {
        return static_cast<int>(std::lower_bound(nodes.begin(), nodes.end(), id) - nodes.begin());
    };

    std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
    for (const auto& e : good) {
        int c = index_of(e.child), p = index_of(e.parent);
        if (c != p) parents[static_cast<std::size_t>(c)].push_back(p);
    }
    for (auto& ps : parents) {
        std::sort(ps.begin(), ps.end());
        ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    }

    // Iterative Tarjan. SCCs are emitted in reverse topological order of the
    // child->parent graph: every ancestor component is finished first.
    std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0),
        comp(static_cast<std::size_t>(n), -1);
    std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> components;
    int counter = 0;
    struct Frame {
        int node;
        std::size_t next;
    };
    std::vector<Frame> call;
    for (int root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] != -1) continue;
        call.push_back({root, 0});
        while (!call.empty()) {
            auto& f = call.back();
            const auto v = static_cast<std::size_t>(f.node);
            if (f.next == 0 && index[v] == -1) {
                index[v] = low[v] = counter++;
                stack.push_back(f.node);
                on_stack[v] = 1;
            }
            if (f.next < parents[v].size()) {
                const auto w = static_cast<std::size_t>(parents[v][f.next++]);
                if (index[w] == -1) {
                    call.push_back({static_cast<int>(w), 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::vector<int> members;
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = 0;
                    comp[static_cast<std::size_t>(w)] = static_cast<int>(components.size());
                    members.push_back(w);
                } while (w != f.node);
                std::sort(members.begin(), members.end());
                components.push_back(std::move(members));
            }
            const int finished = f.node;
            call.pop_back();
            if (!call.empty()) {
                const auto u = static_cast<std::size_t>(call.back().node);
                low[u] = std::min(low[u], low[static_cast<std::size_t>(finished)]);
            }
        }
    }

    // reach[c]: every node strictly above component c, excluding c's members.
    std::vector<std::vector<int>> reach(components.size());
    for (std::size_t c = 0; c < components.size(); ++c) {
        std::vector<int> acc;
        for (int m : components[c]) {
            for (int p : parents[static_cast<std::size_t>(m)]) {
                const auto pc = static_cast<std::size_t>(comp[static_cast<std::size_t>(p)]);
                if (pc == c) continue;
                acc = detail::merge_sorted(acc, components[pc]);
                acc = detail::merge_sorted(acc, reach[pc]);
            }
        }
        reach[c] = std::move(acc);
    }

    for (int v = 0; v < n; ++v) {
        const auto c = static_cast<std::size_t>(comp[static_cast<std::size_t>(v)]);
        std::vector<int> all = detail::merge_sorted(reach[c], components[c]);
        std::vector<EntityId> anc;
        anc.reserve(all.size());
        for (int a : all) {
            if (a != v) anc.push_back(nodes[static_cast<std::size_t>(a)]);
        }
        out.closure.set(nodes[static_cast<std::size_t>(v)], std::move(anc));
    }
    return out;
}

// True iff type_id is one of the record's direct types or an ancestor of one.
inline bool has_type(const ItemRecord& record, EntityId type_id, const TypeClosure& closure) {
    for (const auto& d : record.direct_types) {
        if (d == type_id || closure.is_ancestor(type_id, d)) return true;
    }
    return false;
}

// Closure file: one line per type, "<type> <ancestor> <ancestor> ...", with
// types and ancestors ascending.
inline void write_closure(std::ostream& out, const TypeClosure& closure) {
    for (const auto& t : closure.types()) {
        out << t.str();
        for (const auto& a : closure.ancestors(t)) out << ' ' << a.str();
        out << '\n';
    }
}

inline void write_closure(const std::filesystem::path& path, const TypeClosure& closure) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_closure(out, closure);
    if (!out) throw IoError("write failed for " + path.string());
}

inline TypeClosure read_closure(std::istream& in) {
    TypeClosure closure;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string tok;
        if (!(fields >> tok)) continue;
        const EntityId t = EntityId::parse(tok);
        std::vector<EntityId> anc;
        while (fields >> tok) anc.push_back(EntityId::parse(tok));
        closure.set(t, std::move(anc));
    }
    return closure;
}

inline TypeClosure read_closure(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open closure " + path.string());
    return read_closure(in);
}

}  // namespace tablink
