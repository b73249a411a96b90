#pragma once

// Property checks over many small random worlds. Each returns how many cases
// ran and the first counterexample, so unit tests and the acceptance binary
// can share them.

#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "tablink/link_cache.hpp"
#include "tablink/linker.hpp"
#include "tablink/parallel.hpp"
#include "tablink/table_linker.hpp"

namespace props {

using namespace tablink;
using fixtures::P;
using fixtures::Q;

struct Result {
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string first_failure;

    void fail(const std::string& why) {
        if (failures++ == 0) first_failure = why;
    }
    bool ok() const { return failures == 0; }
};

struct World {
    std::vector<ItemRecord> records;
    std::vector<TypeEdge> edges;
    DomainConfig config;
    std::vector<std::string> type_names;
};

inline const std::vector<std::string>& vocab() {
    static const std::vector<std::string> v = {"alpha", "beta",  "gamma", "delta", "omega", "sigma",
                                               "kappa", "theta", "lambda", "zeta", "rho",   "tau"};
    return v;
}

inline std::string phrase(std::mt19937_64& rng, int lo, int hi) {
    const int n = lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    std::string s;
    for (int i = 0; i < n; ++i) s += (i ? " " : "") + vocab()[rng() % vocab().size()];
    return s;
}

inline World make_world(std::uint64_t seed, std::size_t n_records = 60) {
    std::mt19937_64 rng(seed);
    World w;
    const int n_classes = 20, n_prop_classes = 5;
    for (int i = 2; i <= n_classes; ++i) {
        w.edges.push_back({Q(static_cast<std::uint64_t>(i)), Q(1 + rng() % static_cast<std::uint64_t>(i - 1)), TypeRelation::subclass_of});
        if (rng() % 4 == 0) {
            w.edges.push_back({Q(static_cast<std::uint64_t>(i)), Q(1 + rng() % n_classes), TypeRelation::subclass_of});
        }
    }
    for (int i = 2; i <= n_prop_classes; ++i) {
        w.edges.push_back({P(static_cast<std::uint64_t>(i)), P(1 + rng() % static_cast<std::uint64_t>(i - 1)), TypeRelation::subproperty_of});
    }

    auto& c = w.config;
    static constexpr Tier tiers[] = {Tier::target, Tier::near_miss, Tier::good, Tier::ok, Tier::bad};
    for (int i = 1; i <= n_classes + n_prop_classes; ++i) {
        const bool prop = i > n_classes;
        const std::uint64_t num = static_cast<std::uint64_t>(prop ? i - n_classes : i);
        const std::string name = (prop ? "p" : "t") + std::to_string(num);
        c.type_dictionary[name] = {prop ? P(num) : Q(num)};
        w.type_names.push_back(name);
        const auto roll = rng() % 7;
        if (roll < 5) c.tier(tiers[roll]).push_back(name);
    }
    for (int i = 0; i < 4; ++i) {
        c.near_miss_map[w.type_names[rng() % w.type_names.size()]].push_back(w.type_names[rng() % w.type_names.size()]);
    }
    c.property_inference.push_back({P(486), w.type_names[rng() % w.type_names.size()]});

    for (std::size_t i = 0; i < n_records; ++i) {
        const bool prop = rng() % 10 < 3;
        const EntityId id = prop ? P(1000 + i) : Q(1000 + i);
        std::vector<std::string> aliases;
        for (std::size_t a = 0, na = rng() % 3; a < na; ++a) aliases.push_back(phrase(rng, 1, 2));
        std::vector<EntityId> types;
        for (std::size_t t = 0, nt = prop ? rng() % 2 : rng() % 3; t < nt; ++t) types.push_back(Q(1 + rng() % n_classes));
        const std::uint64_t sitelinks = rng() % 4 == 0 ? 0 : rng() % 500;
        std::vector<EntityId> flagged;
        if (rng() % 5 == 0) flagged.push_back(P(486));
        w.records.push_back(ItemRecord::make(id, phrase(rng, 1, 2), aliases, phrase(rng, 0, 6), types, sitelinks, flagged));
        if (prop && rng() % 2) {
            w.edges.push_back({id, P(1 + rng() % n_prop_classes), TypeRelation::subproperty_of});
        }
    }
    return w;
}

inline LinkRequest random_request(std::mt19937_64& rng, const World& w) {
    LinkRequest r;
    r.mention = phrase(rng, 1, 2);
    r.mode = rng() % 2 ? LinkMode::header : LinkMode::cell;
    if (rng() % 2) r.context = phrase(rng, 1, 6);
    for (std::size_t i = 0, n = rng() % 3; i < n; ++i) r.expected_types.push_back(w.type_names[rng() % w.type_names.size()]);
    return r;
}

inline std::unique_ptr<fixtures::Loaded> load(const World& w) {
    return std::make_unique<fixtures::Loaded>(w.records, w.edges, w.config);
}

inline std::string describe(const LinkRequest& r) {
    std::ostringstream os;
    os << "mention='" << r.mention << "' mode=" << link_mode_name(r.mode) << " context='" << r.context.value_or("<none>")
       << "' expected=" << r.expected_types.size();
    return os.str();
}

// ---------------------------------------------------------------------------

// Cached results equal uncached results: sequential replay with duplicates,
// a warm replay, and a concurrent replay against a disk-backed cache.
inline Result cache_transparency(std::size_t cases, std::uint64_t seed = 1) {
    Result res;
    const std::size_t per_world = 100;
    for (std::uint64_t wi = 0; res.cases < cases; ++wi) {
        const World w = make_world(seed * 1000 + wi);
        auto kb = load(w);
        std::mt19937_64 rng(seed * 7919 + wi);
        std::vector<LinkRequest> reqs;
        for (std::size_t i = 0; i < per_world; ++i) {
            if (!reqs.empty() && rng() % 10 < 3) {
                reqs.push_back(reqs[rng() % reqs.size()]);
            } else {
                reqs.push_back(random_request(rng, w));
            }
        }
        std::vector<std::string> direct(reqs.size());
        for (std::size_t i = 0; i < reqs.size(); ++i) direct[i] = link_result_to_json(kb->linker.link(reqs[i])).dump();

        const auto dir = fixtures::scratch_dir("cache-prop");
        {
            LinkCache cache(dir);
            CachedLinker cached(kb->linker, cache);
            for (int round = 0; round < 2; ++round) {
                for (std::size_t i = 0; i < reqs.size(); ++i) {
                    if (link_result_to_json(cached.link(reqs[i])).dump() != direct[i]) {
                        res.fail("round " + std::to_string(round) + ": " + describe(reqs[i]));
                    }
                }
            }
        }
        {
            // A fresh cache over the same directory reads entries back from disk.
            LinkCache cache(dir);
            CachedLinker cached(kb->linker, cache);
            std::vector<std::string> got(reqs.size());
            parallel_for(reqs.size(), 4, [&](std::size_t i) { got[i] = link_result_to_json(cached.link(reqs[i])).dump(); });
            for (std::size_t i = 0; i < reqs.size(); ++i) {
                if (got[i] != direct[i]) res.fail("disk/concurrent: " + describe(reqs[i]));
            }
            if (cache.stats().misses != 0) res.fail("disk cache missed entries written by an earlier instance");
        }
        std::filesystem::remove_all(dir);
        res.cases += reqs.size();
    }
    return res;
}

// No candidate of any result carries a bad-tier type, direct or inherited,
// whatever the expected types. Ancestry is checked with the Warshall oracle.
inline Result bad_rejection(std::size_t cases, std::uint64_t seed = 2) {
    Result res;
    for (std::uint64_t wi = 0; res.cases < cases; ++wi) {
        const World w = make_world(seed * 1000 + wi);
        auto kb = load(w);
        const oracle::BruteLinker brute(w.records, w.edges, w.config, kb->config.weights());
        std::set<EntityId> bad;
        for (const auto& n : w.config.tier(Tier::bad)) {
            const auto& v = w.config.type_dictionary.at(n);
            bad.insert(v.begin(), v.end());
        }
        std::mt19937_64 rng(seed * 31 + wi);
        for (int i = 0; i < 100; ++i, ++res.cases) {
            const auto req = random_request(rng, w);
            const auto r = kb->linker.link(req);
            std::size_t expected_rejections = 0;
            for (const auto& h : oracle::linear_search(w.records, req.mention, kb->config.params().k)) {
                expected_rejections += oracle::BruteLinker::meets(brute.types_of(*h.record), bad);
            }
            for (const auto& c : r.candidates) {
                if (oracle::BruteLinker::meets(brute.types_of(c.record), bad)) {
                    res.fail(c.record.id.str() + " survived for " + describe(req));
                }
            }
            if (r.diagnostics.rejected_bad != expected_rejections) res.fail("rejection count for " + describe(req));
        }
    }
    return res;
}

// Multiplying every sitelinks count by the same positive factor never
// changes a chosen candidate.
inline Result scale_invariance(std::size_t cases, std::uint64_t seed = 3) {
    Result res;
    for (std::uint64_t wi = 0; res.cases < cases; ++wi) {
        const World w = make_world(seed * 1000 + wi);
        std::mt19937_64 rng(seed * 17 + wi);
        World scaled = w;
        const std::uint64_t factor = 2 + rng() % 1000000;
        for (auto& r : scaled.records) r.sitelinks_count *= factor;
        auto a = load(w);
        auto b = load(scaled);
        for (int i = 0; i < 100; ++i, ++res.cases) {
            const auto req = random_request(rng, w);
            const auto ra = a->linker.link(req);
            const auto rb = b->linker.link(req);
            const auto ida = ra.chosen ? ra.chosen->record.id.str() : "NIL";
            const auto idb = rb.chosen ? rb.chosen->record.id.str() : "NIL";
            if (ida != idb) res.fail(ida + " vs " + idb + " at x" + std::to_string(factor) + " for " + describe(req));
        }
    }
    return res;
}

// Switching a request from cell to header mode never moves a property below
// an item it outranked.
inline Result header_monotonicity(std::size_t cases, std::uint64_t seed = 4) {
    Result res;
    for (std::uint64_t wi = 0; res.cases < cases; ++wi) {
        const World w = make_world(seed * 1000 + wi);
        auto kb = load(w);
        std::mt19937_64 rng(seed * 13 + wi);
        for (int i = 0; i < 100; ++i, ++res.cases) {
            auto req = random_request(rng, w);
            req.mode = LinkMode::cell;
            const auto cell = kb->linker.link(req);
            req.mode = LinkMode::header;
            const auto header = kb->linker.link(req);
            std::map<EntityId, std::size_t> rank;
            for (std::size_t k = 0; k < header.candidates.size(); ++k) rank[header.candidates[k].record.id] = k;
            if (rank.size() != cell.candidates.size()) {
                res.fail("candidate sets differ for " + describe(req));
                continue;
            }
            for (std::size_t x = 0; x < cell.candidates.size(); ++x) {
                for (std::size_t y = x + 1; y < cell.candidates.size(); ++y) {
                    const auto& p = cell.candidates[x].record.id;
                    const auto& it = cell.candidates[y].record.id;
                    if (p.is_property() && it.is_item() && rank.at(p) > rank.at(it)) {
                        res.fail(p.str() + " fell below " + it.str() + " for " + describe(req));
                    }
                }
            }
        }
    }
    return res;
}

inline std::string random_literal(std::mt19937_64& rng) {
    static const char* fixed[] = {"", "-", "\xE2\x80\x93", "N/A", "n/a"};
    switch (rng() % 8) {
        case 0: return fixed[rng() % 5];
        case 1: return "NCT" + std::to_string(10000000 + rng() % 90000000);
        case 2: {
            std::string s;
            for (std::size_t i = 0, n = 8 + rng() % 10; i < n; ++i) s += "ACGTUNacgt"[rng() % 10];
            return s;
        }
        case 3: return std::to_string(rng() % 100) + "." + std::to_string(rng() % 10) + "%";
        case 4: return std::to_string(rng() % 10) + "," + std::to_string(100 + rng() % 900);
        case 5: return std::to_string(rng() % 50) + "\xE2\x80\x93" + std::to_string(50 + rng() % 50);
        case 6: return "20" + std::to_string(10 + rng() % 15) + "-0" + std::to_string(1 + rng() % 9) + "-1" + std::to_string(rng() % 10);
        default: return "-" + std::to_string(rng() % 1000) + "." + std::to_string(rng() % 100);
    }
}

// Literal cells come out as literals with no entity, through both passes,
// including cells whose text also names an entity in the KB.
inline Result literals_never_linked(std::size_t cases, std::uint64_t seed = 5) {
    Result res;
    for (std::uint64_t wi = 0; res.cases < cases; ++wi) {
        World w = make_world(seed * 1000 + wi);
        std::mt19937_64 rng(seed * 101 + wi);
        // Entities whose labels look like literals, so a literal cell would
        // find candidates if it ever reached the linker.
        for (int i = 0; i < 5; ++i) {
            w.records.push_back(ItemRecord::make(Q(5000 + static_cast<std::uint64_t>(i)), random_literal(rng) + " x", {}, "",
                                                 {Q(1 + rng() % 20)}, rng() % 100, {}));
        }
        auto kb = load(w);
        for (int t = 0; t < 50; ++t, ++res.cases) {
            Table table;
            table.table_id = "prop-" + std::to_string(wi) + "-" + std::to_string(t);
            table.caption = phrase(rng, 0, 4);
            const std::size_t cols = 2 + rng() % 4, rows = 1 + rng() % 6;
            std::vector<bool> literal_col(cols);
            for (std::size_t c = 0; c < cols; ++c) {
                literal_col[c] = rng() % 2;
                table.header_row.push_back(rng() % 8 == 0 ? random_literal(rng) : phrase(rng, 1, 2));
            }
            for (std::size_t r = 0; r < rows; ++r) {
                std::vector<std::string> row;
                for (std::size_t c = 0; c < cols; ++c) {
                    const bool lit = literal_col[c] ? rng() % 6 != 0 : rng() % 6 == 0;
                    row.push_back(lit ? random_literal(rng) : phrase(rng, 1, 2));
                }
                table.rows.push_back(std::move(row));
            }
            const auto ann = link_table(table, kb->linker, {static_cast<unsigned>(1 + t % 3), nullptr});
            auto text_at = [&](int row, int col) -> const std::string& {
                return row < 0 ? table.header_row[static_cast<std::size_t>(col)]
                               : table.rows[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
            };
            std::size_t seen = 0;
            for (const auto* list : {&ann.headers, &ann.cells}) {
                for (const auto& cell : *list) {
                    ++seen;
                    const bool lit = detect_literal(text_at(cell.row, cell.col)).has_value();
                    if (lit && (cell.outcome != CellOutcome::literal || cell.entity || !cell.candidates.empty())) {
                        res.fail("literal '" + text_at(cell.row, cell.col) + "' linked in " + table.table_id);
                    }
                    if (!lit && cell.outcome == CellOutcome::literal) {
                        res.fail("'" + text_at(cell.row, cell.col) + "' marked literal in " + table.table_id);
                    }
                }
            }
            if (seen != (rows + 1) * cols) res.fail("cell count mismatch in " + table.table_id);
        }
    }
    return res;
}

}  // namespace props
