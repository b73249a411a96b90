#pragma once

// Seeded generator for desk-scale knowledge bases with known answers.
//
// Produces an entity dump plus the records and edges ingestion must extract
// from it, a type forest whose roots are mapped to tier names in a domain
// config, and tables whose cells are planted ambiguities:
//   column A  shared label, the decoy is bad-typed or less prominent
//   column B  shared label, the answer wins on its (inherited) good type
//   column C  shared label, the decoy is more prominent; only the column
//             type vote recovers the answer
//   column D  literals
// Header B is shared by a property and an item; header mode prefers the
// property. Odd-numbered tables are emitted transposed (vertical).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tablink/entity_id.hpp"
#include "tablink/eval.hpp"
#include "tablink/kb_model.hpp"
#include "tablink/table_linker.hpp"
#include "tablink/text.hpp"

namespace tablink {

inline constexpr EntityId kMeshDescriptorId = EntityId::property(486);

struct TierProfile {
    std::size_t bad_roots = 2;
    std::size_t good_roots = 2;
    std::size_t ok_roots = 2;
    std::size_t neutral_roots = 3;
    double unlabeled_type_fraction = 0.05;
    double unlabeled_item_fraction = 0.02;
    double mesh_fraction = 0.10;
};

struct SyntheticSpec {
    std::uint64_t seed = 1;
    std::size_t n_items = 500;
    std::size_t n_types = 50;
    std::size_t n_tables = 10;
    std::size_t rows_per_table = 6;
    std::size_t n_mentions = 1000;
    TierProfile profile;
};

struct SyntheticKb {
    std::vector<std::string> dump;  // one entity document per line
    std::vector<ItemRecord> records;  // labeled entities, dump order
    std::vector<TypeEdge> edges;  // dump order
    std::set<EntityId> mesh_flagged;  // entities carrying a P486 statement
    DomainConfig config;
    std::vector<Table> tables;
    std::vector<GoldRecord> gold;
    std::vector<std::string> mentions;
    std::size_t docs = 0;
};

namespace detail {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }  // inclusive
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return unit() < p; }

private:
    std::mt19937_64 engine_;
};

inline std::string syllable_word(std::uint64_t n, std::string prefix) {
    static constexpr std::string_view consonants = "bdfgklmprstv";
    static constexpr std::string_view vowels = "aeiou";
    const std::uint64_t base = consonants.size() * vowels.size();
    std::string w = std::move(prefix);
    n += base;  // at least two syllables
    while (n > 0) {
        const auto s = n % base;
        w += consonants[s / vowels.size()];
        w += vowels[s % vowels.size()];
        n /= base;
    }
    return w;
}

struct EntityDoc {
    EntityId id;
    std::optional<std::string> label;
    std::vector<std::string> aliases;
    std::string description;
    std::vector<EntityId> instance_of;
    std::vector<EntityId> parents;  // P279 for items, P1647 for properties
    bool mesh = false;
    std::uint64_t sitelinks = 0;
    bool deprecated_noise = false;  // adds a deprecated P31 statement
    bool somevalue_noise = false;  // adds a somevalue P279 snak
};

inline ordered_json entity_value(EntityId id) {
    return ordered_json{{"entity-type", id.is_item() ? "item" : "property"}, {"numeric-id", id.num()}, {"id", id.str()}};
}

inline ordered_json statement(EntityId pid, const ordered_json& snak_value, const char* rank = "normal") {
    ordered_json snak{{"snaktype", "value"}, {"property", pid.str()}};
    if (snak_value.is_null()) {
        snak["snaktype"] = "somevalue";
    } else {
        snak["datavalue"] = ordered_json{{"value", snak_value}, {"type", "wikibase-entityid"}};
    }
    return ordered_json{{"mainsnak", snak}, {"type", "statement"}, {"rank", rank}};
}

inline std::string render_doc(const EntityDoc& d) {
    ordered_json j;
    j["type"] = d.id.is_item() ? "item" : "property";
    j["id"] = d.id.str();
    if (d.label) j["labels"] = ordered_json{{"en", {{"language", "en"}, {"value", *d.label}}}};
    if (!d.description.empty()) j["descriptions"] = ordered_json{{"en", {{"language", "en"}, {"value", d.description}}}};
    if (!d.aliases.empty()) {
        ordered_json en = ordered_json::array();
        for (const auto& a : d.aliases) en.push_back({{"language", "en"}, {"value", a}});
        j["aliases"] = ordered_json{{"en", en}};
    }
    ordered_json claims = ordered_json::object();
    for (const auto& t : d.instance_of) claims["P31"].push_back(statement(EntityId::property(31), entity_value(t)));
    if (d.deprecated_noise) {
        claims["P31"].push_back(statement(EntityId::property(31), entity_value(EntityId::item(1)), "deprecated"));
    }
    const EntityId parent_prop = d.id.is_item() ? EntityId::property(279) : EntityId::property(1647);
    for (const auto& p : d.parents) claims[parent_prop.str()].push_back(statement(parent_prop, entity_value(p)));
    if (d.somevalue_noise) claims[parent_prop.str()].push_back(statement(parent_prop, ordered_json(nullptr)));
    if (d.mesh) {
        claims["P486"].push_back(ordered_json{
            {"mainsnak",
             {{"snaktype", "value"},
              {"property", "P486"},
              {"datavalue", {{"value", "D" + std::to_string(d.id.num() % 1000000)}, {"type", "string"}}}}},
            {"type", "statement"},
            {"rank", "normal"}});
    }
    j["claims"] = std::move(claims);
    ordered_json sl = ordered_json::object();
    for (std::uint64_t i = 0; i < d.sitelinks; ++i) sl["w" + std::to_string(i)] = ordered_json::object();
    j["sitelinks"] = std::move(sl);
    return j.dump();
}

inline std::string capitalize_words(std::string s) {
    bool start = true;
    for (char& c : s) {
        if (start && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
        start = c == ' ';
    }
    return s;
}

class Generator {
public:
    explicit Generator(const SyntheticSpec& spec) : spec_(spec), rng_(spec.seed) {}

    SyntheticKb run() {
        build_vocab();
        build_types();
        build_properties();
        build_background_items();
        for (std::size_t t = 0; t < spec_.n_tables; ++t) build_table(t);
        build_config();
        build_mentions();
        for (const auto& d : docs_) emit(d);
        kb_.docs = docs_.size();
        return std::move(kb_);
    }

private:
    enum Category { bad, good, ok, neutral };

    std::string vocab_word() { return vocab_[rng_.below(vocab_.size())]; }
    std::string vocab_phrase(std::size_t lo, std::size_t hi) {
        std::string s;
        for (std::size_t i = 0, n = rng_.between(lo, hi); i < n; ++i) s += (i ? " " : "") + vocab_word();
        return s;
    }
    std::string fresh_word() { return syllable_word(fresh_counter_++, "zy"); }
    std::string fresh_phrase(std::size_t n) {
        std::string s;
        for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + fresh_word();
        return s;
    }

    void build_vocab() {
        const std::size_t v = std::max<std::size_t>(200, spec_.n_items / 20);
        for (std::uint64_t i = 0; vocab_.size() < v; ++i) {
            auto w = syllable_word(i, "");
            if (!text::is_stopword(w)) vocab_.push_back(std::move(w));
        }
    }

    EntityId new_planted_class(std::string label, std::vector<EntityId> parents = {}) {
        EntityDoc d;
        d.id = EntityId::item(2'000'000 + planted_class_counter_++);
        d.label = std::move(label);
        d.description = "synthetic planted class " + fresh_word();
        d.parents = std::move(parents);
        docs_.push_back(d);
        return d.id;
    }

    void build_types() {
        const auto& p = spec_.profile;
        const std::size_t roots = p.bad_roots + p.good_roots + p.ok_roots + p.neutral_roots;
        const std::size_t n = std::max(spec_.n_types, roots);
        for (std::size_t i = 0; i < n; ++i) {
            EntityDoc d;
            d.id = EntityId::item(1'000'000 + i);
            Category cat;
            if (i < roots) {
                cat = i < p.bad_roots                               ? bad
                      : i < p.bad_roots + p.good_roots              ? good
                      : i < p.bad_roots + p.good_roots + p.ok_roots ? ok
                                                                    : neutral;
                root_names_.push_back({cat, i});
            } else {
                cat = static_cast<Category>(rng_.below(4));
                // Categories with no root yet fall back to neutral.
                if (by_category_[cat].empty()) cat = neutral;
                const auto& pool = by_category_[cat];
                d.parents.push_back(pool[rng_.below(pool.size())]);
                if (pool.size() > 1 && rng_.chance(0.3)) {
                    auto second = pool[rng_.below(pool.size())];
                    if (second != d.parents.front()) d.parents.push_back(second);
                }
                d.somevalue_noise = rng_.chance(0.05);
            }
            if (i < roots || !rng_.chance(p.unlabeled_type_fraction)) {
                d.label = "class " + vocab_phrase(1, 2);
                d.description = "synthetic type " + vocab_phrase(2, 4);
            }
            by_category_[cat].push_back(d.id);
            types_.push_back(d.id);
            docs_.push_back(d);
        }
    }

    void build_properties() {
        EntityDoc mesh;
        mesh.id = kMeshDescriptorId;
        mesh.label = "MeSH descriptor ID";
        mesh.description = "identifier for Medical Subject Headings";
        docs_.push_back(mesh);
        EntityDoc root;
        root.id = EntityId::property(99'999);
        root.label = "synthetic table attribute";
        root.description = "root property for planted headers";
        docs_.push_back(root);
        mesh_class_ = new_planted_class("mesh item class");
    }

    void build_background_items() {
        const auto& p = spec_.profile;
        for (std::size_t i = 0; i < spec_.n_items; ++i) {
            EntityDoc d;
            d.id = EntityId::item(10'000'000 + i);
            if (!rng_.chance(p.unlabeled_item_fraction)) d.label = vocab_phrase(1, 3);
            for (std::size_t a = 0, na = rng_.below(3); a < na; ++a) d.aliases.push_back(vocab_phrase(1, 2));
            d.description = vocab_phrase(4, 8);
            for (std::size_t t = 0, nt = rng_.below(3); t < nt; ++t) d.instance_of.push_back(types_[rng_.below(types_.size())]);
            d.sitelinks = static_cast<std::uint64_t>(std::floor(std::exp(rng_.unit() * 4.6))) - 1;
            d.mesh = rng_.chance(p.mesh_fraction);
            d.deprecated_noise = rng_.chance(0.05);
            docs_.push_back(std::move(d));
        }
    }

    EntityId planted_item(const std::string& label, std::vector<EntityId> types, std::uint64_t sitelinks) {
        EntityDoc d;
        d.id = EntityId::item(20'000'000 + planted_item_counter_++);
        d.label = label;
        d.description = "planted entity " + fresh_word();
        d.instance_of = std::move(types);
        d.sitelinks = sitelinks;
        docs_.push_back(d);
        return d.id;
    }

    EntityId planted_property(const std::string& label) {
        EntityDoc d;
        d.id = EntityId::property(100'000 + planted_property_counter_++);
        d.label = label;
        d.description = "planted attribute " + fresh_word();
        d.parents.push_back(EntityId::property(99'999));
        docs_.push_back(d);
        return d.id;
    }

    EntityId random_of(Category c) {
        const auto& pool = by_category_[c];
        return pool[rng_.below(pool.size())];
    }

    void build_table(std::size_t t) {
        const std::size_t R = std::max<std::size_t>(2, spec_.rows_per_table);
        const std::string table_id = "synthetic-" + std::to_string(t);

        // Logical (horizontal) layout: headers[c], body[r][c], expected ids.
        std::vector<std::string> headers(4);
        std::vector<std::optional<EntityId>> header_gold(4);
        std::vector<std::vector<std::string>> body(R, std::vector<std::string>(4));
        std::vector<std::vector<std::optional<EntityId>>> gold(R, std::vector<std::optional<EntityId>>(4));

        const EntityId type_a = new_planted_class(fresh_phrase(2));
        const EntityId type_b = new_planted_class(fresh_phrase(2), {random_of(good)});
        const EntityId type_c = new_planted_class(fresh_phrase(2));

        for (std::size_t r = 0; r < R; ++r) {
            // Column A: decoy is bad-typed (even rows) or less prominent (odd rows).
            std::string label = fresh_phrase(2);
            if (r % 2 == 0) {
                const auto sl = rng_.between(1, 100);
                gold[r][0] = planted_item(label, {type_a}, sl);
                planted_item(label, {random_of(bad)}, sl + 50);
            } else {
                gold[r][0] = planted_item(label, {type_a}, rng_.between(100, 199));
                planted_item(label, {new_planted_class(fresh_phrase(2))}, rng_.between(1, 99));
            }
            body[r][0] = capitalize_words(label);

            // Column B: answer has a good type by inheritance, decoy is more prominent.
            label = fresh_phrase(2);
            gold[r][1] = planted_item(label, {type_b}, rng_.between(1, 50));
            planted_item(label, {new_planted_class(fresh_phrase(2))}, rng_.between(100, 199));
            body[r][1] = label;

            // Column C: decoy is more prominent and of a unique type; the answer
            // shares the column type.
            label = fresh_phrase(2);
            gold[r][2] = planted_item(label, {type_c}, rng_.between(10, 39));
            planted_item(label, {new_planted_class(fresh_phrase(2))}, rng_.between(100, 199));
            body[r][2] = label;

            switch (t % 4) {
                case 0: body[r][3] = std::to_string(rng_.between(1, 99)) + "." + std::to_string(rng_.below(10)) + "%"; break;
                case 1: body[r][3] = std::to_string(rng_.between(1, 9)) + "," + std::to_string(rng_.between(100, 999)); break;
                case 2: body[r][3] = "NCT" + std::to_string(rng_.between(10'000'000, 99'999'999)); break;
                default: {
                    std::string seq;
                    for (int i = 0; i < 12; ++i) seq += "ACGT"[rng_.below(4)];
                    body[r][3] = seq;
                }
            }
        }
        headers[0] = fresh_phrase(1);
        header_gold[0] = planted_property(headers[0]);
        headers[1] = fresh_phrase(1);
        header_gold[1] = planted_property(headers[1]);
        planted_item(headers[1], {}, 0);
        headers[2] = fresh_phrase(1);
        header_gold[2] = planted_property(headers[2]);
        headers[3] = fresh_phrase(1);
        header_gold[3] = planted_property(headers[3]);

        Table table;
        table.table_id = table_id;
        table.caption = "synthetic table " + std::to_string(t);
        auto add_gold = [&](int row, int col, std::optional<EntityId> expected) {
            kb_.gold.push_back({table_id, row, col, expected});
        };
        if (t % 2 == 0) {
            table.header_row = headers;
            table.rows = body;
            for (int c = 0; c < 4; ++c) add_gold(-1, c, header_gold[static_cast<std::size_t>(c)]);
            for (std::size_t r = 0; r < R; ++r) {
                for (int c = 0; c < 4; ++c) add_gold(static_cast<int>(r), c, gold[r][static_cast<std::size_t>(c)]);
            }
        } else {
            // Transposed: logical grid cell (g, c), g = 0 for the header row,
            // lands at presented (c - 1, g).
            auto logical = [&](std::size_t g, std::size_t c) -> const std::string& {
                return g == 0 ? headers[c] : body[g - 1][c];
            };
            auto logical_gold = [&](std::size_t g, std::size_t c) {
                return g == 0 ? header_gold[c] : gold[g - 1][c];
            };
            for (std::size_t g = 0; g <= R; ++g) table.header_row.push_back(logical(g, 0));
            for (std::size_t c = 1; c < 4; ++c) {
                std::vector<std::string> row;
                for (std::size_t g = 0; g <= R; ++g) row.push_back(logical(g, c));
                table.rows.push_back(std::move(row));
            }
            for (std::size_t c = 0; c < 4; ++c) {
                for (std::size_t g = 0; g <= R; ++g) {
                    add_gold(static_cast<int>(c) - 1, static_cast<int>(g), logical_gold(g, c));
                }
            }
        }
        kb_.tables.push_back(std::move(table));
    }

    void build_config() {
        DomainConfig& c = kb_.config;
        std::size_t counters[4] = {0, 0, 0, 0};
        static constexpr const char* prefix[4] = {"bad_", "good_", "ok_", "neutral_"};
        static constexpr Tier tier_of[3] = {Tier::bad, Tier::good, Tier::ok};
        for (const auto& [cat, index] : root_names_) {
            std::string name = prefix[cat] + std::to_string(counters[cat]++);
            c.type_dictionary[name] = {EntityId::item(1'000'000 + index)};
            if (cat != neutral) c.tier(tier_of[cat]).push_back(name);
        }
        c.type_dictionary["mesh item"] = {mesh_class_};
        c.tier(Tier::good).push_back("mesh item");
        if (counters[good] > 0) c.tier(Tier::target).push_back("good_0");
        if (counters[ok] > 1) c.near_miss_map["ok_0"] = {"ok_1"};
        c.property_inference.push_back({kMeshDescriptorId, "mesh item"});
    }

    void build_mentions() {
        std::vector<const EntityDoc*> labeled;
        for (const auto& d : docs_) {
            if (d.label && d.id.num() >= 10'000'000 && d.id.num() < 20'000'000) labeled.push_back(&d);
        }
        for (std::size_t i = 0; i < spec_.n_mentions; ++i) {
            const double roll = rng_.unit();
            if (roll < 0.6 && !labeled.empty()) {
                kb_.mentions.push_back(*labeled[rng_.below(labeled.size())]->label);
            } else if (roll < 0.75 && !labeled.empty()) {
                const auto* d = labeled[rng_.below(labeled.size())];
                kb_.mentions.push_back(d->aliases.empty() ? *d->label : d->aliases[rng_.below(d->aliases.size())]);
            } else if (roll < 0.9) {
                kb_.mentions.push_back(vocab_phrase(1, 3));
            } else {
                kb_.mentions.push_back(syllable_word(rng_.below(1'000'000), "qx"));
            }
        }
    }

    void emit(const EntityDoc& d) {
        kb_.dump.push_back(render_doc(d));
        for (const auto& p : d.parents) {
            kb_.edges.push_back(
                {d.id, p, d.id.is_item() ? TypeRelation::subclass_of : TypeRelation::subproperty_of});
        }
        if (d.mesh) kb_.mesh_flagged.insert(d.id);
        if (d.label) {
            kb_.records.push_back(ItemRecord::make(d.id, *d.label, d.aliases, d.description, d.instance_of, d.sitelinks,
                                                   d.mesh ? std::vector<EntityId>{kMeshDescriptorId}
                                                          : std::vector<EntityId>{}));
        }
    }

    SyntheticSpec spec_;
    Rng rng_;
    SyntheticKb kb_;
    std::vector<std::string> vocab_;
    std::vector<EntityDoc> docs_;
    std::vector<EntityId> types_;
    std::map<int, std::vector<EntityId>> by_category_;
    std::vector<std::pair<Category, std::size_t>> root_names_;
    EntityId mesh_class_;
    std::uint64_t fresh_counter_ = 0;
    std::uint64_t planted_class_counter_ = 0;
    std::uint64_t planted_item_counter_ = 0;
    std::uint64_t planted_property_counter_ = 0;
};

}  // namespace detail

inline SyntheticKb generate_synthetic_kb(const SyntheticSpec& spec) { return detail::Generator(spec).run(); }

// Writes dump.jsonl, records.jsonl, edges.jsonl, config.json, gold.jsonl,
// mentions.txt and tables/<table_id>.json under dir.
inline void write_synthetic_kb(const SyntheticKb& kb, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "tables", ec);
    if (ec) throw IoError("cannot create " + (dir / "tables").string() + ": " + ec.message());
    auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw IoError("cannot write " + p.string());
        return out;
    };
    {
        auto out = open(dir / "dump.jsonl");
        for (const auto& line : kb.dump) out << line << '\n';
    }
    write_records(dir / "records.jsonl", kb.records);
    write_edges(dir / "edges.jsonl", kb.edges);
    {
        auto out = open(dir / "config.json");
        out << config_to_json(kb.config).dump(2) << '\n';
    }
    write_gold(dir / "gold.jsonl", kb.gold);
    {
        auto out = open(dir / "mentions.txt");
        for (const auto& m : kb.mentions) out << m << '\n';
    }
    for (const auto& t : kb.tables) {
        auto out = open(dir / "tables" / (t.table_id + ".json"));
        out << table_to_json(t).dump(2) << '\n';
    }
}

}  // namespace tablink
