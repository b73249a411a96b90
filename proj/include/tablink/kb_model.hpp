#pragma once

// Knowledge-base records, type edges, and the per-domain linker
// configuration (tier lists, type dictionary, weights and thresholds).

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tablink/entity_id.hpp"
#include "tablink/error.hpp"
#include "tablink/hash.hpp"
#include "tablink/text.hpp"

namespace tablink {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Records and edges

struct ItemRecord {
    EntityId id;
    std::string label;
    std::vector<std::string> aliases;
    std::string description;
    std::vector<EntityId> direct_types;
    std::uint64_t sitelinks_count = 0;
    std::vector<EntityId> flagged_props;  // sorted, unique

    // Builds a record and enforces its invariants: non-empty label, aliases
    // unique after normalization and distinct from the label, item-kind direct
    // types (deduplicated, first occurrence kept), sorted flagged properties.
    static ItemRecord make(EntityId id, std::string label, std::vector<std::string> aliases,
                           std::string description, std::vector<EntityId> direct_types,
                           std::uint64_t sitelinks_count, std::vector<EntityId> flagged_props) {
        ItemRecord r;
        r.id = id;
        r.label = std::move(label);
        const std::string norm_label = text::normalize(r.label);
        if (norm_label.empty()) throw ValidationError("record " + id.str() + " has an empty label");

        std::set<std::string> seen{norm_label};
        for (auto& a : aliases) {
            std::string n = text::normalize(a);
            if (n.empty() || !seen.insert(n).second) continue;
            r.aliases.push_back(std::move(a));
        }
        r.description = std::move(description);
        for (const auto& t : direct_types) {
            if (!t.is_item()) throw ValidationError("record " + id.str() + " has non-item direct type " + t.str());
            if (std::find(r.direct_types.begin(), r.direct_types.end(), t) == r.direct_types.end()) {
                r.direct_types.push_back(t);
            }
        }
        r.sitelinks_count = sitelinks_count;
        std::sort(flagged_props.begin(), flagged_props.end());
        flagged_props.erase(std::unique(flagged_props.begin(), flagged_props.end()), flagged_props.end());
        r.flagged_props = std::move(flagged_props);
        return r;
    }

    friend bool operator==(const ItemRecord&, const ItemRecord&) = default;
};

enum class TypeRelation { subclass_of, subproperty_of };

struct TypeEdge {
    EntityId child;
    EntityId parent;
    TypeRelation relation = TypeRelation::subclass_of;

    // subclass_of joins two items, subproperty_of joins two properties.
    bool well_kinded() const noexcept {
        if (relation == TypeRelation::subclass_of) return child.is_item() && parent.is_item();
        return child.is_property() && parent.is_property();
    }

    friend auto operator<=>(const TypeEdge&, const TypeEdge&) = default;
};

inline std::string_view relation_name(TypeRelation r) {
    return r == TypeRelation::subclass_of ? "subclass_of" : "subproperty_of";
}

inline TypeRelation parse_relation(std::string_view s) {
    if (s == "subclass_of") return TypeRelation::subclass_of;
    if (s == "subproperty_of") return TypeRelation::subproperty_of;
    throw ParseError("unknown type relation '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Line-delimited record / edge interchange. Field order is fixed so files are
// byte-stable across runs.

inline ordered_json ids_to_json(const std::vector<EntityId>& ids) {
    ordered_json a = ordered_json::array();
    for (const auto& id : ids) a.push_back(id.str());
    return a;
}

template <typename Json>
std::vector<EntityId> ids_from_json(const Json& j) {
    std::vector<EntityId> out;
    for (const auto& v : j) out.push_back(EntityId::parse(v.template get<std::string>()));
    return out;
}

inline ordered_json record_to_json(const ItemRecord& r) {
    ordered_json j;
    j["id"] = r.id.str();
    j["label"] = r.label;
    j["aliases"] = r.aliases;
    j["description"] = r.description;
    j["direct_types"] = ids_to_json(r.direct_types);
    j["sitelinks_count"] = r.sitelinks_count;
    j["flagged_props"] = ids_to_json(r.flagged_props);
    return j;
}

inline ItemRecord record_from_json(const json& j) {
    try {
        return ItemRecord::make(EntityId::parse(j.at("id").get<std::string>()), j.at("label").get<std::string>(),
                                j.value("aliases", std::vector<std::string>{}), j.value("description", std::string{}),
                                ids_from_json(j.value("direct_types", json::array())),
                                j.value("sitelinks_count", std::uint64_t{0}),
                                ids_from_json(j.value("flagged_props", json::array())));
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed record: ") + e.what());
    }
}

inline std::string record_line(const ItemRecord& r) { return record_to_json(r).dump(); }

inline ordered_json edge_to_json(const TypeEdge& e) {
    ordered_json j;
    j["child"] = e.child.str();
    j["parent"] = e.parent.str();
    j["relation"] = relation_name(e.relation);
    return j;
}

// Parses an edge line without checking the kind rule; build_closure reports
// ill-kinded edges instead of failing the whole file.
inline TypeEdge edge_from_json(const json& j) {
    try {
        return TypeEdge{EntityId::parse(j.at("child").get<std::string>()),
                        EntityId::parse(j.at("parent").get<std::string>()),
                        parse_relation(j.at("relation").get<std::string>())};
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed edge: ") + e.what());
    }
}

inline std::string edge_line(const TypeEdge& e) { return edge_to_json(e).dump(); }

namespace detail {

template <typename F>
void for_each_line(const std::filesystem::path& path, F&& f) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            f(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace detail

inline std::vector<ItemRecord> read_records(const std::filesystem::path& path) {
    std::vector<ItemRecord> out;
    detail::for_each_line(path, [&](const std::string& line) { out.push_back(record_from_json(json::parse(line))); });
    return out;
}

inline std::vector<TypeEdge> read_edges(const std::filesystem::path& path) {
    std::vector<TypeEdge> out;
    detail::for_each_line(path, [&](const std::string& line) { out.push_back(edge_from_json(json::parse(line))); });
    return out;
}

inline void write_records(const std::filesystem::path& path, const std::vector<ItemRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& r : records) out << record_line(r) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

inline void write_edges(const std::filesystem::path& path, const std::vector<TypeEdge>& edges) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& e : edges) out << edge_line(e) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Domain configuration

enum class Tier { target = 0, near_miss = 1, good = 2, ok = 3, bad = 4 };

inline constexpr std::array<Tier, 5> kAllTiers = {Tier::target, Tier::near_miss, Tier::good, Tier::ok, Tier::bad};

inline std::string_view tier_key(Tier t) {
    switch (t) {
        case Tier::target: return "target";
        case Tier::near_miss: return "near_miss";
        case Tier::good: return "good";
        case Tier::ok: return "ok";
        case Tier::bad: return "bad";
    }
    return "?";
}

struct Weights {
    double type = 0.45;
    double match = 0.25;
    double prominence = 0.15;
    double context = 0.15;

    double sum() const { return type + match + prominence + context; }
    friend bool operator==(const Weights&, const Weights&) = default;
};

struct LinkParams {
    double header_property_boost = 0.10;
    double column_type_boost = 0.20;
    double header_column_boost = 0.10;
    int k = 20;
    int sample_size = 5;
    double support_threshold = 0.5;
    double min_link_score = 0.25;

    friend bool operator==(const LinkParams&, const LinkParams&) = default;
};

struct PropertyRule {
    EntityId if_property;
    std::string then_type_name;

    friend bool operator==(const PropertyRule&, const PropertyRule&) = default;
};

struct DomainConfig {
    std::map<std::string, std::vector<EntityId>> type_dictionary;
    std::array<std::vector<std::string>, 5> tiers;  // indexed by Tier
    std::map<std::string, std::vector<std::string>> near_miss_map;
    std::vector<PropertyRule> property_inference;
    Weights weights;
    LinkParams params;

    std::vector<std::string>& tier(Tier t) { return tiers[static_cast<std::size_t>(t)]; }
    const std::vector<std::string>& tier(Tier t) const { return tiers[static_cast<std::size_t>(t)]; }

    friend bool operator==(const DomainConfig&, const DomainConfig&) = default;
};

namespace detail {

template <typename Json>
void reject_unknown_keys(const Json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!obj.is_object()) {
        throw ConfigError(ConfigErrorKind::malformed, std::string(where) + " must be an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(ConfigErrorKind::malformed, "unknown key '" + key + "' in " + std::string(where));
        }
    }
}

}  // namespace detail

// Strict parse of the JSON config document. Unknown keys anywhere are rejected.
inline DomainConfig config_from_json(const json& j) {
    using detail::reject_unknown_keys;
    reject_unknown_keys(j, {"type_dictionary", "tiers", "near_miss_map", "property_inference", "weights", "params"},
                        "config");
    DomainConfig c;
    for (const char* key : {"type_dictionary", "near_miss_map"}) {
        if (j.contains(key) && !j[key].is_object()) {
            throw ConfigError(ConfigErrorKind::malformed, std::string(key) + " must be an object");
        }
    }
    try {
        const json dictionary = j.value("type_dictionary", json::object());
        for (const auto& [name, ids] : dictionary.items()) {
            c.type_dictionary[name] = ids_from_json(ids);
        }
        if (j.contains("tiers")) {
            const auto& t = j["tiers"];
            reject_unknown_keys(t, {"target", "near_miss", "good", "ok", "bad"}, "tiers");
            for (Tier tier : kAllTiers) {
                c.tier(tier) = t.value(std::string(tier_key(tier)), std::vector<std::string>{});
            }
        }
        const json near_miss = j.value("near_miss_map", json::object());
        for (const auto& [name, names] : near_miss.items()) {
            c.near_miss_map[name] = names.get<std::vector<std::string>>();
        }
        const json rules = j.value("property_inference", json::array());
        for (const auto& rule : rules) {
            reject_unknown_keys(rule, {"if_property", "then_type_name"}, "property_inference rule");
            c.property_inference.push_back(
                {EntityId::parse(rule.at("if_property").get<std::string>()), rule.at("then_type_name").get<std::string>()});
        }
        if (j.contains("weights")) {
            const auto& w = j["weights"];
            reject_unknown_keys(w, {"type", "match", "prominence", "context"}, "weights");
            c.weights.type = w.value("type", c.weights.type);
            c.weights.match = w.value("match", c.weights.match);
            c.weights.prominence = w.value("prominence", c.weights.prominence);
            c.weights.context = w.value("context", c.weights.context);
        }
        if (j.contains("params")) {
            const auto& p = j["params"];
            reject_unknown_keys(p,
                                {"header_property_boost", "column_type_boost", "header_column_boost", "k",
                                 "sample_size", "support_threshold", "min_link_score"},
                                "params");
            auto& q = c.params;
            q.header_property_boost = p.value("header_property_boost", q.header_property_boost);
            q.column_type_boost = p.value("column_type_boost", q.column_type_boost);
            q.header_column_boost = p.value("header_column_boost", q.header_column_boost);
            q.k = p.value("k", q.k);
            q.sample_size = p.value("sample_size", q.sample_size);
            q.support_threshold = p.value("support_threshold", q.support_threshold);
            q.min_link_score = p.value("min_link_score", q.min_link_score);
        }
    } catch (const json::exception& e) {
        throw ConfigError(ConfigErrorKind::malformed, std::string("malformed config: ") + e.what());
    } catch (const ParseError& e) {
        throw ConfigError(ConfigErrorKind::malformed, e.what());
    }
    return c;
}

inline ordered_json config_to_json(const DomainConfig& c) {
    ordered_json j;
    ordered_json dict = ordered_json::object();
    for (const auto& [name, ids] : c.type_dictionary) dict[name] = ids_to_json(ids);
    j["type_dictionary"] = std::move(dict);
    ordered_json tiers = ordered_json::object();
    for (Tier t : kAllTiers) tiers[std::string(tier_key(t))] = c.tier(t);
    j["tiers"] = std::move(tiers);
    ordered_json nm = ordered_json::object();
    for (const auto& [name, names] : c.near_miss_map) nm[name] = names;
    j["near_miss_map"] = std::move(nm);
    ordered_json rules = ordered_json::array();
    for (const auto& r : c.property_inference) {
        rules.push_back(ordered_json{{"if_property", r.if_property.str()}, {"then_type_name", r.then_type_name}});
    }
    j["property_inference"] = std::move(rules);
    j["weights"] = ordered_json{{"type", c.weights.type},
                                {"match", c.weights.match},
                                {"prominence", c.weights.prominence},
                                {"context", c.weights.context}};
    const auto& p = c.params;
    j["params"] = ordered_json{{"header_property_boost", p.header_property_boost},
                               {"column_type_boost", p.column_type_boost},
                               {"header_column_boost", p.header_column_boost},
                               {"k", p.k},
                               {"sample_size", p.sample_size},
                               {"support_threshold", p.support_threshold},
                               {"min_link_score", p.min_link_score}};
    return j;
}

inline DomainConfig read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigErrorKind::malformed, path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

// A config whose type names are resolved to sorted id sets and whose
// invariants have been checked. Immutable once built.
class ValidatedConfig {
public:
    const DomainConfig& raw() const noexcept { return raw_; }
    const Weights& weights() const noexcept { return raw_.weights; }
    const LinkParams& params() const noexcept { return raw_.params; }

    // Sorted ids of every type name listed in tier t.
    const std::vector<EntityId>& tier_ids(Tier t) const { return tier_ids_[static_cast<std::size_t>(t)]; }

    bool name_in_tier(std::string_view name, Tier t) const {
        const auto& names = raw_.tier(t);
        return std::find(names.begin(), names.end(), name) != names.end();
    }

    bool has_type_name(const std::string& name) const { return raw_.type_dictionary.contains(name); }

    // Sorted ids a type name maps to; throws for names absent from the dictionary.
    const std::vector<EntityId>& ids_for(const std::string& name) const {
        auto it = resolved_names_.find(name);
        if (it == resolved_names_.end()) {
            throw ConfigError(ConfigErrorKind::unresolved_type_name, "unknown type name '" + name + "'");
        }
        return it->second;
    }

    // Union of the ids of every near-miss name listed for an expected type name.
    std::vector<EntityId> near_miss_ids(const std::string& expected) const {
        std::vector<EntityId> out;
        auto it = raw_.near_miss_map.find(expected);
        if (it == raw_.near_miss_map.end()) return out;
        for (const auto& name : it->second) {
            const auto& ids = ids_for(name);
            out.insert(out.end(), ids.begin(), ids.end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    const std::string& content_hash() const noexcept { return hash_; }

    friend ValidatedConfig validate_config(DomainConfig config);

private:
    DomainConfig raw_;
    std::map<std::string, std::vector<EntityId>, std::less<>> resolved_names_;
    std::array<std::vector<EntityId>, 5> tier_ids_;
    std::string hash_;
};

namespace detail {

// Divides by the sum until the result is a fixpoint, so that validating an
// already-validated config leaves the weights bit-identical.
inline Weights renormalize(Weights w) {
    for (int i = 0; i < 8; ++i) {
        const double s = w.sum();
        if (s == 1.0) break;
        Weights next{w.type / s, w.match / s, w.prominence / s, w.context / s};
        if (next == w) break;
        w = next;
    }
    return w;
}

}  // namespace detail

inline ValidatedConfig validate_config(DomainConfig config) {
    const Weights& w = config.weights;
    for (double v : {w.type, w.match, w.prominence, w.context}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ConfigError(ConfigErrorKind::bad_weights, "weights must be non-negative and finite");
        }
    }
    if (std::abs(w.sum() - 1.0) > 1e-6) {
        throw ConfigError(ConfigErrorKind::bad_weights, "weights sum to " + std::to_string(w.sum()) + ", expected 1.0");
    }
    config.weights = detail::renormalize(config.weights);

    const LinkParams& p = config.params;
    auto bad_param = [](const std::string& what) { throw ConfigError(ConfigErrorKind::bad_param, what); };
    if (p.k <= 0) bad_param("params.k must be positive");
    if (p.sample_size <= 0) bad_param("params.sample_size must be positive");
    if (!(p.support_threshold > 0.0 && p.support_threshold <= 1.0)) bad_param("params.support_threshold must be in (0,1]");
    for (double b : {p.header_property_boost, p.column_type_boost, p.header_column_boost}) {
        if (!(b >= 0.0) || !std::isfinite(b)) bad_param("boosts must be non-negative and finite");
    }
    if (!std::isfinite(p.min_link_score)) bad_param("params.min_link_score must be finite");

    ValidatedConfig v;
    for (const auto& [name, ids] : config.type_dictionary) {
        auto sorted = ids;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        v.resolved_names_[name] = std::move(sorted);
    }
    auto require = [&](const std::string& name, std::string_view where) -> const std::vector<EntityId>& {
        auto it = v.resolved_names_.find(name);
        if (it == v.resolved_names_.end()) {
            throw ConfigError(ConfigErrorKind::unresolved_type_name,
                              "type name '" + name + "' in " + std::string(where) + " is not in type_dictionary");
        }
        return it->second;
    };
    for (Tier t : kAllTiers) {
        auto& ids = v.tier_ids_[static_cast<std::size_t>(t)];
        for (const auto& name : config.tier(t)) {
            const auto& resolved = require(name, "tiers." + std::string(tier_key(t)));
            ids.insert(ids.end(), resolved.begin(), resolved.end());
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }
    for (const auto& [expected, names] : config.near_miss_map) {
        require(expected, "near_miss_map");
        for (const auto& name : names) require(name, "near_miss_map." + expected);
    }
    for (const auto& rule : config.property_inference) {
        if (!rule.if_property.is_property()) {
            throw ConfigError(ConfigErrorKind::malformed, "property_inference.if_property must be a property id");
        }
        require(rule.then_type_name, "property_inference");
    }

    const auto& bad = v.tier_ids_[static_cast<std::size_t>(Tier::bad)];
    for (Tier t : {Tier::target, Tier::good, Tier::ok}) {
        for (const auto& id : v.tier_ids_[static_cast<std::size_t>(t)]) {
            if (std::binary_search(bad.begin(), bad.end(), id)) {
                throw ConfigError(ConfigErrorKind::tier_conflict,
                                  id.str() + " is listed under both bad and " + std::string(tier_key(t)));
            }
        }
    }

    v.hash_ = sha256_hex(config_to_json(config).dump());
    v.raw_ = std::move(config);
    return v;
}

}  // namespace tablink
