#pragma once

// Streaming extraction of ItemRecords and TypeEdges from Wikidata-style
// entity dumps (one JSON entity document per line).
//
// Accepted fields: id, labels.en.value, aliases.en[*].value,
// descriptions.en.value, claims (item-valued main snaks only) and the key
// set of sitelinks. Everything else in a document is ignored.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tablink/entity_id.hpp"
#include "tablink/error.hpp"
#include "tablink/kb_model.hpp"

namespace tablink {

inline constexpr EntityId kInstanceOf = EntityId::property(31);
inline constexpr EntityId kSubclassOf = EntityId::property(279);
inline constexpr EntityId kSubpropertyOf = EntityId::property(1647);

struct IngestStats {
    std::uint64_t docs_seen = 0;
    std::uint64_t records_emitted = 0;
    std::uint64_t skipped_no_label = 0;
    std::uint64_t edges_emitted = 0;
    std::uint64_t parse_errors = 0;

    IngestStats& operator+=(const IngestStats& o) {
        docs_seen += o.docs_seen;
        records_emitted += o.records_emitted;
        skipped_no_label += o.skipped_no_label;
        edges_emitted += o.edges_emitted;
        parse_errors += o.parse_errors;
        return *this;
    }

    friend bool operator==(const IngestStats&, const IngestStats&) = default;
};

struct EntityParse {
    std::optional<ItemRecord> record;
    std::vector<TypeEdge> edges;
};

namespace detail {

// Target of an item- or property-valued main snak, or nullopt for
// novalue/somevalue snaks and non-entity datavalues.
inline std::optional<EntityId> snak_target(const json& statement) {
    if (!statement.is_object()) return std::nullopt;
    if (statement.value("rank", std::string{}) == "deprecated") return std::nullopt;
    auto snak = statement.find("mainsnak");
    if (snak == statement.end() || !snak->is_object()) return std::nullopt;
    if (snak->value("snaktype", std::string{}) != "value") return std::nullopt;
    auto dv = snak->find("datavalue");
    if (dv == snak->end() || !dv->is_object()) return std::nullopt;
    auto value = dv->find("value");
    if (value == dv->end() || !value->is_object()) return std::nullopt;
    if (auto id = value->find("id"); id != value->end() && id->is_string()) {
        return EntityId::try_parse(id->get<std::string>());
    }
    auto type = value->find("entity-type");
    auto num = value->find("numeric-id");
    if (type == value->end() || num == value->end() || !num->is_number_unsigned()) return std::nullopt;
    if (*type == "item") return EntityId::item(num->get<std::uint64_t>());
    if (*type == "property") return EntityId::property(num->get<std::uint64_t>());
    return std::nullopt;
}

inline std::optional<std::string> english_value(const json& doc, const char* field) {
    auto f = doc.find(field);
    if (f == doc.end() || !f->is_object()) return std::nullopt;
    auto en = f->find("en");
    if (en == f->end() || !en->is_object()) return std::nullopt;
    auto v = en->find("value");
    if (v == en->end() || !v->is_string()) return std::nullopt;
    return v->get<std::string>();
}

// Removes dump-array decoration: a leading '[', trailing ']' and ','.
inline std::string_view strip_dump_line(std::string_view line) {
    auto trim = [](std::string_view s) {
        auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string_view::npos) return std::string_view{};
        auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (!line.empty() && line.front() == '[') line = trim(line.substr(1));
    while (!line.empty() && (line.back() == ',' || line.back() == ']')) line = trim(line.substr(0, line.size() - 1));
    return line;
}

}  // namespace detail

// Extracts one entity document. Throws ParseError for documents that are not
// objects or lack a well-formed id; missing optional fields are not errors.
inline EntityParse parse_entity_doc(const json& doc, const std::set<EntityId>& watchlist) {
    if (!doc.is_object()) throw ParseError("entity document is not an object");
    auto id_field = doc.find("id");
    if (id_field == doc.end() || !id_field->is_string()) throw ParseError("entity document has no string id");
    const EntityId id = EntityId::parse(id_field->get<std::string>());

    EntityParse out;
    std::vector<EntityId> direct_types;
    std::vector<EntityId> flagged;

    if (auto claims = doc.find("claims"); claims != doc.end()) {
        if (!claims->is_object()) throw ParseError(id.str() + ": claims is not an object");
        for (const auto& [pid_raw, statements] : claims->items()) {
            auto pid = EntityId::try_parse(pid_raw);
            if (!pid || !pid->is_property() || !statements.is_array()) continue;

            bool has_live_statement = false;
            for (const auto& st : statements) {
                if (st.is_object() && st.value("rank", std::string{}) != "deprecated") has_live_statement = true;
                auto target = detail::snak_target(st);
                if (!target) continue;
                if (*pid == kInstanceOf && target->is_item()) {
                    direct_types.push_back(*target);
                } else if (*pid == kSubclassOf && id.is_item() && target->is_item()) {
                    out.edges.push_back({id, *target, TypeRelation::subclass_of});
                } else if (*pid == kSubpropertyOf && id.is_property() && target->is_property()) {
                    out.edges.push_back({id, *target, TypeRelation::subproperty_of});
                }
            }
            if (has_live_statement && watchlist.contains(*pid)) flagged.push_back(*pid);
        }
    }
    // Duplicate statements yield one edge; first-seen order is kept.
    std::vector<TypeEdge> unique_edges;
    for (const auto& e : out.edges) {
        if (std::find(unique_edges.begin(), unique_edges.end(), e) == unique_edges.end()) unique_edges.push_back(e);
    }
    out.edges = std::move(unique_edges);

    auto label = detail::english_value(doc, "labels");
    if (!label || text::normalize(*label).empty()) return out;

    std::vector<std::string> aliases;
    if (auto al = doc.find("aliases"); al != doc.end() && al->is_object()) {
        if (auto en = al->find("en"); en != al->end() && en->is_array()) {
            for (const auto& a : *en) {
                if (a.is_object() && a.contains("value") && a["value"].is_string()) {
                    aliases.push_back(a["value"].get<std::string>());
                }
            }
        }
    }
    std::uint64_t sitelinks = 0;
    if (auto sl = doc.find("sitelinks"); sl != doc.end() && sl->is_object()) sitelinks = sl->size();

    out.record = ItemRecord::make(id, std::move(*label), std::move(aliases),
                                  detail::english_value(doc, "descriptions").value_or(""), std::move(direct_types),
                                  sitelinks, std::move(flagged));
    return out;
}

inline EntityParse parse_entity_doc(std::string_view doc_text, const std::set<EntityId>& watchlist) {
    json doc;
    try {
        doc = json::parse(doc_text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    try {
        return parse_entity_doc(doc, watchlist);
    } catch (const json::exception& e) {
        throw ParseError(e.what());
    } catch (const ValidationError& e) {
        throw ParseError(e.what());
    }
}

inline EntityParse parse_entity_doc(const std::string& doc_text, const std::set<EntityId>& watchlist) {
    return parse_entity_doc(std::string_view(doc_text), watchlist);
}

struct IngestOptions {
    std::set<EntityId> watchlist;
    unsigned jobs = 1;
    std::size_t chunk_lines = 8192;  // lines per thread per batch
};

namespace detail {

struct ShardOutput {
    std::string records;
    std::string edges;
    IngestStats stats;
};

inline ShardOutput ingest_lines(std::span<const std::string> lines, const std::set<EntityId>& watchlist) {
    ShardOutput out;
    for (const auto& raw : lines) {
        std::string_view line = strip_dump_line(raw);
        if (line.empty()) continue;
        ++out.stats.docs_seen;
        EntityParse parsed;
        try {
            parsed = parse_entity_doc(line, watchlist);
        } catch (const ParseError&) {
            ++out.stats.parse_errors;
            continue;
        }
        if (parsed.record) {
            ++out.stats.records_emitted;
            out.records += record_line(*parsed.record);
            out.records += '\n';
        } else {
            ++out.stats.skipped_no_label;
        }
        for (const auto& e : parsed.edges) {
            ++out.stats.edges_emitted;
            out.edges += edge_line(e);
            out.edges += '\n';
        }
    }
    return out;
}

}  // namespace detail

// Reads the dump in batches; each batch is split into `jobs` contiguous
// shards parsed in parallel and written back in shard order, so output is
// identical for every jobs value.
inline IngestStats ingest_dump(std::istream& in, std::ostream& records_out, std::ostream& edges_out,
                               const IngestOptions& options = {}) {
    const unsigned jobs = std::max(1u, options.jobs);
    const std::size_t batch = options.chunk_lines * jobs;
    IngestStats total;
    std::vector<std::string> lines;
    lines.reserve(batch);
    std::string line;

    auto flush = [&] {
        if (lines.empty()) return;
        std::vector<detail::ShardOutput> shards(jobs);
        const std::size_t per = (lines.size() + jobs - 1) / jobs;
        auto run = [&](unsigned s) {
            const std::size_t begin = std::min(lines.size(), s * per);
            const std::size_t end = std::min(lines.size(), begin + per);
            shards[s] = detail::ingest_lines(std::span<const std::string>(lines).subspan(begin, end - begin),
                                             options.watchlist);
        };
        if (jobs == 1) {
            run(0);
        } else {
            std::vector<std::jthread> workers;
            for (unsigned s = 0; s < jobs; ++s) workers.emplace_back(run, s);
        }
        for (const auto& s : shards) {
            records_out << s.records;
            edges_out << s.edges;
            total += s.stats;
        }
        lines.clear();
    };

    while (std::getline(in, line)) {
        lines.push_back(std::move(line));
        if (lines.size() >= batch) flush();
    }
    if (in.bad()) throw IoError("read error while ingesting dump");
    flush();
    if (!records_out || !edges_out) throw IoError("write error while ingesting dump");
    return total;
}

inline IngestStats ingest_dump(const std::filesystem::path& dump, const std::filesystem::path& records_path,
                               const std::filesystem::path& edges_path, const IngestOptions& options = {}) {
    std::ifstream in(dump, std::ios::binary);
    if (!in) throw IoError("cannot open dump " + dump.string());
    std::ofstream rec(records_path, std::ios::binary);
    if (!rec) throw IoError("cannot write " + records_path.string());
    std::ofstream edg(edges_path, std::ios::binary);
    if (!edg) throw IoError("cannot write " + edges_path.string());
    return ingest_dump(in, rec, edg, options);
}

inline ordered_json stats_to_json(const IngestStats& s) {
    return ordered_json{{"docs_seen", s.docs_seen},
                        {"records_emitted", s.records_emitted},
                        {"skipped_no_label", s.skipped_no_label},
                        {"edges_emitted", s.edges_emitted},
                        {"parse_errors", s.parse_errors}};
}

}  // namespace tablink
