#pragma once

// Precision and candidate recall of table annotations against gold records.
//
// Only gold cells that expect an entity count. candidate_recall is the
// fraction whose expected id is anywhere in the cell's candidate list;
// precision is the fraction whose chosen link is the expected id. The report
// also carries precision over the cells where a link was emitted, since the
// two denominators are easy to confuse.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "tablink/entity_id.hpp"
#include "tablink/error.hpp"
#include "tablink/kb_model.hpp"
#include "tablink/table_linker.hpp"

namespace tablink {

struct GoldRecord {
    std::string table_id;
    int row = 0;  // -1 addresses the header row
    int col = 0;
    std::optional<EntityId> expected;  // nullopt: literal or no link expected

    auto key() const { return std::tie(table_id, row, col); }
    friend bool operator==(const GoldRecord&, const GoldRecord&) = default;
};

struct TableScore {
    std::string table_id;
    std::size_t cells_with_gold = 0;
    std::size_t recall_hits = 0;
    std::size_t precision_hits = 0;
};

struct EvalReport {
    std::size_t cells_with_gold = 0;
    std::size_t recall_hits = 0;
    std::size_t precision_hits = 0;
    std::size_t linked_cells = 0;  // gold cells where some link was emitted
    double candidate_recall = 0.0;
    double precision = 0.0;
    double precision_over_linked = 0.0;
    bool undefined = false;  // no gold cell expects an entity; metrics reported as 0
    std::vector<TableScore> per_table;  // sorted by table_id
};

inline ordered_json gold_to_json(const GoldRecord& g) {
    return ordered_json{{"table_id", g.table_id},
                        {"row", g.row},
                        {"col", g.col},
                        {"expected", g.expected ? ordered_json(g.expected->str()) : ordered_json(nullptr)}};
}

inline GoldRecord gold_from_json(const json& j) {
    try {
        GoldRecord g;
        g.table_id = j.at("table_id").get<std::string>();
        g.row = j.at("row").get<int>();
        g.col = j.at("col").get<int>();
        if (!j.at("expected").is_null()) g.expected = EntityId::parse(j.at("expected").get<std::string>());
        return g;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed gold record: ") + e.what());
    }
}

inline std::vector<GoldRecord> read_gold(const std::filesystem::path& path) {
    std::vector<GoldRecord> out;
    detail::for_each_line(path, [&](const std::string& line) { out.push_back(gold_from_json(json::parse(line))); });
    return out;
}

inline void write_gold(const std::filesystem::path& path, const std::vector<GoldRecord>& gold) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& g : gold) out << gold_to_json(g).dump() << '\n';
}

inline EvalReport evaluate(std::span<const TableAnnotation> annotations, std::span<const GoldRecord> gold) {
    using Key = std::tuple<std::string, int, int>;
    std::map<Key, const CellAnnotation*> cells;
    for (const auto& a : annotations) {
        for (const auto* list : {&a.headers, &a.cells}) {
            for (const auto& c : *list) cells[{a.table_id, c.row, c.col}] = &c;
        }
    }

    std::set<Key> seen;
    std::map<std::string, TableScore> per_table;
    EvalReport report;
    for (const auto& g : gold) {
        Key key{g.table_id, g.row, g.col};
        if (!seen.insert(key).second) {
            throw ValidationError("duplicate gold record for " + g.table_id + " (" + std::to_string(g.row) + "," +
                                  std::to_string(g.col) + ")");
        }
        auto it = cells.find(key);
        if (it == cells.end()) {
            throw GoldMismatch("gold cell " + g.table_id + " (" + std::to_string(g.row) + "," + std::to_string(g.col) +
                               ") is not in any annotation");
        }
        if (!g.expected) continue;
        const CellAnnotation& c = *it->second;
        auto& ts = per_table[g.table_id];
        ts.table_id = g.table_id;
        ++ts.cells_with_gold;
        ++report.cells_with_gold;
        if (std::find(c.candidates.begin(), c.candidates.end(), *g.expected) != c.candidates.end()) {
            ++ts.recall_hits;
            ++report.recall_hits;
        }
        if (c.outcome == CellOutcome::entity) {
            ++report.linked_cells;
            if (c.entity == g.expected) {
                ++ts.precision_hits;
                ++report.precision_hits;
            }
        }
    }
    for (auto& [_, ts] : per_table) report.per_table.push_back(ts);

    auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
    report.undefined = report.cells_with_gold == 0;
    report.candidate_recall = ratio(report.recall_hits, report.cells_with_gold);
    report.precision = ratio(report.precision_hits, report.cells_with_gold);
    report.precision_over_linked = ratio(report.precision_hits, report.linked_cells);
    return report;
}

inline ordered_json eval_report_to_json(const EvalReport& r) {
    ordered_json per = ordered_json::array();
    for (const auto& t : r.per_table) {
        per.push_back(ordered_json{{"table_id", t.table_id},
                                   {"cells_with_gold", t.cells_with_gold},
                                   {"recall_hits", t.recall_hits},
                                   {"precision_hits", t.precision_hits}});
    }
    return ordered_json{{"cells_with_gold", r.cells_with_gold},
                        {"candidate_recall", r.candidate_recall},
                        {"precision", r.precision},
                        {"recall_hits", r.recall_hits},
                        {"precision_hits", r.precision_hits},
                        {"linked_cells", r.linked_cells},
                        {"precision_over_linked", r.precision_over_linked},
                        {"undefined", r.undefined},
                        {"per_table", std::move(per)}};
}

}  // namespace tablink
