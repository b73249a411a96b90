#pragma once

// Whole-table annotation: literal detection, rule-based orientation and a
// two-pass joint inference over each column (or row, for vertical tables).
//
// Pass 1 links every non-literal body cell in cell mode and every header in
// header mode (context = caption + sibling headers). Pass 2 votes a dominant
// type per column from a sample of its cells, boosts body candidates of that
// type and header candidates whose wording overlaps the type's label, then
// re-selects every link.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>


#include "tablink/error.hpp"
#include "tablink/kb_model.hpp"
#include "tablink/link_cache.hpp"
#include "tablink/linker.hpp"
#include "tablink/parallel.hpp"
#include "tablink/text.hpp"
#include "tablink/type_store.hpp"

namespace tablink {

struct Table {
    std::string table_id;
    std::string caption;
    std::vector<std::string> header_row;
    std::vector<std::vector<std::string>> rows;

    void validate() const {
        if (header_row.empty() || rows.empty()) throw ValidationError("table " + table_id + " has an empty grid");
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != header_row.size()) {
                throw ValidationError("table " + table_id + ": row " + std::to_string(r) + " has " +
                                      std::to_string(rows[r].size()) + " cells, expected " +
                                      std::to_string(header_row.size()));
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Literal specialists

enum class LiteralKind : std::uint8_t { number, percent, date, sequence, clinical_trial_id, empty };

inline std::string_view literal_kind_name(LiteralKind k) {
    switch (k) {
        case LiteralKind::number: return "NUMBER";
        case LiteralKind::percent: return "PERCENT";
        case LiteralKind::date: return "DATE";
        case LiteralKind::sequence: return "SEQUENCE";
        case LiteralKind::clinical_trial_id: return "CLINICAL_TRIAL_ID";
        case LiteralKind::empty: return "EMPTY";
    }
    return "?";
}

inline LiteralKind parse_literal_kind(std::string_view s) {
    for (auto k : {LiteralKind::number, LiteralKind::percent, LiteralKind::date, LiteralKind::sequence,
                   LiteralKind::clinical_trial_id, LiteralKind::empty}) {
        if (literal_kind_name(k) == s) return k;
    }
    throw ParseError("unknown literal kind '" + std::string(s) + "'");
}

namespace detail {

// Signed integer/decimal with optional thousands separators. U+2212 is
// accepted as a minus sign.
inline const std::string kNumberPattern = R"((?:[+-]|\xE2\x88\x92)?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|(?:[+-]|\xE2\x88\x92)?\.\d+)";
inline const std::string kEnDash = "\xE2\x80\x93";

inline const std::regex& number_re() {
    static const std::regex re("^(?:" + kNumberPattern + ")$");
    return re;
}
inline const std::regex& range_re() {
    static const std::regex re("^(?:" + kNumberPattern + ")\\s*(?:" + kEnDash + "|-)\\s*(?:" + kNumberPattern + ")$");
    return re;
}
inline const std::regex& percent_re() {
    static const std::regex re("^(?:" + kNumberPattern + ")(?:\\s*(?:" + kEnDash + "|-)\\s*(?:" + kNumberPattern +
                               "))?\\s*%$");
    return re;
}
inline const std::regex& date_re() {
    // YYYY-MM-DD, YYYY/MM/DD, YYYY-MM, MM-YYYY, MM/YYYY, YYYY
    static const std::regex re(
        R"(^(?:(\d{4})[-/](\d{2})[-/](\d{2})|(\d{4})-(\d{2})|(\d{2})[-/](\d{4})|\d{4})$)");
    return re;
}
inline const std::regex& date_shaped_re() {
    static const std::regex re(R"(^(?:\d{4}-\d{2}|\d{2}-\d{4})$)");
    return re;
}

inline bool valid_month(const std::string& m) { return !m.empty() && std::stoi(m) >= 1 && std::stoi(m) <= 12; }

inline std::string trim_copy(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline bool is_date(const std::string& s) {
    std::smatch m;
    if (!std::regex_match(s, m, date_re())) return false;
    if (m[2].matched) {
        const int day = std::stoi(m[3].str());
        return valid_month(m[2].str()) && day >= 1 && day <= 31;
    }
    if (m[5].matched) return valid_month(m[5].str());
    if (m[6].matched) return valid_month(m[6].str());
    return true;
}

}  // namespace detail

// Kinds are tested in a fixed order (EMPTY, CLINICAL_TRIAL_ID, SEQUENCE,
// PERCENT, NUMBER, DATE) so each cell gets at most one. nullopt means the
// cell should go to the entity linker.
inline std::optional<LiteralKind> detect_literal(std::string_view cell) {
    const std::string s = detail::trim_copy(cell);
    if (s.empty() || s == "-" || s == detail::kEnDash || text::normalize(s) == "n/a") return LiteralKind::empty;

    if (s.size() == 11 && (s[0] == 'N' || s[0] == 'n') && (s[1] == 'C' || s[1] == 'c') && (s[2] == 'T' || s[2] == 't') &&
        std::all_of(s.begin() + 3, s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return LiteralKind::clinical_trial_id;
    }
    if (s.size() >= 8 && std::all_of(s.begin(), s.end(), [](char c) {
            switch (c) {
                case 'A': case 'C': case 'G': case 'T': case 'U': case 'N':
                case 'a': case 'c': case 'g': case 't': case 'u': case 'n': return true;
                default: return false;
            }
        })) {
        return LiteralKind::sequence;
    }
    if (std::regex_match(s, detail::percent_re())) return LiteralKind::percent;
    if (std::regex_match(s, detail::number_re())) return LiteralKind::number;
    // A hyphenated pair shaped like MM-YYYY or YYYY-MM is a date, not a range.
    if (std::regex_match(s, detail::range_re()) && !std::regex_match(s, detail::date_shaped_re())) {
        return LiteralKind::number;
    }
    if (detail::is_date(s)) return LiteralKind::date;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Orientation

enum class Orientation : std::uint8_t { horizontal, vertical };

inline std::string_view orientation_name(Orientation o) { return o == Orientation::horizontal ? "horizontal" : "vertical"; }

namespace detail {

inline int literal_class(const std::string& cell) {
    auto k = detect_literal(cell);
    return k ? static_cast<int>(*k) : -1;
}

template <typename Get>
double mean_homogeneity(std::size_t lanes, std::size_t len, Get&& get) {
    double total = 0.0;
    for (std::size_t l = 0; l < lanes; ++l) {
        std::map<int, std::size_t> counts;
        std::size_t modal = 0;
        for (std::size_t i = 0; i < len; ++i) modal = std::max(modal, ++counts[get(l, i)]);
        total += static_cast<double>(modal) / static_cast<double>(len);
    }
    return total / static_cast<double>(lanes);
}

}  // namespace detail

// Compares how uniform the literal-kind classes are down columns versus
// across rows of the body. Ties go to horizontal.
inline Orientation classify_orientation(const Table& table) {
    table.validate();
    const std::size_t R = table.rows.size(), C = table.header_row.size();
    std::vector<std::vector<int>> cls(R, std::vector<int>(C));
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) cls[r][c] = detail::literal_class(table.rows[r][c]);
    }
    const double by_column = detail::mean_homogeneity(C, R, [&](std::size_t c, std::size_t r) { return cls[r][c]; });
    const double by_row = detail::mean_homogeneity(R, C, [&](std::size_t r, std::size_t c) { return cls[r][c]; });
    return by_row > by_column ? Orientation::vertical : Orientation::horizontal;
}

// ---------------------------------------------------------------------------
// Column type vote

// Each candidate adds its final score to each of its direct types. The
// heaviest type (lowest id on ties) wins if it occurs in the candidate lists
// of at least `threshold` of the sampled cells.
inline std::optional<EntityId> column_type_vote(std::span<const std::vector<ScoredCandidate>* const> candidate_sets,
                                                double threshold) {
    if (candidate_sets.empty()) return std::nullopt;
    std::map<EntityId, double> weight;
    std::map<EntityId, std::size_t> support;
    for (const auto* set : candidate_sets) {
        std::set<EntityId> seen;
        for (const auto& c : *set) {
            for (const auto& t : c.record.direct_types) {
                weight[t] += c.final_score;
                seen.insert(t);
            }
        }
        for (const auto& t : seen) ++support[t];
    }
    if (weight.empty()) return std::nullopt;
    auto best = weight.begin();
    for (auto it = weight.begin(); it != weight.end(); ++it) {
        if (it->second > best->second) best = it;
    }
    const double fraction = static_cast<double>(support[best->first]) / static_cast<double>(candidate_sets.size());
    if (fraction >= threshold) return best->first;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Annotations

enum class CellOutcome : std::uint8_t { entity, literal, nil };

struct CellAnnotation {
    int row = 0;  // -1 addresses the header row
    int col = 0;
    std::string mention;
    CellOutcome outcome = CellOutcome::nil;
    std::optional<EntityId> entity;
    std::string label;
    double final_score = 0.0;
    std::optional<LiteralKind> literal;
    std::vector<EntityId> candidates;  // scored candidate ids, best first
    std::string error;

    friend bool operator==(const CellAnnotation&, const CellAnnotation&) = default;
};

struct TableAnnotation {
    std::string table_id;
    Orientation orientation = Orientation::horizontal;
    std::vector<std::optional<EntityId>> dominant_types;  // one per lane (column, or row when vertical)
    std::vector<CellAnnotation> headers;
    std::vector<CellAnnotation> cells;

    friend bool operator==(const TableAnnotation&, const TableAnnotation&) = default;
};

struct TableLinkOptions {
    unsigned jobs = 1;
    LinkCache* cache = nullptr;
};

namespace detail {

// The table seen lane by lane: for a horizontal table lanes are columns and
// the header row heads them; a vertical table is transposed first so its
// first column heads the lanes. Coordinates always refer to the input table.
struct LaneView {
    std::vector<std::string> headers;
    std::vector<std::pair<int, int>> header_coord;
    std::vector<std::vector<std::string>> body;  // body[position][lane]
    std::vector<std::vector<std::pair<int, int>>> body_coord;
};

inline LaneView make_lane_view(const Table& t, Orientation o) {
    LaneView v;
    const std::size_t R = t.rows.size(), C = t.header_row.size();
    auto grid = [&](std::size_t gr, std::size_t gc) -> const std::string& {
        return gr == 0 ? t.header_row[gc] : t.rows[gr - 1][gc];
    };
    if (o == Orientation::horizontal) {
        for (std::size_t c = 0; c < C; ++c) {
            v.headers.push_back(t.header_row[c]);
            v.header_coord.emplace_back(-1, static_cast<int>(c));
        }
        for (std::size_t r = 0; r < R; ++r) {
            v.body.push_back(t.rows[r]);
            std::vector<std::pair<int, int>> coords;
            for (std::size_t c = 0; c < C; ++c) coords.emplace_back(static_cast<int>(r), static_cast<int>(c));
            v.body_coord.push_back(std::move(coords));
        }
    } else {
        for (std::size_t g = 0; g <= R; ++g) {
            v.headers.push_back(grid(g, 0));
            v.header_coord.emplace_back(static_cast<int>(g) - 1, 0);
        }
        for (std::size_t c = 1; c < C; ++c) {
            std::vector<std::string> lane_row;
            std::vector<std::pair<int, int>> coords;
            for (std::size_t g = 0; g <= R; ++g) {
                lane_row.push_back(grid(g, c));
                coords.emplace_back(static_cast<int>(g) - 1, static_cast<int>(c));
            }
            v.body.push_back(std::move(lane_row));
            v.body_coord.push_back(std::move(coords));
        }
    }
    return v;
}

struct CellWork {
    std::string mention;
    std::pair<int, int> coord;
    std::optional<LiteralKind> literal;
    std::optional<LinkResult> link;
    std::string error;
};

inline CellAnnotation to_annotation(const CellWork& w) {
    CellAnnotation a;
    a.row = w.coord.first;
    a.col = w.coord.second;
    a.mention = w.mention;
    a.error = w.error;
    if (w.literal) {
        a.outcome = CellOutcome::literal;
        a.literal = w.literal;
        return a;
    }
    if (w.link) {
        for (const auto& c : w.link->candidates) a.candidates.push_back(c.record.id);
        if (w.link->chosen) {
            a.outcome = CellOutcome::entity;
            a.entity = w.link->chosen->record.id;
            a.label = w.link->chosen->record.label;
            a.final_score = w.link->chosen->final_score;
            return a;
        }
    }
    a.outcome = CellOutcome::nil;
    return a;
}

inline std::string header_context(const Table& t, const std::vector<std::string>& headers, std::size_t self) {
    std::string ctx = t.caption;
    for (std::size_t i = 0; i < headers.size(); ++i) {
        if (i == self) continue;
        if (!ctx.empty()) ctx += ' ';
        ctx += headers[i];
    }
    return ctx;
}

inline bool shares_token(const ItemRecord& r, const std::vector<std::string>& tokens) {
    for (const auto& t : text::token_set(r.label + " " + r.description)) {
        if (std::binary_search(tokens.begin(), tokens.end(), t)) return true;
    }
    return false;
}

}  // namespace detail

inline TableAnnotation link_table(const Table& table, const Linker& linker, const TableLinkOptions& options = {}) {
    table.validate();
    const auto& params = linker.config().params();
    const Orientation orientation = classify_orientation(table);
    const detail::LaneView view = detail::make_lane_view(table, orientation);
    const std::size_t lanes = view.headers.size();
    const std::size_t positions = view.body.size();

    // Pass 1. Work items: headers first, then body cells position-major.
    std::vector<detail::CellWork> work;
    std::vector<LinkRequest> requests;
    std::vector<std::size_t> to_link;
    for (std::size_t l = 0; l < lanes; ++l) {
        detail::CellWork w{view.headers[l], view.header_coord[l], detect_literal(view.headers[l]), {}, {}};
        if (!w.literal) {
            to_link.push_back(work.size());
            requests.push_back({view.headers[l], LinkMode::header, detail::header_context(table, view.headers, l), {}});
        } else {
            requests.emplace_back();
        }
        work.push_back(std::move(w));
    }
    for (std::size_t p = 0; p < positions; ++p) {
        for (std::size_t l = 0; l < lanes; ++l) {
            detail::CellWork w{view.body[p][l], view.body_coord[p][l], detect_literal(view.body[p][l]), {}, {}};
            if (!w.literal) {
                to_link.push_back(work.size());
                requests.push_back({view.body[p][l], LinkMode::cell, std::nullopt, {}});
            } else {
                requests.emplace_back();
            }
            work.push_back(std::move(w));
        }
    }
    std::optional<CachedLinker> cached;
    if (options.cache) cached.emplace(linker, *options.cache);
    parallel_for(to_link.size(), options.jobs, [&](std::size_t i) {
        const std::size_t slot = to_link[i];
        try {
            work[slot].link = cached ? cached->link(requests[slot]) : linker.link(requests[slot]);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            work[slot].error = e.what();
        }
    });
    auto body_work = [&](std::size_t p, std::size_t l) -> detail::CellWork& { return work[lanes + p * lanes + l]; };

    // Pass 2.
    TableAnnotation ann;
    ann.table_id = table.table_id;
    ann.orientation = orientation;
    ann.dominant_types.assign(lanes, std::nullopt);
    const std::vector<ScoredCandidate> no_candidates;
    for (std::size_t l = 0; l < lanes; ++l) {
        std::vector<const std::vector<ScoredCandidate>*> sample;
        for (std::size_t p = 0; p < positions && sample.size() < static_cast<std::size_t>(params.sample_size); ++p) {
            const auto& w = body_work(p, l);
            if (w.literal) continue;
            sample.push_back(w.link ? &w.link->candidates : &no_candidates);
        }
        const auto dominant = column_type_vote(sample, params.support_threshold);
        ann.dominant_types[l] = dominant;
        if (!dominant) continue;

        for (std::size_t p = 0; p < positions; ++p) {
            auto& w = body_work(p, l);
            if (w.literal || !w.link) continue;
            for (auto& c : w.link->candidates) {
                if (has_type(c.record, *dominant, linker.closure())) {
                    c.boosts += params.column_type_boost;
                    c.rescore(linker.config().weights());
                }
            }
            select_best(*w.link, params.min_link_score);
        }
        auto& hw = work[l];
        const ItemRecord* type_record = linker.index().find(*dominant);
        if (!hw.literal && hw.link && type_record) {
            const auto type_tokens = text::token_set(type_record->label);
            for (auto& c : hw.link->candidates) {
                if (detail::shares_token(c.record, type_tokens)) {
                    c.boosts += params.header_column_boost;
                    c.rescore(linker.config().weights());
                }
            }
            select_best(*hw.link, params.min_link_score);
        }
    }

    for (std::size_t l = 0; l < lanes; ++l) ann.headers.push_back(detail::to_annotation(work[l]));
    for (std::size_t i = lanes; i < work.size(); ++i) ann.cells.push_back(detail::to_annotation(work[i]));
    auto by_coord = [](const CellAnnotation& a, const CellAnnotation& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    };
    std::sort(ann.headers.begin(), ann.headers.end(), by_coord);
    std::sort(ann.cells.begin(), ann.cells.end(), by_coord);
    return ann;
}

// ---------------------------------------------------------------------------
// Table and annotation I/O

inline Table table_from_json(const json& j) {
    try {
        detail::reject_unknown_keys(j, {"table_id", "caption", "headers", "rows"}, "table");
        Table t;
        t.table_id = j.at("table_id").get<std::string>();
        t.caption = j.value("caption", std::string{});
        t.header_row = j.at("headers").get<std::vector<std::string>>();
        t.rows = j.at("rows").get<std::vector<std::vector<std::string>>>();
        t.validate();
        return t;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed table: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(e.what());
    }
}

inline ordered_json table_to_json(const Table& t) {
    return ordered_json{{"table_id", t.table_id}, {"caption", t.caption}, {"headers", t.header_row}, {"rows", t.rows}};
}

namespace detail {

// One CSV record. Fields may be quoted; inside quotes, commas are literal and
// a doubled quote stands for one quote character.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch != '"') {
                fields.back() += ch;
            } else if (i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else {
                quoted = false;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
        } else {
            fields.back() += ch;
        }
    }
    if (quoted) throw ParseError("malformed CSV: unterminated quoted field");
    return fields;
}

}  // namespace detail

// CSV with the first record as header row. Quoted fields may contain commas
// and doubled quotes but not line breaks.
inline Table table_from_csv(std::istream& in, std::string table_id, bool has_header) {
    Table t;
    t.table_id = std::move(table_id);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = detail::split_csv_line(line);
        if (first && has_header) {
            t.header_row = std::move(fields);
        } else {
            t.rows.push_back(std::move(fields));
        }
        first = false;
    }
    if (!has_header && !t.rows.empty()) t.header_row.assign(t.rows.front().size(), "");
    t.validate();
    return t;
}

inline Table read_table(const std::filesystem::path& path, bool csv_has_header = true) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open table " + path.string());
    if (path.extension() == ".csv") return table_from_csv(in, path.stem().string(), csv_has_header);
    try {
        return table_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline ordered_json cell_to_json(const CellAnnotation& a) {
    ordered_json j;
    j["row"] = a.row;
    j["col"] = a.col;
    j["mention"] = a.mention;
    switch (a.outcome) {
        case CellOutcome::entity:
            j["outcome"] = "entity";
            j["entity"] = a.entity->str();
            j["label"] = a.label;
            j["final_score"] = a.final_score;
            break;
        case CellOutcome::literal:
            j["outcome"] = "literal";
            j["literal"] = literal_kind_name(*a.literal);
            break;
        case CellOutcome::nil: j["outcome"] = "nil"; break;
    }
    j["candidates"] = ids_to_json(a.candidates);
    if (!a.error.empty()) j["error"] = a.error;
    return j;
}

inline CellAnnotation cell_from_json(const json& j) {
    CellAnnotation a;
    a.row = j.at("row").get<int>();
    a.col = j.at("col").get<int>();
    a.mention = j.at("mention").get<std::string>();
    const auto outcome = j.at("outcome").get<std::string>();
    if (outcome == "entity") {
        a.outcome = CellOutcome::entity;
        a.entity = EntityId::parse(j.at("entity").get<std::string>());
        a.label = j.at("label").get<std::string>();
        a.final_score = j.at("final_score").get<double>();
    } else if (outcome == "literal") {
        a.outcome = CellOutcome::literal;
        a.literal = parse_literal_kind(j.at("literal").get<std::string>());
    } else if (outcome == "nil") {
        a.outcome = CellOutcome::nil;
    } else {
        throw ParseError("unknown cell outcome '" + outcome + "'");
    }
    a.candidates = ids_from_json(j.at("candidates"));
    a.error = j.value("error", std::string{});
    return a;
}

inline ordered_json annotation_to_json(const TableAnnotation& a) {
    ordered_json j;
    j["table_id"] = a.table_id;
    j["orientation"] = orientation_name(a.orientation);
    ordered_json dom = ordered_json::array();
    for (const auto& d : a.dominant_types) dom.push_back(d ? ordered_json(d->str()) : ordered_json(nullptr));
    j["dominant_types"] = std::move(dom);
    ordered_json headers = ordered_json::array();
    for (const auto& h : a.headers) headers.push_back(cell_to_json(h));
    j["headers"] = std::move(headers);
    ordered_json cells = ordered_json::array();
    for (const auto& c : a.cells) cells.push_back(cell_to_json(c));
    j["cells"] = std::move(cells);
    return j;
}

inline TableAnnotation annotation_from_json(const json& j) {
    try {
        TableAnnotation a;
        a.table_id = j.at("table_id").get<std::string>();
        const auto o = j.at("orientation").get<std::string>();
        if (o != "horizontal" && o != "vertical") throw ParseError("unknown orientation '" + o + "'");
        a.orientation = o == "horizontal" ? Orientation::horizontal : Orientation::vertical;
        for (const auto& d : j.at("dominant_types")) {
            a.dominant_types.push_back(d.is_null() ? std::nullopt
                                                   : std::optional<EntityId>(EntityId::parse(d.get<std::string>())));
        }
        for (const auto& h : j.at("headers")) a.headers.push_back(cell_from_json(h));
        for (const auto& c : j.at("cells")) a.cells.push_back(cell_from_json(c));
        return a;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed annotation: ") + e.what());
    }
}

}  // namespace tablink
