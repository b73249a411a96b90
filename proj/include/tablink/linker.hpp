#pragma once

// Per-mention entity linking: candidate retrieval, type-tier analysis,
// prominence and context scoring, header/cell modes and final selection.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tablink/candidate_index.hpp"
#include "tablink/entity_id.hpp"
#include "tablink/error.hpp"
#include "tablink/hash.hpp"
#include "tablink/kb_model.hpp"
#include "tablink/text.hpp"
#include "tablink/type_store.hpp"

namespace tablink {

// Best to worst. BAD candidates are removed before scoring.
enum class TypeTier : std::uint8_t { target, near_miss, good, ok, unknown, bad };

inline double type_tier_score(TypeTier t) {
    switch (t) {
        case TypeTier::target: return 1.0;
        case TypeTier::near_miss: return 0.8;
        case TypeTier::good: return 0.6;
        case TypeTier::ok: return 0.4;
        case TypeTier::unknown: return 0.2;
        case TypeTier::bad: break;
    }
    throw std::logic_error("BAD candidates carry no type score");
}

inline std::string_view type_tier_name(TypeTier t) {
    switch (t) {
        case TypeTier::target: return "TARGET";
        case TypeTier::near_miss: return "NEAR_MISS";
        case TypeTier::good: return "GOOD";
        case TypeTier::ok: return "OK";
        case TypeTier::unknown: return "UNKNOWN";
        case TypeTier::bad: return "BAD";
    }
    return "?";
}

inline TypeTier parse_type_tier(std::string_view s) {
    for (auto t : {TypeTier::target, TypeTier::near_miss, TypeTier::good, TypeTier::ok, TypeTier::unknown,
                   TypeTier::bad}) {
        if (type_tier_name(t) == s) return t;
    }
    throw ParseError("unknown type tier '" + std::string(s) + "'");
}

inline double match_tier_score(MatchTier tier, double token_overlap) {
    switch (tier) {
        case MatchTier::exact_label: return 1.0;
        case MatchTier::exact_alias: return 0.8;
        case MatchTier::partial: return 0.4 * token_overlap;
    }
    return 0.0;
}

enum class LinkMode : std::uint8_t { cell, header };

inline std::string_view link_mode_name(LinkMode m) { return m == LinkMode::cell ? "cell" : "header"; }

inline LinkMode parse_link_mode(std::string_view s) {
    if (s == "cell") return LinkMode::cell;
    if (s == "header") return LinkMode::header;
    throw ValidationError("unknown link mode '" + std::string(s) + "' (expected cell or header)");
}

struct ScoredCandidate {
    ItemRecord record;
    MatchTier match_tier = MatchTier::partial;
    double token_overlap = 0.0;
    TypeTier type_tier = TypeTier::unknown;
    std::vector<std::string> inferred_type_names;  // sorted
    double type_score = 0.0;
    double match_score = 0.0;
    double prominence = 0.0;
    double context_sim = 0.0;
    double boosts = 0.0;
    double final_score = 0.0;

    // Snapped to a 1e-9 grid: sums that are equal in exact arithmetic (0.25*0.8 vs
    // 0.25*0.2 + 0.15) otherwise differ in the last bit, and that bit, not the
    // sitelinks/id tie-break, would pick the winner.
    void rescore(const Weights& w) {
        const double raw = w.type * type_score + w.match * match_score + w.prominence * prominence +
                           w.context * context_sim + boosts;
        final_score = std::nearbyint(raw * 1e9) / 1e9;
    }

    friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

// (final_score desc, sitelinks desc, id asc).
inline bool candidate_before(const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.final_score != b.final_score) return a.final_score > b.final_score;
    if (a.record.sitelinks_count != b.record.sitelinks_count) {
        return a.record.sitelinks_count > b.record.sitelinks_count;
    }
    return a.record.id < b.record.id;
}

struct LinkDiagnostics {
    std::size_t retrieved = 0;
    std::size_t rejected_bad = 0;
    std::size_t below_threshold = 0;
    std::string error;  // set when linking failed and the result is a forced NIL

    friend bool operator==(const LinkDiagnostics&, const LinkDiagnostics&) = default;
};

struct LinkResult {
    std::string mention;  // normalized
    LinkMode mode = LinkMode::cell;
    std::optional<ScoredCandidate> chosen;
    std::vector<ScoredCandidate> candidates;  // sorted by candidate_before
    LinkDiagnostics diagnostics;

    friend bool operator==(const LinkResult&, const LinkResult&) = default;
};

// Sorts candidates, picks the top one if it clears the threshold, and
// refreshes the below-threshold count. Shared by link() and table re-ranking.
inline void select_best(LinkResult& result, double min_link_score) {
    std::sort(result.candidates.begin(), result.candidates.end(), candidate_before);
    result.chosen.reset();
    result.diagnostics.below_threshold = static_cast<std::size_t>(
        std::count_if(result.candidates.begin(), result.candidates.end(),
                      [&](const ScoredCandidate& c) { return c.final_score < min_link_score; }));
    if (!result.candidates.empty() && result.candidates.front().final_score >= min_link_score) {
        result.chosen = result.candidates.front();
    }
}

// ---------------------------------------------------------------------------
// Type analysis

inline std::vector<std::string> infer_domain_types(const ItemRecord& record, std::span<const PropertyRule> rules) {
    std::vector<std::string> out;
    for (const auto& rule : rules) {
        if (std::binary_search(record.flagged_props.begin(), record.flagged_props.end(), rule.if_property)) {
            out.push_back(rule.then_type_name);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Every type a record counts as an instance of: its direct types and their
// ancestors. A property additionally counts as itself and its
// super-properties, which is how properties listed in tier lists match.
inline std::vector<EntityId> effective_types(const ItemRecord& record, const TypeClosure& closure) {
    std::vector<EntityId> out;
    for (const auto& d : record.direct_types) {
        out.push_back(d);
        auto anc = closure.ancestors(d);
        out.insert(out.end(), anc.begin(), anc.end());
    }
    if (record.id.is_property()) {
        out.push_back(record.id);
        auto anc = closure.ancestors(record.id);
        out.insert(out.end(), anc.begin(), anc.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace detail {

inline bool intersects(const std::vector<EntityId>& a, const std::vector<EntityId>& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j) return true;
        if (*i < *j) {
            ++i;
        } else {
            ++j;
        }
    }
    return false;
}

}  // namespace detail

inline TypeTier classify_type_tier(const ItemRecord& record, const ValidatedConfig& config, const TypeClosure& closure,
                                   std::span<const std::string> expected_types,
                                   std::span<const std::string> inferred_type_names) {
    const auto types = effective_types(record, closure);
    if (detail::intersects(types, config.tier_ids(Tier::bad))) return TypeTier::bad;
    for (const auto& name : expected_types) {
        if (detail::intersects(types, config.ids_for(name))) return TypeTier::target;
    }
    for (const auto& name : expected_types) {
        if (detail::intersects(types, config.near_miss_ids(name))) return TypeTier::near_miss;
    }
    auto inferred_in = [&](Tier t) {
        return std::any_of(inferred_type_names.begin(), inferred_type_names.end(),
                           [&](const std::string& n) { return config.name_in_tier(n, t); });
    };
    if (detail::intersects(types, config.tier_ids(Tier::good)) || inferred_in(Tier::good)) return TypeTier::good;
    if (detail::intersects(types, config.tier_ids(Tier::ok)) || inferred_in(Tier::ok)) return TypeTier::ok;
    return TypeTier::unknown;
}

inline TypeTier classify_type_tier(const ItemRecord& record, const ValidatedConfig& config, const TypeClosure& closure,
                                   std::span<const std::string> expected_types = {}) {
    const auto inferred = infer_domain_types(record, config.raw().property_inference);
    return classify_type_tier(record, config, closure, expected_types, inferred);
}

// ---------------------------------------------------------------------------
// Context similarity

class ContextScorer {
public:
    virtual ~ContextScorer() = default;
    // Similarity in [0,1] between a context string and a candidate record.
    virtual double similarity(std::string_view context, const ItemRecord& record) const = 0;
    // Part of the cache key; two scorers with the same name must agree.
    virtual std::string name() const = 0;
};

inline double cosine_similarity(const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
    if (a.empty() || b.empty()) return 0.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [t, c] : a) {
        na += static_cast<double>(c) * c;
        if (auto it = b.find(t); it != b.end()) dot += static_cast<double>(c) * it->second;
    }
    for (const auto& [_, c] : b) nb += static_cast<double>(c) * c;
    if (dot == 0.0) return 0.0;
    return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

inline std::string record_context_text(const ItemRecord& r) {
    std::string s = r.label;
    s += ' ';
    s += r.description;
    for (const auto& a : r.aliases) {
        s += ' ';
        s += a;
    }
    return s;
}

// Cosine of term-frequency vectors over normalized, stopword-filtered tokens
// of the context and of label + description + aliases.
class LexicalCosineScorer final : public ContextScorer {
public:
    double similarity(std::string_view context, const ItemRecord& record) const override {
        return cosine_similarity(text::term_frequencies(context), text::term_frequencies(record_context_text(record)));
    }
    std::string name() const override { return "lexical-cosine-1"; }
};

inline double context_similarity(const std::optional<std::string>& context, const ItemRecord& record,
                                 const ContextScorer& scorer) {
    if (!context || context->empty()) return 0.0;
    return scorer.similarity(*context, record);
}

inline double context_similarity(const std::optional<std::string>& context, const ItemRecord& record) {
    return context_similarity(context, record, LexicalCosineScorer{});
}

// ---------------------------------------------------------------------------
// The linker

struct LinkRequest {
    std::string mention;
    LinkMode mode = LinkMode::cell;
    std::optional<std::string> context;
    std::vector<std::string> expected_types;  // type names; empty = none
};

enum class LinkStage : std::uint8_t { candidates, types, scoring };

// Called at the end of each pipeline stage. The benchmark uses it to time
// stages and to inject simulated backend latency.
class StageObserver {
public:
    virtual ~StageObserver() = default;
    virtual void stage_done(LinkStage stage) = 0;
};

class Linker {
public:
    Linker(const CandidateIndex& index, const TypeClosure& closure, const ValidatedConfig& config,
           std::shared_ptr<const ContextScorer> scorer = std::make_shared<LexicalCosineScorer>(),
           std::string closure_id = {})
        : index_(&index), closure_(&closure), config_(&config), scorer_(std::move(scorer)),
          closure_id_(std::move(closure_id)) {
        if (closure_id_.empty()) {
            std::ostringstream os;
            write_closure(os, closure);
            closure_id_ = sha256_hex(os.str());
        }
    }

    LinkResult link(const LinkRequest& req, StageObserver* observer = nullptr) const {
        for (const auto& name : req.expected_types) {
            if (!config_->has_type_name(name)) {
                throw ConfigError(ConfigErrorKind::unresolved_type_name, "unknown expected type '" + name + "'");
            }
        }
        const auto& params = config_->params();
        LinkResult result;
        result.mention = text::normalize(req.mention);
        result.mode = req.mode;

        auto raw = index_->search(req.mention, params.k);
        result.diagnostics.retrieved = raw.size();
        if (observer) observer->stage_done(LinkStage::candidates);

        for (const auto& rc : raw) {
            ScoredCandidate sc;
            sc.inferred_type_names = infer_domain_types(*rc.record, config_->raw().property_inference);
            sc.type_tier = classify_type_tier(*rc.record, *config_, *closure_, req.expected_types,
                                              sc.inferred_type_names);
            if (sc.type_tier == TypeTier::bad) {
                ++result.diagnostics.rejected_bad;
                continue;
            }
            sc.record = *rc.record;
            sc.match_tier = rc.match_tier;
            sc.token_overlap = rc.token_overlap;
            result.candidates.push_back(std::move(sc));
        }
        if (observer) observer->stage_done(LinkStage::types);

        std::uint64_t smax = 0;
        for (const auto& c : result.candidates) smax = std::max(smax, c.record.sitelinks_count);
        for (auto& c : result.candidates) {
            c.type_score = type_tier_score(c.type_tier);
            c.match_score = match_tier_score(c.match_tier, c.token_overlap);
            c.prominence = smax == 0 ? 0.0
                                     : static_cast<double>(c.record.sitelinks_count) / static_cast<double>(smax);
            c.context_sim = context_similarity(req.context, c.record, *scorer_);
            c.boosts = (req.mode == LinkMode::header && c.record.id.is_property()) ? params.header_property_boost : 0.0;
            c.rescore(config_->weights());
        }
        select_best(result, params.min_link_score);
        if (observer) observer->stage_done(LinkStage::scoring);
        return result;
    }

    const CandidateIndex& index() const noexcept { return *index_; }
    const TypeClosure& closure() const noexcept { return *closure_; }
    const ValidatedConfig& config() const noexcept { return *config_; }
    const ContextScorer& scorer() const noexcept { return *scorer_; }
    const std::string& closure_id() const noexcept { return closure_id_; }

private:
    const CandidateIndex* index_;
    const TypeClosure* closure_;
    const ValidatedConfig* config_;
    std::shared_ptr<const ContextScorer> scorer_;
    std::string closure_id_;
};

// ---------------------------------------------------------------------------
// JSON form of link results (CLI output, cache entries, table annotations)

inline ordered_json candidate_to_json(const ScoredCandidate& c) {
    ordered_json j = record_to_json(c.record);
    j["match_tier"] = match_tier_name(c.match_tier);
    j["token_overlap"] = c.token_overlap;
    j["type_tier"] = type_tier_name(c.type_tier);
    j["inferred_type_names"] = c.inferred_type_names;
    j["type_score"] = c.type_score;
    j["match_score"] = c.match_score;
    j["prominence"] = c.prominence;
    j["context_sim"] = c.context_sim;
    j["boosts"] = c.boosts;
    j["final_score"] = c.final_score;
    return j;
}

inline ScoredCandidate candidate_from_json(const json& j) {
    ScoredCandidate c;
    c.record = record_from_json(j);
    c.match_tier = parse_match_tier(j.at("match_tier").get<std::string>());
    c.token_overlap = j.at("token_overlap").get<double>();
    c.type_tier = parse_type_tier(j.at("type_tier").get<std::string>());
    c.inferred_type_names = j.at("inferred_type_names").get<std::vector<std::string>>();
    c.type_score = j.at("type_score").get<double>();
    c.match_score = j.at("match_score").get<double>();
    c.prominence = j.at("prominence").get<double>();
    c.context_sim = j.at("context_sim").get<double>();
    c.boosts = j.at("boosts").get<double>();
    c.final_score = j.at("final_score").get<double>();
    return c;
}

inline ordered_json link_result_to_json(const LinkResult& r) {
    ordered_json j;
    j["mention"] = r.mention;
    j["mode"] = link_mode_name(r.mode);
    j["chosen"] = r.chosen ? candidate_to_json(*r.chosen) : ordered_json(nullptr);
    ordered_json cands = ordered_json::array();
    for (const auto& c : r.candidates) cands.push_back(candidate_to_json(c));
    j["candidates"] = std::move(cands);
    ordered_json d{{"retrieved", r.diagnostics.retrieved},
                   {"rejected_bad", r.diagnostics.rejected_bad},
                   {"below_threshold", r.diagnostics.below_threshold}};
    if (!r.diagnostics.error.empty()) d["error"] = r.diagnostics.error;
    j["diagnostics"] = std::move(d);
    return j;
}

inline LinkResult link_result_from_json(const json& j) {
    try {
        LinkResult r;
        r.mention = j.at("mention").get<std::string>();
        r.mode = parse_link_mode(j.at("mode").get<std::string>());
        if (!j.at("chosen").is_null()) r.chosen = candidate_from_json(j.at("chosen"));
        for (const auto& c : j.at("candidates")) r.candidates.push_back(candidate_from_json(c));
        const auto& d = j.at("diagnostics");
        r.diagnostics.retrieved = d.at("retrieved").get<std::size_t>();
        r.diagnostics.rejected_bad = d.at("rejected_bad").get<std::size_t>();
        r.diagnostics.below_threshold = d.at("below_threshold").get<std::size_t>();
        r.diagnostics.error = d.value("error", std::string{});
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed link result: ") + e.what());
    }
}

}  // namespace tablink
