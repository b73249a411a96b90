#pragma once

// In-memory label/alias index that produces the initial ranked candidate
// list for a mention. Exact lookups on normalized labels and aliases, plus a
// token-posting lookup for partial matches.
//
// Candidate order: match tier (label > alias > partial), then token overlap,
// then sitelinks count (descending), then entity id (ascending).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tablink/entity_id.hpp"
#include "tablink/error.hpp"
#include "tablink/hash.hpp"
#include "tablink/kb_model.hpp"
#include "tablink/text.hpp"

namespace tablink {

enum class MatchTier : std::uint8_t { partial = 0, exact_alias = 1, exact_label = 2 };

inline std::string_view match_tier_name(MatchTier t) {
    switch (t) {
        case MatchTier::exact_label: return "exact_label";
        case MatchTier::exact_alias: return "exact_alias";
        case MatchTier::partial: return "partial";
    }
    return "?";
}

inline MatchTier parse_match_tier(std::string_view s) {
    if (s == "exact_label") return MatchTier::exact_label;
    if (s == "exact_alias") return MatchTier::exact_alias;
    if (s == "partial") return MatchTier::partial;
    throw ParseError("unknown match tier '" + std::string(s) + "'");
}

struct RawCandidate {
    const ItemRecord* record = nullptr;
    MatchTier match_tier = MatchTier::partial;
    double token_overlap = 0.0;  // 1.0 for exact matches
};

// Strict weak order used for candidate lists; also used by test oracles.
inline bool raw_candidate_before(const RawCandidate& a, const RawCandidate& b) {
    if (a.match_tier != b.match_tier) return a.match_tier > b.match_tier;
    if (a.token_overlap != b.token_overlap) return a.token_overlap > b.token_overlap;
    if (a.record->sitelinks_count != b.record->sitelinks_count) {
        return a.record->sitelinks_count > b.record->sitelinks_count;
    }
    return a.record->id < b.record->id;
}

struct IndexOptions {
    // A partial match must cover at least ceil(partial_gate * n) of the
    // mention's n distinct content tokens.
    double partial_gate = 0.5;
};

inline std::size_t partial_required(std::size_t n_tokens, double gate) {
    auto need = static_cast<std::size_t>(std::ceil(static_cast<double>(n_tokens) * gate - 1e-9));
    return std::max<std::size_t>(need, 1);
}

class CandidateIndex {
public:
    static constexpr int kFormatVersion = 1;

    CandidateIndex() { finalize(); }

    // Records with a repeated id: the last one wins and duplicate_count() is
    // incremented.
    static CandidateIndex build(std::vector<ItemRecord> records, IndexOptions options = {}) {
        CandidateIndex idx;
        idx.options_ = options;
        std::unordered_map<EntityId, std::size_t> slot;
        for (auto& r : records) {
            auto [it, inserted] = slot.try_emplace(r.id, idx.records_.size());
            if (inserted) {
                idx.records_.push_back(std::move(r));
            } else {
                idx.records_[it->second] = std::move(r);
                ++idx.duplicates_;
            }
        }
        std::sort(idx.records_.begin(), idx.records_.end(),
                  [](const ItemRecord& a, const ItemRecord& b) { return a.id < b.id; });
        idx.finalize();
        return idx;
    }

    static CandidateIndex build_from_file(const std::filesystem::path& records, IndexOptions options = {}) {
        return build(read_records(records), options);
    }

    std::vector<RawCandidate> search(std::string_view mention, int k) const {
        const std::string norm = text::normalize(mention);
        const std::vector<std::string> tokens = text::token_set(norm);
        if (norm.empty() || tokens.empty()) throw EmptyMention();
        if (k <= 0) return {};

        std::vector<RawCandidate> pool;
        std::vector<std::uint32_t> exact;
        if (auto it = by_label_.find(norm); it != by_label_.end()) {
            for (auto d : it->second) {
                pool.push_back({&records_[d], MatchTier::exact_label, 1.0});
                exact.push_back(d);
            }
        }
        if (auto it = by_alias_.find(norm); it != by_alias_.end()) {
            for (auto d : it->second) {
                pool.push_back({&records_[d], MatchTier::exact_alias, 1.0});
                exact.push_back(d);
            }
        }
        std::sort(exact.begin(), exact.end());

        const std::size_t n = tokens.size();
        const std::size_t need = partial_required(n, options_.partial_gate);
        auto add_partial = [&](std::uint32_t d, std::size_t hits) {
            if (hits < need || std::binary_search(exact.begin(), exact.end(), d)) return;
            pool.push_back({&records_[d], MatchTier::partial, static_cast<double>(hits) / static_cast<double>(n)});
        };
        if (n == 1) {
            if (auto it = postings_.find(tokens[0]); it != postings_.end()) {
                for (auto d : it->second) add_partial(d, 1);
            }
        } else {
            std::unordered_map<std::uint32_t, std::uint32_t> hits;
            for (const auto& t : tokens) {
                auto it = postings_.find(t);
                if (it == postings_.end()) continue;
                for (auto d : it->second) ++hits[d];
            }
            for (auto [d, h] : hits) add_partial(d, h);
        }

        const auto limit = static_cast<std::size_t>(k);
        if (pool.size() > limit) {
            std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(limit), pool.end(),
                              raw_candidate_before);
            pool.resize(limit);
        } else {
            std::sort(pool.begin(), pool.end(), raw_candidate_before);
        }
        return pool;
    }

    const ItemRecord* find(EntityId id) const {
        auto it = std::lower_bound(records_.begin(), records_.end(), id,
                                   [](const ItemRecord& r, EntityId v) { return r.id < v; });
        return (it != records_.end() && it->id == id) ? &*it : nullptr;
    }

    const std::vector<ItemRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    std::size_t duplicate_count() const noexcept { return duplicates_; }
    const IndexOptions& options() const noexcept { return options_; }
    const std::string& build_id() const noexcept { return build_id_; }

    // Index directory: manifest.json plus records.jsonl in id order.
    void save(const std::filesystem::path& dir) const {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create index directory " + dir.string() + ": " + ec.message());
        write_records(dir / "records.jsonl", records_);
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
        out << manifest().dump(2) << '\n';
    }

    static CandidateIndex load(const std::filesystem::path& dir) {
        std::ifstream in(dir / "manifest.json");
        if (!in) throw IndexUnavailable("no index manifest in " + dir.string());
        json m;
        try {
            m = json::parse(in);
        } catch (const json::parse_error& e) {
            throw IndexUnavailable("unreadable index manifest: " + std::string(e.what()));
        }
        if (m.value("format_version", 0) != kFormatVersion ||
            m.value("normalization_version", std::string{}) != text::kNormalizationVersion ||
            m.value("stopword_version", std::string{}) != text::kStopwordVersion) {
            throw IndexUnavailable("index at " + dir.string() + " was built with incompatible versions");
        }
        IndexOptions options;
        options.partial_gate = m.value("partial_gate", options.partial_gate);
        CandidateIndex idx = build(read_records(dir / "records.jsonl"), options);
        idx.duplicates_ = m.value("duplicates_replaced", std::size_t{0});
        if (idx.build_id_ != m.value("build_id", std::string{})) {
            throw IndexUnavailable("index records do not match manifest build id in " + dir.string());
        }
        return idx;
    }

    ordered_json manifest() const {
        return ordered_json{{"format_version", kFormatVersion},
                            {"normalization_version", text::kNormalizationVersion},
                            {"stopword_version", text::kStopwordVersion},
                            {"partial_gate", options_.partial_gate},
                            {"record_count", records_.size()},
                            {"duplicates_replaced", duplicates_},
                            {"build_id", build_id_}};
    }

private:
    void finalize() {
        by_label_.clear();
        by_alias_.clear();
        postings_.clear();
        Sha256 h;
        h.field(text::kNormalizationVersion).field(text::kStopwordVersion);
        h.field(ordered_json(options_.partial_gate).dump());
        for (std::uint32_t d = 0; d < records_.size(); ++d) {
            const ItemRecord& r = records_[d];
            h.field(record_line(r));
            by_label_[text::normalize(r.label)].push_back(d);
            std::vector<std::string> tokens = text::token_set(r.label);
            for (const auto& a : r.aliases) {
                by_alias_[text::normalize(a)].push_back(d);
                auto at = text::token_set(a);
                tokens.insert(tokens.end(), at.begin(), at.end());
            }
            std::sort(tokens.begin(), tokens.end());
            tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
            for (auto& t : tokens) postings_[t].push_back(d);
        }
        build_id_ = h.hex().substr(0, 16);
    }

    std::vector<ItemRecord> records_;
    IndexOptions options_;
    std::unordered_map<std::string, std::vector<std::uint32_t>> by_label_;
    std::unordered_map<std::string, std::vector<std::uint32_t>> by_alias_;
    std::unordered_map<std::string, std::vector<std::uint32_t>> postings_;
    std::size_t duplicates_ = 0;
    std::string build_id_;
};

}  // namespace tablink
