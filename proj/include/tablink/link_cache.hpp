#pragma once

// Memoizing layer over Linker::link. Entries are keyed by everything that
// can change a result, so a hit is always the answer link() would give.
// An optional directory persists entries across runs; any failure to read or
// write it falls back to computing the result.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "tablink/hash.hpp"
#include "tablink/linker.hpp"

namespace tablink {

inline std::string cache_key(const LinkRequest& req, const Linker& linker) {
    std::vector<std::string> expected = req.expected_types;
    std::sort(expected.begin(), expected.end());
    expected.erase(std::unique(expected.begin(), expected.end()), expected.end());

    Sha256 h;
    h.field(text::normalize(req.mention));
    h.field(link_mode_name(req.mode));
    h.field((req.context && !req.context->empty()) ? sha256_hex(*req.context) : std::string("none"));
    h.field(std::to_string(expected.size()));
    for (const auto& e : expected) h.field(e);
    h.field(linker.config().content_hash());
    h.field(linker.index().build_id());
    h.field(linker.closure_id());
    h.field(linker.scorer().name());
    return h.hex();
}

class LinkCache {
public:
    struct Stats {
        std::uint64_t hits = 0;
        std::uint64_t misses = 0;
        std::uint64_t io_failures = 0;
    };

    LinkCache() = default;
    explicit LinkCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(*dir_, ec);
        if (ec) {
            ++io_failures_;
            dir_.reset();
        }
    }

    std::optional<LinkResult> get(const std::string& key) {
        {
            std::shared_lock lock(mutex_);
            if (auto it = memory_.find(key); it != memory_.end()) return it->second;
        }
        if (!dir_) return std::nullopt;
        std::ifstream in(*dir_ / (key + ".json"));
        if (!in) return std::nullopt;
        try {
            LinkResult r = link_result_from_json(json::parse(in));
            std::unique_lock lock(mutex_);
            memory_.try_emplace(key, r);
            return r;
        } catch (const std::exception&) {
            ++io_failures_;
            return std::nullopt;
        }
    }

    void put(const std::string& key, const LinkResult& result) {
        {
            std::unique_lock lock(mutex_);
            memory_.try_emplace(key, result);
        }
        if (!dir_) return;
        // Write to a unique temp file and rename so concurrent writers of the
        // same key never expose a partial entry.
        static std::atomic<std::uint64_t> seq{0};
        const auto final_path = *dir_ / (key + ".json");
        const auto tmp = *dir_ / (key + ".tmp" + std::to_string(seq++));
        {
            std::ofstream out(tmp, std::ios::binary);
            out << link_result_to_json(result).dump();
            if (!out) {
                ++io_failures_;
                std::error_code ec;
                std::filesystem::remove(tmp, ec);
                return;
            }
        }
        std::error_code ec;
        std::filesystem::rename(tmp, final_path, ec);
        if (ec) {
            ++io_failures_;
            std::filesystem::remove(tmp, ec);
        }
    }

    void note_hit() { ++hits_; }
    void note_miss() { ++misses_; }

    Stats stats() const { return {hits_.load(), misses_.load(), io_failures_.load()}; }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return memory_.size();
    }

private:
    std::optional<std::filesystem::path> dir_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, LinkResult> memory_;
    std::atomic<std::uint64_t> hits_{0}, misses_{0}, io_failures_{0};
};

class CachedLinker {
public:
    CachedLinker(const Linker& linker, LinkCache& cache) : linker_(&linker), cache_(&cache) {}

    LinkResult link(const LinkRequest& req) const {
        const std::string key = cache_key(req, *linker_);
        if (auto hit = cache_->get(key)) {
            cache_->note_hit();
            return std::move(*hit);
        }
        cache_->note_miss();
        LinkResult r = linker_->link(req);
        cache_->put(key, r);
        return r;
    }

    const Linker& linker() const noexcept { return *linker_; }

private:
    const Linker* linker_;
    LinkCache* cache_;
};

}  // namespace tablink
