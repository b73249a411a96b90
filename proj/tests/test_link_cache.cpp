#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "support/fixtures.hpp"
#include "support/properties.hpp"
#include "tablink/link_cache.hpp"
#include "tablink/parallel.hpp"
#include "tablink/synthetic.hpp"

using namespace tablink;

namespace {

LinkRequest req(std::string m, LinkMode mode = LinkMode::cell) { return {std::move(m), mode, std::nullopt, {}}; }

}  // namespace

TEST(LinkCache, SecondLookupIsAHit) {
    const auto kb = fixtures::load_domain_kb();
    LinkCache cache;
    CachedLinker cl(kb->linker, cache);
    const auto a = cl.link(req("virus"));
    const auto b = cl.link(req("  VIRUS "));
    EXPECT_EQ(a, b);
    EXPECT_EQ(cache.stats().hits, 1u);
    EXPECT_EQ(cache.stats().misses, 1u);
    cl.link(req("virus", LinkMode::header));
    EXPECT_EQ(cache.stats().misses, 2u);
}

TEST(LinkCache, KeyCoversEveryInput) {
    const auto kb = fixtures::load_domain_kb();
    auto base = req("Wuhan Institute of Virology");
    const auto k0 = cache_key(base, kb->linker);

    auto r = base;
    r.context = "virology";
    EXPECT_NE(cache_key(r, kb->linker), k0);
    r = base;
    r.expected_types = {"ORG", "location"};
    const auto k1 = cache_key(r, kb->linker);
    EXPECT_NE(k1, k0);
    r.expected_types = {"location", "ORG", "ORG"};
    EXPECT_EQ(cache_key(r, kb->linker), k1);
    r = base;
    r.context = "";
    EXPECT_EQ(cache_key(r, kb->linker), k0);

    // Same KB, different config: distinct entries in one cache.
    auto fx = fixtures::domain_kb();
    fx.config.params.min_link_score = 0.9;
    fixtures::Loaded strict(fx.records, fx.edges, fx.config);
    EXPECT_NE(cache_key(base, strict.linker), k0);

    LinkCache cache;
    CachedLinker loose_c(kb->linker, cache), strict_c(strict.linker, cache);
    EXPECT_TRUE(loose_c.link(base).chosen);
    EXPECT_FALSE(strict_c.link(base).chosen);
    EXPECT_EQ(cache.size(), 2u);
}

TEST(LinkCache, ReplayWithDuplicatesIsByteIdentical) {
    SyntheticSpec spec;
    spec.seed = 41;
    spec.n_items = 2000;
    spec.n_mentions = 7000;
    const auto syn = generate_synthetic_kb(spec);
    fixtures::Loaded kb(syn.records, syn.edges, syn.config);
    std::mt19937_64 rng(1);
    std::vector<LinkRequest> reqs;
    for (std::size_t i = 0; i < 10000; ++i) {
        if (i > 0 && rng() % 10 < 3) {
            reqs.push_back(reqs[rng() % reqs.size()]);
        } else {
            reqs.push_back(req(syn.mentions[rng() % syn.mentions.size()], rng() % 2 ? LinkMode::header : LinkMode::cell));
        }
    }
    LinkCache cache;
    CachedLinker cl(kb.linker, cache);
    for (const auto& r : reqs) {
        ASSERT_EQ(link_result_to_json(cl.link(r)).dump(), link_result_to_json(kb.linker.link(r)).dump()) << r.mention;
    }
    EXPECT_GT(cache.stats().hits, 3000u);
    EXPECT_EQ(cache.stats().hits + cache.stats().misses, reqs.size());
}

TEST(LinkCache, PersistsAcrossInstances) {
    const auto kb = fixtures::load_domain_kb();
    const auto dir = fixtures::scratch_dir("cache");
    {
        LinkCache cache(dir);
        CachedLinker(kb->linker, cache).link(req("virus"));
        EXPECT_EQ(cache.stats().io_failures, 0u);
    }
    LinkCache again(dir);
    const auto r = CachedLinker(kb->linker, again).link(req("virus"));
    EXPECT_EQ(again.stats().hits, 1u);
    EXPECT_EQ(r, kb->linker.link(req("virus")));
    std::filesystem::remove_all(dir);
}

TEST(LinkCache, UnusableDirectoryDegradesToMemory) {
    const auto kb = fixtures::load_domain_kb();
    const auto dir = fixtures::scratch_dir("cache-blocked");
    const auto file = dir / "not-a-dir";
    std::ofstream(file) << "x";
    LinkCache cache(file / "sub");
    CachedLinker cl(kb->linker, cache);
    EXPECT_EQ(cl.link(req("virus")), kb->linker.link(req("virus")));
    EXPECT_EQ(cl.link(req("virus")), kb->linker.link(req("virus")));
    EXPECT_GE(cache.stats().io_failures, 1u);
    EXPECT_EQ(cache.stats().hits, 1u);
    std::filesystem::remove_all(dir);
}

TEST(LinkCache, CorruptEntryIsRecomputed) {
    const auto kb = fixtures::load_domain_kb();
    const auto dir = fixtures::scratch_dir("cache-corrupt");
    const auto key = cache_key(req("virus"), kb->linker);
    std::ofstream(dir / (key + ".json")) << "{truncated";
    LinkCache cache(dir);
    EXPECT_EQ(CachedLinker(kb->linker, cache).link(req("virus")), kb->linker.link(req("virus")));
    EXPECT_EQ(cache.stats().misses, 1u);
    std::filesystem::remove_all(dir);
}

TEST(LinkCache, ConcurrentReadersAndWriters) {
    const auto kb = fixtures::load_domain_kb();
    const auto dir = fixtures::scratch_dir("cache-mt");
    LinkCache cache(dir);
    CachedLinker cl(kb->linker, cache);
    const std::vector<std::string> mentions{"virus", "prevalence", "location", "lineage", "B.1.1.7", "NIAID"};
    std::vector<std::string> got(600);
    parallel_for(got.size(), 8, [&](std::size_t i) {
        got[i] = link_result_to_json(cl.link(req(mentions[i % mentions.size()]))).dump();
    });
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i], link_result_to_json(kb->linker.link(req(mentions[i % mentions.size()]))).dump());
    }
    EXPECT_EQ(cache.size(), mentions.size());
    EXPECT_EQ(cache.stats().hits + cache.stats().misses, got.size());
    std::filesystem::remove_all(dir);
}

TEST(LinkCacheProperties, Transparency) {
    const auto r = props::cache_transparency(1000);
    EXPECT_GE(r.cases, 1000u);
    EXPECT_TRUE(r.ok()) << r.failures << " failures, first: " << r.first_failure;
}
