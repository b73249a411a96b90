#include <gtest/gtest.h>

#include <random>

#include "support/fixtures.hpp"
#include "tablink/kb_model.hpp"
#include "tablink/text.hpp"

using namespace tablink;
using fixtures::P;
using fixtures::Q;

TEST(EntityId, ParsesItemsAndProperties) {
    EXPECT_EQ(EntityId::parse("Q808"), Q(808));
    EXPECT_EQ(EntityId::parse("P1193"), P(1193));
    EXPECT_TRUE(EntityId::parse("Q0").is_item());
    EXPECT_EQ(Q(3519875).str(), "Q3519875");
}

TEST(EntityId, RejectsMalformed) {
    for (const char* bad : {"Q", "X5", "Q-1", "q5", "Q05", "P", "", "Q5x", "Q 5", "Q99999999999999999999999"}) {
        EXPECT_FALSE(EntityId::try_parse(bad).has_value()) << bad;
        EXPECT_THROW(EntityId::parse(bad), ParseError) << bad;
    }
}

TEST(EntityId, FormatParseBijection) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const EntityId id(rng() % 2 ? EntityKind::item : EntityKind::property, rng() >> (rng() % 64));
        EXPECT_EQ(EntityId::parse(id.str()), id);
    }
}

TEST(EntityId, OrdersItemsBeforePropertiesThenByNumber) {
    EXPECT_LT(Q(9), Q(10));
    EXPECT_LT(Q(999999), P(1));
}

TEST(Text, NormalizesCaseWhitespaceAndComposition) {
    EXPECT_EQ(text::normalize("  Wuhan   Institute\tof Virology "), "wuhan institute of virology");
    // "e" + combining acute composes to U+00E9.
    EXPECT_EQ(text::normalize("Caf\x65\xCC\x81"), "caf\xC3\xA9");
    EXPECT_EQ(text::normalize("CAF\xC3\x89"), "caf\xC3\xA9");
    EXPECT_EQ(text::normalize(""), "");
}

TEST(Text, ContentTokensDropStopwords) {
    EXPECT_EQ(text::token_set("The variant of SARS-CoV-2"), (std::vector<std::string>{"2", "cov", "sars", "variant"}));
    EXPECT_TRUE(text::is_stopword("the"));
    EXPECT_FALSE(text::is_stopword("virus"));
    EXPECT_TRUE(std::is_sorted(text::stopwords().begin(), text::stopwords().end()));
}

TEST(ItemRecord, DeduplicatesAliasesAfterNormalization) {
    auto r = ItemRecord::make(Q(1), "Virus", {"virus", "Viruses", " viruses ", "VIRION"}, "", {Q(2), Q(2)}, 3, {P(486), P(31), P(486)});
    EXPECT_EQ(r.aliases, (std::vector<std::string>{"Viruses", "VIRION"}));
    EXPECT_EQ(r.direct_types, (std::vector<EntityId>{Q(2)}));
    EXPECT_EQ(r.flagged_props, (std::vector<EntityId>{P(31), P(486)}));
}

TEST(ItemRecord, RejectsEmptyLabelAndPropertyTypes) {
    EXPECT_THROW(ItemRecord::make(Q(1), "  ", {}, "", {}, 0, {}), ValidationError);
    EXPECT_THROW(ItemRecord::make(Q(1), "x", {}, "", {P(5)}, 0, {}), ValidationError);
}

TEST(ItemRecord, JsonFieldOrderAndRoundTrip) {
    auto r = ItemRecord::make(Q(808), "virus", {"viruses"}, "infectious agent", {Q(5)}, 300, {P(486)});
    EXPECT_EQ(record_line(r),
              R"({"id":"Q808","label":"virus","aliases":["viruses"],"description":"infectious agent","direct_types":["Q5"],"sitelinks_count":300,"flagged_props":["P486"]})");
    EXPECT_EQ(record_from_json(json::parse(record_line(r))), r);
}

TEST(TypeEdge, KindRule) {
    EXPECT_TRUE((TypeEdge{Q(1), Q(2), TypeRelation::subclass_of}).well_kinded());
    EXPECT_TRUE((TypeEdge{P(1), P(2), TypeRelation::subproperty_of}).well_kinded());
    EXPECT_FALSE((TypeEdge{Q(1), P(2), TypeRelation::subclass_of}).well_kinded());
    EXPECT_FALSE((TypeEdge{Q(1), Q(2), TypeRelation::subproperty_of}).well_kinded());
    EXPECT_EQ(edge_line({P(1), P(2), TypeRelation::subproperty_of}),
              R"({"child":"P1","parent":"P2","relation":"subproperty_of"})");
}

namespace {

DomainConfig biomedical() {
    DomainConfig c;
    c.type_dictionary = {{"disease", {Q(12136)}},
                         {"protein", {Q(8054)}},
                         {"chemical compound", {Q(11173)}},
                         {"vaccine type", {Q(1928978)}},
                         {"type of statistic", {Q(1949963)}},
                         {"film", {Q(11424)}}};
    c.tier(Tier::good) = {"disease", "protein", "chemical compound", "vaccine type", "type of statistic"};
    c.tier(Tier::bad) = {"film"};
    return c;
}

ConfigErrorKind error_kind(const DomainConfig& c) {
    try {
        validate_config(c);
    } catch (const ConfigError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "config was accepted";
    return ConfigErrorKind::malformed;
}

}  // namespace

TEST(Config, BiomedicalConfigIsValid) {
    const auto v = validate_config(biomedical());
    EXPECT_EQ(v.tier_ids(Tier::good).size(), 5u);
    EXPECT_EQ(v.ids_for("film"), (std::vector<EntityId>{Q(11424)}));
}

TEST(Config, EmptyTiersAreValid) {
    const auto v = validate_config(DomainConfig{});
    for (Tier t : kAllTiers) EXPECT_TRUE(v.tier_ids(t).empty());
}

TEST(Config, UnresolvedTypeName) {
    auto c = biomedical();
    c.tier(Tier::target) = {"diseaze"};
    EXPECT_EQ(error_kind(c), ConfigErrorKind::unresolved_type_name);
    c = biomedical();
    c.near_miss_map["disease"] = {"nope"};
    EXPECT_EQ(error_kind(c), ConfigErrorKind::unresolved_type_name);
    c = biomedical();
    c.property_inference = {{P(486), "mesh item"}};
    EXPECT_EQ(error_kind(c), ConfigErrorKind::unresolved_type_name);
}

TEST(Config, TierConflict) {
    auto c = biomedical();
    c.type_dictionary["movie"] = {Q(11424)};
    c.tier(Tier::ok) = {"movie"};
    EXPECT_EQ(error_kind(c), ConfigErrorKind::tier_conflict);
}

TEST(Config, PositiveTiersMayOverlap) {
    auto c = biomedical();
    c.tier(Tier::ok) = {"disease"};
    EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, Weights) {
    auto c = biomedical();
    c.weights = {0.5, 0.25, 0.15, 0.15};
    EXPECT_EQ(error_kind(c), ConfigErrorKind::bad_weights);
    c.weights = {-0.1, 0.55, 0.3, 0.25};
    EXPECT_EQ(error_kind(c), ConfigErrorKind::bad_weights);
    c.weights = {0.45 + 4e-7, 0.25, 0.15, 0.15};
    const auto v = validate_config(c);
    EXPECT_NEAR(v.weights().sum(), 1.0, 1e-15);
}

TEST(Config, BadParams) {
    auto c = biomedical();
    c.params.k = 0;
    EXPECT_EQ(error_kind(c), ConfigErrorKind::bad_param);
    c = biomedical();
    c.params.support_threshold = 0.0;
    EXPECT_EQ(error_kind(c), ConfigErrorKind::bad_param);
}

TEST(Config, StrictParsingRejectsUnknownKeys) {
    auto j = json::parse(config_to_json(biomedical()).dump());
    j["colour"] = 1;
    EXPECT_THROW(config_from_json(j), ConfigError);
    auto k = json::parse(config_to_json(biomedical()).dump());
    k["params"]["kk"] = 3;
    EXPECT_THROW(config_from_json(k), ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({"type_dictionary": []})")), ConfigError);
}

TEST(Config, RoundTripIsIdentical) {
    auto c = biomedical();
    c.weights = {0.45 + 4e-7, 0.25, 0.15, 0.15};
    c.near_miss_map["disease"] = {"protein"};
    const auto v1 = validate_config(c);
    const auto text1 = config_to_json(v1.raw()).dump();
    const auto v2 = validate_config(config_from_json(json::parse(text1)));
    EXPECT_EQ(v1.raw(), v2.raw());
    EXPECT_EQ(config_to_json(v2.raw()).dump(), text1);
    EXPECT_EQ(v1.content_hash(), v2.content_hash());
}

TEST(Config, HashDistinguishesConfigs) {
    auto a = biomedical();
    auto b = biomedical();
    b.params.min_link_score = 0.3;
    EXPECT_NE(validate_config(a).content_hash(), validate_config(b).content_hash());
}

TEST(Config, DomainFixtureConfigIsValid) {
    const auto v = validate_config(fixtures::domain_kb().config);
    EXPECT_EQ(v.near_miss_ids("location"), (std::vector<EntityId>{fixtures::kOrganization, fixtures::kFacility}));
}
