#pragma once

// Small hand-built knowledge base for the worked examples. Ids, labels and
// descriptions follow public Wikidata facts named in the literature on this
// task; sitelinks counts and the Q9xxxxxx/P99xxxxx ids are fixture values.

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tablink/candidate_index.hpp"
#include "tablink/kb_model.hpp"
#include "tablink/linker.hpp"
#include "tablink/type_store.hpp"

namespace fixtures {

using namespace tablink;

inline EntityId Q(std::uint64_t n) { return EntityId::item(n); }
inline EntityId P(std::uint64_t n) { return EntityId::property(n); }

// Type ids used below.
inline const EntityId kHuman = Q(5);
inline const EntityId kFilm = Q(11424);
inline const EntityId kShortFilm = Q(24862);
inline const EntityId kSong = Q(7366);
inline const EntityId kAlbum = Q(482994);
inline const EntityId kMusicalGroup = Q(215380);
inline const EntityId kPainting = Q(3305213);
inline const EntityId kVideoGame = Q(7889);
inline const EntityId kFictionalCharacter = Q(95074);
inline const EntityId kOrganization = Q(43229);
inline const EntityId kFacility = Q(13226383);
inline const EntityId kGeoLocation = Q(2221906);
inline const EntityId kVariant = Q(104450895);

inline const EntityId kVirus = Q(808);
inline const EntityId kLineageAncestry = Q(1517820);
inline const EntityId kPrevalenceProperty = P(1193);
inline const EntityId kPrevalenceConcept = Q(719602);
inline const EntityId kLocationProperty = P(276);
inline const EntityId kWuhanInstitute = Q(9200001);
inline const EntityId kNiaid = Q(3519875);
inline const EntityId kLineageProperty = P(9900001);
inline const std::vector<EntityId> kVariants = {Q(9300001), Q(9300002), Q(9300003)};
inline const std::vector<std::string> kVariantLabels = {"B.1.1.7", "B.1.351", "P.1"};

struct DomainKb {
    std::vector<ItemRecord> records;
    std::vector<TypeEdge> edges;
    DomainConfig config;
    std::size_t virus_count = 0;
};

inline ItemRecord rec(EntityId id, std::string label, std::string description, std::vector<EntityId> types,
                      std::uint64_t sitelinks, std::vector<std::string> aliases = {},
                      std::vector<EntityId> flagged = {}) {
    return ItemRecord::make(id, std::move(label), std::move(aliases), std::move(description), std::move(types),
                            sitelinks, std::move(flagged));
}

inline DomainKb domain_kb() {
    DomainKb kb;
    auto& r = kb.records;

    // Type items.
    r.push_back(rec(kHuman, "human", "common name of Homo sapiens", {}, 0));
    r.push_back(rec(kFilm, "film", "sequence of images that give the impression of movement", {}, 0));
    r.push_back(rec(kShortFilm, "short film", "film with a short running time", {}, 0));
    r.push_back(rec(kSong, "song", "musical work for voice", {}, 0));
    r.push_back(rec(kAlbum, "album", "collection of recorded music", {}, 0));
    r.push_back(rec(kMusicalGroup, "musical group", "musical ensemble which performs music", {}, 0));
    r.push_back(rec(kPainting, "painting", "visual artwork made with paint", {}, 0));
    r.push_back(rec(kVideoGame, "video game", "electronic game with a user interface", {}, 0));
    r.push_back(rec(kFictionalCharacter, "fictional character", "character appearing in fiction", {}, 0));
    r.push_back(rec(kOrganization, "organization", "social entity established to meet needs or pursue goals", {}, 0));
    r.push_back(rec(kFacility, "facility", "place for doing something", {}, 0));
    r.push_back(rec(kGeoLocation, "location", "point or area on the surface of the Earth", {}, 0,
                    {"geographic location"}));
    r.push_back(rec(kVariant, "variant of SARS-CoV-2", "variant of the virus that causes COVID-19", {}, 0));

    // "virus": the infectious agent plus 82 namesakes of other kinds.
    r.push_back(rec(kVirus, "virus", "infectious agent that replicates only inside living cells", {}, 300));
    struct Kind {
        EntityId type;
        int count;
        const char* what;
    };
    const Kind kinds[] = {{kFilm, 15, "film"},
                          {kShortFilm, 5, "short film"},
                          {kSong, 15, "song"},
                          {kAlbum, 12, "album"},
                          {kMusicalGroup, 10, "rock group"},
                          {kPainting, 5, "painting"},
                          {kVideoGame, 6, "video game"},
                          {kFictionalCharacter, 5, "fictional character"},
                          {kHuman, 8, "musician"},
                          {kHuman, 1, "professional wrestler"}};
    std::uint64_t next = 9000001;
    for (const auto& k : kinds) {
        for (int i = 0; i < k.count; ++i, ++next) {
            r.push_back(rec(Q(next), "virus", std::string(k.what) + " named Virus", {k.type}, 1 + (next * 7) % 40));
        }
    }
    kb.virus_count = 1 + (next - 9000001);

    // Header candidates.
    r.push_back(rec(kPrevalenceProperty, "prevalence", "portion in percent of a population with a given disease or disorder",
                    {}, 0));
    r.push_back(rec(kPrevalenceConcept, "prevalence", "number of disease cases in a given population at a specific time",
                    {}, 0));
    r.push_back(rec(kLocationProperty, "location", "location of the object, structure or event", {}, 0));
    r.push_back(rec(kLineageAncestry, "lineage", "line of ancestors and descendants of a person", {}, 60));
    r.push_back(rec(kLineageProperty, "lineage", "Pango lineage designation of a SARS-CoV-2 variant", {}, 0));

    // Cell entities.
    for (std::size_t i = 0; i < kVariants.size(); ++i) {
        r.push_back(rec(kVariants[i], kVariantLabels[i], "variant of SARS-CoV-2", {kVariant}, 20));
    }
    r.push_back(rec(kWuhanInstitute, "Wuhan Institute of Virology", "research institute in Wuhan", {kOrganization}, 30));
    r.push_back(rec(kNiaid, "National Institute of Allergy and Infectious Diseases", "United States research institute",
                    {kOrganization}, 40, {"NIAID"}));

    kb.edges.push_back({kShortFilm, kFilm, TypeRelation::subclass_of});

    auto& c = kb.config;
    c.type_dictionary = {{"film", {kFilm}},
                         {"song", {kSong}},
                         {"album", {kAlbum}},
                         {"musical group", {kMusicalGroup}},
                         {"painting", {kPainting}},
                         {"video game", {kVideoGame}},
                         {"fictional character", {kFictionalCharacter}},
                         {"person", {kHuman}},
                         {"ORG", {kOrganization}},
                         {"FAC", {kFacility}},
                         {"location", {kGeoLocation}},
                         {"sars-cov-2 variant", {kVariant}},
                         {"mesh item", {Q(9999999)}}};
    c.tier(Tier::good) = {"mesh item", "sars-cov-2 variant"};
    c.tier(Tier::ok) = {"person", "ORG", "FAC", "location"};
    c.tier(Tier::bad) = {"film", "song", "album", "musical group", "painting", "video game", "fictional character"};
    c.near_miss_map = {{"location", {"FAC", "ORG"}}};
    c.property_inference = {{P(486), "mesh item"}};
    return kb;
}

// Index, closure, config and linker built together. Not movable: the linker
// points at its siblings.
struct Loaded {
    CandidateIndex index;
    TypeClosure closure;
    ValidatedConfig config;
    Linker linker;

    Loaded(std::vector<ItemRecord> records, const std::vector<TypeEdge>& edges, DomainConfig cfg)
        : index(CandidateIndex::build(std::move(records))),
          closure(build_closure(edges, all_direct_types(index)).closure),
          config(validate_config(std::move(cfg))),
          linker(index, closure, config) {}

    Loaded(const Loaded&) = delete;
    Loaded& operator=(const Loaded&) = delete;

    static std::vector<EntityId> all_direct_types(const CandidateIndex& idx) {
        std::vector<EntityId> out;
        for (const auto& r : idx.records()) out.insert(out.end(), r.direct_types.begin(), r.direct_types.end());
        return out;
    }
};

inline std::unique_ptr<Loaded> load_domain_kb() {
    auto kb = domain_kb();
    return std::make_unique<Loaded>(std::move(kb.records), kb.edges, std::move(kb.config));
}

// A fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    static std::mt19937_64 rng(std::random_device{}());
    auto p = std::filesystem::temp_directory_path() / ("tablink-" + name + "-" + std::to_string(rng() % 1000000000));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace fixtures
