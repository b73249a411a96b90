#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "tablink/error.hpp"

namespace tablink {

enum class EntityKind : std::uint8_t { item = 0, property = 1 };

// A knowledge-base identifier such as Q808 or P1193. Stored as (kind, num);
// the textual form is derived, so parse/format is a bijection on the set of
// canonical strings (no sign, no leading zeros).
class EntityId {
public:
    constexpr EntityId() = default;
    constexpr EntityId(EntityKind kind, std::uint64_t num) : kind_(kind), num_(num) {}

    static constexpr EntityId item(std::uint64_t num) { return {EntityKind::item, num}; }
    static constexpr EntityId property(std::uint64_t num) { return {EntityKind::property, num}; }

    static std::optional<EntityId> try_parse(std::string_view raw) noexcept {
        if (raw.size() < 2) return std::nullopt;
        EntityKind kind;
        if (raw[0] == 'Q') {
            kind = EntityKind::item;
        } else if (raw[0] == 'P') {
            kind = EntityKind::property;
        } else {
            return std::nullopt;
        }
        std::string_view digits = raw.substr(1);
        if (digits.size() > 1 && digits[0] == '0') return std::nullopt;
        std::uint64_t num = 0;
        constexpr auto max = std::numeric_limits<std::uint64_t>::max();
        for (char c : digits) {
            if (c < '0' || c > '9') return std::nullopt;
            auto d = static_cast<std::uint64_t>(c - '0');
            if (num > (max - d) / 10) return std::nullopt;
            num = num * 10 + d;
        }
        return EntityId(kind, num);
    }

    static EntityId parse(std::string_view raw) {
        if (auto id = try_parse(raw)) return *id;
        throw ParseError("invalid entity id '" + std::string(raw) + "'");
    }

    constexpr EntityKind kind() const noexcept { return kind_; }
    constexpr std::uint64_t num() const noexcept { return num_; }
    constexpr bool is_item() const noexcept { return kind_ == EntityKind::item; }
    constexpr bool is_property() const noexcept { return kind_ == EntityKind::property; }

    std::string str() const {
        return (kind_ == EntityKind::item ? "Q" : "P") + std::to_string(num_);
    }

    friend constexpr auto operator<=>(const EntityId&, const EntityId&) = default;
    friend constexpr bool operator==(const EntityId&, const EntityId&) = default;

private:
    EntityKind kind_ = EntityKind::item;
    std::uint64_t num_ = 0;
};

}  // namespace tablink

template <>
struct std::hash<tablink::EntityId> {
    std::size_t operator()(const tablink::EntityId& id) const noexcept {
        return std::hash<std::uint64_t>{}(id.num() * 2 + static_cast<std::uint64_t>(id.kind()));
    }
};
