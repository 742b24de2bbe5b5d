#pragma once

#include <nlohmann/json.hpp>

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace lessonweave {

using json = nlohmann::json;

// Opaque identifier tagged by the kind of record it names, so a material id
// cannot be passed where a card id is expected.
template <typename Tag>
struct Id {
    std::string value;

    Id() = default;
    explicit Id(std::string v) : value(std::move(v)) {}

    bool empty() const noexcept { return value.empty(); }
    auto operator<=>(const Id&) const = default;
};

template <typename Tag>
void to_json(json& j, const Id<Tag>& id) { j = id.value; }

template <typename Tag>
void from_json(const json& j, Id<Tag>& id) { id.value = j.get<std::string>(); }

struct MaterialTag {};
struct ContextTag {};
struct CardTag {};
struct SessionTag {};

using MaterialId = Id<MaterialTag>;
using ContextId = Id<ContextTag>;
using CardId = Id<CardTag>;
using SessionId = Id<SessionTag>;

using Embedding = std::vector<float>;

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Sixteen lowercase hex digits.
std::string hex64(std::uint64_t value);

// Number of Unicode code points in a UTF-8 string (invalid bytes count as one each).
std::size_t utf8_length(std::string_view text) noexcept;

std::string trim(std::string_view text);

std::vector<std::string> split_lines(std::string_view text);

bool starts_with(std::string_view text, std::string_view prefix) noexcept;

}  // namespace lessonweave

template <typename Tag>
struct std::hash<lessonweave::Id<Tag>> {
    std::size_t operator()(const lessonweave::Id<Tag>& id) const noexcept {
        return std::hash<std::string>{}(id.value);
    }
};
