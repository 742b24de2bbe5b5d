#pragma once

#include "lessonweave/common.hpp"
#include "lessonweave/prompts/prompts.hpp"

#include <deque>
#include <set>
#include <string>
#include <vector>

namespace lessonweave::agents {

enum class MemoryKind { Material, ContextDescription, Analysis };

std::string_view to_string(MemoryKind kind);
MemoryKind memory_kind_from_string(std::string_view s);

struct MemoryItem {
    MemoryKind kind = MemoryKind::Material;
    std::string ref_id;
    std::string summary;

    bool operator==(const MemoryItem&) const = default;
};

// What one role keeps between calls. Size is measured in code points of the
// summaries and never exceeds the budget.
class RoleMemory {
public:
    static constexpr std::size_t kDefaultBudget = 2000;

    explicit RoleMemory(prompts::AgentRole role = prompts::AgentRole::ContextAnalyst,
                        std::size_t char_budget = kDefaultBudget);

    // Appends `item`, replacing any older item with the same (kind, ref_id).
    // Oldest items go first when over budget; items whose ref_id is in
    // `pinned` are kept. If the pinned items leave too little room the new
    // summary is cut to fit, or dropped when nothing fits.
    void remember(MemoryItem item, const std::set<std::string>& pinned = {});
    void forget(const std::string& ref_id);

    prompts::AgentRole role() const noexcept { return role_; }
    std::size_t char_budget() const noexcept { return char_budget_; }
    std::size_t used() const noexcept { return used_; }
    const std::deque<MemoryItem>& items() const noexcept { return items_; }

    // Summaries, oldest first, as prompt notes.
    std::vector<std::string> notes() const;

    bool operator==(const RoleMemory& other) const {
        return role_ == other.role_ && char_budget_ == other.char_budget_ && items_ == other.items_;
    }

private:
    prompts::AgentRole role_;
    std::size_t char_budget_;
    std::size_t used_ = 0;
    std::deque<MemoryItem> items_;
};

void to_json(json& j, const RoleMemory& m);

// Longest prefix of `text` with at most `limit` code points.
std::string utf8_prefix(std::string_view text, std::size_t limit);

}  // namespace lessonweave::agents
