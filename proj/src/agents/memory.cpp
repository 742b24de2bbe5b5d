#include "lessonweave/agents/memory.hpp"

#include "lessonweave/error.hpp"

#include <algorithm>

namespace lessonweave::agents {

std::string_view to_string(MemoryKind kind) {
    switch (kind) {
        case MemoryKind::Material: return "material";
        case MemoryKind::ContextDescription: return "context_description";
        case MemoryKind::Analysis: return "analysis";
    }
    return "material";
}

MemoryKind memory_kind_from_string(std::string_view s) {
    if (s == "material") return MemoryKind::Material;
    if (s == "context_description") return MemoryKind::ContextDescription;
    if (s == "analysis") return MemoryKind::Analysis;
    throw Error(ErrorCode::BadRequest, "unknown memory kind: " + std::string(s));
}

std::string utf8_prefix(std::string_view text, std::size_t limit) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
            if (count == limit) return std::string(text.substr(0, i));
            ++count;
        }
    }
    return std::string(text);
}

RoleMemory::RoleMemory(prompts::AgentRole role, std::size_t char_budget)
    : role_(role), char_budget_(char_budget) {
    if (char_budget_ == 0) throw Error(ErrorCode::InvalidConfig, "memory budget must be positive");
}

void RoleMemory::forget(const std::string& ref_id) {
    for (auto it = items_.begin(); it != items_.end();) {
        if (it->ref_id == ref_id) {
            used_ -= utf8_length(it->summary);
            it = items_.erase(it);
        } else {
            ++it;
        }
    }
}

void RoleMemory::remember(MemoryItem item, const std::set<std::string>& pinned) {
    for (auto it = items_.begin(); it != items_.end(); ++it) {
        if (it->kind == item.kind && it->ref_id == item.ref_id) {
            used_ -= utf8_length(it->summary);
            items_.erase(it);
            break;
        }
    }

    std::size_t need = utf8_length(item.summary);
    for (auto it = items_.begin(); it != items_.end() && used_ + need > char_budget_;) {
        if (pinned.contains(it->ref_id)) {
            ++it;
            continue;
        }
        used_ -= utf8_length(it->summary);
        it = items_.erase(it);
    }
    if (used_ + need > char_budget_) {
        const std::size_t room = char_budget_ - used_;
        if (room == 0) return;
        item.summary = utf8_prefix(item.summary, room);
        need = utf8_length(item.summary);
    }
    if (item.summary.empty()) return;
    used_ += need;
    items_.push_back(std::move(item));
}

std::vector<std::string> RoleMemory::notes() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& i : items_) out.push_back(i.summary);
    return out;
}

void to_json(json& j, const RoleMemory& m) {
    json items = json::array();
    for (const auto& i : m.items()) {
        items.push_back({{"kind", to_string(i.kind)}, {"ref_id", i.ref_id}, {"summary", i.summary}});
    }
    j = {{"role", prompts::to_string(m.role())},
         {"char_budget", m.char_budget()},
         {"used", m.used()},
         {"items", items}};
}

}  // namespace lessonweave::agents
