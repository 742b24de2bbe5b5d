#pragma once

#include "lessonweave/agents/agents.hpp"
#include "lessonweave/agents/memory.hpp"
#include "lessonweave/outcome/outcome.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lessonweave::session {

enum class CardState { Active, Starred, Deleted };

std::string_view to_string(CardState state);

struct ContextCard {
    CardId card_id;
    ContextId entry_id;
    std::string title;
    std::string subject;
    std::string background;
    bool manual = false;
    std::string description;
    std::vector<std::string> relevant_material_titles;
    std::optional<std::string> error;
    std::vector<prompts::QaTurn> qa_thread;
    CardState state = CardState::Active;
    bool user_edited = false;
    std::vector<std::string> edit_history;
    std::vector<agents::Review> reviews;

    bool operator==(const ContextCard&) const = default;
};

struct TextCard {
    CardId card_id;
    CardId parent;
    MaterialId material_id;
    std::string material_title;
    std::optional<agents::TextAnalysis> analysis;
    std::string analysis_text;
    std::vector<agents::Review> reviews;  // oldest first; the last is current
    std::optional<std::string> error;
    std::optional<std::string> review_error;
    std::vector<prompts::QaTurn> qa_thread;
    CardState state = CardState::Active;
    bool user_edited = false;
    std::vector<std::string> edit_history;

    bool operator==(const TextCard&) const = default;
};

struct ComparisonRecord {
    CardId context_card;
    agents::PairwiseComparison comparison;

    bool operator==(const ComparisonRecord&) const = default;
};

struct CollectionEntry {
    CardId context_card_id;
    std::vector<CardId> starred_text_card_ids;

    bool operator==(const CollectionEntry&) const = default;
};

using Collection = std::vector<CollectionEntry>;

struct SessionConfig {
    SessionId session_id;
    std::vector<std::string> selected_subjects;  // sorted, unique
    std::vector<MaterialId> selected_material_ids;
    std::optional<int> expected_lesson_count;
    std::string content_language = "en";

    bool operator==(const SessionConfig&) const = default;
};

struct MaterialRef {
    MaterialId id;
    std::string title;

    bool operator==(const MaterialRef&) const = default;
};

struct SessionState {
    SessionConfig config;
    std::vector<MaterialRef> materials;
    std::vector<ContextCard> contexts;
    std::vector<TextCard> texts;
    std::vector<ComparisonRecord> comparisons;
    std::map<std::string, outcome::OutcomeBundle> outcomes;  // by context card id
    std::map<prompts::AgentRole, agents::RoleMemory> memories;
    std::set<ContextId> seen_entries;  // every entry ever put on a card
    std::size_t next_context_card = 1;
    std::size_t next_text_card = 1;

    const ContextCard* find_context(const CardId& id) const;
    const TextCard* find_text(const CardId& id) const;
    ContextCard* find_context(const CardId& id);
    TextCard* find_text(const CardId& id);
    std::vector<const TextCard*> children(const CardId& context_card) const;

    Collection collection() const;
    // Empty when every invariant holds, else the first violation.
    std::string check_invariants() const;

    bool operator==(const SessionState&) const = default;
};

json to_json(const ContextCard& card);
json to_json(const TextCard& card);
json to_json(const Collection& collection);
json to_json(const SessionState& state);

// A state change. Events carry every model output they depend on, so a log
// replays without any provider.
struct Event {
    std::string type;
    json data;

    bool operator==(const Event&) const = default;
};

namespace events {
Event session_created(const SessionConfig& config, const std::vector<MaterialRef>& materials);
Event context_card_added(const ContextCard& card);
Event text_card_added(const TextCard& card);
Event star(const CardId& card);
Event unstar(const CardId& card);
Event remove(const CardId& card);
Event card_edited(const CardId& card, const std::string& text);
Event qa_appended(const CardId& card, const prompts::QaTurn& turn);
Event review_appended(const CardId& card, const agents::Review& review);
Event comparison_added(const ComparisonRecord& record);
Event lesson_count_set(int count);
Event plan_set(const CardId& context_card, const outcome::CoursePlan& plan, const std::vector<std::string>& warnings);
Event introduction_set(const CardId& context_card, const std::string& text, const std::vector<std::string>& warnings);
Event activities_set(const CardId& context_card, const std::vector<outcome::Activity>& activities,
                     const std::vector<std::string>& warnings);
Event activity_deleted(const CardId& context_card, const std::string& title);
Event plan_edited(const CardId& context_card, const std::string& text);
Event introduction_edited(const CardId& context_card, const std::string& text);
}  // namespace events

// Applies one event. Throws (UnknownCard, AlreadyDeleted, DuplicateChild, ...)
// and leaves `state` untouched when the event is not allowed.
void apply(SessionState& state, const Event& event);

SessionState replay(std::span<const Event> log);

class Session {
public:
    Session(SessionConfig config, std::vector<MaterialRef> materials);
    static Session from_events(std::vector<Event> log, llm::Transcript transcript = {});

    const SessionState& state() const noexcept { return state_; }
    const std::vector<Event>& events() const noexcept { return log_; }
    const SessionId& id() const noexcept { return state_.config.session_id; }

    // Validates, applies and logs the event.
    void commit(Event event);

    CardId next_context_card_id() const;
    CardId next_text_card_id() const;

    llm::Transcript& transcript() noexcept { return transcript_; }
    const llm::Transcript& transcript() const noexcept { return transcript_; }

private:
    Session() = default;

    SessionState state_;
    std::vector<Event> log_;
    llm::Transcript transcript_;
};

// One directory per session under `root`:
//   events.jsonl      the event log, one event per line
//   snapshot.json     the folded state
//   transcript.jsonl  every model exchange
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path root);

    void save(const Session& session) const;
    std::optional<Session> load(const SessionId& id) const;
    std::vector<SessionId> list() const;

private:
    std::filesystem::path root_;
};

std::string events_to_jsonl(std::span<const Event> log);
std::vector<Event> events_from_jsonl(std::string_view text);

}  // namespace lessonweave::session
