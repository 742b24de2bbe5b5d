#include "lessonweave/session/session.hpp"

#include <algorithm>

namespace lessonweave::session {

namespace {

constexpr std::size_t kSummaryChars = 160;

json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> opt_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

json thread_json(const std::vector<prompts::QaTurn>& thread) {
    json out = json::array();
    for (const auto& t : thread) out.push_back({{"question", t.question}, {"answer", t.answer}});
    return out;
}

std::vector<prompts::QaTurn> thread_from(const json& j) {
    std::vector<prompts::QaTurn> out;
    for (const auto& t : j) out.push_back({t.at("question").get<std::string>(), t.at("answer").get<std::string>()});
    return out;
}

CardState state_from_string(std::string_view s) {
    if (s == "active") return CardState::Active;
    if (s == "starred") return CardState::Starred;
    if (s == "deleted") return CardState::Deleted;
    throw Error(ErrorCode::BadRequest, "unknown card state: " + std::string(s));
}

ContextCard context_card_from(const json& j) {
    ContextCard c;
    j.at("card_id").get_to(c.card_id);
    j.at("entry_id").get_to(c.entry_id);
    j.at("title").get_to(c.title);
    j.at("subject").get_to(c.subject);
    j.at("background").get_to(c.background);
    c.manual = j.value("manual", false);
    c.description = j.value("description", std::string());
    c.relevant_material_titles = j.value("relevant_material_titles", std::vector<std::string>{});
    c.error = opt_string(j, "error");
    if (j.contains("qa_thread")) c.qa_thread = thread_from(j.at("qa_thread"));
    if (j.contains("state")) c.state = state_from_string(j.at("state").get<std::string>());
    c.user_edited = j.value("user_edited", false);
    c.edit_history = j.value("edit_history", std::vector<std::string>{});
    if (j.contains("reviews")) j.at("reviews").get_to(c.reviews);
    return c;
}

TextCard text_card_from(const json& j) {
    TextCard c;
    j.at("card_id").get_to(c.card_id);
    j.at("parent").get_to(c.parent);
    j.at("material_id").get_to(c.material_id);
    j.at("material_title").get_to(c.material_title);
    if (j.contains("analysis") && !j.at("analysis").is_null()) c.analysis = j.at("analysis").get<agents::TextAnalysis>();
    c.analysis_text = j.value("analysis_text", std::string());
    if (j.contains("reviews")) j.at("reviews").get_to(c.reviews);
    c.error = opt_string(j, "error");
    c.review_error = opt_string(j, "review_error");
    if (j.contains("qa_thread")) c.qa_thread = thread_from(j.at("qa_thread"));
    if (j.contains("state")) c.state = state_from_string(j.at("state").get<std::string>());
    c.user_edited = j.value("user_edited", false);
    c.edit_history = j.value("edit_history", std::vector<std::string>{});
    return c;
}

json config_json(const SessionConfig& c) {
    return {{"session_id", c.session_id},
            {"selected_subjects", c.selected_subjects},
            {"selected_material_ids", c.selected_material_ids},
            {"expected_lesson_count", c.expected_lesson_count ? json(*c.expected_lesson_count) : json(nullptr)},
            {"content_language", c.content_language}};
}

SessionConfig config_from(const json& j) {
    SessionConfig c;
    j.at("session_id").get_to(c.session_id);
    j.at("selected_subjects").get_to(c.selected_subjects);
    j.at("selected_material_ids").get_to(c.selected_material_ids);
    if (!j.at("expected_lesson_count").is_null()) c.expected_lesson_count = j.at("expected_lesson_count").get<int>();
    j.at("content_language").get_to(c.content_language);
    return c;
}

[[noreturn]] void unknown_card(const CardId& id) {
    throw Error(ErrorCode::UnknownCard, "no card " + id.value, json{{"card_id", id}});
}

[[noreturn]] void already_deleted(const CardId& id) {
    throw Error(ErrorCode::AlreadyDeleted, "card " + id.value + " is deleted", json{{"card_id", id}});
}

void require_text(const std::string& text, const char* what) {
    if (trim(text).empty()) throw Error(ErrorCode::BadRequest, std::string(what) + " must not be empty");
}

std::string summary(std::string_view title, std::string_view text) {
    return agents::utf8_prefix(std::string(title) + ": " + std::string(text), kSummaryChars);
}

void forget_everywhere(SessionState& s, const std::string& ref) {
    for (auto& [role, memory] : s.memories) memory.forget(ref);
}

outcome::OutcomeBundle& outcome_for(SessionState& s, const CardId& ctx) {
    auto* card = s.find_context(ctx);
    if (card == nullptr) unknown_card(ctx);
    if (card->state == CardState::Deleted) already_deleted(ctx);
    auto& bundle = s.outcomes[ctx.value];
    bundle.context_title = card->title;
    return bundle;
}

outcome::OutcomeBundle& existing_outcome(SessionState& s, const CardId& ctx) {
    auto it = s.outcomes.find(ctx.value);
    if (it == s.outcomes.end() || !it->second.plan) {
        throw Error(ErrorCode::NothingToExport, "no course plan for card " + ctx.value, json{{"card_id", ctx}});
    }
    return it->second;
}

void set_state(SessionState& s, const CardId& id, const std::string& action) {
    if (auto* c = s.find_context(id)) {
        if (c->state == CardState::Deleted) already_deleted(id);
        if (action == "star") {
            c->state = CardState::Starred;
        } else if (action == "unstar") {
            c->state = CardState::Active;
        } else {
            c->state = CardState::Deleted;
            forget_everywhere(s, id.value);
            for (auto& t : s.texts) {
                if (t.parent == id && t.state != CardState::Deleted) {
                    t.state = CardState::Deleted;
                    forget_everywhere(s, t.card_id.value);
                }
            }
        }
        return;
    }
    if (auto* t = s.find_text(id)) {
        if (t->state == CardState::Deleted) already_deleted(id);
        if (action == "star") {
            t->state = CardState::Starred;
            if (!t->analysis_text.empty()) {
                s.memories.at(prompts::AgentRole::ContextSummarizer)
                    .remember({agents::MemoryKind::Analysis, id.value, summary(t->material_title, t->analysis_text)},
                              {t->parent.value});
            }
        } else if (action == "unstar") {
            t->state = CardState::Active;
            s.memories.at(prompts::AgentRole::ContextSummarizer).forget(id.value);
        } else {
            t->state = CardState::Deleted;
            forget_everywhere(s, id.value);
        }
        return;
    }
    unknown_card(id);
}

void apply_in_place(SessionState& s, const Event& e) {
    const auto& d = e.data;
    const auto& type = e.type;

    if (type == "session_created") {
        if (!s.config.session_id.empty()) throw Error(ErrorCode::BadRequest, "session already created");
        s.config = config_from(d.at("config"));
        for (const auto& m : d.at("materials")) {
            s.materials.push_back({m.at("id").get<MaterialId>(), m.at("title").get<std::string>()});
        }
        for (auto role : prompts::kAllRoles) s.memories.emplace(role, agents::RoleMemory(role));
        for (const auto& m : s.materials) {
            for (auto role : {prompts::AgentRole::ContextAnalyst, prompts::AgentRole::TextAnalyst}) {
                s.memories.at(role).remember({agents::MemoryKind::Material, m.id.value, "Reading: " + m.title});
            }
        }
        return;
    }
    if (s.config.session_id.empty()) throw Error(ErrorCode::BadRequest, "session not created");

    if (type == "context_card_added") {
        auto card = context_card_from(d);
        if (card.card_id.value != "cc-" + std::to_string(s.next_context_card)) {
            throw Error(ErrorCode::BadRequest, "unexpected context card id " + card.card_id.value);
        }
        if (s.seen_entries.contains(card.entry_id)) {
            throw Error(ErrorCode::DuplicateEntry, "context " + card.entry_id.value + " is already on a card",
                        json{{"entry_id", card.entry_id}});
        }
        s.seen_entries.insert(card.entry_id);
        ++s.next_context_card;
        if (!card.error) {
            s.memories.at(prompts::AgentRole::ContextAnalyst)
                .remember({agents::MemoryKind::ContextDescription, card.card_id.value,
                           summary(card.title, card.description)});
        }
        s.contexts.push_back(std::move(card));
        return;
    }
    if (type == "text_card_added") {
        auto card = text_card_from(d);
        if (card.card_id.value != "tc-" + std::to_string(s.next_text_card)) {
            throw Error(ErrorCode::BadRequest, "unexpected text card id " + card.card_id.value);
        }
        const auto* parent = s.find_context(card.parent);
        if (parent == nullptr) unknown_card(card.parent);
        if (parent->state == CardState::Deleted) already_deleted(card.parent);
        for (const auto* sibling : s.children(card.parent)) {
            if (sibling->material_id == card.material_id && sibling->state != CardState::Deleted) {
                throw Error(ErrorCode::DuplicateChild,
                            "\"" + card.material_title + "\" is already under " + card.parent.value,
                            json{{"card_id", card.parent}, {"material_id", card.material_id}});
            }
        }
        ++s.next_text_card;
        if (!card.analysis_text.empty()) {
            for (auto role : {prompts::AgentRole::TextAnalyst, prompts::AgentRole::TextReviewer}) {
                s.memories.at(role).remember({agents::MemoryKind::Analysis, card.card_id.value,
                                              summary(card.material_title, card.analysis_text)},
                                             {card.parent.value});
            }
        }
        s.texts.push_back(std::move(card));
        return;
    }
    if (type == "card_state_changed") {
        const auto action = d.at("action").get<std::string>();
        if (action != "star" && action != "unstar" && action != "delete") {
            throw Error(ErrorCode::BadRequest, "unknown card action " + action);
        }
        set_state(s, d.at("card_id").get<CardId>(), action);
        return;
    }
    if (type == "card_edited") {
        const auto id = d.at("card_id").get<CardId>();
        const auto text = d.at("text").get<std::string>();
        require_text(text, "edited text");
        if (auto* c = s.find_context(id)) {
            if (c->state == CardState::Deleted) already_deleted(id);
            c->edit_history.push_back(c->description);
            c->description = text;
            c->user_edited = true;
            c->error.reset();
            s.memories.at(prompts::AgentRole::ContextAnalyst)
                .remember({agents::MemoryKind::ContextDescription, id.value, summary(c->title, text)});
            return;
        }
        if (auto* t = s.find_text(id)) {
            if (t->state == CardState::Deleted) already_deleted(id);
            t->edit_history.push_back(t->analysis_text);
            t->analysis_text = text;
            t->user_edited = true;
            s.memories.at(prompts::AgentRole::TextAnalyst)
                .remember({agents::MemoryKind::Analysis, id.value, summary(t->material_title, text)}, {t->parent.value});
            return;
        }
        unknown_card(id);
    }
    if (type == "qa_appended") {
        const auto id = d.at("card_id").get<CardId>();
        prompts::QaTurn turn{d.at("question").get<std::string>(), d.at("answer").get<std::string>()};
        if (auto* c = s.find_context(id)) {
            if (c->state == CardState::Deleted) already_deleted(id);
            c->qa_thread.push_back(std::move(turn));
            return;
        }
        if (auto* t = s.find_text(id)) {
            if (t->state == CardState::Deleted) already_deleted(id);
            t->qa_thread.push_back(std::move(turn));
            return;
        }
        unknown_card(id);
    }
    if (type == "review_appended") {
        const auto id = d.at("card_id").get<CardId>();
        auto review = d.at("review").get<agents::Review>();
        if (auto* c = s.find_context(id)) {
            if (c->state == CardState::Deleted) already_deleted(id);
            c->reviews.push_back(std::move(review));
            return;
        }
        if (auto* t = s.find_text(id)) {
            if (t->state == CardState::Deleted) already_deleted(id);
            t->reviews.push_back(std::move(review));
            t->review_error.reset();
            return;
        }
        unknown_card(id);
    }
    if (type == "comparison_added") {
        ComparisonRecord r{d.at("context_card").get<CardId>(), d.at("comparison").get<agents::PairwiseComparison>()};
        const auto* c = s.find_context(r.context_card);
        if (c == nullptr) unknown_card(r.context_card);
        if (c->state == CardState::Deleted) already_deleted(r.context_card);
        s.comparisons.push_back(std::move(r));
        return;
    }
    if (type == "lesson_count_set") {
        const int n = d.at("count").get<int>();
        if (n < 1) throw Error(ErrorCode::InvalidLessonCount, "lesson count must be at least 1", json{{"count", n}});
        s.config.expected_lesson_count = n;
        return;
    }
    if (type == "plan_set") {
        const auto ctx = d.at("context_card").get<CardId>();
        auto& bundle = outcome_for(s, ctx);
        bundle.plan = d.at("plan").get<outcome::CoursePlan>();
        bundle.plan_warnings = d.at("warnings").get<std::vector<std::string>>();
        bundle.introduction.reset();
        bundle.introduction_warnings.clear();
        bundle.activities.clear();
        bundle.activity_warnings.clear();
        return;
    }
    if (type == "introduction_set" || type == "introduction_edited") {
        const auto ctx = d.at("context_card").get<CardId>();
        outcome_for(s, ctx);
        auto& bundle = existing_outcome(s, ctx);
        const auto text = d.at("text").get<std::string>();
        require_text(text, "introduction");
        bundle.introduction = text;
        bundle.introduction_warnings =
            type == "introduction_set" ? d.at("warnings").get<std::vector<std::string>>() : std::vector<std::string>{};
        return;
    }
    if (type == "activities_set") {
        const auto ctx = d.at("context_card").get<CardId>();
        outcome_for(s, ctx);
        auto& bundle = existing_outcome(s, ctx);
        bundle.activities = d.at("activities").get<std::vector<outcome::Activity>>();
        bundle.activity_warnings = d.at("warnings").get<std::vector<std::string>>();
        return;
    }
    if (type == "activity_deleted") {
        const auto ctx = d.at("context_card").get<CardId>();
        outcome_for(s, ctx);
        outcome::delete_activity(existing_outcome(s, ctx).activities, d.at("title").get<std::string>());
        return;
    }
    if (type == "plan_edited") {
        const auto ctx = d.at("context_card").get<CardId>();
        outcome_for(s, ctx);
        auto& bundle = existing_outcome(s, ctx);
        outcome::CoursePlan plan;
        try {
            plan = outcome::parse_course_plan(d.at("text").get<std::string>());
        } catch (const Error& ex) {
            throw Error(ErrorCode::BadRequest, ex.what(), ex.detail());
        }
        if (auto why = outcome::validate_course_plan(plan); !why.empty()) {
            throw Error(ErrorCode::BadRequest, "edited plan: " + why);
        }
        bundle.plan = std::move(plan);
        bundle.plan_warnings.clear();
        return;
    }
    throw Error(ErrorCode::BadRequest, "unknown event type " + type);
}

}  // namespace

std::string_view to_string(CardState state) {
    switch (state) {
        case CardState::Active: return "active";
        case CardState::Starred: return "starred";
        case CardState::Deleted: return "deleted";
    }
    return "active";
}

const ContextCard* SessionState::find_context(const CardId& id) const {
    for (const auto& c : contexts) {
        if (c.card_id == id) return &c;
    }
    return nullptr;
}

const TextCard* SessionState::find_text(const CardId& id) const {
    for (const auto& t : texts) {
        if (t.card_id == id) return &t;
    }
    return nullptr;
}

ContextCard* SessionState::find_context(const CardId& id) {
    return const_cast<ContextCard*>(std::as_const(*this).find_context(id));
}

TextCard* SessionState::find_text(const CardId& id) {
    return const_cast<TextCard*>(std::as_const(*this).find_text(id));
}

std::vector<const TextCard*> SessionState::children(const CardId& context_card) const {
    std::vector<const TextCard*> out;
    for (const auto& t : texts) {
        if (t.parent == context_card) out.push_back(&t);
    }
    return out;
}

Collection SessionState::collection() const {
    Collection out;
    for (const auto& c : contexts) {
        if (c.state != CardState::Starred) continue;
        CollectionEntry entry{c.card_id, {}};
        for (const auto* t : children(c.card_id)) {
            if (t->state == CardState::Starred) entry.starred_text_card_ids.push_back(t->card_id);
        }
        out.push_back(std::move(entry));
    }
    return out;
}

std::string SessionState::check_invariants() const {
    std::set<ContextId> live;
    for (const auto& c : contexts) {
        if (!seen_entries.contains(c.entry_id)) return "entry " + c.entry_id.value + " missing from the seen set";
        if (c.state == CardState::Deleted) continue;
        if (!live.insert(c.entry_id).second) return "entry " + c.entry_id.value + " on two live cards";
    }
    for (const auto& t : texts) {
        const auto* p = find_context(t.parent);
        if (p == nullptr) return "text card " + t.card_id.value + " has no parent";
        if (t.state != CardState::Deleted && p->state == CardState::Deleted) {
            return "text card " + t.card_id.value + " is live under a deleted context";
        }
    }
    for (const auto& e : collection()) {
        const auto* c = find_context(e.context_card_id);
        if (c == nullptr || c->state != CardState::Starred) return "collection entry is not a starred context";
        for (const auto& id : e.starred_text_card_ids) {
            const auto* t = find_text(id);
            if (t == nullptr || t->state != CardState::Starred || t->parent != e.context_card_id) {
                return "collection text " + id.value + " is not a starred child";
            }
        }
    }
    for (const auto& [role, memory] : memories) {
        if (memory.used() > memory.char_budget()) return "memory over budget";
    }
    return {};
}

json to_json(const ContextCard& c) {
    return {{"card_id", c.card_id},
            {"kind", "context"},
            {"entry_id", c.entry_id},
            {"title", c.title},
            {"subject", c.subject},
            {"background", c.background},
            {"manual", c.manual},
            {"description", c.description},
            {"relevant_material_titles", c.relevant_material_titles},
            {"error", opt(c.error)},
            {"qa_thread", thread_json(c.qa_thread)},
            {"state", to_string(c.state)},
            {"user_edited", c.user_edited},
            {"edit_history", c.edit_history},
            {"reviews", c.reviews}};
}

json to_json(const TextCard& t) {
    json review = t.reviews.empty() ? json(nullptr) : json(t.reviews.back());
    return {{"card_id", t.card_id},
            {"kind", "text"},
            {"parent", t.parent},
            {"material_id", t.material_id},
            {"material_title", t.material_title},
            {"analysis", t.analysis ? json(*t.analysis) : json(nullptr)},
            {"analysis_text", t.analysis_text},
            {"review", review},
            {"rating", t.reviews.empty() ? json(nullptr) : json(t.reviews.back().rating)},
            {"reviews", t.reviews},
            {"error", opt(t.error)},
            {"review_error", opt(t.review_error)},
            {"qa_thread", thread_json(t.qa_thread)},
            {"state", to_string(t.state)},
            {"user_edited", t.user_edited},
            {"edit_history", t.edit_history}};
}

json to_json(const Collection& collection) {
    json out = json::array();
    for (const auto& e : collection) {
        out.push_back({{"context_card_id", e.context_card_id}, {"starred_text_card_ids", e.starred_text_card_ids}});
    }
    return out;
}

json to_json(const SessionState& s) {
    json contexts = json::array();
    for (const auto& c : s.contexts) contexts.push_back(to_json(c));
    json texts = json::array();
    for (const auto& t : s.texts) texts.push_back(to_json(t));
    json comparisons = json::array();
    for (const auto& r : s.comparisons) {
        comparisons.push_back({{"context_card", r.context_card}, {"comparison", r.comparison}});
    }
    json outcomes = json::object();
    for (const auto& [id, b] : s.outcomes) outcomes[id] = b;
    json memories = json::object();
    for (const auto& [role, m] : s.memories) memories[std::string(prompts::to_string(role))] = m;
    json materials = json::array();
    for (const auto& m : s.materials) materials.push_back({{"id", m.id}, {"title", m.title}});
    return {{"config", config_json(s.config)},
            {"materials", materials},
            {"contexts", contexts},
            {"texts", texts},
            {"comparisons", comparisons},
            {"collection", to_json(s.collection())},
            {"outcomes", outcomes},
            {"memories", memories},
            {"seen_entries", s.seen_entries}};
}

namespace events {

Event session_created(const SessionConfig& config, const std::vector<MaterialRef>& materials) {
    json m = json::array();
    for (const auto& r : materials) m.push_back({{"id", r.id}, {"title", r.title}});
    return {"session_created", {{"config", config_json(config)}, {"materials", m}}};
}

Event context_card_added(const ContextCard& card) { return {"context_card_added", to_json(card)}; }
Event text_card_added(const TextCard& card) { return {"text_card_added", to_json(card)}; }
Event star(const CardId& card) { return {"card_state_changed", {{"card_id", card}, {"action", "star"}}}; }
Event unstar(const CardId& card) { return {"card_state_changed", {{"card_id", card}, {"action", "unstar"}}}; }
Event remove(const CardId& card) { return {"card_state_changed", {{"card_id", card}, {"action", "delete"}}}; }

Event card_edited(const CardId& card, const std::string& text) {
    return {"card_edited", {{"card_id", card}, {"text", text}}};
}

Event qa_appended(const CardId& card, const prompts::QaTurn& turn) {
    return {"qa_appended", {{"card_id", card}, {"question", turn.question}, {"answer", turn.answer}}};
}

Event review_appended(const CardId& card, const agents::Review& review) {
    return {"review_appended", {{"card_id", card}, {"review", review}}};
}

Event comparison_added(const ComparisonRecord& r) {
    return {"comparison_added", {{"context_card", r.context_card}, {"comparison", r.comparison}}};
}

Event lesson_count_set(int count) { return {"lesson_count_set", {{"count", count}}}; }

Event plan_set(const CardId& ctx, const outcome::CoursePlan& plan, const std::vector<std::string>& warnings) {
    return {"plan_set", {{"context_card", ctx}, {"plan", plan}, {"warnings", warnings}}};
}

Event introduction_set(const CardId& ctx, const std::string& text, const std::vector<std::string>& warnings) {
    return {"introduction_set", {{"context_card", ctx}, {"text", text}, {"warnings", warnings}}};
}

Event activities_set(const CardId& ctx, const std::vector<outcome::Activity>& activities,
                     const std::vector<std::string>& warnings) {
    return {"activities_set", {{"context_card", ctx}, {"activities", activities}, {"warnings", warnings}}};
}

Event activity_deleted(const CardId& ctx, const std::string& title) {
    return {"activity_deleted", {{"context_card", ctx}, {"title", title}}};
}

Event plan_edited(const CardId& ctx, const std::string& text) {
    return {"plan_edited", {{"context_card", ctx}, {"text", text}}};
}

Event introduction_edited(const CardId& ctx, const std::string& text) {
    return {"introduction_edited", {{"context_card", ctx}, {"text", trim(text)}}};
}

}  // namespace events

void apply(SessionState& state, const Event& event) {
    SessionState next = state;
    try {
        apply_in_place(next, event);
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::BadRequest, "malformed " + event.type + " event: " + ex.what());
    }
    state = std::move(next);
}

SessionState replay(std::span<const Event> log) {
    SessionState s;
    for (const auto& e : log) apply(s, e);
    return s;
}

Session::Session(SessionConfig config, std::vector<MaterialRef> materials) {
    commit(events::session_created(config, materials));
}

Session Session::from_events(std::vector<Event> log, llm::Transcript transcript) {
    Session s;
    s.state_ = replay(log);
    s.log_ = std::move(log);
    s.transcript_ = std::move(transcript);
    return s;
}

void Session::commit(Event event) {
    apply(state_, event);
    log_.push_back(std::move(event));
}

CardId Session::next_context_card_id() const { return CardId("cc-" + std::to_string(state_.next_context_card)); }
CardId Session::next_text_card_id() const { return CardId("tc-" + std::to_string(state_.next_text_card)); }

std::string events_to_jsonl(std::span<const Event> log) {
    std::string out;
    for (const auto& e : log) {
        out += json{{"type", e.type}, {"data", e.data}}.dump();
        out += '\n';
    }
    return out;
}

std::vector<Event> events_from_jsonl(std::string_view text) {
    std::vector<Event> out;
    std::size_t lineno = 0;
    for (const auto& line : split_lines(text)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            out.push_back({j.at("type").get<std::string>(), j.at("data")});
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::CorpusIo, "event log line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return out;
}

}  // namespace lessonweave::session
