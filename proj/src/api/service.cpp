#include "lessonweave/api/service.hpp"

#include <algorithm>
#include <cstdio>

namespace lessonweave::api {

namespace oc = lessonweave::outcome;

namespace {

using session::CardState;

std::string describe_error(const Error& ex) {
    return std::string(error_code_name(ex.code())) + ": " + ex.what();
}

std::vector<corpus::ReadingMaterial> session_materials(const corpus::CorpusState& snap,
                                                       const session::SessionState& s) {
    std::vector<corpus::ReadingMaterial> out;
    for (const auto& id : s.config.selected_material_ids) {
        const auto* m = snap.find_material(id);
        if (m == nullptr) {
            throw Error(ErrorCode::UnknownMaterial, "material " + id.value + " is no longer in the corpus",
                        json{{"material_id", id}});
        }
        out.push_back(*m);
    }
    return out;
}

const corpus::ReadingMaterial& session_material(const std::vector<corpus::ReadingMaterial>& materials,
                                                const MaterialId& id) {
    for (const auto& m : materials) {
        if (m.id == id) return m;
    }
    throw Error(ErrorCode::UnknownMaterial, "material " + id.value + " is not part of this session",
                json{{"material_id", id}});
}

corpus::ContextEntry entry_of(const session::ContextCard& card) {
    corpus::ContextEntry e;
    e.id = card.entry_id;
    e.subject = card.subject;
    e.title = card.title;
    e.background = card.background;
    return e;
}

std::optional<std::string> description_of(const session::ContextCard& card) {
    if (card.description.empty()) return std::nullopt;
    return card.description;
}

const session::ContextCard& live_context(const session::SessionState& s, const CardId& id) {
    const auto* c = s.find_context(id);
    if (c == nullptr) {
        if (s.find_text(id) != nullptr) {
            throw Error(ErrorCode::BadRequest, id.value + " is a text card, not a context card", json{{"card_id", id}});
        }
        throw Error(ErrorCode::UnknownCard, "no card " + id.value, json{{"card_id", id}});
    }
    if (c->state == CardState::Deleted) {
        throw Error(ErrorCode::AlreadyDeleted, "card " + id.value + " is deleted", json{{"card_id", id}});
    }
    return *c;
}

void require_non_empty(const std::string& text, const char* what) {
    if (trim(text).empty()) throw Error(ErrorCode::BadRequest, std::string(what) + " must not be empty");
}

session::TextCard text_card_from(const CardId& id, const CardId& parent, const corpus::ReadingMaterial& m,
                                 agents::AnalysisResult r) {
    session::TextCard card;
    card.card_id = id;
    card.parent = parent;
    card.material_id = m.id;
    card.material_title = m.title;
    if (r.analysis) {
        card.analysis_text = agents::render_analysis(*r.analysis);
        card.analysis = std::move(r.analysis);
    }
    if (r.review) card.reviews.push_back(*r.review);
    if (r.error) card.error = describe_error(*r.error);
    if (r.review_error) card.review_error = describe_error(*r.review_error);
    return card;
}

}  // namespace

ExportFormat export_format_from_string(std::string_view s) {
    if (s == "txt") return ExportFormat::Txt;
    if (s == "html") return ExportFormat::Html;
    throw Error(ErrorCode::BadRequest, "format must be txt or html", json{{"format", s}});
}

Service::Service(std::shared_ptr<corpus::Corpus> corpus, std::shared_ptr<const llm::Gateway> gateway,
                 ServiceOptions options)
    : corpus_(std::move(corpus)), gateway_(std::move(gateway)), options_(std::move(options)) {
    if (options_.batch_size == 0) throw Error(ErrorCode::InvalidConfig, "batch size must be positive");
    if (options_.session_dir) {
        store_.emplace(*options_.session_dir);
        for (const auto& id : store_->list()) {
            unsigned long n = 0;
            if (std::sscanf(id.value.c_str(), "s-%lu", &n) == 1) next_session_ = std::max<std::size_t>(next_session_, n + 1);
        }
    }
}

const prompts::Catalog& Service::catalog(const std::string& language) {
    std::lock_guard lock(catalog_mutex_);
    auto& slot = catalogs_[language];
    if (!slot) {
        try {
            slot = std::make_unique<prompts::Catalog>(options_.catalog_dir
                                                          ? prompts::Catalog::load(*options_.catalog_dir, language)
                                                          : prompts::Catalog::builtin(language));
        } catch (...) {
            catalogs_.erase(language);
            throw;
        }
    }
    return *slot;
}

std::shared_ptr<Service::Slot> Service::slot(const SessionId& sid) {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(sid.value);
    if (it != sessions_.end()) return it->second;
    if (store_) {
        if (auto loaded = store_->load(sid)) {
            auto s = std::make_shared<Slot>();
            s->session.emplace(std::move(*loaded));
            sessions_[sid.value] = s;
            return s;
        }
    }
    throw Error(ErrorCode::UnknownSession, "no session " + sid.value, json{{"session_id", sid}});
}

template <typename Fn>
auto Service::with_session(const SessionId& sid, Fn&& fn) {
    auto s = slot(sid);
    std::lock_guard lock(s->mutex);
    auto& session = *s->session;
    const auto before = session.events().size();
    const auto calls_before = session.transcript().size();
    auto persist = [&] {
        if (store_ && (session.events().size() != before || session.transcript().size() != calls_before)) {
            store_->save(session);
        }
    };
    try {
        if constexpr (std::is_void_v<decltype(fn(session))>) {
            fn(session);
            persist();
        } else {
            auto result = fn(session);
            persist();
            return result;
        }
    } catch (...) {
        persist();
        throw;
    }
}

SessionId Service::create_session(const std::vector<std::string>& subjects, const std::vector<MaterialId>& material_ids,
                                  const std::string& language) {
    std::vector<std::string> subj;
    for (const auto& s : subjects) {
        auto t = trim(s);
        if (!t.empty()) subj.push_back(t);
    }
    std::sort(subj.begin(), subj.end());
    subj.erase(std::unique(subj.begin(), subj.end()), subj.end());
    if (subj.empty()) throw Error(ErrorCode::BadRequest, "select at least one subject");

    std::vector<MaterialId> ids;
    for (const auto& id : material_ids) {
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    }
    if (ids.empty()) throw Error(ErrorCode::NoMaterials, "select at least one reading material");

    try {
        catalog(language);
    } catch (const Error& ex) {
        throw Error(ErrorCode::BadRequest, ex.what(), json{{"language", language}});
    }

    const auto snap = corpus_->snapshot();
    std::vector<session::MaterialRef> refs;
    for (const auto& id : ids) {
        const auto* m = snap->find_material(id);
        if (m == nullptr) {
            throw Error(ErrorCode::UnknownMaterial, "no material " + id.value, json{{"material_id", id}});
        }
        refs.push_back({m->id, m->title});
    }

    auto s = std::make_shared<Slot>();
    SessionId sid;
    {
        std::lock_guard lock(sessions_mutex_);
        char buf[32];
        std::snprintf(buf, sizeof buf, "s-%06zu", next_session_++);
        sid = SessionId(buf);
        session::SessionConfig config;
        config.session_id = sid;
        config.selected_subjects = subj;
        config.selected_material_ids = ids;
        config.content_language = language;
        s->session.emplace(config, refs);
        sessions_[sid.value] = s;
    }
    if (store_) {
        std::lock_guard lock(s->mutex);
        store_->save(*s->session);
    }
    return sid;
}

json Service::session_json(const SessionId& sid) {
    return with_session(sid, [](session::Session& s) { return to_json(s.state()); });
}

std::vector<SessionId> Service::sessions() {
    std::set<std::string> ids;
    {
        std::lock_guard lock(sessions_mutex_);
        for (const auto& [id, _] : sessions_) ids.insert(id);
    }
    if (store_) {
        for (const auto& id : store_->list()) ids.insert(id.value);
    }
    std::vector<SessionId> out;
    for (const auto& id : ids) out.emplace_back(id);
    return out;
}

std::vector<CardId> Service::recommend_contexts(const SessionId& sid, std::optional<std::size_t> k) {
    const std::size_t count = k.value_or(options_.batch_size);
    if (count == 0) throw Error(ErrorCode::BadRequest, "k must be at least 1");
    return with_session(sid, [&](session::Session& s) {
        const auto snap = corpus_->snapshot();
        const auto& st = s.state();
        const auto materials = session_materials(*snap, st);
        const auto query = retrieval::build_session_query(materials);
        const std::set<std::string> subjects(st.config.selected_subjects.begin(), st.config.selected_subjects.end());
        const auto hits = retrieval::top_k_contexts(snap->contexts, query, subjects, count, st.seen_entries);

        std::vector<corpus::ContextEntry> entries;
        for (const auto& h : hits) entries.push_back(*snap->find_context(ContextId(h.record_id)));

        agents::Workbench wb{*gateway_, catalog(st.config.content_language), &s.transcript()};
        auto results = agents::describe_batch(wb, entries, materials);

        std::vector<CardId> added;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            session::ContextCard card;
            card.card_id = s.next_context_card_id();
            card.entry_id = entries[i].id;
            card.title = entries[i].title;
            card.subject = entries[i].subject;
            card.background = entries[i].background;
            if (results[i].description) {
                card.description = results[i].description->description;
                card.relevant_material_titles = results[i].description->relevant_material_titles;
            } else {
                card.error = describe_error(*results[i].error);
            }
            s.commit(session::events::context_card_added(card));
            added.push_back(card.card_id);
        }
        return added;
    });
}

CardId Service::add_manual_context(const SessionId& sid, const std::string& title, const std::string& background) {
    return with_session(sid, [&](session::Session& s) {
        const auto& st = s.state();
        corpus::ContextEntry entry;
        try {
            entry = corpus_->embed_user_context(title, background);
        } catch (const Error& ex) {
            if (ex.code() != ErrorCode::DuplicateEntry) throw;
            const auto* existing = corpus_->snapshot()->find_context(corpus::kUserDefinedSubject, trim(title));
            if (existing == nullptr || existing->background != trim(background) ||
                st.seen_entries.contains(existing->id)) {
                throw;
            }
            entry = *existing;
        }
        const auto snap = corpus_->snapshot();
        const auto materials = session_materials(*snap, st);
        agents::Workbench wb{*gateway_, catalog(st.config.content_language), &s.transcript()};
        auto d = agents::describe_context(wb, entry, materials);

        session::ContextCard card;
        card.card_id = s.next_context_card_id();
        card.entry_id = entry.id;
        card.title = entry.title;
        card.subject = entry.subject;
        card.background = entry.background;
        card.manual = true;
        card.description = d.description;
        card.relevant_material_titles = d.relevant_material_titles;
        s.commit(session::events::context_card_added(card));
        return card.card_id;
    });
}

std::string Service::find(const SessionId& sid, const CardId& card, const std::string& question) {
    require_non_empty(question, "question");
    return with_session(sid, [&](session::Session& s) {
        const auto& st = s.state();
        agents::Workbench wb{*gateway_, catalog(st.config.content_language), &s.transcript()};
        std::string answer;
        if (const auto* c = st.find_context(card)) {
            if (c->state == CardState::Deleted) {
                throw Error(ErrorCode::AlreadyDeleted, "card " + card.value + " is deleted", json{{"card_id", card}});
            }
            std::vector<std::string> titles;
            for (const auto& m : st.materials) titles.push_back(m.title);
            answer = agents::answer_context_question(wb, entry_of(*c), c->description, trim(question), c->qa_thread,
                                                     st.memories.at(prompts::AgentRole::ContextAnalyst).notes(),
                                                     titles);
        } else if (const auto* t = st.find_text(card)) {
            if (t->state == CardState::Deleted) {
                throw Error(ErrorCode::AlreadyDeleted, "card " + card.value + " is deleted", json{{"card_id", card}});
            }
            const auto& parent = *st.find_context(t->parent);
            const auto materials = session_materials(*corpus_->snapshot(), st);
            const auto& m = session_material(materials, t->material_id);
            std::optional<std::string> analysis;
            if (!t->analysis_text.empty()) analysis = t->analysis_text;
            answer = agents::answer_text_question(wb, entry_of(parent), description_of(parent), m, analysis,
                                                  trim(question), t->qa_thread);
        } else {
            throw Error(ErrorCode::UnknownFocus, "no card " + card.value + " to ask about", json{{"card_id", card}});
        }
        s.commit(session::events::qa_appended(card, {trim(question), answer}));
        return answer;
    });
}

namespace {

json card_json(const session::SessionState& st, const CardId& id) {
    if (const auto* c = st.find_context(id)) return session::to_json(*c);
    if (const auto* t = st.find_text(id)) return session::to_json(*t);
    throw Error(ErrorCode::UnknownCard, "no card " + id.value, json{{"card_id", id}});
}

}  // namespace

json Service::star(const SessionId& sid, const CardId& card) {
    return with_session(sid, [&](session::Session& s) {
        s.commit(session::events::star(card));
        return card_json(s.state(), card);
    });
}

json Service::unstar(const SessionId& sid, const CardId& card) {
    return with_session(sid, [&](session::Session& s) {
        s.commit(session::events::unstar(card));
        return card_json(s.state(), card);
    });
}

json Service::remove(const SessionId& sid, const CardId& card) {
    return with_session(sid, [&](session::Session& s) {
        s.commit(session::events::remove(card));
        return card_json(s.state(), card);
    });
}

json Service::edit(const SessionId& sid, const CardId& card, const std::string& text) {
    return with_session(sid, [&](session::Session& s) {
        s.commit(session::events::card_edited(card, text));
        return card_json(s.state(), card);
    });
}

agents::Review Service::review_user_edit(const SessionId& sid, const CardId& card, const std::string& text) {
    return with_session(sid, [&](session::Session& s) {
        s.commit(session::events::card_edited(card, text));
        const auto& st = s.state();
        agents::Workbench wb{*gateway_, catalog(st.config.content_language), &s.transcript()};
        agents::Review review;
        if (const auto* c = st.find_context(card)) {
            std::vector<std::string> titles = c->relevant_material_titles;
            if (titles.empty()) {
                for (const auto& m : st.materials) titles.push_back(m.title);
            }
            review = agents::review_description(wb, entry_of(*c), c->description, titles);
        } else {
            const auto& t = *st.find_text(card);
            const auto& parent = *st.find_context(t.parent);
            const auto materials = session_materials(*corpus_->snapshot(), st);
            review = agents::review_analysis(wb, entry_of(parent), description_of(parent),
                                             session_material(materials, t.material_id), t.analysis_text);
        }
        s.commit(session::events::review_appended(card, review));
        return review;
    });
}

std::vector<CardId> Service::analyze_batch(const SessionId& sid, const CardId& context_card,
                                           std::optional<std::size_t> k) {
    const std::size_t count = k.value_or(options_.batch_size);
    if (count == 0) throw Error(ErrorCode::BadRequest, "k must be at least 1");
    return with_session(sid, [&](session::Session& s) {
        const auto& st = s.state();
        const auto& card = live_context(st, context_card);
        const auto snap = corpus_->snapshot();
        const auto* entry = snap->find_context(card.entry_id);
        if (entry == nullptr) {
            throw Error(ErrorCode::UnknownContext, "context " + card.entry_id.value + " is no longer in the corpus",
                        json{{"entry_id", card.entry_id}});
        }
        const auto materials = session_materials(*snap, st);
        std::set<MaterialId> exclude;
        for (const auto* t : st.children(context_card)) exclude.insert(t->material_id);
        std::vector<retrieval::RankedHit> hits;
        try {
            hits = retrieval::top_k_materials(*entry, materials, count, exclude);
        } catch (const Error& ex) {
            if (ex.code() != ErrorCode::NoCandidates) throw;
            throw Error(ErrorCode::NoCandidates, "every session material is already under " + context_card.value,
                        json{{"card_id", context_card}});
        }
        std::vector<corpus::ReadingMaterial> picked;
        for (const auto& h : hits) picked.push_back(session_material(materials, MaterialId(h.record_id)));

        agents::Workbench wb{*gateway_, catalog(st.config.content_language), &s.transcript()};
        auto results = agents::analyze_batch(wb, *entry, description_of(card), picked);

        std::vector<CardId> added;
        for (std::size_t i = 0; i < picked.size(); ++i) {
            auto text = text_card_from(s.next_text_card_id(), context_card, picked[i], std::move(results[i]));
            s.commit(session::events::text_card_added(text));
            added.push_back(text.card_id);
        }
        return added;
    });
}

CardId Service::add_text(const SessionId& sid, const CardId& context_card, const MaterialId& material) {
    return with_session(sid, [&](session::Session& s) {
        const auto& st = s.state();
        const auto& card = live_context(st, context_card);
        const auto snap = corpus_->snapshot();
        const auto materials = session_materials(*snap, st);
        const auto& m = session_material(materials, material);
        for (const auto* t : st.children(context_card)) {
            if (t->material_id == material && t->state != CardState::Deleted) {
                throw Error(ErrorCode::DuplicateChild, "\"" + m.title + "\" is already under " + context_card.value,
                            json{{"card_id", context_card}, {"material_id", material}});
            }
        }
        agents::Workbench wb{*gateway_, catalog(st.config.content_language), &s.transcript()};
        const std::vector<corpus::ReadingMaterial> one{m};
        auto results = agents::analyze_batch(wb, entry_of(card), description_of(card), one);
        auto text = text_card_from(s.next_text_card_id(), context_card, m, std::move(results.front()));
        s.commit(session::events::text_card_added(text));
        return text.card_id;
    });
}

agents::PairwiseComparison Service::compare(const SessionId& sid, const CardId& context_card, const MaterialId& a,
                                            const MaterialId& b) {
    return with_session(sid, [&](session::Session& s) {
        const auto& st = s.state();
        const auto& card = live_context(st, context_card);
        if (a == b) {
            throw Error(ErrorCode::SameMaterial, "cannot compare a material with itself", json{{"material_id", a}});
        }
        const auto materials = session_materials(*corpus_->snapshot(), st);
        const auto& ma = session_material(materials, a);
        const auto& mb = session_material(materials, b);
        agents::Workbench wb{*gateway_, catalog(st.config.content_language), &s.transcript()};
        auto c = agents::compare_texts(wb, entry_of(card), description_of(card), ma, mb);
        s.commit(session::events::comparison_added({context_card, c}));
        return c;
    });
}

session::Collection Service::collection(const SessionId& sid) {
    return with_session(sid, [](session::Session& s) { return s.state().collection(); });
}

void Service::set_lesson_count(const SessionId& sid, int count) {
    with_session(sid, [&](session::Session& s) { s.commit(session::events::lesson_count_set(count)); });
}

oc::OutcomeBundle Service::generate_plan(const SessionId& sid, const CardId& context_card) {
    return with_session(sid, [&](session::Session& s) {
        const auto& st = s.state();
        const auto& card = live_context(st, context_card);
        if (card.state != CardState::Starred) {
            throw Error(ErrorCode::NotInCollection, "star " + context_card.value + " before generating its plan",
                        json{{"card_id", context_card}});
        }
        if (!st.config.expected_lesson_count) {
            throw Error(ErrorCode::LessonCountUnset, "set the expected number of lessons first");
        }
        oc::PlanRequest request;
        request.context = entry_of(card);
        request.description = description_of(card);
        request.expected_lesson_count = *st.config.expected_lesson_count;
        std::vector<std::string> skipped;
        for (const auto* t : st.children(context_card)) {
            if (t->state != CardState::Starred) continue;
            if (t->analysis_text.empty()) {
                skipped.push_back("starred text \"" + t->material_title + "\" has no analysis and was left out");
                continue;
            }
            request.starred.push_back({t->material_title, t->analysis_text});
        }
        if (request.starred.empty()) {
            throw Error(ErrorCode::EmptyCollectionEntry, "star at least one analysed text under " + context_card.value,
                        json{{"card_id", context_card}});
        }
        agents::Workbench wb{*gateway_, catalog(st.config.content_language), &s.transcript()};
        auto plan = oc::generate_course_plan(wb, request);
        plan.warnings.insert(plan.warnings.end(), skipped.begin(), skipped.end());
        s.commit(session::events::plan_set(context_card, plan.plan, plan.warnings));

        auto intro = oc::generate_introduction(wb, request.context, plan.plan);
        s.commit(session::events::introduction_set(context_card, intro.text, intro.warnings));
        return s.state().outcomes.at(context_card.value);
    });
}

oc::OutcomeBundle Service::generate_activities(const SessionId& sid, const CardId& context_card) {
    return with_session(sid, [&](session::Session& s) {
        const auto& st = s.state();
        live_context(st, context_card);
        auto it = st.outcomes.find(context_card.value);
        if (it == st.outcomes.end() || !it->second.plan || !it->second.introduction) {
            throw Error(ErrorCode::BadRequest, "generate the course plan and introduction first",
                        json{{"card_id", context_card}});
        }
        agents::Workbench wb{*gateway_, catalog(st.config.content_language), &s.transcript()};
        auto result = oc::generate_activities(wb, *it->second.plan, *it->second.introduction);
        s.commit(session::events::activities_set(context_card, result.activities, result.warnings));
        return s.state().outcomes.at(context_card.value);
    });
}

oc::OutcomeBundle Service::delete_activity(const SessionId& sid, const CardId& context_card,
                                                const std::string& title) {
    return with_session(sid, [&](session::Session& s) {
        s.commit(session::events::activity_deleted(context_card, title));
        return s.state().outcomes.at(context_card.value);
    });
}

oc::OutcomeBundle Service::edit_plan(const SessionId& sid, const CardId& context_card, const std::string& text) {
    return with_session(sid, [&](session::Session& s) {
        s.commit(session::events::plan_edited(context_card, text));
        return s.state().outcomes.at(context_card.value);
    });
}

oc::OutcomeBundle Service::edit_introduction(const SessionId& sid, const CardId& context_card,
                                                  const std::string& text) {
    return with_session(sid, [&](session::Session& s) {
        s.commit(session::events::introduction_edited(context_card, text));
        return s.state().outcomes.at(context_card.value);
    });
}

oc::OutcomeBundle Service::outcome(const SessionId& sid, const CardId& context_card) {
    return with_session(sid, [&](session::Session& s) {
        const auto& st = s.state();
        if (st.find_context(context_card) == nullptr) {
            throw Error(ErrorCode::UnknownCard, "no card " + context_card.value, json{{"card_id", context_card}});
        }
        auto it = st.outcomes.find(context_card.value);
        if (it == st.outcomes.end()) {
            oc::OutcomeBundle empty;
            empty.context_title = st.find_context(context_card)->title;
            return empty;
        }
        return it->second;
    });
}

std::string Service::export_outcome(const SessionId& sid, const CardId& context_card, ExportFormat format) {
    const auto bundle = outcome(sid, context_card);
    return format == ExportFormat::Txt ? oc::export_txt(bundle) : oc::export_html(bundle);
}

std::string Service::transcript_jsonl(const SessionId& sid) {
    return with_session(sid, [](session::Session& s) { return s.transcript().to_jsonl(); });
}

}  // namespace lessonweave::api
