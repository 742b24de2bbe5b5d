#include "lessonweave/corpus/corpus.hpp"

#include "lessonweave/error.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <set>

namespace lessonweave::corpus {

namespace {

std::string make_id(std::string_view prefix, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*s-%06zu", static_cast<int>(prefix.size()), prefix.data(), n);
    return buf;
}

bool is_provider_failure(ErrorCode code) {
    return code == ErrorCode::ProviderTimeout || code == ErrorCode::ProviderHttpError ||
           code == ErrorCode::InvalidConfig || code == ErrorCode::ZeroVector;
}

void refresh_manifest(CorpusState& state, const std::string& provider_tag) {
    state.manifest.material_count = state.materials.size();
    state.manifest.pool_counts_by_subject.clear();
    for (const auto& c : state.contexts) ++state.manifest.pool_counts_by_subject[c.subject];
    state.manifest.provider_tag = provider_tag;
}

}  // namespace

std::string_view to_string(Origin origin) {
    return origin == Origin::Bundled ? "bundled" : "imported";
}

json to_json(const CorpusManifest& m) {
    return json{{"material_count", m.material_count},
                {"pool_counts_by_subject", m.pool_counts_by_subject},
                {"embedding_dimension", m.embedding_dimension},
                {"provider_tag", m.provider_tag}};
}

std::string context_embedding_text(std::string_view title, std::string_view background) {
    std::string text(title);
    text += '\n';
    text += background;
    return text;
}

const ReadingMaterial* CorpusState::find_material(const MaterialId& id) const {
    for (const auto& m : materials) {
        if (m.id == id) return &m;
    }
    return nullptr;
}

const ContextEntry* CorpusState::find_context(const ContextId& id) const {
    for (const auto& c : contexts) {
        if (c.id == id) return &c;
    }
    return nullptr;
}

const ContextEntry* CorpusState::find_context(std::string_view subject, std::string_view title) const {
    for (const auto& c : contexts) {
        if (c.subject == subject && c.title == title) return &c;
    }
    return nullptr;
}

Corpus::Corpus(std::shared_ptr<const llm::Gateway> gateway,
               std::optional<std::filesystem::path> directory)
    : gateway_(std::move(gateway)), directory_(std::move(directory)) {
    auto initial = std::make_shared<CorpusState>();
    initial->manifest.provider_tag = gateway_->embedding_tag();
    state_ = std::move(initial);
}

std::unique_ptr<Corpus> Corpus::open(std::shared_ptr<const llm::Gateway> gateway,
                                     std::optional<std::filesystem::path> directory) {
    auto corpus = std::make_unique<Corpus>(gateway, directory);
    if (!directory) return corpus;
    auto loaded = load_state(*directory);
    if (!loaded) return corpus;
    if (loaded->manifest.provider_tag != gateway->embedding_tag()) {
        throw Error(ErrorCode::ProviderMismatch,
                    "corpus at " + directory->string() + " was embedded by '" +
                        loaded->manifest.provider_tag + "' but the configured provider is '" +
                        gateway->embedding_tag() + "'",
                    json{{"stored", loaded->manifest.provider_tag},
                         {"configured", gateway->embedding_tag()}});
    }
    corpus->state_ = std::make_shared<const CorpusState>(std::move(*loaded));
    spdlog::info("loaded corpus: {} materials, {} contexts", corpus->state_->materials.size(),
                 corpus->state_->contexts.size());
    return corpus;
}

std::shared_ptr<const CorpusState> Corpus::snapshot() const {
    std::lock_guard lock(state_mutex_);
    return state_;
}

void Corpus::commit(std::shared_ptr<const CorpusState> next) {
    if (directory_) save_state(*next, *directory_);
    std::lock_guard lock(state_mutex_);
    state_ = std::move(next);
}

Embedding Corpus::embed_checked(std::string_view text, const CorpusState& state) const {
    Embedding v;
    try {
        v = gateway_->embed(text);
    } catch (const Error& e) {
        if (is_provider_failure(e.code())) {
            throw Error(ErrorCode::ProviderUnavailable,
                        std::string("embedding provider unavailable: ") + e.what(),
                        json{{"cause", error_code_name(e.code())}});
        }
        throw;
    }
    if (v.empty()) throw Error(ErrorCode::ProviderUnavailable, "embedding provider returned no vector");
    if (state.manifest.embedding_dimension != 0 && v.size() != state.manifest.embedding_dimension) {
        throw Error(ErrorCode::DimensionMismatch,
                    "embedding has dimension " + std::to_string(v.size()) + ", corpus uses " +
                        std::to_string(state.manifest.embedding_dimension));
    }
    return v;
}

std::vector<ReadingMaterial> Corpus::import_materials(const std::vector<MaterialRecord>& records) {
    if (records.empty()) return {};
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (trim(records[i].body).empty()) {
            throw Error(ErrorCode::EmptyBody, "material " + std::to_string(i) + " has an empty body",
                        json{{"index", i}});
        }
        if (trim(records[i].title).empty()) {
            throw Error(ErrorCode::EmptyTitle, "material " + std::to_string(i) + " has an empty title",
                        json{{"index", i}});
        }
    }

    std::lock_guard writer(write_mutex_);
    auto current = snapshot();
    auto next = std::make_shared<CorpusState>(*current);
    std::vector<ReadingMaterial> added;
    added.reserve(records.size());
    for (const auto& r : records) {
        ReadingMaterial m;
        m.id = MaterialId(make_id("mat", next->next_material++));
        m.title = r.title;
        m.body = r.body;
        m.source_label = r.source_label;
        m.embedding = embed_checked(m.body, *next);
        next->manifest.embedding_dimension = m.embedding.size();
        added.push_back(m);
        next->materials.push_back(std::move(m));
    }
    refresh_manifest(*next, gateway_->embedding_tag());
    commit(std::move(next));
    return added;
}

ImportReport Corpus::import_context_batch(const std::string& subject,
                                          const std::vector<ContextRecord>& entries) {
    if (trim(subject).empty()) throw Error(ErrorCode::EmptySubject, "context subject is empty");
    std::vector<ContextRecord> records = entries;
    for (auto& r : records) r.subject = subject;
    return import_contexts(records, Origin::Bundled);
}

ImportReport Corpus::import_contexts(const std::vector<ContextRecord>& records, Origin origin) {
    ImportReport report;
    if (records.empty()) return report;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const json where{{"index", i}};
        if (trim(r.subject).empty()) {
            throw Error(ErrorCode::EmptySubject, "context " + std::to_string(i) + " has no subject", where);
        }
        if (trim(r.title).empty()) {
            throw Error(ErrorCode::EmptyTitle, "context " + std::to_string(i) + " has no title", where);
        }
        if (trim(r.background).empty()) {
            throw Error(ErrorCode::EmptyBackground,
                        "context " + std::to_string(i) + " has no background", where);
        }
    }

    std::lock_guard writer(write_mutex_);
    auto current = snapshot();
    auto next = std::make_shared<CorpusState>(*current);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& c : next->contexts) seen.emplace(c.subject, c.title);

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!seen.emplace(r.subject, r.title).second) {
            report.duplicates.push_back({i, r.subject, r.title});
            continue;
        }
        ContextEntry entry;
        entry.id = ContextId(make_id("ctx", next->next_context++));
        entry.subject = r.subject;
        entry.title = r.title;
        entry.background = r.background;
        entry.origin = origin;
        entry.embedding = embed_checked(context_embedding_text(r.title, r.background), *next);
        next->manifest.embedding_dimension = entry.embedding.size();
        report.ids.push_back(entry.id);
        next->contexts.push_back(std::move(entry));
        ++report.count;
    }

    if (report.count == 0) {
        json dups = json::array();
        for (const auto& d : report.duplicates) {
            dups.push_back({{"index", d.index}, {"subject", d.subject}, {"title", d.title}});
        }
        throw Error(ErrorCode::AllDuplicates,
                    "all " + std::to_string(report.duplicates.size()) + " entries already exist",
                    json{{"count", 0}, {"duplicates", dups}});
    }
    refresh_manifest(*next, gateway_->embedding_tag());
    commit(std::move(next));
    return report;
}

ContextEntry Corpus::embed_user_context(const std::string& title, const std::string& background) {
    if (trim(title).empty()) throw Error(ErrorCode::EmptyTitle, "context title is empty");
    if (trim(background).empty()) throw Error(ErrorCode::EmptyBackground, "context background is empty");

    std::lock_guard writer(write_mutex_);
    auto current = snapshot();
    if (current->find_context(kUserDefinedSubject, title) != nullptr) {
        throw Error(ErrorCode::DuplicateEntry, "context '" + title + "' already exists",
                    json{{"subject", kUserDefinedSubject}, {"title", title}});
    }
    auto next = std::make_shared<CorpusState>(*current);
    ContextEntry entry;
    entry.id = ContextId(make_id("ctx", next->next_context++));
    entry.subject = std::string(kUserDefinedSubject);
    entry.title = title;
    entry.background = background;
    entry.origin = Origin::Imported;
    entry.embedding = embed_checked(context_embedding_text(title, background), *next);
    next->manifest.embedding_dimension = entry.embedding.size();
    next->contexts.push_back(entry);
    refresh_manifest(*next, gateway_->embedding_tag());
    commit(std::move(next));
    return entry;
}

std::optional<ReadingMaterial> Corpus::material(const MaterialId& id) const {
    auto s = snapshot();
    if (const auto* m = s->find_material(id)) return *m;
    return std::nullopt;
}

std::optional<ContextEntry> Corpus::context(const ContextId& id) const {
    auto s = snapshot();
    if (const auto* c = s->find_context(id)) return *c;
    return std::nullopt;
}

}  // namespace lessonweave::corpus
