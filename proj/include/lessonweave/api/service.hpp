#pragma once

#include "lessonweave/corpus/corpus.hpp"
#include "lessonweave/retrieval/retrieval.hpp"
#include "lessonweave/session/session.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

namespace lessonweave::api {

struct ServiceOptions {
    std::optional<std::filesystem::path> session_dir;
    std::optional<std::filesystem::path> catalog_dir;
    std::size_t batch_size = retrieval::kDefaultBatch;
};

enum class ExportFormat { Txt, Html };

ExportFormat export_format_from_string(std::string_view s);

// The whole teacher workflow over one corpus and one gateway. Calls on the
// same session are serialized; different sessions run independently.
class Service {
public:
    Service(std::shared_ptr<corpus::Corpus> corpus, std::shared_ptr<const llm::Gateway> gateway,
            ServiceOptions options = {});

    corpus::Corpus& corpus() noexcept { return *corpus_; }
    const llm::Gateway& gateway() const noexcept { return *gateway_; }
    std::size_t batch_size() const noexcept { return options_.batch_size; }

    SessionId create_session(const std::vector<std::string>& subjects, const std::vector<MaterialId>& material_ids,
                             const std::string& language = "en");
    json session_json(const SessionId& sid);
    std::vector<SessionId> sessions();

    // New context cards, in rank order. Already shown entries are skipped, so
    // repeated calls page through the pool.
    std::vector<CardId> recommend_contexts(const SessionId& sid, std::optional<std::size_t> k = {});
    CardId add_manual_context(const SessionId& sid, const std::string& title, const std::string& background);

    std::string find(const SessionId& sid, const CardId& card, const std::string& question);

    json star(const SessionId& sid, const CardId& card);
    json unstar(const SessionId& sid, const CardId& card);
    json remove(const SessionId& sid, const CardId& card);
    json edit(const SessionId& sid, const CardId& card, const std::string& text);
    // Applies the edit, then asks the Text Reviewer to rate it.
    agents::Review review_user_edit(const SessionId& sid, const CardId& card, const std::string& text);

    // Analyse-and-review for the best-matching session materials not yet
    // under this context.
    std::vector<CardId> analyze_batch(const SessionId& sid, const CardId& context_card,
                                      std::optional<std::size_t> k = {});
    CardId add_text(const SessionId& sid, const CardId& context_card, const MaterialId& material);
    agents::PairwiseComparison compare(const SessionId& sid, const CardId& context_card, const MaterialId& a,
                                       const MaterialId& b);

    session::Collection collection(const SessionId& sid);
    void set_lesson_count(const SessionId& sid, int count);

    outcome::OutcomeBundle generate_plan(const SessionId& sid, const CardId& context_card);
    outcome::OutcomeBundle generate_activities(const SessionId& sid, const CardId& context_card);
    outcome::OutcomeBundle delete_activity(const SessionId& sid, const CardId& context_card, const std::string& title);
    outcome::OutcomeBundle edit_plan(const SessionId& sid, const CardId& context_card, const std::string& text);
    outcome::OutcomeBundle edit_introduction(const SessionId& sid, const CardId& context_card,
                                             const std::string& text);
    outcome::OutcomeBundle outcome(const SessionId& sid, const CardId& context_card);
    std::string export_outcome(const SessionId& sid, const CardId& context_card, ExportFormat format);

    std::string transcript_jsonl(const SessionId& sid);

private:
    struct Slot {
        std::mutex mutex;
        std::optional<session::Session> session;
    };

    std::shared_ptr<Slot> slot(const SessionId& sid);
    const prompts::Catalog& catalog(const std::string& language);

    template <typename Fn>
    auto with_session(const SessionId& sid, Fn&& fn);

    std::shared_ptr<corpus::Corpus> corpus_;
    std::shared_ptr<const llm::Gateway> gateway_;
    ServiceOptions options_;
    std::optional<session::SessionStore> store_;

    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::size_t next_session_ = 1;

    std::mutex catalog_mutex_;
    std::map<std::string, std::unique_ptr<prompts::Catalog>> catalogs_;
};

}  // namespace lessonweave::api
