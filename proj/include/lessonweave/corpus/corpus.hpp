#pragma once

#include "lessonweave/common.hpp"
#include "lessonweave/llm/gateway.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lessonweave::corpus {

// Subject label given to contexts a teacher adds by hand.
inline constexpr std::string_view kUserDefinedSubject = "user-defined";

struct ReadingMaterial {
    MaterialId id;
    std::string title;
    std::string body;
    std::string source_label;
    Embedding embedding;
};

enum class Origin { Bundled, Imported };

std::string_view to_string(Origin origin);

struct ContextEntry {
    ContextId id;
    std::string subject;
    std::string title;
    std::string background;
    Embedding embedding;
    Origin origin = Origin::Bundled;
};

struct CorpusManifest {
    std::size_t material_count = 0;
    std::map<std::string, std::size_t> pool_counts_by_subject;
    std::size_t embedding_dimension = 0;
    std::string provider_tag;

    bool operator==(const CorpusManifest&) const = default;
};

json to_json(const CorpusManifest& manifest);

struct MaterialRecord {
    std::string title;
    std::string body;
    std::string source_label;
};

struct ContextRecord {
    std::string subject;
    std::string title;
    std::string background;
};

struct DuplicateReport {
    std::size_t index = 0;
    std::string subject;
    std::string title;
};

struct ImportReport {
    std::size_t count = 0;
    std::vector<DuplicateReport> duplicates;
    std::vector<ContextId> ids;
};

// Text that is embedded for a pool entry.
std::string context_embedding_text(std::string_view title, std::string_view background);

// Immutable view of the corpus at one point in time.
struct CorpusState {
    std::vector<ReadingMaterial> materials;
    std::vector<ContextEntry> contexts;
    CorpusManifest manifest;
    std::size_t next_material = 1;
    std::size_t next_context = 1;

    const ReadingMaterial* find_material(const MaterialId& id) const;
    const ContextEntry* find_context(const ContextId& id) const;
    const ContextEntry* find_context(std::string_view subject, std::string_view title) const;
};

// In-memory corpus of reading materials and the context pool, optionally
// backed by a directory:
//   materials.jsonl  {"id","title","body","source_label"}
//   contexts.jsonl   {"id","subject","title","background","origin"}
//   embeddings.bin   sidecar, see corpus_store.cpp
//   manifest.json
// Readers take snapshots; imports are serialized and either fully applied or
// not applied at all.
class Corpus {
public:
    explicit Corpus(std::shared_ptr<const llm::Gateway> gateway,
                    std::optional<std::filesystem::path> directory = std::nullopt);

    // Loads `directory` if it holds a corpus. Throws ProviderMismatch when the
    // stored provider tag differs from the gateway's embedding tag.
    static std::unique_ptr<Corpus> open(std::shared_ptr<const llm::Gateway> gateway,
                                        std::optional<std::filesystem::path> directory);

    std::shared_ptr<const CorpusState> snapshot() const;
    CorpusManifest manifest() const { return snapshot()->manifest; }

    std::vector<ReadingMaterial> import_materials(const std::vector<MaterialRecord>& records);

    // Entries keyed by (subject, title); existing keys and repeats within the
    // batch are reported, not overwritten. Throws AllDuplicates (with the
    // report in the detail) when nothing new remains.
    ImportReport import_context_batch(const std::string& subject,
                                      const std::vector<ContextRecord>& entries);
    // Same contract for records that each carry their own subject.
    ImportReport import_contexts(const std::vector<ContextRecord>& records,
                                 Origin origin = Origin::Bundled);

    ContextEntry embed_user_context(const std::string& title, const std::string& background);

    std::optional<ReadingMaterial> material(const MaterialId& id) const;
    std::optional<ContextEntry> context(const ContextId& id) const;

private:
    void commit(std::shared_ptr<const CorpusState> next);
    Embedding embed_checked(std::string_view text, const CorpusState& state) const;

    std::shared_ptr<const llm::Gateway> gateway_;
    std::optional<std::filesystem::path> directory_;
    std::mutex write_mutex_;
    mutable std::mutex state_mutex_;
    std::shared_ptr<const CorpusState> state_;
};

// Pool files: UTF-8 JSON lines {"subject","title","background"} in that key order.
std::vector<ContextRecord> parse_pool(std::string_view text);
std::vector<ContextRecord> read_pool_file(const std::filesystem::path& path);
std::string render_pool(const std::vector<ContextRecord>& records);
// Exports the pool in stored order; an empty subject exports every entry.
std::string export_pool(const CorpusState& state, std::string_view subject = {});

// Material files: JSON lines {"title","body","source_label"}.
std::vector<MaterialRecord> parse_materials(std::string_view text);
std::vector<MaterialRecord> read_materials_file(const std::filesystem::path& path);

// Persistence helpers, exposed for tests.
void save_state(const CorpusState& state, const std::filesystem::path& directory);
std::optional<CorpusState> load_state(const std::filesystem::path& directory);

}  // namespace lessonweave::corpus
