#pragma once

#include "lessonweave/corpus/corpus.hpp"
#include "lessonweave/error.hpp"
#include "lessonweave/llm/gateway.hpp"
#include "lessonweave/prompts/prompts.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lessonweave::agents {

struct ContextDescription {
    ContextId context_entry_ref;
    std::string description;
    std::vector<std::string> relevant_material_titles;  // top 3 by retrieval score

    bool operator==(const ContextDescription&) const = default;
};

enum class LinkKind { Sentence, Paragraph, Viewpoint };

std::string_view to_string(LinkKind kind);
LinkKind link_kind_from_string(std::string_view s);

struct ElementLink {
    LinkKind kind = LinkKind::Sentence;
    std::string excerpt;
    std::string connection;
    bool verbatim = true;  // excerpt found in the material body

    bool operator==(const ElementLink&) const = default;
};

struct TextAnalysis {
    MaterialId material_ref;
    ContextId context_ref;
    std::string overall;
    std::vector<ElementLink> element_links;
    std::vector<std::string> warnings;

    bool hallucination_flag() const;
    bool operator==(const TextAnalysis&) const = default;
};

struct Review {
    int rating = 0;
    std::string critique;
    bool relevant = true;
    bool accurate = true;

    bool operator==(const Review&) const = default;
};

struct PairwiseComparison {
    MaterialId material_a;
    MaterialId material_b;
    ContextId context_ref;
    std::vector<std::string> similarities;
    std::vector<std::string> differences;

    bool operator==(const PairwiseComparison&) const = default;
};

void to_json(json& j, const ContextDescription& v);
void from_json(const json& j, ContextDescription& v);
void to_json(json& j, const ElementLink& v);
void from_json(const json& j, ElementLink& v);
void to_json(json& j, const TextAnalysis& v);
void from_json(const json& j, TextAnalysis& v);
void to_json(json& j, const Review& v);
void from_json(const json& j, Review& v);
void to_json(json& j, const PairwiseComparison& v);
void from_json(const json& j, PairwiseComparison& v);

// Plain-text form of an analysis, as shown on the card and handed to the
// reviewer and the plan generator.
std::string render_analysis(const TextAnalysis& analysis);

// Output parsing. Each throws Error(MalformedOutput) with a reason fit for a
// repair turn.
std::string extract_block(std::string_view reply, std::string_view label);
std::string parse_prose(std::string_view reply, std::string_view label);
TextAnalysis parse_analysis(std::string_view reply, const corpus::ReadingMaterial& material,
                            const ContextId& context);
Review parse_review(std::string_view reply);
PairwiseComparison parse_comparison(std::string_view reply);

// Everything a role call needs besides its payload.
struct Workbench {
    const llm::Gateway& gateway;
    const prompts::Catalog& catalog;
    llm::Transcript* transcript = nullptr;
};

// One conversation with the role that owns `task`: the composed prompt,
// then any follow-up turns.
class Exchange {
public:
    Exchange(const Workbench& wb, prompts::Task task, const prompts::PromptPayload& payload);

    // Sends the conversation so far and returns the reply text.
    std::string send();
    // Appends the last reply as an assistant turn followed by `instruction`.
    void follow_up(const std::string& instruction);

    const std::vector<llm::ChatMessage>& messages() const noexcept { return messages_; }

private:
    const Workbench& wb_;
    llm::CallLabel label_;
    std::vector<llm::ChatMessage> messages_;
    std::string last_;
};

// Sends the prompt for (task, payload) and parses the reply. When the parser
// throws MalformedOutput the bad reply and a repair instruction are appended
// and the call is made once more; a second failure propagates.
template <typename Parse>
auto call_with_repair(const Workbench& wb, prompts::Task task, const prompts::PromptPayload& payload,
                      Parse&& parse) -> decltype(parse(std::string_view{})) {
    Exchange ex(wb, task, payload);
    {
        const auto reply = ex.send();
        try {
            return parse(std::string_view(reply));
        } catch (const Error& err) {
            if (err.code() != ErrorCode::MalformedOutput) throw;
            ex.follow_up(prompts::repair_instruction(wb.catalog, err.what()));
        }
    }
    const auto reply = ex.send();
    return parse(std::string_view(reply));
}

prompts::ContextBrief brief(const corpus::ContextEntry& entry);

// Context Analyst: description grounded in every session material.
ContextDescription describe_context(const Workbench& wb, const corpus::ContextEntry& entry,
                                    std::span<const corpus::ReadingMaterial> materials);

struct CardOutcome {
    std::optional<ContextDescription> description;
    std::optional<Error> error;
};

// One description per entry, computed concurrently. Results come back in the
// order of `entries` and their exchanges are appended to the transcript in
// that order. A provider failure or unusable reply on one entry becomes that
// entry's error; FixtureMiss is rethrown.
std::vector<CardOutcome> describe_batch(const Workbench& wb, std::span<const corpus::ContextEntry> entries,
                                        std::span<const corpus::ReadingMaterial> materials);

std::string answer_context_question(const Workbench& wb, const corpus::ContextEntry& entry,
                                    const std::string& description, const std::string& question,
                                    const std::vector<prompts::QaTurn>& thread,
                                    const std::vector<std::string>& memory_notes,
                                    const std::vector<std::string>& material_titles);

std::string answer_text_question(const Workbench& wb, const corpus::ContextEntry& entry,
                                 const std::optional<std::string>& description,
                                 const corpus::ReadingMaterial& material,
                                 const std::optional<std::string>& analysis_text,
                                 const std::string& question, const std::vector<prompts::QaTurn>& thread);

// Text Analyst. MalformedOutput after the repair turn becomes AnalysisFailed.
TextAnalysis analyze_text(const Workbench& wb, const corpus::ContextEntry& entry,
                          const std::optional<std::string>& description,
                          const corpus::ReadingMaterial& material);

// Text Reviewer over an analysis text; the prompt carries it verbatim.
Review review_analysis(const Workbench& wb, const corpus::ContextEntry& entry,
                       const std::optional<std::string>& description,
                       const corpus::ReadingMaterial& material, const std::string& analysis_text);

// Text Reviewer over an edited context description.
Review review_description(const Workbench& wb, const corpus::ContextEntry& entry,
                          const std::string& description, const std::vector<std::string>& material_titles);

struct AnalysisResult {
    std::optional<TextAnalysis> analysis;
    std::optional<Review> review;
    std::optional<Error> error;         // analysis failed
    std::optional<Error> review_error;  // analysis kept, review failed
};

// Analyse-then-review for each material, concurrently. Same ordering and
// failure rules as describe_batch.
std::vector<AnalysisResult> analyze_batch(const Workbench& wb, const corpus::ContextEntry& entry,
                                          const std::optional<std::string>& description,
                                          std::span<const corpus::ReadingMaterial> materials);

PairwiseComparison compare_texts(const Workbench& wb, const corpus::ContextEntry& entry,
                                 const std::optional<std::string>& description,
                                 const corpus::ReadingMaterial& a, const corpus::ReadingMaterial& b);

}  // namespace lessonweave::agents
