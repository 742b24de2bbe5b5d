#pragma once

#include "lessonweave/common.hpp"
#include "lessonweave/llm/types.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lessonweave::prompts {

enum class AgentRole { ContextAnalyst, TextAnalyst, TextReviewer, ContextSummarizer };

inline constexpr std::array kAllRoles = {AgentRole::ContextAnalyst, AgentRole::TextAnalyst,
                                         AgentRole::TextReviewer, AgentRole::ContextSummarizer};

std::string_view to_string(AgentRole role);
AgentRole agent_role_from_string(std::string_view s);

enum class Task {
    DescribeContext,
    AnswerContextQuestion,
    AnalyzeText,
    AnswerTextQuestion,
    CompareTexts,
    ReviewAnalysis,
    ReviewDescription,
    GenerateCoursePlan,
    GenerateIntroduction,
    GenerateActivities,
};

inline constexpr std::array kAllTasks = {
    Task::DescribeContext,    Task::AnswerContextQuestion, Task::AnalyzeText,
    Task::AnswerTextQuestion, Task::CompareTexts,          Task::ReviewAnalysis,
    Task::ReviewDescription,  Task::GenerateCoursePlan,    Task::GenerateIntroduction,
    Task::GenerateActivities,
};

std::string_view to_string(Task task);
// The one role allowed to perform a task.
AgentRole role_for(Task task);
// Label of the fenced block the model must answer in, e.g. "analysis".
std::string_view response_label(Task task);

struct Metric {
    std::string key;
    std::string name;
    std::string definition;
};

struct RoleText {
    std::string persona;  // e.g. "active-minded literature teacher"
    std::string system;   // full system message; contains the persona
    std::string style;
};

struct TaskText {
    std::string explain;
    std::string objective;
    std::string response;
};

// Every user-facing prompt string for one content language. Loaded from the
// JSON catalogs in assets/catalog; a directory override lets teachers swap
// wording or templates without rebuilding.
struct Catalog {
    std::string language;
    std::array<std::string, 6> headers;  // context, objective, style, tone, audience, response
    std::string metrics_intro;
    std::vector<Metric> metrics;
    std::map<AgentRole, RoleText> roles;
    std::string tone;
    std::string audience;
    std::map<Task, TaskText> tasks;
    std::string repair;
    std::string lesson_mismatch;
    std::string course_plan_template;

    static Catalog from_json(const json& j, std::string course_plan_template);
    // Built-in catalog for "en" or "zh". Unknown languages throw InvalidConfig.
    static const Catalog& builtin(std::string_view language);
    // Reads <dir>/<language>.json and <dir>/course_plan.<language>.txt,
    // falling back to the built-in asset for whichever file is missing.
    static Catalog load(const std::filesystem::path& dir, std::string_view language);
};

// The canonical course-plan example embedded in the plan prompt's response
// section, in the plan line grammar.
std::string course_plan_template(std::string_view language = "en");

// Co-Star prompt: six sections in fixed order.
struct PromptSpec {
    std::string context_section;
    std::string objective_section;
    std::string style_section;
    std::string tone_section;
    std::string audience_section;
    std::string response_section;

    std::string render(const Catalog& catalog) const;
};

struct ContextBrief {
    std::string title;
    std::string subject;
    std::string background;
};

struct MaterialText {
    std::string title;
    std::string body;
};

struct AnalysisBrief {
    std::string material_title;
    std::string text;
};

struct QaTurn {
    std::string question;
    std::string answer;

    bool operator==(const QaTurn&) const = default;
};

// Knowledge handed to a prompt. Each task accepts only the fields its
// contract names; anything more is rejected (PayloadOverflow).
struct PromptPayload {
    std::optional<ContextBrief> context;
    std::optional<std::string> context_description;
    std::vector<MaterialText> materials;
    std::vector<std::string> material_titles;
    std::optional<std::string> analysis;
    std::vector<AnalysisBrief> analyses;
    std::optional<std::string> question;
    std::vector<QaTurn> thread;
    std::vector<std::string> memory_notes;
    std::optional<std::string> course_plan;
    std::optional<std::string> introduction;
    std::optional<int> lesson_count;
};

enum class PayloadField {
    Context,
    ContextDescription,
    Materials,
    MaterialTitles,
    Analysis,
    Analyses,
    Question,
    Thread,
    Memory,
    CoursePlan,
    Introduction,
    LessonCount,
};

std::string_view to_string(PayloadField field);

struct PayloadContract {
    std::vector<PayloadField> required;
    std::vector<PayloadField> optional;
    std::size_t min_materials = 0;
    std::size_t max_materials = 0;  // 0 with Materials required means unbounded
};

const PayloadContract& contract_for(Task task);

PromptSpec build_prompt(const Catalog& catalog, AgentRole role, Task task,
                        const PromptPayload& payload);

// [system persona message, user Co-Star prompt].
std::vector<llm::ChatMessage> compose_messages(const Catalog& catalog, AgentRole role,
                                               const PromptSpec& spec);

std::string repair_instruction(const Catalog& catalog, std::string_view reason);
std::string lesson_mismatch_instruction(const Catalog& catalog, int actual, int expected);

}  // namespace lessonweave::prompts
