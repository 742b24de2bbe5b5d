#include "lessonweave/error.hpp"
#include "lessonweave/prompts/prompts.hpp"

#include <algorithm>
#include <set>

namespace lessonweave::prompts {

namespace {

using F = PayloadField;

const std::map<Task, PayloadContract>& contracts() {
    static const std::map<Task, PayloadContract> table{
        {Task::DescribeContext, {{F::Context, F::Materials}, {}, 1, 0}},
        {Task::AnswerContextQuestion,
         {{F::Context, F::ContextDescription, F::Question}, {F::Thread, F::Memory, F::MaterialTitles}, 0, 0}},
        {Task::AnalyzeText, {{F::Context, F::Materials}, {F::ContextDescription}, 1, 1}},
        {Task::AnswerTextQuestion,
         {{F::Context, F::Materials, F::Question}, {F::ContextDescription, F::Analysis, F::Thread}, 1, 1}},
        {Task::CompareTexts, {{F::Context, F::Materials}, {F::ContextDescription}, 2, 2}},
        {Task::ReviewAnalysis, {{F::Context, F::Materials, F::Analysis}, {F::ContextDescription}, 1, 1}},
        {Task::ReviewDescription, {{F::Context, F::Analysis}, {F::MaterialTitles}, 0, 0}},
        {Task::GenerateCoursePlan,
         {{F::Context, F::Analyses, F::LessonCount}, {F::ContextDescription}, 0, 0}},
        {Task::GenerateIntroduction, {{F::Context, F::CoursePlan}, {}, 0, 0}},
        {Task::GenerateActivities, {{F::CoursePlan, F::Introduction}, {}, 0, 0}},
    };
    return table;
}

std::set<PayloadField> present_fields(const PromptPayload& p) {
    std::set<PayloadField> out;
    if (p.context) out.insert(F::Context);
    if (p.context_description) out.insert(F::ContextDescription);
    if (!p.materials.empty()) out.insert(F::Materials);
    if (!p.material_titles.empty()) out.insert(F::MaterialTitles);
    if (p.analysis) out.insert(F::Analysis);
    if (!p.analyses.empty()) out.insert(F::Analyses);
    if (p.question) out.insert(F::Question);
    if (!p.thread.empty()) out.insert(F::Thread);
    if (!p.memory_notes.empty()) out.insert(F::Memory);
    if (p.course_plan) out.insert(F::CoursePlan);
    if (p.introduction) out.insert(F::Introduction);
    if (p.lesson_count) out.insert(F::LessonCount);
    return out;
}

void check_contract(Task task, const PromptPayload& payload) {
    const auto& c = contract_for(task);
    const auto present = present_fields(payload);
    const std::string name(to_string(task));

    for (auto f : c.required) {
        if (!present.contains(f)) {
            throw Error(ErrorCode::PayloadMissing, name + " needs " + std::string(to_string(f)),
                        json{{"task", name}, {"field", to_string(f)}});
        }
    }
    for (auto f : present) {
        const bool allowed = std::find(c.required.begin(), c.required.end(), f) != c.required.end() ||
                             std::find(c.optional.begin(), c.optional.end(), f) != c.optional.end();
        if (!allowed) {
            throw Error(ErrorCode::PayloadOverflow, name + " does not accept " + std::string(to_string(f)),
                        json{{"task", name}, {"field", to_string(f)}});
        }
    }
    const auto n = payload.materials.size();
    if (n > 0 || c.min_materials > 0) {
        if (n < c.min_materials) {
            throw Error(ErrorCode::PayloadMissing,
                        name + " needs at least " + std::to_string(c.min_materials) + " material(s)",
                        json{{"task", name}, {"field", "materials"}});
        }
        if (c.max_materials != 0 && n > c.max_materials) {
            throw Error(ErrorCode::PayloadOverflow,
                        name + " accepts at most " + std::to_string(c.max_materials) + " material(s)",
                        json{{"task", name}, {"field", "materials"}});
        }
    }
}

void block(std::string& out, std::string_view tag, std::string_view content) {
    out += "\n\n<";
    out += tag;
    out += ">\n";
    out += content;
    out += "\n</";
    out += tag;
    out += '>';
}

std::string render_knowledge(const TaskText& text, const PromptPayload& p) {
    std::string out = text.explain;
    if (p.context) {
        std::string inner = "<title>" + p.context->title + "</title>\n<subject>" + p.context->subject +
                            "</subject>\n<background>" + p.context->background + "</background>";
        block(out, "context", inner);
    }
    if (p.context_description) block(out, "context_description", *p.context_description);
    for (const auto& m : p.materials) {
        out += "\n\n<material title=\"" + m.title + "\">\n" + m.body + "\n</material>";
    }
    if (!p.material_titles.empty()) {
        std::string inner;
        for (std::size_t i = 0; i < p.material_titles.size(); ++i) {
            if (i > 0) inner += '\n';
            inner += "- " + p.material_titles[i];
        }
        block(out, "material_titles", inner);
    }
    if (p.analysis) block(out, "analysis", *p.analysis);
    if (!p.analyses.empty()) {
        std::string inner;
        for (std::size_t i = 0; i < p.analyses.size(); ++i) {
            if (i > 0) inner += '\n';
            inner += "<analysis material=\"" + p.analyses[i].material_title + "\">\n" +
                     p.analyses[i].text + "\n</analysis>";
        }
        block(out, "analyses", inner);
    }
    if (!p.memory_notes.empty()) {
        std::string inner;
        for (std::size_t i = 0; i < p.memory_notes.size(); ++i) {
            if (i > 0) inner += '\n';
            inner += "- " + p.memory_notes[i];
        }
        block(out, "memory", inner);
    }
    if (!p.thread.empty()) {
        std::string inner;
        for (std::size_t i = 0; i < p.thread.size(); ++i) {
            if (i > 0) inner += '\n';
            inner += "Q: " + p.thread[i].question + "\nA: " + p.thread[i].answer;
        }
        block(out, "thread", inner);
    }
    if (p.question) block(out, "question", *p.question);
    if (p.course_plan) block(out, "course_plan", *p.course_plan);
    if (p.introduction) block(out, "introduction", *p.introduction);
    if (p.lesson_count) {
        out += "\n\n<lesson_count>" + std::to_string(*p.lesson_count) + "</lesson_count>";
    }
    return out;
}

std::string response_skeleton(Task task, const Catalog& catalog) {
    const std::string fence = "```" + std::string(response_label(task)) + "\n";
    switch (task) {
        case Task::DescribeContext:
            return fence + "<description>\n```";
        case Task::AnswerContextQuestion:
        case Task::AnswerTextQuestion:
            return fence + "<answer>\n```";
        case Task::AnalyzeText:
            return fence +
                   R"({"overall": "<overall analysis>", "links": [{"kind": "sentence|paragraph|viewpoint", "excerpt": "<verbatim text from the material>", "connection": "<how it relates to the context>"}]})" +
                   "\n```";
        case Task::CompareTexts:
            return fence + R"({"similarities": ["<similarity>"], "differences": ["<difference>"]})" + "\n```";
        case Task::ReviewAnalysis:
        case Task::ReviewDescription:
            return fence +
                   R"({"rating": <1-5>, "critique": "<critique and recommendations>", "relevant": true, "accurate": true})" +
                   "\n```";
        case Task::GenerateCoursePlan: {
            std::string tmpl = catalog.course_plan_template;
            if (!tmpl.empty() && tmpl.back() != '\n') tmpl += '\n';
            return fence + tmpl + "```";
        }
        case Task::GenerateIntroduction:
            return fence + "<introduction>\n```";
        case Task::GenerateActivities:
            return fence +
                   R"({"activities": [{"title": "<unique title>", "description": "<what students do>", "kind": "literature|interdisciplinary"}]})" +
                   "\n```";
    }
    return fence + "```";
}

}  // namespace

AgentRole role_for(Task task) {
    switch (task) {
        case Task::DescribeContext:
        case Task::AnswerContextQuestion:
            return AgentRole::ContextAnalyst;
        case Task::AnalyzeText:
        case Task::AnswerTextQuestion:
        case Task::CompareTexts:
            return AgentRole::TextAnalyst;
        case Task::ReviewAnalysis:
        case Task::ReviewDescription:
            return AgentRole::TextReviewer;
        case Task::GenerateCoursePlan:
        case Task::GenerateIntroduction:
        case Task::GenerateActivities:
            return AgentRole::ContextSummarizer;
    }
    return AgentRole::ContextAnalyst;
}

std::string_view response_label(Task task) {
    switch (task) {
        case Task::DescribeContext: return "description";
        case Task::AnswerContextQuestion:
        case Task::AnswerTextQuestion: return "answer";
        case Task::AnalyzeText: return "analysis";
        case Task::CompareTexts: return "comparison";
        case Task::ReviewAnalysis:
        case Task::ReviewDescription: return "review";
        case Task::GenerateCoursePlan: return "plan";
        case Task::GenerateIntroduction: return "introduction";
        case Task::GenerateActivities: return "activities";
    }
    return "answer";
}

std::string_view to_string(PayloadField field) {
    switch (field) {
        case F::Context: return "context";
        case F::ContextDescription: return "context_description";
        case F::Materials: return "materials";
        case F::MaterialTitles: return "material_titles";
        case F::Analysis: return "analysis";
        case F::Analyses: return "analyses";
        case F::Question: return "question";
        case F::Thread: return "thread";
        case F::Memory: return "memory";
        case F::CoursePlan: return "course_plan";
        case F::Introduction: return "introduction";
        case F::LessonCount: return "lesson_count";
    }
    return "context";
}

const PayloadContract& contract_for(Task task) { return contracts().at(task); }

std::string PromptSpec::render(const Catalog& catalog) const {
    const std::array<const std::string*, 6> sections = {&context_section, &objective_section,
                                                        &style_section,   &tone_section,
                                                        &audience_section, &response_section};
    std::string out;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += catalog.headers[i];
        out += '\n';
        out += *sections[i];
    }
    return out;
}

PromptSpec build_prompt(const Catalog& catalog, AgentRole role, Task task, const PromptPayload& payload) {
    if (role_for(task) != role) {
        throw Error(ErrorCode::RoleTaskMismatch,
                    std::string(to_string(role)) + " cannot perform " + std::string(to_string(task)),
                    json{{"role", to_string(role)}, {"task", to_string(task)}});
    }
    check_contract(task, payload);

    const auto& text = catalog.tasks.at(task);
    const auto& role_text = catalog.roles.at(role);

    PromptSpec spec;
    spec.context_section = render_knowledge(text, payload);

    spec.objective_section = text.objective + "\n\n" + catalog.metrics_intro;
    for (const auto& m : catalog.metrics) {
        spec.objective_section += "\n- " + m.name + ": " + m.definition;
    }
    spec.style_section = role_text.style;
    spec.tone_section = catalog.tone;
    spec.audience_section = catalog.audience;
    spec.response_section = text.response + "\n\n" + response_skeleton(task, catalog);
    return spec;
}

std::vector<llm::ChatMessage> compose_messages(const Catalog& catalog, AgentRole role,
                                               const PromptSpec& spec) {
    return {
        {llm::ChatRole::System, catalog.roles.at(role).system},
        {llm::ChatRole::User, spec.render(catalog)},
    };
}

namespace {

std::string substitute(std::string text, std::string_view key, std::string_view value) {
    const std::string needle = "{" + std::string(key) + "}";
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + value.size())) {
        text.replace(pos, needle.size(), value);
    }
    return text;
}

}  // namespace

std::string repair_instruction(const Catalog& catalog, std::string_view reason) {
    return substitute(catalog.repair, "reason", reason);
}

std::string lesson_mismatch_instruction(const Catalog& catalog, int actual, int expected) {
    auto text = substitute(catalog.lesson_mismatch, "actual", std::to_string(actual));
    return substitute(std::move(text), "expected", std::to_string(expected));
}

}  // namespace lessonweave::prompts
