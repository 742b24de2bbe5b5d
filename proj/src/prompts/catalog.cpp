#include "lessonweave/assets.hpp"
#include "lessonweave/error.hpp"
#include "lessonweave/prompts/prompts.hpp"

#include <fstream>
#include <sstream>

namespace lessonweave::prompts {

namespace {

std::string require_asset(const std::string& name) {
    auto data = assets::find(name);
    if (!data) throw Error(ErrorCode::InvalidConfig, "no built-in asset " + name);
    return std::string(*data);
}

std::optional<std::string> read_if_exists(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Catalog load_builtin(std::string_view language) {
    const std::string lang(language);
    if (lang != "en" && lang != "zh") {
        throw Error(ErrorCode::InvalidConfig, "no built-in catalog for language '" + lang + "'");
    }
    return Catalog::from_json(json::parse(require_asset("catalog/" + lang + ".json")),
                              require_asset("templates/course_plan." + lang + ".txt"));
}

}  // namespace

std::string_view to_string(AgentRole role) {
    switch (role) {
        case AgentRole::ContextAnalyst: return "context_analyst";
        case AgentRole::TextAnalyst: return "text_analyst";
        case AgentRole::TextReviewer: return "text_reviewer";
        case AgentRole::ContextSummarizer: return "context_summarizer";
    }
    return "context_analyst";
}

AgentRole agent_role_from_string(std::string_view s) {
    for (auto r : kAllRoles) {
        if (to_string(r) == s) return r;
    }
    throw Error(ErrorCode::BadRequest, "unknown agent role: " + std::string(s));
}

std::string_view to_string(Task task) {
    switch (task) {
        case Task::DescribeContext: return "describe_context";
        case Task::AnswerContextQuestion: return "answer_context_question";
        case Task::AnalyzeText: return "analyze_text";
        case Task::AnswerTextQuestion: return "answer_text_question";
        case Task::CompareTexts: return "compare_texts";
        case Task::ReviewAnalysis: return "review_analysis";
        case Task::ReviewDescription: return "review_description";
        case Task::GenerateCoursePlan: return "generate_course_plan";
        case Task::GenerateIntroduction: return "generate_introduction";
        case Task::GenerateActivities: return "generate_activities";
    }
    return "describe_context";
}

Catalog Catalog::from_json(const json& j, std::string course_plan_template) {
    Catalog c;
    try {
        c.language = j.at("language").get<std::string>();
        const auto& h = j.at("headers");
        c.headers = {h.at("context").get<std::string>(),  h.at("objective").get<std::string>(),
                     h.at("style").get<std::string>(),    h.at("tone").get<std::string>(),
                     h.at("audience").get<std::string>(), h.at("response").get<std::string>()};
        c.metrics_intro = j.at("metrics_intro").get<std::string>();
        for (const auto& m : j.at("metrics")) {
            c.metrics.push_back({m.at("key").get<std::string>(), m.at("name").get<std::string>(),
                                 m.at("definition").get<std::string>()});
        }
        for (auto role : kAllRoles) {
            const auto& r = j.at("roles").at(std::string(to_string(role)));
            c.roles[role] = {r.at("persona").get<std::string>(), r.at("system").get<std::string>(),
                             r.at("style").get<std::string>()};
        }
        c.tone = j.at("tone").get<std::string>();
        c.audience = j.at("audience").get<std::string>();
        for (auto task : kAllTasks) {
            const auto& t = j.at("tasks").at(std::string(to_string(task)));
            c.tasks[task] = {t.at("explain").get<std::string>(), t.at("objective").get<std::string>(),
                             t.at("response").get<std::string>()};
        }
        c.repair = j.at("repair").get<std::string>();
        c.lesson_mismatch = j.at("lesson_mismatch").get<std::string>();
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::InvalidConfig, std::string("prompt catalog: ") + ex.what());
    }
    if (c.metrics.size() != 6) {
        throw Error(ErrorCode::InvalidConfig, "prompt catalog must define exactly six metrics");
    }
    for (const auto& m : c.metrics) {
        if (trim(m.name).empty() || trim(m.definition).empty()) {
            throw Error(ErrorCode::InvalidConfig, "metric " + m.key + " needs a name and definition");
        }
    }
    for (const auto& h : c.headers) {
        if (trim(h).empty()) throw Error(ErrorCode::InvalidConfig, "prompt catalog has an empty header");
    }
    for (const auto& [role, text] : c.roles) {
        if (text.system.find(text.persona) == std::string::npos) {
            throw Error(ErrorCode::InvalidConfig,
                        "system message for " + std::string(to_string(role)) + " must contain its persona");
        }
    }
    c.course_plan_template = std::move(course_plan_template);
    return c;
}

const Catalog& Catalog::builtin(std::string_view language) {
    static const Catalog en = load_builtin("en");
    static const Catalog zh = load_builtin("zh");
    if (language == "en") return en;
    if (language == "zh") return zh;
    throw Error(ErrorCode::InvalidConfig, "no built-in catalog for language '" + std::string(language) + "'");
}

Catalog Catalog::load(const std::filesystem::path& dir, std::string_view language) {
    const std::string lang(language);
    auto catalog_text = read_if_exists(dir / (lang + ".json"));
    auto template_text = read_if_exists(dir / ("course_plan." + lang + ".txt"));
    if (!catalog_text && !template_text) return builtin(language);
    const Catalog* base = (lang == "en" || lang == "zh") ? &builtin(language) : nullptr;
    if (!catalog_text && base == nullptr) {
        throw Error(ErrorCode::InvalidConfig, "no catalog for language '" + lang + "' in " + dir.string());
    }
    std::string tmpl = template_text ? *template_text
                                     : (base ? base->course_plan_template : std::string());
    if (!catalog_text) {
        Catalog copy = *base;
        copy.course_plan_template = std::move(tmpl);
        return copy;
    }
    try {
        return Catalog::from_json(json::parse(*catalog_text), std::move(tmpl));
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::InvalidConfig, std::string("prompt catalog: ") + ex.what());
    }
}

std::string course_plan_template(std::string_view language) {
    return Catalog::builtin(language).course_plan_template;
}

}  // namespace lessonweave::prompts
