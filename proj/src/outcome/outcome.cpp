#include "lessonweave/outcome/outcome.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace lessonweave::outcome {

namespace {

using prompts::Task;

[[noreturn]] void malformed(const std::string& reason) {
    throw Error(ErrorCode::MalformedOutput, reason, json{{"reason", reason}});
}

constexpr std::string_view kIntroHeader = "== Introduction ==";
constexpr std::string_view kPlanHeader = "== Course Plan ==";
constexpr std::string_view kActivitiesHeader = "== Activities ==";
constexpr std::string_view kContextPrefix = "Context: ";

std::string mismatch_warning(int actual, int expected) {
    return "the plan has " + std::to_string(actual) + " lessons but " + std::to_string(expected) +
           " were expected";
}

}  // namespace

std::string_view to_string(ActivityKind kind) {
    return kind == ActivityKind::Literature ? "literature" : "interdisciplinary";
}

ActivityKind activity_kind_from_string(std::string_view s) {
    if (s == "literature") return ActivityKind::Literature;
    if (s == "interdisciplinary") return ActivityKind::Interdisciplinary;
    throw Error(ErrorCode::MalformedOutput, "activity kind must be literature or interdisciplinary",
                json{{"kind", s}});
}

void to_json(json& j, const Activity& a) {
    j = {{"title", a.title}, {"description", a.description}, {"kind", to_string(a.kind)}};
}

void from_json(const json& j, Activity& a) {
    j.at("title").get_to(a.title);
    j.at("description").get_to(a.description);
    a.kind = activity_kind_from_string(j.at("kind").get<std::string>());
}

void to_json(json& j, const OutcomeBundle& b) {
    j = {{"context_title", b.context_title},
         {"plan", b.plan ? json(*b.plan) : json(nullptr)},
         {"plan_text", b.plan ? json(render_course_plan(*b.plan)) : json(nullptr)},
         {"introduction", b.introduction ? json(*b.introduction) : json(nullptr)},
         {"activities", b.activities},
         {"plan_warnings", b.plan_warnings},
         {"introduction_warnings", b.introduction_warnings},
         {"activity_warnings", b.activity_warnings}};
}

void from_json(const json& j, OutcomeBundle& b) {
    j.at("context_title").get_to(b.context_title);
    b.plan.reset();
    if (!j.at("plan").is_null()) b.plan = j.at("plan").get<CoursePlan>();
    b.introduction.reset();
    if (!j.at("introduction").is_null()) b.introduction = j.at("introduction").get<std::string>();
    j.at("activities").get_to(b.activities);
    j.at("plan_warnings").get_to(b.plan_warnings);
    j.at("introduction_warnings").get_to(b.introduction_warnings);
    j.at("activity_warnings").get_to(b.activity_warnings);
}

CoursePlan parse_plan_reply(std::string_view reply, const std::vector<std::string>& allowed) {
    auto plan = parse_course_plan(agents::extract_block(reply, "plan"));
    if (auto why = validate_course_plan(plan); !why.empty()) malformed(why);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    std::vector<std::string> unknown;
    for (const auto& t : plan.material_titles()) {
        if (!ok.contains(t)) unknown.push_back("\"" + t + "\"");
    }
    if (!unknown.empty()) {
        std::string list;
        for (std::size_t i = 0; i < unknown.size(); ++i) list += (i ? ", " : "") + unknown[i];
        malformed("the plan names texts that are not starred: " + list);
    }
    return plan;
}

PlanResult generate_course_plan(const agents::Workbench& wb, const PlanRequest& request) {
    if (request.starred.empty()) {
        throw Error(ErrorCode::EmptyCollectionEntry, "the context has no starred texts");
    }
    if (request.expected_lesson_count < 1) {
        throw Error(ErrorCode::InvalidLessonCount, "expected lesson count must be at least 1");
    }
    std::vector<std::string> titles;
    for (const auto& s : request.starred) titles.push_back(s.material_title);

    prompts::PromptPayload payload;
    payload.context = agents::brief(request.context);
    payload.context_description = request.description;
    payload.analyses = request.starred;
    payload.lesson_count = request.expected_lesson_count;

    auto parse = [&](std::string_view r) { return parse_plan_reply(r, titles); };

    agents::Exchange ex(wb, Task::GenerateCoursePlan, payload);
    PlanResult result;
    {
        const auto reply = ex.send();
        std::optional<CoursePlan> first;
        try {
            first = parse(reply);
        } catch (const Error& err) {
            if (err.code() != ErrorCode::MalformedOutput) throw;
            ex.follow_up(prompts::repair_instruction(wb.catalog, err.what()));
        }
        result.plan = first ? std::move(*first) : parse(ex.send());
    }

    const int expected = request.expected_lesson_count;
    if (result.plan.lesson_count() != expected) {
        ex.follow_up(prompts::lesson_mismatch_instruction(wb.catalog, result.plan.lesson_count(), expected));
        try {
            result.plan = parse(ex.send());
        } catch (const Error& err) {
            if (err.code() != ErrorCode::MalformedOutput) throw;
        }
        if (result.plan.lesson_count() != expected) {
            result.warnings.push_back(mismatch_warning(result.plan.lesson_count(), expected));
        }
    }

    if (titles.size() < 3) {
        result.warnings.push_back("only " + std::to_string(titles.size()) +
                                  " starred text(s); at least 3 are recommended");
    }
    const auto used = result.plan.material_titles();
    for (const auto& t : titles) {
        if (std::find(used.begin(), used.end(), t) == used.end()) {
            result.warnings.push_back("starred text \"" + t + "\" does not appear in the plan");
        }
    }
    return result;
}

IntroductionResult generate_introduction(const agents::Workbench& wb, const corpus::ContextEntry& context,
                                         const CoursePlan& plan) {
    prompts::PromptPayload payload;
    payload.context = agents::brief(context);
    payload.course_plan = render_course_plan(plan);
    IntroductionResult out;
    out.text = agents::call_with_repair(wb, Task::GenerateIntroduction, payload,
                                        [](std::string_view r) { return agents::parse_prose(r, "introduction"); });
    if (out.text.find(context.title) == std::string::npos) {
        out.warnings.push_back("the introduction does not mention \"" + context.title + "\"");
    }
    return out;
}

ActivitiesResult parse_activities(std::string_view reply) {
    json j;
    try {
        j = json::parse(agents::extract_block(reply, "activities"));
    } catch (const json::exception&) {
        malformed("the activities block is not valid JSON");
    }
    if (!j.is_object() || !j.contains("activities") || !j["activities"].is_array()) {
        malformed("expected an object with an \"activities\" list");
    }
    ActivitiesResult out;
    std::map<std::string, int> seen;
    for (const auto& item : j["activities"]) {
        if (!item.is_object()) malformed("every activity must be an object");
        Activity a;
        for (const char* key : {"title", "description", "kind"}) {
            if (!item.contains(key) || !item[key].is_string() || trim(item[key].get<std::string>()).empty()) {
                malformed(std::string("every activity needs a non-empty \"") + key + "\"");
            }
        }
        a.title = trim(item["title"].get<std::string>());
        a.description = trim(item["description"].get<std::string>());
        try {
            a.kind = activity_kind_from_string(item["kind"].get<std::string>());
        } catch (const Error& ex) {
            malformed(ex.what());
        }
        const int n = ++seen[a.title];
        if (n > 1) {
            auto renamed = a.title + " (" + std::to_string(n) + ")";
            while (seen.contains(renamed)) renamed = a.title + " (" + std::to_string(++seen[a.title]) + ")";
            out.warnings.push_back("duplicate activity title \"" + a.title + "\" renamed to \"" + renamed + "\"");
            a.title = renamed;
            seen[renamed] = 1;
        }
        out.activities.push_back(std::move(a));
    }
    if (out.activities.empty()) malformed("the activity list is empty");
    return out;
}

ActivitiesResult generate_activities(const agents::Workbench& wb, const CoursePlan& plan,
                                     const std::string& introduction) {
    prompts::PromptPayload payload;
    payload.course_plan = render_course_plan(plan);
    payload.introduction = introduction;
    return agents::call_with_repair(wb, Task::GenerateActivities, payload, parse_activities);
}

void delete_activity(std::vector<Activity>& activities, std::string_view title) {
    auto it = std::find_if(activities.begin(), activities.end(), [&](const Activity& a) { return a.title == title; });
    if (it == activities.end()) {
        throw Error(ErrorCode::UnknownActivity, "no activity titled \"" + std::string(title) + "\"",
                    json{{"title", title}});
    }
    activities.erase(it);
}

std::string export_txt(const OutcomeBundle& bundle) {
    if (!bundle.plan) throw Error(ErrorCode::NothingToExport, "no course plan has been generated");
    std::string out;
    out += std::string(kContextPrefix) + bundle.context_title + "\n";
    if (bundle.introduction) {
        out += "\n" + std::string(kIntroHeader) + "\n" + *bundle.introduction + "\n";
    }
    out += "\n" + std::string(kPlanHeader) + "\n" + render_course_plan(*bundle.plan);
    if (out.back() != '\n') out += '\n';
    if (!bundle.activities.empty()) {
        out += "\n" + std::string(kActivitiesHeader) + "\n";
        for (std::size_t i = 0; i < bundle.activities.size(); ++i) {
            const auto& a = bundle.activities[i];
            if (i > 0) out += '\n';
            out += "[" + std::string(to_string(a.kind)) + "] " + a.title + "\n";
            for (const auto& line : split_lines(a.description)) out += "  " + line + "\n";
        }
    }
    return out;
}

OutcomeBundle parse_export_txt(std::string_view text) {
    const auto lines = split_lines(text);
    OutcomeBundle b;
    std::size_t i = 0;
    if (lines.empty() || !starts_with(lines[0], kContextPrefix)) {
        throw Error(ErrorCode::MalformedOutput, "export must start with \"Context: \"");
    }
    b.context_title = lines[0].substr(kContextPrefix.size());
    ++i;

    std::map<std::string, std::vector<std::string>> sections;
    std::string current;
    for (; i < lines.size(); ++i) {
        const auto& l = lines[i];
        if (l == kIntroHeader || l == kPlanHeader || l == kActivitiesHeader) {
            current = l;
            sections[current];
            continue;
        }
        if (current.empty()) {
            if (!trim(l).empty()) throw Error(ErrorCode::MalformedOutput, "text before the first section");
            continue;
        }
        sections[current].push_back(l);
    }
    auto joined = [](std::vector<std::string> ls) {
        while (!ls.empty() && ls.back().empty()) ls.pop_back();
        std::string s;
        for (std::size_t k = 0; k < ls.size(); ++k) s += (k ? "\n" : "") + ls[k];
        return s;
    };
    if (auto it = sections.find(std::string(kIntroHeader)); it != sections.end()) {
        b.introduction = joined(it->second);
    }
    auto plan_it = sections.find(std::string(kPlanHeader));
    if (plan_it == sections.end()) throw Error(ErrorCode::MalformedOutput, "export has no course plan");
    b.plan = parse_course_plan(joined(plan_it->second));
    if (auto it = sections.find(std::string(kActivitiesHeader)); it != sections.end()) {
        bool fresh = false;
        for (const auto& l : it->second) {
            if (starts_with(l, "[")) {
                const auto close = l.find("] ");
                if (close == std::string::npos) throw Error(ErrorCode::MalformedOutput, "bad activity line: " + l);
                Activity a;
                a.kind = activity_kind_from_string(l.substr(1, close - 1));
                a.title = l.substr(close + 2);
                b.activities.push_back(std::move(a));
                fresh = true;
            } else if (starts_with(l, "  ")) {
                if (b.activities.empty()) throw Error(ErrorCode::MalformedOutput, "description without activity");
                auto& d = b.activities.back().description;
                if (!fresh) d += "\n";
                d += l.substr(2);
                fresh = false;
            }
        }
    }
    return b;
}

std::string escape_html(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default: out += c;
        }
    }
    return out;
}

namespace {

constexpr std::string_view kStyle = R"(body { font-family: Georgia, "Times New Roman", serif; max-width: 46em; margin: 2em auto; padding: 0 1em; line-height: 1.5; color: #222; }
h1 { font-size: 1.6em; border-bottom: 1px solid #999; padding-bottom: .2em; }
h2 { font-size: 1.3em; margin-top: 1.6em; }
h3 { font-size: 1.1em; }
.group { margin: 0 0 1em 1em; }
.materials { font-weight: bold; margin: .4em 0; }
.note { font-weight: normal; font-style: italic; }
ol.lessons { list-style: none; padding-left: 1em; }
.kind { color: #555; font-size: .9em; }
@media print { body { margin: 0; max-width: none; } }
)";

void paragraphs(std::string& out, std::string_view text) {
    std::string para;
    auto flush = [&] {
        if (!para.empty()) out += "<p>" + para + "</p>\n";
        para.clear();
    };
    for (const auto& line : split_lines(text)) {
        if (trim(line).empty()) {
            flush();
            continue;
        }
        if (!para.empty()) para += "<br/>";
        para += escape_html(line);
    }
    flush();
}

}  // namespace

std::string export_html(const OutcomeBundle& bundle) {
    if (!bundle.plan) throw Error(ErrorCode::NothingToExport, "no course plan has been generated");
    const auto title = escape_html(bundle.context_title);
    std::string out;
    out += "<!DOCTYPE html>\n<html xmlns=\"http://www.w3.org/1999/xhtml\">\n<head>\n";
    out += "<meta charset=\"utf-8\"/>\n<title>" + title + "</title>\n";
    out += "<style>\n" + std::string(kStyle) + "</style>\n</head>\n<body>\n";
    out += "<h1>" + title + "</h1>\n";
    if (bundle.introduction) {
        out += "<section class=\"introduction\">\n<h2>Introduction</h2>\n";
        paragraphs(out, *bundle.introduction);
        out += "</section>\n";
    }
    out += "<section class=\"plan\">\n<h2>Course Plan</h2>\n";
    for (std::size_t s = 0; s < bundle.plan->segments.size(); ++s) {
        const auto& seg = bundle.plan->segments[s];
        out += "<section class=\"segment\">\n<h3>Segment " + std::to_string(s + 1) + ": " + escape_html(seg.title) +
               "</h3>\n";
        for (const auto& g : seg.groups) {
            out += "<div class=\"group\">\n<p class=\"materials\">";
            for (std::size_t t = 0; t < g.material_titles.size(); ++t) {
                if (t > 0) out += " + ";
                out += "\xE2\x80\x9C" + escape_html(g.material_titles[t]) + "\xE2\x80\x9D";
            }
            if (!g.theme_note.empty()) out += " <span class=\"note\">(" + escape_html(g.theme_note) + ")</span>";
            out += "</p>\n<ol class=\"lessons\">\n";
            for (const auto& l : g.lessons) {
                out += "<li value=\"" + std::to_string(l.number) + "\"><span class=\"num\">Lesson " +
                       std::to_string(l.number) + ":</span> <span class=\"objective\">" + escape_html(l.objective) +
                       "</span></li>\n";
            }
            out += "</ol>\n</div>\n";
        }
        out += "</section>\n";
    }
    out += "</section>\n";
    if (!bundle.activities.empty()) {
        out += "<section class=\"activities\">\n<h2>Activities</h2>\n<ul>\n";
        for (const auto& a : bundle.activities) {
            out += "<li><strong>" + escape_html(a.title) + "</strong> <span class=\"kind\">(" +
                   std::string(to_string(a.kind)) + ")</span>\n";
            paragraphs(out, a.description);
            out += "</li>\n";
        }
        out += "</ul>\n</section>\n";
    }
    out += "</body>\n</html>\n";
    return out;
}

}  // namespace lessonweave::outcome
