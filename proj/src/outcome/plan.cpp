#include "lessonweave/outcome/plan.hpp"

#include "lessonweave/error.hpp"

#include <charconv>
#include <set>

namespace lessonweave::outcome {

namespace {

constexpr std::string_view kSegmentKeyword = "Segment ";
constexpr std::string_view kLessonKeyword = "- Lesson ";
constexpr std::string_view kOpenCurly = "\xE2\x80\x9C";   // U+201C
constexpr std::string_view kCloseCurly = "\xE2\x80\x9D";  // U+201D

[[noreturn]] void fail(std::size_t lineno, const std::string& why) {
    throw Error(ErrorCode::MalformedOutput,
                "course plan line " + std::to_string(lineno) + ": " + why,
                json{{"line", lineno}, {"reason", why}});
}

std::string rtrim(std::string_view s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

// Parses "<digits>:" at the start of `s`; returns the number and the text after the colon.
bool numbered(std::string_view s, int& number, std::string_view& rest) {
    const auto colon = s.find(':');
    if (colon == std::string_view::npos || colon == 0) return false;
    const auto digits = s.substr(0, colon);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), number);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) return false;
    rest = s.substr(colon + 1);
    return true;
}

MaterialGroup parse_group(std::string_view s, std::size_t lineno) {
    MaterialGroup group;
    while (true) {
        std::string_view close;
        if (starts_with(s, "\"")) {
            s.remove_prefix(1);
            close = "\"";
        } else if (starts_with(s, kOpenCurly)) {
            s.remove_prefix(kOpenCurly.size());
            close = kCloseCurly;
        } else {
            fail(lineno, "expected a quoted material title");
        }
        const auto end = s.find(close);
        if (end == std::string_view::npos) fail(lineno, "unterminated material title");
        auto title = trim(s.substr(0, end));
        if (title.empty()) fail(lineno, "empty material title");
        group.material_titles.push_back(std::move(title));
        s.remove_prefix(end + close.size());
        if (starts_with(s, " + ")) {
            s.remove_prefix(3);
            continue;
        }
        break;
    }
    const auto rest = trim(s);
    if (rest.empty()) return group;
    if (rest.front() != '(' || rest.back() != ')') fail(lineno, "theme note must be in parentheses");
    group.theme_note = trim(std::string_view(rest).substr(1, rest.size() - 2));
    if (group.theme_note.empty()) fail(lineno, "empty theme note");
    return group;
}

}  // namespace

int CoursePlan::lesson_count() const {
    int n = 0;
    for (const auto& s : segments) {
        for (const auto& g : s.groups) n += static_cast<int>(g.lessons.size());
    }
    return n;
}

std::size_t CoursePlan::group_count() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.groups.size();
    return n;
}

std::vector<std::string> CoursePlan::material_titles() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& s : segments) {
        for (const auto& g : s.groups) {
            for (const auto& t : g.material_titles) {
                if (seen.insert(t).second) out.push_back(t);
            }
        }
    }
    return out;
}

void to_json(json& j, const CoursePlan& plan) {
    j = json::array();
    for (const auto& s : plan.segments) {
        json groups = json::array();
        for (const auto& g : s.groups) {
            json lessons = json::array();
            for (const auto& l : g.lessons) lessons.push_back({{"number", l.number}, {"objective", l.objective}});
            groups.push_back({{"material_titles", g.material_titles},
                              {"theme_note", g.theme_note},
                              {"lessons", lessons}});
        }
        j.push_back({{"title", s.title}, {"groups", groups}});
    }
    j = json{{"segments", j}};
}

void from_json(const json& j, CoursePlan& plan) {
    plan.segments.clear();
    for (const auto& sj : j.at("segments")) {
        Segment s;
        s.title = sj.at("title").get<std::string>();
        for (const auto& gj : sj.at("groups")) {
            MaterialGroup g;
            g.material_titles = gj.at("material_titles").get<std::vector<std::string>>();
            g.theme_note = gj.value("theme_note", std::string());
            for (const auto& lj : gj.at("lessons")) {
                g.lessons.push_back({lj.at("number").get<int>(), lj.at("objective").get<std::string>()});
            }
            s.groups.push_back(std::move(g));
        }
        plan.segments.push_back(std::move(s));
    }
}

std::string render_course_plan(const CoursePlan& plan) {
    std::string out;
    for (std::size_t si = 0; si < plan.segments.size(); ++si) {
        const auto& seg = plan.segments[si];
        if (si > 0) out += '\n';
        out += "Segment " + std::to_string(si + 1) + ": " + seg.title + "\n";
        for (const auto& g : seg.groups) {
            out += "- ";
            for (std::size_t ti = 0; ti < g.material_titles.size(); ++ti) {
                if (ti > 0) out += " + ";
                out += '"' + g.material_titles[ti] + '"';
            }
            if (!g.theme_note.empty()) out += " (" + g.theme_note + ")";
            out += '\n';
            for (const auto& l : g.lessons) {
                out += "  - Lesson " + std::to_string(l.number) + ": " + l.objective + "\n";
            }
        }
    }
    return out;
}

CoursePlan parse_course_plan(std::string_view text) {
    CoursePlan plan;
    int next_lesson = 1;
    std::size_t lineno = 0;
    for (const auto& raw : split_lines(text)) {
        ++lineno;
        const auto line = rtrim(raw);
        if (trim(line).empty()) continue;
        std::string_view view(line);

        if (starts_with(view, kSegmentKeyword)) {
            int number = 0;
            std::string_view rest;
            if (!numbered(view.substr(kSegmentKeyword.size()), number, rest)) {
                fail(lineno, "segment header needs 'Segment <n>: <title>'");
            }
            if (number != static_cast<int>(plan.segments.size()) + 1) {
                fail(lineno, "segment numbered " + std::to_string(number) + ", expected " +
                                 std::to_string(plan.segments.size() + 1));
            }
            Segment seg;
            seg.title = trim(rest);
            if (seg.title.empty()) fail(lineno, "empty segment title");
            plan.segments.push_back(std::move(seg));
            continue;
        }

        if (starts_with(view, "- ")) {
            if (plan.segments.empty()) fail(lineno, "material group before any segment");
            plan.segments.back().groups.push_back(parse_group(view.substr(2), lineno));
            continue;
        }

        const auto indented = trim(view);
        if ((view.front() == ' ' || view.front() == '\t') && starts_with(indented, kLessonKeyword)) {
            if (plan.segments.empty() || plan.segments.back().groups.empty()) {
                fail(lineno, "lesson before any material group");
            }
            int number = 0;
            std::string_view rest;
            if (!numbered(std::string_view(indented).substr(kLessonKeyword.size()), number, rest)) {
                fail(lineno, "lesson line needs 'Lesson <k>: <objective>'");
            }
            if (number != next_lesson) {
                fail(lineno, "lesson numbered " + std::to_string(number) + ", expected " +
                                 std::to_string(next_lesson));
            }
            ++next_lesson;
            Lesson lesson{number, trim(rest)};
            if (lesson.objective.empty()) fail(lineno, "empty lesson objective");
            plan.segments.back().groups.back().lessons.push_back(std::move(lesson));
            continue;
        }

        fail(lineno, "unrecognized line '" + line + "'");
    }

    if (auto why = validate_course_plan(plan); !why.empty()) {
        throw Error(ErrorCode::MalformedOutput, "course plan: " + why, json{{"reason", why}});
    }
    return plan;
}

std::string validate_course_plan(const CoursePlan& plan) {
    if (plan.segments.empty()) return "plan has no segments";
    int expected = 1;
    for (std::size_t si = 0; si < plan.segments.size(); ++si) {
        const auto& seg = plan.segments[si];
        const auto where = "segment " + std::to_string(si + 1);
        if (trim(seg.title).empty()) return where + " has no title";
        if (seg.groups.empty()) return where + " has no material group";
        for (const auto& g : seg.groups) {
            if (g.material_titles.empty()) return where + " has a group without titles";
            if (g.lessons.empty()) return where + " has a group without lessons";
            for (const auto& l : g.lessons) {
                if (l.number != expected) {
                    return "lesson numbered " + std::to_string(l.number) + ", expected " +
                           std::to_string(expected);
                }
                ++expected;
            }
        }
    }
    return {};
}

}  // namespace lessonweave::outcome
