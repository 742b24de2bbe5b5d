#pragma once

#include "lessonweave/agents/agents.hpp"
#include "lessonweave/outcome/plan.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lessonweave::outcome {

enum class ActivityKind { Literature, Interdisciplinary };

std::string_view to_string(ActivityKind kind);
ActivityKind activity_kind_from_string(std::string_view s);

struct Activity {
    std::string title;
    std::string description;
    ActivityKind kind = ActivityKind::Literature;

    bool operator==(const Activity&) const = default;
};

void to_json(json& j, const Activity& a);
void from_json(const json& j, Activity& a);

// Course plan, introduction and activities for one starred context.
struct OutcomeBundle {
    std::string context_title;
    std::optional<CoursePlan> plan;
    std::optional<std::string> introduction;
    std::vector<Activity> activities;
    std::vector<std::string> plan_warnings;
    std::vector<std::string> introduction_warnings;
    std::vector<std::string> activity_warnings;

    bool operator==(const OutcomeBundle&) const = default;
};

void to_json(json& j, const OutcomeBundle& b);
void from_json(const json& j, OutcomeBundle& b);

struct PlanRequest {
    corpus::ContextEntry context;
    std::optional<std::string> description;
    std::vector<prompts::AnalysisBrief> starred;  // title + analysis text per starred text
    int expected_lesson_count = 0;
};

struct PlanResult {
    CoursePlan plan;
    std::vector<std::string> warnings;
};

// Parses a plan reply and checks it only names `allowed` titles.
CoursePlan parse_plan_reply(std::string_view reply, const std::vector<std::string>& allowed);

// Context Summarizer. Unparseable or off-collection plans get one repair
// turn; a lesson-count mismatch gets one correction turn and then stands,
// with a warning.
PlanResult generate_course_plan(const agents::Workbench& wb, const PlanRequest& request);

struct IntroductionResult {
    std::string text;
    std::vector<std::string> warnings;
};

IntroductionResult generate_introduction(const agents::Workbench& wb, const corpus::ContextEntry& context,
                                         const CoursePlan& plan);

struct ActivitiesResult {
    std::vector<Activity> activities;
    std::vector<std::string> warnings;
};

// Duplicate titles are renamed "<title> (2)", "<title> (3)", ... with a warning.
ActivitiesResult parse_activities(std::string_view reply);

ActivitiesResult generate_activities(const agents::Workbench& wb, const CoursePlan& plan,
                                     const std::string& introduction);

// Removes the activity titled `title`. Throws UnknownActivity.
void delete_activity(std::vector<Activity>& activities, std::string_view title);

// Plain text, LF endings:
//
//   Context: <title>
//
//   == Introduction ==
//   <introduction>
//
//   == Course Plan ==
//   <plan in the plan grammar>
//
//   == Activities ==
//   [literature] <title>
//     <description line>
//
// Sections without content are left out. Throws NothingToExport without a plan.
std::string export_txt(const OutcomeBundle& bundle);

// Inverse of export_txt for the exported parts (warnings are not exported).
OutcomeBundle parse_export_txt(std::string_view text);

// Standalone XHTML document with embedded styles and no scripts.
std::string export_html(const OutcomeBundle& bundle);

std::string escape_html(std::string_view text);

}  // namespace lessonweave::outcome
