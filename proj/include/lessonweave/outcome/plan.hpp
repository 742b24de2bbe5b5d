#pragma once

#include "lessonweave/common.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace lessonweave::outcome {

struct Lesson {
    int number = 0;
    std::string objective;

    bool operator==(const Lesson&) const = default;
};

struct MaterialGroup {
    std::vector<std::string> material_titles;
    std::string theme_note;  // may be empty
    std::vector<Lesson> lessons;

    bool operator==(const MaterialGroup&) const = default;
};

struct Segment {
    std::string title;
    std::vector<MaterialGroup> groups;

    bool operator==(const Segment&) const = default;
};

struct CoursePlan {
    std::vector<Segment> segments;

    int lesson_count() const;
    std::size_t group_count() const;
    // Distinct titles in order of first appearance.
    std::vector<std::string> material_titles() const;

    bool operator==(const CoursePlan&) const = default;
};

void to_json(json& j, const CoursePlan& plan);
void from_json(const json& j, CoursePlan& plan);

// Line grammar shared by the model's response, the txt export and the parser:
//
//   Segment <n>: <segment title>
//   - "<material title>" [+ "<material title>" ...] [(<theme note>)]
//     - Lesson <k>: <objective>
//
// Segments are numbered from 1 and separated by one blank line. Lesson
// numbers run 1..N across the whole plan. Titles may not contain '"'.
std::string render_course_plan(const CoursePlan& plan);

// Inverse of render_course_plan. Also accepts typographic quotes around
// titles, extra blank lines and trailing spaces. Throws Error(MalformedOutput)
// naming the first offending line.
CoursePlan parse_course_plan(std::string_view text);

// Structural checks shared by the parser and the generators: at least one
// segment, every segment has a group, every group has a title and a lesson,
// lessons numbered 1..N. Returns an empty string when valid.
std::string validate_course_plan(const CoursePlan& plan);

}  // namespace lessonweave::outcome
