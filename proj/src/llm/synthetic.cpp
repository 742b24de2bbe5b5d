#include "lessonweave/error.hpp"
#include "lessonweave/llm/providers.hpp"

#include <algorithm>

namespace lessonweave::llm {

namespace {

// Tagged blocks start a line; the same tag names also occur inside prose.
std::size_t find_block(std::string_view text, std::string_view open, std::size_t from = 0) {
    for (auto a = text.find(open, from); a != std::string_view::npos; a = text.find(open, a + 1)) {
        if (a == 0 || text[a - 1] == '\n') return a;
    }
    return std::string_view::npos;
}

std::optional<std::string> between(std::string_view text, std::string_view open, std::string_view close,
                                   std::size_t from = 0) {
    auto a = find_block(text, open, from);
    if (a == std::string_view::npos) return std::nullopt;
    a += open.size();
    auto b = text.find(close, a);
    if (b == std::string_view::npos) return std::nullopt;
    return trim(text.substr(a, b - a));
}

struct Titled {
    std::string title;
    std::string body;
};

// <tag title="T">body</tag> or <tag material="T">body</tag>, in order.
std::vector<Titled> titled_blocks(std::string_view text, std::string_view tag, std::string_view attr) {
    std::vector<Titled> out;
    const std::string open = "<" + std::string(tag) + " " + std::string(attr) + "=\"";
    const std::string close = "</" + std::string(tag) + ">";
    std::size_t pos = 0;
    while ((pos = text.find(open, pos)) != std::string_view::npos) {
        auto title_start = pos + open.size();
        auto title_end = text.find("\">", title_start);
        if (title_end == std::string_view::npos) break;
        auto body_end = text.find(close, title_end);
        if (body_end == std::string_view::npos) break;
        out.push_back({std::string(text.substr(title_start, title_end - title_start)),
                       trim(text.substr(title_end + 2, body_end - title_end - 2))});
        pos = body_end + close.size();
    }
    return out;
}

// Sentences of `body`, each a verbatim substring.
std::vector<std::string> sentences(std::string_view body) {
    std::vector<std::string> out;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        auto s = trim(body.substr(start, end - start));
        if (!s.empty()) out.push_back(std::move(s));
        start = end;
    };
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            flush(i + 1);
        } else if (body.compare(i, 3, "\xE3\x80\x82") == 0 || body.compare(i, 3, "\xEF\xBC\x81") == 0 ||
                   body.compare(i, 3, "\xEF\xBC\x9F") == 0) {
            flush(i + 3);
            i += 2;
        }
    }
    flush(body.size());
    return out;
}

std::string fenced(std::string_view label, std::string_view content) {
    return "```" + std::string(label) + "\n" + std::string(content) + "\n```";
}

struct Prompt {
    std::string label;
    std::string context_title;
    std::string subject;
    std::vector<Titled> materials;
    std::vector<Titled> analyses;
    std::vector<std::string> material_titles;
    std::optional<std::string> question;
    std::optional<std::string> analysis;
    std::optional<std::string> course_plan;
    int lesson_count = 0;
};

Prompt read_prompt(std::string_view text) {
    Prompt p;
    auto response_at = text.rfind("```");
    // The skeleton is the last fenced block; its opening fence carries the label.
    auto open = text.rfind("```", response_at == 0 ? 0 : response_at - 1);
    if (open == std::string_view::npos || open == response_at) {
        throw Error(ErrorCode::InvalidMessages, "synthetic provider: prompt has no response skeleton");
    }
    auto eol = text.find('\n', open);
    p.label = std::string(text.substr(open + 3, eol - open - 3));

    auto knowledge = text.substr(0, open);
    if (auto ctx = between(knowledge, "<context>", "</context>")) {
        p.context_title = between(*ctx, "<title>", "</title>").value_or("");
        p.subject = between(*ctx, "<subject>", "</subject>").value_or("");
    }
    p.materials = titled_blocks(knowledge, "material", "title");
    if (auto a = find_block(knowledge, "<analyses>"); a != std::string_view::npos) {
        auto b = knowledge.rfind("</analyses>");
        if (b != std::string_view::npos && b > a) {
            p.analyses = titled_blocks(knowledge.substr(a, b - a), "analysis", "material");
        }
    }
    if (auto titles = between(knowledge, "<material_titles>", "</material_titles>")) {
        for (auto& line : split_lines(*titles)) {
            auto t = trim(line);
            if (starts_with(t, "- ")) t = t.substr(2);
            if (!t.empty()) p.material_titles.push_back(t);
        }
    }
    p.question = between(knowledge, "<question>", "</question>");
    if (p.analyses.empty()) p.analysis = between(knowledge, "<analysis>", "</analysis>");
    p.course_plan = between(knowledge, "<course_plan>", "</course_plan>");
    if (auto n = between(knowledge, "<lesson_count>", "</lesson_count>")) {
        try {
            p.lesson_count = std::stoi(*n);
        } catch (const std::exception&) {
            p.lesson_count = 0;
        }
    }
    return p;
}

std::string join_titles(const std::vector<std::string>& titles) {
    std::string out;
    for (std::size_t i = 0; i < titles.size(); ++i) {
        if (i > 0) out += i + 1 == titles.size() ? " and " : ", ";
        out += "\"" + titles[i] + "\"";
    }
    return out;
}

std::string describe(const Prompt& p) {
    std::vector<std::string> titles;
    for (const auto& m : p.materials) titles.push_back(m.title);
    std::string out = "\"" + p.context_title + "\" offers a " + p.subject +
                      " lens on " + join_titles(titles) + ".";
    for (const auto& m : p.materials) {
        auto s = sentences(m.body);
        out += "\nIn \"" + m.title + "\", the line \"" + (s.empty() ? m.body : s.front()) +
               "\" opens a way into the theme.";
    }
    return out;
}

std::string answer(const Prompt& p) {
    std::string out = "On the question \"" + p.question.value_or("") + "\": ";
    if (!p.materials.empty()) {
        auto s = sentences(p.materials.front().body);
        out += "\"" + p.materials.front().title + "\" answers it most directly, for example \"" +
               (s.empty() ? p.materials.front().body : s.front()) + "\".";
    } else {
        out += "the context \"" + p.context_title + "\" links to the readings through shared imagery and feeling.";
    }
    return out;
}

std::string analyze(const Prompt& p) {
    const auto& m = p.materials.at(0);
    auto s = sentences(m.body);
    json links = json::array();
    static constexpr const char* kinds[] = {"sentence", "paragraph", "viewpoint"};
    for (std::size_t i = 0; i < std::min<std::size_t>(3, s.size()); ++i) {
        links.push_back({{"kind", kinds[i]},
                         {"excerpt", s[i]},
                         {"connection", "This points to \"" + p.context_title + "\"."}});
    }
    json out = {{"overall", "\"" + m.title + "\" relates to \"" + p.context_title + "\" through its imagery."},
                {"links", links}};
    return out.dump();
}

std::string compare(const Prompt& p) {
    std::vector<std::string> titles;
    for (const auto& m : p.materials) titles.push_back(m.title);
    std::sort(titles.begin(), titles.end());
    json out = {{"similarities", {"Both " + join_titles(titles) + " can be read through \"" + p.context_title + "\"."}},
                {"differences", {"\"" + titles.at(0) + "\" and \"" + titles.at(1) + "\" differ in form and voice."}}};
    return out.dump();
}

std::string review(const Prompt& p) {
    const auto subject = p.analysis.value_or("");
    const int rating = 3 + static_cast<int>(fnv1a64(subject) % 3);
    json out = {{"rating", rating},
                {"critique", "The analysis stays close to the text. Tie each link more explicitly to \"" +
                                 p.context_title + "\"."},
                {"relevant", true},
                {"accurate", true}};
    return out.dump();
}

std::string plan(const Prompt& p) {
    std::vector<std::string> titles;
    for (const auto& a : p.analyses) titles.push_back(a.title);
    if (titles.empty()) titles.push_back(p.context_title);
    const int n = std::max(1, p.lesson_count);
    const std::size_t groups = std::min<std::size_t>(titles.size(), static_cast<std::size_t>(n));
    const std::size_t segs = std::min<std::size_t>(3, groups);

    static constexpr const char* seg_names[] = {"First Encounter", "Going Deeper", "Looking Outward"};
    std::string out;
    int lesson = 1;
    std::size_t title_i = 0;
    std::size_t group_i = 0;
    for (std::size_t s = 0; s < segs; ++s) {
        if (s > 0) out += "\n";
        out += "Segment " + std::to_string(s + 1) + ": " + seg_names[s] + " with " + p.context_title + "\n";
        const std::size_t seg_groups = groups / segs + (s < groups % segs ? 1 : 0);
        for (std::size_t g = 0; g < seg_groups; ++g, ++group_i) {
            const std::size_t take = titles.size() / groups + (group_i < titles.size() % groups ? 1 : 0);
            out += "-";
            for (std::size_t t = 0; t < take; ++t, ++title_i) {
                out += (t > 0 ? " + \"" : " \"") + titles[title_i] + "\"";
            }
            out += " (reading through " + p.context_title + ")\n";
            const int lessons = n / static_cast<int>(groups) + (static_cast<int>(group_i) < n % static_cast<int>(groups) ? 1 : 0);
            for (int l = 0; l < lessons; ++l, ++lesson) {
                out += "  - Lesson " + std::to_string(lesson) + ": Read closely and connect the text to " +
                       p.context_title + " (part " + std::to_string(l + 1) + ").\n";
            }
        }
    }
    if (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

std::string introduce(const Prompt& p) {
    return "Welcome to \"" + p.context_title +
           "\". Over the coming lessons we read each text with this theme in mind and carry what we notice into "
           "our own writing.";
}

std::string activities(const Prompt& p) {
    json list = json::array();
    std::vector<std::string> titles;
    if (p.course_plan) {
        for (const auto& line : split_lines(*p.course_plan)) {
            auto t = trim(line);
            if (starts_with(t, "- \"")) {
                auto end = t.find('"', 3);
                if (end != std::string::npos) titles.push_back(t.substr(3, end - 3));
            }
        }
    }
    for (const auto& t : titles) {
        list.push_back({{"title", "Read-aloud: " + t},
                        {"description", "Students prepare and perform a short reading of \"" + t + "\"."},
                        {"kind", "literature"}});
    }
    list.push_back({{"title", "Theme journal"},
                    {"description", "Students keep a journal linking each reading to the shared theme."},
                    {"kind", "interdisciplinary"}});
    return json{{"activities", list}}.dump();
}

}  // namespace

ChatReply SyntheticChatProvider::complete(std::span<const ChatMessage> messages) {
    // On a repair turn the original prompt is still the first user message.
    const ChatMessage* prompt = nullptr;
    for (const auto& m : messages) {
        if (m.role == ChatRole::User) {
            prompt = &m;
            break;
        }
    }
    if (prompt == nullptr) throw Error(ErrorCode::InvalidMessages, "synthetic provider: no user message");

    const auto p = read_prompt(prompt->content);
    std::string body;
    if (p.label == "description") body = describe(p);
    else if (p.label == "answer") body = answer(p);
    else if (p.label == "analysis") body = analyze(p);
    else if (p.label == "comparison") body = compare(p);
    else if (p.label == "review") body = review(p);
    else if (p.label == "plan") body = plan(p);
    else if (p.label == "introduction") body = introduce(p);
    else if (p.label == "activities") body = activities(p);
    else throw Error(ErrorCode::InvalidMessages, "synthetic provider: unknown response label " + p.label);
    return {fenced(p.label, body), 0};
}

}  // namespace lessonweave::llm
