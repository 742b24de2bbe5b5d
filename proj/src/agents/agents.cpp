#include "lessonweave/agents/agents.hpp"

#include "lessonweave/retrieval/retrieval.hpp"

#include <future>

namespace lessonweave::agents {

namespace {

using prompts::Task;

[[noreturn]] void malformed(const std::string& reason) {
    throw Error(ErrorCode::MalformedOutput, reason, json{{"reason", reason}});
}

json parse_json_block(std::string_view reply, std::string_view label) {
    const auto block = extract_block(reply, label);
    json j;
    try {
        j = json::parse(block);
    } catch (const json::exception&) {
        malformed("the " + std::string(label) + " block is not valid JSON");
    }
    if (!j.is_object()) malformed("the " + std::string(label) + " block must be a JSON object");
    return j;
}

std::string string_field(const json& j, const char* key, bool required) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (required) malformed(std::string("missing field \"") + key + "\"");
        return {};
    }
    if (!it->is_string()) malformed(std::string("field \"") + key + "\" must be a string");
    auto s = trim(it->get<std::string>());
    if (required && s.empty()) malformed(std::string("field \"") + key + "\" is empty");
    return s;
}

std::vector<std::string> string_list(const json& j, const char* key) {
    std::vector<std::string> out;
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return out;
    if (!it->is_array()) malformed(std::string("field \"") + key + "\" must be a list");
    for (const auto& v : *it) {
        if (!v.is_string()) malformed(std::string("field \"") + key + "\" must hold strings");
        auto s = trim(v.get<std::string>());
        if (!s.empty()) out.push_back(std::move(s));
    }
    return out;
}

std::string strip_quotes(std::string s) {
    static const std::string_view pairs[][2] = {
        {"\"", "\""}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"\xE3\x80\x8C", "\xE3\x80\x8D"}};
    for (const auto& p : pairs) {
        if (s.size() >= p[0].size() + p[1].size() && starts_with(s, p[0]) &&
            s.compare(s.size() - p[1].size(), p[1].size(), p[1]) == 0) {
            return s.substr(p[0].size(), s.size() - p[0].size() - p[1].size());
        }
    }
    return s;
}

prompts::MaterialText material_text(const corpus::ReadingMaterial& m) { return {m.title, m.body}; }

bool degradable(const Error& ex) { return ex.code() != ErrorCode::FixtureMiss; }

template <typename Result, typename Fn>
std::vector<Result> run_parallel(const Workbench& wb, std::size_t n, Fn&& fn) {
    std::vector<llm::Transcript> logs(n);
    std::vector<std::future<Result>> futures;
    futures.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        futures.push_back(std::async(std::launch::async, [&, i] {
            Workbench local{wb.gateway, wb.catalog, &logs[i]};
            return fn(local, i);
        }));
    }
    std::vector<Result> out;
    out.reserve(n);
    std::exception_ptr hard;
    for (auto& f : futures) {
        try {
            out.push_back(f.get());
        } catch (...) {
            if (!hard) hard = std::current_exception();
            out.emplace_back();
        }
    }
    if (wb.transcript != nullptr) {
        for (const auto& log : logs) wb.transcript->append_all(log);
    }
    if (hard) std::rethrow_exception(hard);
    return out;
}

}  // namespace

Exchange::Exchange(const Workbench& wb, prompts::Task task, const prompts::PromptPayload& payload)
    : wb_(wb) {
    const auto role = prompts::role_for(task);
    label_ = {std::string(prompts::to_string(role)), std::string(prompts::to_string(task))};
    messages_ = prompts::compose_messages(wb.catalog, role, prompts::build_prompt(wb.catalog, role, task, payload));
}

std::string Exchange::send() {
    last_ = wb_.gateway.chat(messages_, label_, wb_.transcript).response;
    return last_;
}

void Exchange::follow_up(const std::string& instruction) {
    messages_.push_back({llm::ChatRole::Assistant, last_});
    messages_.push_back({llm::ChatRole::User, instruction});
}

std::string_view to_string(LinkKind kind) {
    switch (kind) {
        case LinkKind::Sentence: return "sentence";
        case LinkKind::Paragraph: return "paragraph";
        case LinkKind::Viewpoint: return "viewpoint";
    }
    return "sentence";
}

LinkKind link_kind_from_string(std::string_view s) {
    if (s == "sentence") return LinkKind::Sentence;
    if (s == "paragraph") return LinkKind::Paragraph;
    if (s == "viewpoint") return LinkKind::Viewpoint;
    throw Error(ErrorCode::MalformedOutput, "unknown link kind \"" + std::string(s) + "\"");
}

bool TextAnalysis::hallucination_flag() const {
    for (const auto& l : element_links) {
        if (!l.verbatim) return true;
    }
    return false;
}

void to_json(json& j, const ContextDescription& v) {
    j = {{"context_entry_ref", v.context_entry_ref},
         {"description", v.description},
         {"relevant_material_titles", v.relevant_material_titles}};
}

void from_json(const json& j, ContextDescription& v) {
    j.at("context_entry_ref").get_to(v.context_entry_ref);
    j.at("description").get_to(v.description);
    j.at("relevant_material_titles").get_to(v.relevant_material_titles);
}

void to_json(json& j, const ElementLink& v) {
    j = {{"kind", to_string(v.kind)}, {"excerpt", v.excerpt}, {"connection", v.connection}, {"verbatim", v.verbatim}};
}

void from_json(const json& j, ElementLink& v) {
    v.kind = link_kind_from_string(j.at("kind").get<std::string>());
    j.at("excerpt").get_to(v.excerpt);
    j.at("connection").get_to(v.connection);
    v.verbatim = j.value("verbatim", true);
}

void to_json(json& j, const TextAnalysis& v) {
    j = {{"material_ref", v.material_ref},   {"context_ref", v.context_ref},
         {"overall", v.overall},             {"element_links", v.element_links},
         {"warnings", v.warnings},           {"hallucination_flag", v.hallucination_flag()}};
}

void from_json(const json& j, TextAnalysis& v) {
    j.at("material_ref").get_to(v.material_ref);
    j.at("context_ref").get_to(v.context_ref);
    j.at("overall").get_to(v.overall);
    j.at("element_links").get_to(v.element_links);
    v.warnings = j.value("warnings", std::vector<std::string>{});
}

void to_json(json& j, const Review& v) {
    j = {{"rating", v.rating}, {"critique", v.critique}, {"relevant", v.relevant}, {"accurate", v.accurate}};
}

void from_json(const json& j, Review& v) {
    j.at("rating").get_to(v.rating);
    j.at("critique").get_to(v.critique);
    v.relevant = j.value("relevant", true);
    v.accurate = j.value("accurate", true);
}

void to_json(json& j, const PairwiseComparison& v) {
    j = {{"material_a", v.material_a},
         {"material_b", v.material_b},
         {"context_ref", v.context_ref},
         {"similarities", v.similarities},
         {"differences", v.differences}};
}

void from_json(const json& j, PairwiseComparison& v) {
    j.at("material_a").get_to(v.material_a);
    j.at("material_b").get_to(v.material_b);
    j.at("context_ref").get_to(v.context_ref);
    j.at("similarities").get_to(v.similarities);
    j.at("differences").get_to(v.differences);
}

std::string render_analysis(const TextAnalysis& analysis) {
    std::string out = analysis.overall;
    for (const auto& l : analysis.element_links) {
        out += "\n- [" + std::string(to_string(l.kind)) + "] \"" + l.excerpt + "\": " + l.connection;
    }
    return out;
}

std::string extract_block(std::string_view reply, std::string_view label) {
    const std::string fence = "```" + std::string(label);
    std::size_t start = std::string_view::npos;
    for (auto pos = reply.find(fence); pos != std::string_view::npos; pos = reply.find(fence, pos + 1)) {
        const auto after = pos + fence.size();
        if (after == reply.size() || reply[after] == '\n' || reply[after] == '\r' || reply[after] == ' ') {
            start = pos;
            break;
        }
    }
    if (start == std::string_view::npos) start = reply.find("```");

    std::string content;
    if (start == std::string_view::npos) {
        content = trim(reply);
    } else {
        auto body = reply.find('\n', start);
        if (body == std::string_view::npos) malformed("the " + std::string(label) + " block is not closed");
        ++body;
        auto end = reply.find("```", body);
        if (end == std::string_view::npos) malformed("the " + std::string(label) + " block is not closed");
        content = trim(reply.substr(body, end - body));
    }
    if (content.empty()) malformed("the " + std::string(label) + " block is empty");
    return content;
}

std::string parse_prose(std::string_view reply, std::string_view label) { return extract_block(reply, label); }

TextAnalysis parse_analysis(std::string_view reply, const corpus::ReadingMaterial& material,
                            const ContextId& context) {
    const auto j = parse_json_block(reply, "analysis");
    TextAnalysis a;
    a.material_ref = material.id;
    a.context_ref = context;
    a.overall = string_field(j, "overall", true);
    auto links = j.find("links");
    if (links == j.end() || !links->is_array()) malformed("field \"links\" must be a list");
    for (const auto& l : *links) {
        if (!l.is_object()) malformed("every link must be an object");
        ElementLink link;
        try {
            link.kind = link_kind_from_string(string_field(l, "kind", true));
        } catch (const Error& ex) {
            malformed(ex.what());
        }
        link.excerpt = strip_quotes(string_field(l, "excerpt", true));
        link.connection = string_field(l, "connection", true);
        link.verbatim = material.body.find(link.excerpt) != std::string::npos;
        if (!link.verbatim) {
            a.warnings.push_back("excerpt not found in \"" + material.title + "\": \"" + link.excerpt + "\"");
        }
        a.element_links.push_back(std::move(link));
    }
    if (a.element_links.empty()) malformed("the analysis has no links");
    return a;
}

Review parse_review(std::string_view reply) {
    const auto j = parse_json_block(reply, "review");
    Review r;
    auto rating = j.find("rating");
    if (rating == j.end() || !rating->is_number()) malformed("field \"rating\" must be an integer from 1 to 5");
    const double value = rating->get<double>();
    if (value != static_cast<int>(value) || value < 1 || value > 5) {
        malformed("field \"rating\" must be an integer from 1 to 5");
    }
    r.rating = static_cast<int>(value);
    r.critique = string_field(j, "critique", true);
    auto flag = [&](const char* key) {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return true;
        if (!it->is_boolean()) malformed(std::string("field \"") + key + "\" must be true or false");
        return it->get<bool>();
    };
    r.relevant = flag("relevant");
    r.accurate = flag("accurate");
    return r;
}

PairwiseComparison parse_comparison(std::string_view reply) {
    const auto j = parse_json_block(reply, "comparison");
    PairwiseComparison c;
    c.similarities = string_list(j, "similarities");
    c.differences = string_list(j, "differences");
    if (c.similarities.empty() && c.differences.empty()) malformed("the comparison lists are empty");
    return c;
}

prompts::ContextBrief brief(const corpus::ContextEntry& entry) {
    return {entry.title, entry.subject, entry.background};
}

ContextDescription describe_context(const Workbench& wb, const corpus::ContextEntry& entry,
                                    std::span<const corpus::ReadingMaterial> materials) {
    prompts::PromptPayload payload;
    payload.context = brief(entry);
    for (const auto& m : materials) payload.materials.push_back(material_text(m));

    ContextDescription d;
    d.context_entry_ref = entry.id;
    d.description = call_with_repair(wb, Task::DescribeContext, payload,
                                     [](std::string_view r) { return parse_prose(r, "description"); });
    for (const auto& hit : retrieval::top_k_materials(entry, materials, 3)) {
        for (const auto& m : materials) {
            if (m.id.value == hit.record_id) d.relevant_material_titles.push_back(m.title);
        }
    }
    return d;
}

std::vector<CardOutcome> describe_batch(const Workbench& wb, std::span<const corpus::ContextEntry> entries,
                                        std::span<const corpus::ReadingMaterial> materials) {
    return run_parallel<CardOutcome>(wb, entries.size(), [&](const Workbench& local, std::size_t i) {
        CardOutcome out;
        try {
            out.description = describe_context(local, entries[i], materials);
        } catch (const Error& ex) {
            if (!degradable(ex)) throw;
            out.error = ex;
        }
        return out;
    });
}

std::string answer_context_question(const Workbench& wb, const corpus::ContextEntry& entry,
                                    const std::string& description, const std::string& question,
                                    const std::vector<prompts::QaTurn>& thread,
                                    const std::vector<std::string>& memory_notes,
                                    const std::vector<std::string>& material_titles) {
    prompts::PromptPayload payload;
    payload.context = brief(entry);
    payload.context_description = description;
    payload.question = question;
    payload.thread = thread;
    payload.memory_notes = memory_notes;
    payload.material_titles = material_titles;
    return call_with_repair(wb, Task::AnswerContextQuestion, payload,
                            [](std::string_view r) { return parse_prose(r, "answer"); });
}

std::string answer_text_question(const Workbench& wb, const corpus::ContextEntry& entry,
                                 const std::optional<std::string>& description,
                                 const corpus::ReadingMaterial& material,
                                 const std::optional<std::string>& analysis_text,
                                 const std::string& question, const std::vector<prompts::QaTurn>& thread) {
    prompts::PromptPayload payload;
    payload.context = brief(entry);
    payload.context_description = description;
    payload.materials = {material_text(material)};
    payload.analysis = analysis_text;
    payload.question = question;
    payload.thread = thread;
    return call_with_repair(wb, Task::AnswerTextQuestion, payload,
                            [](std::string_view r) { return parse_prose(r, "answer"); });
}

TextAnalysis analyze_text(const Workbench& wb, const corpus::ContextEntry& entry,
                          const std::optional<std::string>& description,
                          const corpus::ReadingMaterial& material) {
    prompts::PromptPayload payload;
    payload.context = brief(entry);
    payload.context_description = description;
    payload.materials = {material_text(material)};
    try {
        return call_with_repair(wb, Task::AnalyzeText, payload, [&](std::string_view r) {
            return parse_analysis(r, material, entry.id);
        });
    } catch (const Error& ex) {
        if (ex.code() != ErrorCode::MalformedOutput) throw;
        throw Error(ErrorCode::AnalysisFailed, "analysis of \"" + material.title + "\" failed: " + ex.what(),
                    json{{"material_id", material.id}, {"reason", ex.what()}});
    }
}

Review review_analysis(const Workbench& wb, const corpus::ContextEntry& entry,
                       const std::optional<std::string>& description,
                       const corpus::ReadingMaterial& material, const std::string& analysis_text) {
    prompts::PromptPayload payload;
    payload.context = brief(entry);
    payload.context_description = description;
    payload.materials = {material_text(material)};
    payload.analysis = analysis_text;
    return call_with_repair(wb, Task::ReviewAnalysis, payload, parse_review);
}

Review review_description(const Workbench& wb, const corpus::ContextEntry& entry,
                          const std::string& description, const std::vector<std::string>& material_titles) {
    prompts::PromptPayload payload;
    payload.context = brief(entry);
    payload.analysis = description;
    payload.material_titles = material_titles;
    return call_with_repair(wb, Task::ReviewDescription, payload, parse_review);
}

std::vector<AnalysisResult> analyze_batch(const Workbench& wb, const corpus::ContextEntry& entry,
                                          const std::optional<std::string>& description,
                                          std::span<const corpus::ReadingMaterial> materials) {
    return run_parallel<AnalysisResult>(wb, materials.size(), [&](const Workbench& local, std::size_t i) {
        AnalysisResult out;
        try {
            out.analysis = analyze_text(local, entry, description, materials[i]);
        } catch (const Error& ex) {
            if (!degradable(ex)) throw;
            out.error = ex;
            return out;
        }
        try {
            out.review = review_analysis(local, entry, description, materials[i], render_analysis(*out.analysis));
        } catch (const Error& ex) {
            if (!degradable(ex)) throw;
            out.review_error = ex;
        }
        return out;
    });
}

PairwiseComparison compare_texts(const Workbench& wb, const corpus::ContextEntry& entry,
                                 const std::optional<std::string>& description,
                                 const corpus::ReadingMaterial& a, const corpus::ReadingMaterial& b) {
    if (a.id == b.id) {
        throw Error(ErrorCode::SameMaterial, "cannot compare a material with itself", json{{"material_id", a.id}});
    }
    prompts::PromptPayload payload;
    payload.context = brief(entry);
    payload.context_description = description;
    payload.materials = {material_text(a), material_text(b)};
    auto c = call_with_repair(wb, Task::CompareTexts, payload, parse_comparison);
    c.material_a = a.id;
    c.material_b = b.id;
    c.context_ref = entry.id;
    return c;
}

}  // namespace lessonweave::agents
