// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "plan_gen.hpp"
#include "pools.hpp"
#include "prompt_checks.hpp"
#include "retrieval_oracle.hpp"
#include "session_model.hpp"
#include "support.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>

using namespace lwtest;
namespace oc = lessonweave::outcome;
namespace pr = lessonweave::prompts;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f s", s);
    return buf;
}

Verdict retrieval_oracle() {
    Verdict v;
    std::mt19937_64 rng(1015);
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t max_records = 0;
    for (int i = 0; i < 100 && v.pass; ++i) {
        const std::size_t records = i == 0 ? 1000 : 1 + rng() % 1000;
        const std::size_t dim = i == 1 ? 256 : (i == 2 ? 8 : 8 + rng() % 249);
        max_records = std::max(max_records, records);
        if (auto why = check_random_case(rng, records, dim); !why.empty()) {
            v.fail("corpus " + std::to_string(i) + ": " + why);
        }
    }
    const double s = seconds_since(t0);
    if (v.pass && s >= 10.0) v.fail("took " + fmt_seconds(s));
    if (v.pass) v.detail = "100 corpora up to " + std::to_string(max_records) + " records, " + fmt_seconds(s);
    return v;
}

Verdict batch_size() {
    Verdict v;
    auto gw = synthetic_gateway();
    auto corpus = sample_corpus(gw);
    api::Service svc(corpus, gw);
    api::JobQueue jobs(0);
    api::Router router(svc, jobs);
    if (retrieval::kDefaultBatch != 8 || svc.batch_size() != 8) v.fail("default batch is not 8");

    const auto sid = svc.create_session({"informal"}, all_material_ids(*corpus));
    const auto r = router.handle({"POST", "/api/v1/sessions/" + sid.value + "/contexts/recommend", ""});
    const auto doc = jobs.wait(r.json_body().at("job_id").get<std::string>());
    const auto rec = doc.at("result").at("cards").size();
    if (rec != 8) v.fail("recommend returned " + std::to_string(rec));

    const auto ctx = CardId(doc.at("result").at("cards")[0].at("card_id").get<std::string>());
    const auto texts = svc.analyze_batch(sid, ctx);
    if (texts.size() != 8) v.fail("analyze returned " + std::to_string(texts.size()));
    const auto more = svc.recommend_contexts(sid);
    if (more.size() != 6) v.fail("second page returned " + std::to_string(more.size()) + " of 6 remaining");
    if (v.pass) v.detail = "recommend 8 of 14, analyze 8 of 10, tail page 6";
    return v;
}

Verdict pool_counts() {
    Verdict v;
    TempDir dir;
    const auto informal = dir.path() / "informal.jsonl";
    const auto subject = dir.path() / "subject.jsonl";
    std::ofstream(informal, std::ios::binary) << corpus::render_pool(generated_informal_pool());
    std::ofstream(subject, std::ios::binary) << corpus::render_pool(generated_subject_pool());
    auto c = std::make_shared<corpus::Corpus>(synthetic_gateway());
    const auto a = c->import_contexts(corpus::read_pool_file(informal)).count;
    const auto b = c->import_contexts(corpus::read_pool_file(subject)).count;
    if (a != 113 || b != 144) v.fail("counts " + std::to_string(a) + "/" + std::to_string(b));

    std::size_t bundled = 0;
    for (const auto* f : {"data/pools/informal_sample.jsonl", "data/pools/subject_sample.jsonl"}) {
        const auto text = read_file(source_path(f));
        const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
        auto fresh = std::make_shared<corpus::Corpus>(synthetic_gateway());
        const auto report = fresh->import_contexts(corpus::read_pool_file(source_path(f)));
        if (report.count != lines || !report.duplicates.empty()) v.fail(std::string(f) + " lost entries");
        if (corpus::export_pool(*fresh->snapshot()) != text) v.fail(std::string(f) + " does not round-trip");
        bundled += report.count;
    }
    if (v.pass) v.detail = "113 and 144 imported; " + std::to_string(bundled) + " bundled entries round-trip byte-exactly";
    return v;
}

struct DemoOutput {
    bool ok = false;
    std::string transcript;
    std::string txt;
    std::string html;
    std::string session;
};

DemoOutput replay_demo(std::size_t workers) {
    TempDir out;
    cli::RuntimeOptions opts;
    opts.fixtures = source_path("scripts/fixtures/demo_fixtures.jsonl");
    opts.workers = workers;
    auto rt = cli::make_runtime(opts);
    const auto run = cli::run_script(*rt, cli::load_script(source_path("scripts/demo_session.json")),
                                     source_path("scripts"), out.path());
    DemoOutput d;
    d.ok = run.ok();
    d.transcript = read_file(out.path() / "transcripts" / "s-000001.jsonl");
    d.txt = read_file(out.path() / "outcome.txt");
    d.html = read_file(out.path() / "outcome.html");
    d.session = read_file(out.path() / "session.json");
    return d;
}

std::size_t bodies_in(const std::string& prompt, const std::vector<std::string>& bodies) {
    std::size_t n = 0;
    for (const auto& b : bodies) n += prompt.find(b) != std::string::npos;
    return n;
}

std::size_t count_of(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
    return n;
}

Verdict prompt_structure() {
    Verdict v;
    const auto demo = replay_demo(0);
    if (!demo.ok) {
        v.fail("demo replay failed");
        return v;
    }
    const auto& catalog = pr::Catalog::builtin("en");
    std::vector<std::string> bodies;
    for (const auto& m : corpus::read_materials_file(source_path("data/materials/sample_materials.jsonl"))) {
        bodies.push_back(m.body);
    }
    const auto t = llm::Transcript::from_jsonl(demo.transcript);
    std::set<std::string> tasks;
    std::size_t analyses = 0, activities = 0;
    for (const auto& e : t.entries()) {
        const auto& prompt = user_prompt(e.request);
        tasks.insert(e.label.task);
        if (!headers_in_order(prompt, catalog)) v.fail(e.label.task + " prompt headers out of order");
        if (!names_all_metrics(objective_of(prompt, catalog), catalog)) v.fail(e.label.task + " objective lacks a metric");
        if (e.label.task == "analyze_text") {
            ++analyses;
            if (bodies_in(prompt, bodies) != 1 || count_of(prompt, "<material title=") != 1) {
                v.fail("analyze_text prompt does not carry exactly one body");
            }
        }
        if (e.label.task == "generate_activities") {
            ++activities;
            if (bodies_in(prompt, bodies) != 0 || count_of(prompt, "<material") != 0) {
                v.fail("generate_activities prompt carries a material body");
            }
        }
    }
    if (tasks.size() != pr::kAllTasks.size()) v.fail("demo covers " + std::to_string(tasks.size()) + " tasks");
    if (analyses == 0 || activities == 0) v.fail("demo lacks analysis or activity prompts");
    if (v.pass) {
        v.detail = std::to_string(t.size()) + " prompts over " + std::to_string(tasks.size()) + " tasks; " +
                   std::to_string(analyses) + " analyze_text, " + std::to_string(activities) + " generate_activities";
    }
    return v;
}

Verdict template_conformance() {
    Verdict v;
    const auto plan = oc::parse_course_plan(pr::course_plan_template("en"));
    int n = 1;
    bool consecutive = true;
    for (const auto& s : plan.segments) {
        for (const auto& g : s.groups) {
            for (const auto& l : g.lessons) consecutive &= l.number == n++;
        }
    }
    if (plan.segments.size() != 3 || plan.group_count() != 4 || plan.lesson_count() != 7 || !consecutive) {
        v.fail("template parses to " + std::to_string(plan.segments.size()) + "/" + std::to_string(plan.group_count()) +
               "/" + std::to_string(plan.lesson_count()));
    }
    std::mt19937_64 rng(1015);
    for (int i = 0; i < 1000 && v.pass; ++i) {
        const auto p = random_plan(rng);
        try {
            if (!(oc::parse_course_plan(oc::render_course_plan(p)) == p)) v.fail("round trip differs at case " + std::to_string(i));
        } catch (const Error& e) {
            v.fail("case " + std::to_string(i) + ": " + e.what());
        }
    }
    if (v.pass) v.detail = "3 segments / 4 groups / 7 lessons; 1000 round trips";
    return v;
}

Verdict determinism() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    const auto first = replay_demo(0);
    const auto second = replay_demo(4);
    const auto third = replay_demo(2);
    const double s = seconds_since(t0);
    if (!first.ok || !second.ok || !third.ok) v.fail("a replay run failed");
    for (const auto* d : {&second, &third}) {
        if (d->transcript != first.transcript) v.fail("transcripts differ");
        if (d->txt != first.txt || d->html != first.html) v.fail("exports differ");
        if (d->session != first.session) v.fail("session documents differ");
    }
    if (first.txt.empty() || first.html.empty()) v.fail("missing export");
    if (v.pass && s >= 30.0) v.fail("took " + fmt_seconds(s));
    if (v.pass) v.detail = "3 runs byte-identical, " + fmt_seconds(s);
    return v;
}

Verdict state_machine() {
    Verdict v;
    std::mt19937_64 rng(20261015);
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t ops = 0;
    for (int i = 0; i < 10000 && v.pass; ++i) {
        const std::size_t len = 5 + rng() % 60;
        ops += len;
        if (auto why = run_model_sequence(rng, len); !why.empty()) v.fail("sequence " + std::to_string(i) + ": " + why);
    }
    if (v.pass) v.detail = "10000 sequences, " + std::to_string(ops) + " ops, " + fmt_seconds(seconds_since(t0));
    return v;
}

bool mentions(std::span<const llm::ChatMessage> m, const std::string& title) {
    return user_prompt(m).find("<material title=\"" + title + "\">") != std::string::npos;
}

bool first_attempt(std::span<const llm::ChatMessage> m) { return m.size() == 2; }

Verdict fault_tolerance() {
    Verdict v;
    // A clean run fixes which materials the batch will pick.
    std::vector<std::string> picked;
    {
        auto gw = synthetic_gateway();
        auto c = sample_corpus(gw);
        api::Service svc(c, gw);
        const auto sid = svc.create_session({"informal"}, all_material_ids(*c));
        const auto ctx = svc.recommend_contexts(sid, 1).at(0);
        svc.analyze_batch(sid, ctx);
        const auto state = svc.session_json(sid);
        for (const auto& t : state.at("texts")) picked.push_back(t.at("material_title"));
    }
    if (picked.size() != 8) {
        v.fail("clean batch had " + std::to_string(picked.size()) + " cards");
        return v;
    }
    const auto garbage = picked[1], fabricated = picked[3], zero = picked[5], six = picked[6];

    auto chat = std::make_shared<PatchedChat>([=](auto m, int) -> std::optional<std::string> {
        if (is_task(m, "analysis") && mentions(m, garbage)) return std::string("no block at all");
        if (is_task(m, "analysis") && mentions(m, fabricated)) {
            return "```analysis\n" +
                   json{{"overall", "fits"},
                        {"links", {{{"kind", "sentence"}, {"excerpt", "This sentence was never written."}, {"connection", "c"}}}}}
                       .dump() +
                   "\n```";
        }
        if (is_task(m, "review") && mentions(m, zero)) return std::string("```review\n{\"rating\": 0, \"critique\": \"x\"}\n```");
        if (is_task(m, "review") && mentions(m, six) && first_attempt(m)) {
            return std::string("```review\n{\"rating\": 6, \"critique\": \"x\"}\n```");
        }
        if (is_task(m, "plan") && first_attempt(m)) return std::string("```plan\nA plan in prose only.\n```");
        return std::nullopt;
    });
    auto gw = gateway_with(chat);
    auto c = sample_corpus(gw);
    api::Service svc(c, gw);
    const auto sid = svc.create_session({"informal"}, all_material_ids(*c));
    const auto ctx = svc.recommend_contexts(sid, 1).at(0);
    std::vector<CardId> texts;
    try {
        texts = svc.analyze_batch(sid, ctx);
    } catch (const Error& e) {
        v.fail(std::string("batch failed as a whole: ") + e.what());
        return v;
    }
    if (texts.size() != 8) v.fail("batch returned " + std::to_string(texts.size()));

    const auto state = svc.session_json(sid);
    std::size_t healthy = 0;
    for (const auto& t : state.at("texts")) {
        const auto title = t.at("material_title").get<std::string>();
        const bool has_error = !t.at("error").is_null();
        const bool has_review_error = !t.at("review_error").is_null();
        if (title == garbage) {
            if (!has_error || t.at("error").get<std::string>().find("analysis_failed") == std::string::npos) {
                v.fail("unparseable analysis did not become analysis_failed");
            }
        } else if (title == fabricated) {
            if (has_error || t.at("analysis").at("warnings").empty()) v.fail("fabricated excerpt raised no warning");
        } else if (title == zero) {
            if (!has_review_error || !t.at("reviews").empty()) v.fail("rating 0 twice did not end as a review error");
        } else if (title == six) {
            if (has_review_error || t.at("reviews").size() != 1) v.fail("rating 6 was not repaired");
        } else if (!has_error && !has_review_error && t.at("reviews").size() == 1) {
            ++healthy;
        }
    }
    if (healthy != 4) v.fail(std::to_string(healthy) + " of 4 untouched cards are healthy");

    std::map<std::string, int> analysis_calls;
    std::map<std::string, int> review_calls;
    const auto transcript = llm::Transcript::from_jsonl(svc.transcript_jsonl(sid));
    for (const auto& e : transcript.entries()) {
        for (const auto& t : picked) {
            if (!mentions(e.request, t)) continue;
            if (e.label.task == "analyze_text") ++analysis_calls[t];
            if (e.label.task == "review_analysis") ++review_calls[t];
        }
    }
    if (analysis_calls[garbage] != 2) v.fail("bad analysis got " + std::to_string(analysis_calls[garbage]) + " calls");
    if (review_calls[zero] != 2 || review_calls[six] != 2) v.fail("out-of-range ratings did not get exactly one repair");
    if (analysis_calls[picked[0]] != 1 || review_calls[picked[0]] != 1) v.fail("healthy card was retried");

    svc.star(sid, ctx);
    for (auto i : {0, 2, 3}) svc.star(sid, texts.at(static_cast<std::size_t>(i)));
    svc.set_lesson_count(sid, 7);
    try {
        const auto out = svc.generate_plan(sid, ctx);
        if (!out.plan || out.plan->lesson_count() != 7) v.fail("repaired plan is wrong");
    } catch (const Error& e) {
        v.fail(std::string("plan generation failed: ") + e.what());
    }
    int plan_calls = 0;
    for (const auto& e : llm::Transcript::from_jsonl(svc.transcript_jsonl(sid)).entries()) {
        if (e.label.task == "generate_course_plan") {
            ++plan_calls;
            if (plan_calls == 2 && e.request.size() != 4) v.fail("plan repair is not a follow-up turn");
        }
    }
    if (plan_calls != 2) v.fail("malformed plan got " + std::to_string(plan_calls) + " calls");
    if (v.pass) v.detail = "repair turns for plan and rating 6; rating 0 and bad analysis isolated; fabricated excerpt warned; 4 healthy cards untouched";
    return v;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::off);
    const std::pair<const char*, Verdict (*)()> criteria[] = {
        {"retrieval-oracle-equivalence", retrieval_oracle},
        {"batch-size-8", batch_size},
        {"pool-counts-113-144", pool_counts},
        {"prompt-structure", prompt_structure},
        {"plan-template-conformance", template_conformance},
        {"replay-determinism", determinism},
        {"session-state-machine", state_machine},
        {"fault-tolerance", fault_tolerance},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v.fail(std::string("threw: ") + e.what());
        }
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
        failed += !v.pass;
    }
    return failed == 0 ? 0 : 1;
}
