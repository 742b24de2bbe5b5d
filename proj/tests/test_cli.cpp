#include "support.hpp"

#include <gtest/gtest.h>

using namespace lwtest;

namespace {

struct DemoRun {
    cli::ScriptRun run;
    std::string transcript;
    std::string txt;
    std::string html;
    std::string session;
};

DemoRun run_demo(const fs::path& out, std::size_t workers, bool with_fixtures = true) {
    cli::RuntimeOptions opts;
    if (with_fixtures) opts.fixtures = source_path("scripts/fixtures/demo_fixtures.jsonl");
    opts.workers = workers;
    auto rt = cli::make_runtime(opts);
    const auto script = cli::load_script(source_path("scripts/demo_session.json"));
    DemoRun d;
    d.run = cli::run_script(*rt, script, source_path("scripts"), out);
    d.transcript = read_file(out / "transcripts" / "s-000001.jsonl");
    d.txt = read_file(out / "outcome.txt");
    d.html = read_file(out / "outcome.html");
    d.session = read_file(out / "session.json");
    return d;
}

cli::ScriptRun run_inline(const json& script, const std::optional<fs::path>& out = std::nullopt) {
    auto rt = cli::make_runtime({});
    return cli::run_script(*rt, script, source_path("scripts"), out);
}

json small_setup() {
    return {{"materials", {"../data/materials/sample_materials.jsonl"}},
            {"pools", {"../data/pools/informal_sample.jsonl"}}};
}

}  // namespace

TEST(Script, DemoReplaysFromFixtures) {
    TempDir out;
    const auto d = run_demo(out.path(), 0);
    ASSERT_TRUE(d.run.ok()) << d.run.summary().dump(2);
    EXPECT_EQ(d.run.steps.size(), 22u);
    EXPECT_EQ(d.run.skipped, 0u);
    EXPECT_EQ(d.run.saved, (std::vector<std::string>{"recommended.json", "outcome.txt", "outcome.html", "session.json"}));
    EXPECT_FALSE(d.txt.empty());
    EXPECT_EQ(d.html.rfind("<!DOCTYPE html>", 0), 0u);
    const auto summary = json::parse(read_file(out.path() / "summary.json"));
    EXPECT_EQ(summary.at("ok"), true);

    const auto session = json::parse(d.session);
    const auto& col = session.at("collection");
    ASSERT_EQ(col.size(), 1u);
    EXPECT_EQ(col[0].at("starred_text_card_ids").size(), 3u);
    EXPECT_EQ(session.at("contexts").size(), 13u);
    EXPECT_EQ(session.at("contexts")[1].at("state"), "deleted");
    EXPECT_EQ(session.at("contexts").back().at("manual"), true);

    const auto t = llm::Transcript::from_jsonl(d.transcript);
    EXPECT_EQ(t.size(), 36u);
    EXPECT_EQ(t.to_jsonl(), d.transcript);
}

TEST(Script, DemoIsDeterministicAcrossWorkerCounts) {
    TempDir a, b, c;
    const auto x = run_demo(a.path(), 0);
    const auto y = run_demo(b.path(), 4);
    const auto z = run_demo(c.path(), 1);
    ASSERT_TRUE(x.run.ok() && y.run.ok() && z.run.ok());
    for (const auto* other : {&y, &z}) {
        EXPECT_EQ(other->transcript, x.transcript);
        EXPECT_EQ(other->txt, x.txt);
        EXPECT_EQ(other->html, x.html);
        EXPECT_EQ(other->session, x.session);
    }
}

TEST(Script, RecordingReproducesBundledFixtures) {
    TempDir out, fx;
    cli::RuntimeOptions opts;
    opts.record = true;
    opts.workers = 2;
    auto rt = cli::make_runtime(opts);
    const auto run = cli::run_script(*rt, cli::load_script(source_path("scripts/demo_session.json")),
                                     source_path("scripts"), out.path());
    ASSERT_TRUE(run.ok()) << run.summary().dump(2);
    const auto file = fx.path() / "demo.jsonl";
    rt->recorder->write(file.string());
    EXPECT_EQ(read_file(file), read_file(source_path("scripts/fixtures/demo_fixtures.jsonl")));

    const auto live = read_file(out.path() / "outcome.txt");
    TempDir again;
    EXPECT_EQ(run_demo(again.path(), 0).txt, live);
}

TEST(Script, StopsAtFirstFailureAndSkipsTheRest) {
    json script{{"setup", small_setup()},
                {"steps",
                 {{{"name", "create"},
                   {"method", "POST"},
                   {"path", "/api/v1/sessions"},
                   {"body", {{"subjects", {"informal"}}, {"material_ids", "{{material_ids}}"}}},
                   {"capture", {{"sid", "/session_id"}}}},
                  {{"name", "early-download"},
                   {"path", "/api/v1/sessions/{{sid}}/outcome/cc-1/download"}},
                  {{"name", "never"}, {"path", "/api/v1/health"}},
                  {{"name", "never2"}, {"path", "/api/v1/health"}}}}};
    TempDir out;
    const auto run = run_inline(script, out.path());
    EXPECT_FALSE(run.ok());
    ASSERT_EQ(run.steps.size(), 2u);
    EXPECT_TRUE(run.steps[0].ok);
    EXPECT_EQ(run.steps[1].status, 404);
    EXPECT_EQ(run.steps[1].error_code, "unknown_card");
    EXPECT_EQ(run.skipped, 2u);
    const auto summary = json::parse(read_file(out.path() / "summary.json"));
    EXPECT_EQ(summary.at("ok"), false);
    EXPECT_EQ(summary.at("skipped"), 2);
    EXPECT_EQ(summary, run.summary());
}

TEST(Script, FailedJobReportsItsCodeAndStatus) {
    json script{{"setup", small_setup()},
                {"steps",
                 {{{"method", "POST"},
                   {"path", "/api/v1/sessions"},
                   {"body", {{"subjects", {"informal"}}, {"material_ids", "{{material_ids}}"}}},
                   {"capture", {{"sid", "/session_id"}}}},
                  {{"method", "POST"}, {"path", "/api/v1/sessions/{{sid}}/contexts/recommend"}, {"body", {{"k", 20}}}},
                  {{"method", "POST"}, {"path", "/api/v1/sessions/{{sid}}/contexts/more"}}}}};
    const auto run = run_inline(script);
    ASSERT_EQ(run.steps.size(), 3u);
    EXPECT_TRUE(run.steps[1].ok);
    EXPECT_EQ(run.steps[1].name, "step-2");
    EXPECT_EQ(run.steps[2].error_code, "no_candidates");
    EXPECT_EQ(run.steps[2].status, 409);
    EXPECT_EQ(run.skipped, 0u);
    EXPECT_FALSE(run.ok());
}

TEST(Script, VariablesCapturesAndOutputPaths) {
    json create{{"method", "POST"},
                {"path", "/api/v1/sessions"},
                {"body", {{"subjects", {"informal"}}, {"material_ids", "{{material_ids}}"}}},
                {"capture", {{"s", ""}}}};
    json script{{"setup", small_setup()},
                {"steps",
                 {create,
                  {{"method", "POST"},
                   {"path", "/api/v1/sessions/{{s.session_id}}/contexts/recommend"},
                   {"body", {{"k", 2}}},
                   {"capture", {{"second", "/cards/1"}}}},
                  {{"path", "/api/v1/sessions/{{s.session_id}}/outcome/{{second.card_id}}"},
                   {"save_to", "o/{{second.card_id}}.json"}}}}};
    TempDir out;
    auto run = run_inline(script, out.path());
    ASSERT_TRUE(run.ok()) << run.summary().dump(2);
    EXPECT_EQ(run.variables.at("material_ids").size(), 10u);
    EXPECT_EQ(run.saved, std::vector<std::string>{"o/cc-2.json"});
    EXPECT_TRUE(fs::exists(out.path() / "o" / "cc-2.json"));

    auto bad = script;
    bad["steps"][2]["save_to"] = "../escape.json";
    run = run_inline(bad, out.path());
    EXPECT_EQ(run.steps.back().error_code, "bad_request");

    bad = script;
    bad["steps"][1]["capture"] = {{"x", "/cards/9"}};
    run = run_inline(bad);
    EXPECT_EQ(run.steps.back().error_code, "capture_failed");

    bad = script;
    bad["steps"][1]["path"] = "/api/v1/sessions/{{nope}}/contexts/recommend";
    run = run_inline(bad);
    EXPECT_EQ(run.steps.back().error_code, "bad_request");
    EXPECT_NE(run.steps.back().message.find("{{nope}}"), std::string::npos);

    bad = script;
    bad["steps"][1].erase("path");
    run = run_inline(bad);
    EXPECT_EQ(run.steps.back().error_code, "bad_request");
}

TEST(Script, LoadScriptRejectsShapes) {
    TempDir dir;
    const auto p = dir.path() / "s.json";
    std::ofstream(p) << R"({"setup": {}})";
    try {
        cli::load_script(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BadRequest);
    }
    std::ofstream(p, std::ios::trunc) << "{oops";
    EXPECT_THROW(cli::load_script(p), Error);
    EXPECT_THROW(cli::load_script(dir.path() / "missing.json"), Error);
}

TEST(Runtime, ProviderConfigFile) {
    TempDir dir;
    const auto p = dir.path() / "provider.json";
    std::ofstream(p) << R"({"kind": "replay", "fixture_path": "fx.jsonl"})";
    const auto cfg = cli::load_provider_config(p);
    EXPECT_EQ(cfg.kind, llm::ProviderKind::Replay);
    EXPECT_EQ(fs::path(cfg.fixture_path), dir.path() / "fx.jsonl");
    std::ofstream(p, std::ios::trunc) << "[";
    try {
        cli::load_provider_config(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    }
    try {
        cli::load_provider_config(dir.path() / "none.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
    }
}

TEST(Runtime, ReplayMissIsReported) {
    TempDir dir;
    const auto fx = dir.path() / "empty.jsonl";
    std::ofstream(fx) << "";
    cli::RuntimeOptions opts;
    opts.fixtures = fx;
    auto rt = cli::make_runtime(opts);
    json script{{"setup", small_setup()},
                {"steps",
                 {{{"method", "POST"},
                   {"path", "/api/v1/sessions"},
                   {"body", {{"subjects", {"informal"}}, {"material_ids", "{{material_ids}}"}}},
                   {"capture", {{"sid", "/session_id"}}}},
                  {{"method", "POST"}, {"path", "/api/v1/sessions/{{sid}}/contexts/recommend"}}}}};
    const auto run = cli::run_script(*rt, script, source_path("scripts"), std::nullopt);
    ASSERT_EQ(run.steps.size(), 2u);
    EXPECT_EQ(run.steps[1].error_code, "fixture_miss");
    EXPECT_EQ(run.steps[1].status, 502);
}
