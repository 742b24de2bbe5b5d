#include "support.hpp"

#include "lessonweave/api/server.hpp"

#include <httplib.h>

#include <gtest/gtest.h>

#include <chrono>
#include <set>
#include <thread>

using namespace lwtest;
namespace ss = lessonweave::session;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

struct Stack {
    explicit Stack(std::size_t workers = 0, std::optional<fs::path> session_dir = std::nullopt,
                   std::shared_ptr<llm::Gateway> gw = synthetic_gateway())
        : corpus(sample_corpus(gw)),
          service(corpus, gw, api::ServiceOptions{std::move(session_dir), std::nullopt, retrieval::kDefaultBatch}),
          jobs(workers),
          router(service, jobs) {}

    api::Response call(const std::string& method, const std::string& path, const json& body = nullptr) {
        return router.handle({method, std::string(api::kRoutePrefix) + path, body.is_null() ? "" : body.dump()});
    }

    // Follows a 202 job response to its settled document.
    json settle(const api::Response& r) {
        EXPECT_EQ(r.status, 202) << r.body;
        return jobs.wait(r.json_body().at("job_id").get<std::string>());
    }

    SessionId new_session(const std::vector<std::string>& subjects = {"art", "informal"}) {
        return service.create_session(subjects, all_material_ids(*corpus));
    }

    std::shared_ptr<corpus::Corpus> corpus;
    api::Service service;
    api::JobQueue jobs;
    api::Router router;
};

// Stars the first recommended context and its first `n` analysed texts.
CardId prepare_collection(Stack& st, const SessionId& sid, std::size_t n, int lessons = 7) {
    const auto contexts = st.service.recommend_contexts(sid);
    const auto ctx = contexts.at(0);
    const auto texts = st.service.analyze_batch(sid, ctx);
    st.service.star(sid, ctx);
    for (std::size_t i = 0; i < n; ++i) st.service.star(sid, texts.at(i));
    st.service.set_lesson_count(sid, lessons);
    return ctx;
}

}  // namespace

TEST(ApiErrors, CodeNamesUniqueAndStatusesMapped) {
    std::set<std::string> names;
    const std::set<int> allowed{400, 404, 409, 413, 500, 502, 504};
    for (auto code : kAllErrorCodes) {
        const auto name = std::string(error_code_name(code));
        EXPECT_TRUE(names.insert(name).second) << name;
        EXPECT_TRUE(allowed.contains(error_http_status(code))) << name;
        const auto body = api::error_body(Error(code, "m", json{{"x", 1}}));
        EXPECT_EQ(body.at("code"), name);
        EXPECT_EQ(body.at("message"), "m");
        EXPECT_EQ(body.at("detail").at("x"), 1);
    }
    EXPECT_EQ(error_http_status(ErrorCode::NothingToExport), 409);
    EXPECT_EQ(error_http_status(ErrorCode::UnknownSession), 404);
    EXPECT_EQ(error_http_status(ErrorCode::ProviderTimeout), 504);
    EXPECT_EQ(error_http_status(ErrorCode::BadRequest), 400);
}

TEST(ApiJobs, InlineAndThreaded) {
    api::JobQueue inline_q(0);
    const auto a = inline_q.submit("ok", [] { return json{{"v", 1}}; });
    EXPECT_EQ(inline_q.poll(a).at("status"), "done");
    EXPECT_EQ(inline_q.poll(a).at("result").at("v"), 1);
    const auto b = inline_q.submit("bad", []() -> json { throw Error(ErrorCode::NoCandidates, "none"); });
    EXPECT_EQ(inline_q.poll(b).at("status"), "failed");
    EXPECT_EQ(inline_q.poll(b).at("error").at("code"), "no_candidates");
    const auto c = inline_q.submit("crash", []() -> json { throw std::runtime_error("boom"); });
    EXPECT_EQ(inline_q.poll(c).at("error").at("code"), "internal");
    EXPECT_EQ(code_of([&] { inline_q.poll("job-999999"); }), ErrorCode::UnknownJob);

    api::JobQueue q(3);
    std::vector<std::string> ids;
    for (int i = 0; i < 40; ++i) {
        ids.push_back(q.submit("n", [i] {
            std::this_thread::sleep_for(std::chrono::milliseconds(i % 3));
            return json(i);
        }));
    }
    std::set<std::string> unique(ids.begin(), ids.end());
    EXPECT_EQ(unique.size(), ids.size());
    for (int i = 0; i < 40; ++i) {
        const auto doc = q.wait(ids[static_cast<std::size_t>(i)]);
        EXPECT_EQ(doc.at("status"), "done");
        EXPECT_EQ(doc.at("result"), i);
        EXPECT_EQ(q.poll(ids[static_cast<std::size_t>(i)]), doc);
    }
}

TEST(ApiRouter, RoutesAndDispatchErrors) {
    Stack st;
    const auto routes = st.router.routes();
    std::set<std::string> unique(routes.begin(), routes.end());
    EXPECT_EQ(unique.size(), routes.size());
    for (const auto* r : {"GET /api/v1/health", "POST /api/v1/sessions", "POST /api/v1/sessions/{sid}/contexts/recommend",
                          "GET /api/v1/sessions/{sid}/outcome/{cid}/download", "GET /api/v1/jobs/{id}"}) {
        EXPECT_TRUE(unique.contains(r)) << r;
    }

    EXPECT_EQ(st.call("GET", "/health").json_body().at("status"), "ok");
    auto r = st.call("GET", "/nope");
    EXPECT_EQ(r.status, 404);
    EXPECT_EQ(r.json_body().at("error").at("code"), "not_found");
    EXPECT_EQ(st.router.handle({"GET", "/elsewhere", ""}).status, 404);
    EXPECT_EQ(st.call("DELETE", "/health").status, 404);

    r = st.router.handle({"POST", "/api/v1/sessions", "{not json"});
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.json_body().at("error").at("code"), "bad_request");
    r = st.call("POST", "/sessions", {{"subjects", "art"}, {"material_ids", json::array()}});
    EXPECT_EQ(r.status, 400);
    r = st.call("POST", "/sessions", {{"subjects", {"art"}}, {"material_ids", json::array()}});
    EXPECT_EQ(r.json_body().at("error").at("code"), "no_materials");
    r = st.call("POST", "/sessions", {{"subjects", {"art"}}, {"material_ids", {"mat-999999"}}});
    EXPECT_EQ(r.status, 404);
    EXPECT_EQ(r.json_body().at("error").at("code"), "unknown_material");
    r = st.call("GET", "/sessions/s-000404");
    EXPECT_EQ(r.json_body().at("error").at("code"), "unknown_session");
    EXPECT_EQ(st.call("GET", "/jobs/job-000404").status, 404);
}

TEST(ApiRouter, PercentCoding) {
    EXPECT_EQ(api::percent_decode("Kite%20day%20%282%29"), "Kite day (2)");
    EXPECT_EQ(api::percent_decode("a+b", true), "a b");
    EXPECT_EQ(api::percent_decode("a+b"), "a+b");
    EXPECT_EQ(api::percent_decode("100%"), "100%");
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        std::string s;
        const auto n = rng() % 20;
        for (std::size_t k = 0; k < n; ++k) s.push_back(static_cast<char>(rng() % 256));
        EXPECT_EQ(api::percent_decode(api::percent_encode(s)), s);
    }
}

TEST(ApiFlow, RecommendPagesThroughPool) {
    Stack st;
    auto r = st.call("POST", "/sessions",
                     {{"subjects", {"informal", "art"}}, {"material_ids", json::array()}});
    EXPECT_EQ(r.status, 400);
    json ids = json::array();
    for (const auto& id : all_material_ids(*st.corpus)) ids.push_back(id.value);
    r = st.call("POST", "/sessions", {{"subjects", {"informal", "art", "art"}}, {"material_ids", ids}});
    ASSERT_EQ(r.status, 201);
    const auto sid = r.json_body().at("session_id").get<std::string>();
    EXPECT_EQ(r.json_body().at("session").at("config").at("selected_subjects"), json({"art", "informal"}));

    std::set<std::string> entries;
    std::size_t total = 0;
    for (int page = 0; page < 3; ++page) {
        const auto doc = st.settle(st.call("POST", "/sessions/" + sid + "/contexts/" + (page ? "more" : "recommend")));
        ASSERT_EQ(doc.at("status"), "done") << doc.dump();
        const auto& cards = doc.at("result").at("cards");
        EXPECT_EQ(cards.size(), page < 2 ? 8u : 2u);
        for (const auto& c : cards) {
            EXPECT_TRUE(entries.insert(c.at("entry_id").get<std::string>()).second);
            EXPECT_TRUE(c.at("subject") == "art" || c.at("subject") == "informal");
            EXPECT_FALSE(c.at("description").get<std::string>().empty());
            ++total;
        }
    }
    EXPECT_EQ(total, 18u);
    const auto doc = st.settle(st.call("POST", "/sessions/" + sid + "/contexts/more", {{"k", 3}}));
    EXPECT_EQ(doc.at("status"), "failed");
    EXPECT_EQ(doc.at("error").at("code"), "no_candidates");
    EXPECT_EQ(st.call("POST", "/sessions/" + sid + "/contexts/more", {{"k", 0}}).status, 400);
}

TEST(ApiFlow, AnalyzeBatchOfEight) {
    Stack st;
    const auto sid = st.new_session();
    const auto ctx = st.service.recommend_contexts(sid).at(0);
    const auto doc = st.settle(st.call("POST", "/sessions/" + sid.value + "/contexts/" + ctx.value + "/analyze"));
    ASSERT_EQ(doc.at("status"), "done") << doc.dump();
    const auto& cards = doc.at("result").at("cards");
    ASSERT_EQ(cards.size(), 8u);
    std::set<std::string> mats;
    for (const auto& c : cards) {
        EXPECT_EQ(c.at("parent"), ctx.value);
        mats.insert(c.at("material_id").get<std::string>());
        EXPECT_FALSE(c.at("analysis_text").get<std::string>().empty());
        ASSERT_FALSE(c.at("reviews").empty());
        const int rating = c.at("reviews").back().at("rating");
        EXPECT_GE(rating, 1);
        EXPECT_LE(rating, 5);
    }
    EXPECT_EQ(mats.size(), 8u);
    const auto rest = st.service.analyze_batch(sid, ctx);
    EXPECT_EQ(rest.size(), 2u);
    EXPECT_EQ(code_of([&] { st.service.analyze_batch(sid, ctx); }), ErrorCode::NoCandidates);
    EXPECT_EQ(code_of([&] { st.service.analyze_batch(sid, CardId("tc-1")); }), ErrorCode::BadRequest);
}

TEST(ApiFlow, DownloadBeforeGenerationConflicts) {
    Stack st;
    const auto sid = st.new_session();
    const auto ctx = st.service.recommend_contexts(sid, 1).at(0);
    auto r = st.call("GET", "/sessions/" + sid.value + "/outcome/" + ctx.value + "/download?format=txt");
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(r.json_body().at("error").at("code"), "nothing_to_export");
    r = st.call("GET", "/sessions/" + sid.value + "/outcome/" + ctx.value + "/download?format=pdf");
    EXPECT_EQ(r.status, 400);
    r = st.call("GET", "/sessions/" + sid.value + "/outcome/" + ctx.value);
    EXPECT_EQ(r.status, 200);
    EXPECT_TRUE(r.json_body().at("outcome").at("plan").is_null());
}

TEST(ApiFlow, GenerationPreconditions) {
    Stack st;
    const auto sid = st.new_session();
    const auto ctxs = st.service.recommend_contexts(sid, 2);
    const auto ctx = ctxs.at(0);
    EXPECT_EQ(code_of([&] { st.service.generate_plan(sid, ctx); }), ErrorCode::NotInCollection);
    st.service.star(sid, ctx);
    EXPECT_EQ(code_of([&] { st.service.generate_plan(sid, ctx); }), ErrorCode::LessonCountUnset);
    st.service.set_lesson_count(sid, 5);
    EXPECT_EQ(code_of([&] { st.service.generate_plan(sid, ctx); }), ErrorCode::EmptyCollectionEntry);
    EXPECT_EQ(code_of([&] { st.service.generate_activities(sid, ctx); }), ErrorCode::BadRequest);
    EXPECT_EQ(code_of([&] { st.service.set_lesson_count(sid, 0); }), ErrorCode::InvalidLessonCount);
    auto r = st.call("PUT", "/sessions/" + sid.value + "/lesson-count", {{"count", 99999999999LL}});
    EXPECT_EQ(r.json_body().at("error").at("code"), "invalid_lesson_count");
    st.service.remove(sid, ctxs.at(1));
    EXPECT_EQ(code_of([&] { st.service.generate_plan(sid, ctxs.at(1)); }), ErrorCode::AlreadyDeleted);
    EXPECT_EQ(code_of([&] { st.service.generate_plan(sid, CardId("cc-77")); }), ErrorCode::UnknownCard);
}

TEST(ApiFlow, FullOutcomeOverHttpRoutes) {
    Stack st;
    const auto sid = st.new_session();
    const auto ctx = prepare_collection(st, sid, 3);
    const std::string base = "/sessions/" + sid.value + "/outcome/" + ctx.value;

    auto col = st.call("GET", "/sessions/" + sid.value + "/collection").json_body().at("collection");
    ASSERT_EQ(col.size(), 1u);
    EXPECT_EQ(col[0].at("starred_text_card_ids").size(), 3u);

    auto doc = st.settle(st.call("POST", base + "/plan"));
    ASSERT_EQ(doc.at("status"), "done") << doc.dump();
    const auto& out = doc.at("result").at("outcome");
    const auto plan = out.at("plan").get<outcome::CoursePlan>();
    EXPECT_EQ(plan.lesson_count(), 7);
    EXPECT_FALSE(out.at("introduction").get<std::string>().empty());

    doc = st.settle(st.call("POST", base + "/activities"));
    ASSERT_EQ(doc.at("status"), "done") << doc.dump();
    const auto acts = doc.at("result").at("outcome").at("activities");
    ASSERT_GE(acts.size(), 2u);
    const auto first = acts[0].at("title").get<std::string>();
    auto r = st.call("DELETE", base + "/activities/" + api::percent_encode(first));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(r.json_body().at("outcome").at("activities").size(), acts.size() - 1);
    EXPECT_EQ(st.call("DELETE", base + "/activities/" + api::percent_encode(first)).status, 404);

    r = st.call("PUT", base + "/introduction", {{"text", "Our own words."}});
    EXPECT_EQ(r.json_body().at("outcome").at("introduction"), "Our own words.");
    r = st.call("PUT", base + "/plan", {{"text", "nonsense"}});
    EXPECT_EQ(r.status, 400);

    r = st.call("GET", base + "/download?format=txt");
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.content_type, "text/plain; charset=utf-8");
    EXPECT_NE(r.body.find("Our own words."), std::string::npos);
    r = st.call("GET", base + "/download?format=html");
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body.rfind("<!DOCTYPE html>", 0), 0u);

    r = st.call("GET", "/sessions/" + sid.value + "/transcript");
    EXPECT_EQ(r.content_type, "application/x-ndjson");
    EXPECT_EQ(llm::Transcript::from_jsonl(r.body).to_jsonl(), r.body);
}

TEST(ApiFlow, CardRoutes) {
    Stack st;
    const auto sid = st.new_session();
    const auto ctx = st.service.recommend_contexts(sid, 2).at(0);
    const std::string base = "/sessions/" + sid.value + "/cards/" + ctx.value;
    EXPECT_EQ(st.call("POST", base + "/star").json_body().at("card").at("state"), "starred");
    EXPECT_EQ(st.call("POST", base + "/unstar").json_body().at("card").at("state"), "active");
    EXPECT_EQ(st.call("POST", base + "/edit", {{"text", "  "}}).status, 400);
    EXPECT_EQ(st.call("POST", base + "/edit", {{"text", "Mine"}}).json_body().at("card").at("description"), "Mine");

    auto doc = st.settle(st.call("POST", base + "/find", {{"question", "Why this one?"}}));
    ASSERT_EQ(doc.at("status"), "done") << doc.dump();
    EXPECT_FALSE(doc.at("result").at("answer").get<std::string>().empty());
    EXPECT_EQ(doc.at("result").at("card").at("qa_thread").size(), 1u);

    doc = st.settle(st.call("POST", base + "/review", {{"text", "A sharper description."}}));
    ASSERT_EQ(doc.at("status"), "done") << doc.dump();
    EXPECT_EQ(doc.at("result").at("card").at("description"), "A sharper description.");

    doc = st.settle(st.call("POST", "/sessions/" + sid.value + "/contexts/manual",
                            {{"title", "Kites over the river"}, {"background", "Spring kite flying with grandparents."}}));
    ASSERT_EQ(doc.at("status"), "done") << doc.dump();
    EXPECT_EQ(doc.at("result").at("card").at("manual"), true);
    EXPECT_EQ(doc.at("result").at("card").at("subject"), corpus::kUserDefinedSubject);

    const auto mats = all_material_ids(*st.corpus);
    doc = st.settle(st.call("POST", "/sessions/" + sid.value + "/contexts/" + ctx.value + "/texts",
                            {{"material_id", mats[0].value}}));
    ASSERT_EQ(doc.at("status"), "done") << doc.dump();
    doc = st.settle(st.call("POST", "/sessions/" + sid.value + "/contexts/" + ctx.value + "/texts",
                            {{"material_id", mats[0].value}}));
    EXPECT_EQ(doc.at("error").at("code"), "duplicate_child");
    doc = st.settle(st.call("POST", "/sessions/" + sid.value + "/contexts/" + ctx.value + "/compare",
                            {{"a", mats[0].value}, {"b", mats[1].value}}));
    ASSERT_EQ(doc.at("status"), "done") << doc.dump();
    doc = st.settle(st.call("POST", "/sessions/" + sid.value + "/contexts/" + ctx.value + "/compare",
                            {{"a", mats[0].value}, {"b", mats[0].value}}));
    EXPECT_EQ(doc.at("error").at("code"), "same_material");

    EXPECT_EQ(st.call("POST", base + "/delete").json_body().at("card").at("state"), "deleted");
    EXPECT_EQ(st.call("POST", base + "/star").json_body().at("error").at("code"), "already_deleted");
}

TEST(ApiFlow, CorpusRoutes) {
    Stack st;
    auto r = st.call("GET", "/corpus?subject=music");
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.json_body().at("contexts").size(), 4u);
    EXPECT_EQ(r.json_body().at("materials").size(), 10u);
    r = st.call("GET", "/corpus/materials/mat-000001");
    EXPECT_FALSE(r.json_body().at("body").get<std::string>().empty());
    EXPECT_EQ(st.call("GET", "/corpus/materials/mat-000404").status, 404);
    r = st.call("POST", "/corpus/contexts",
                {{"subject", "music"}, {"entries", {{{"title", "Drum circles"}, {"background", "Rhythm together."}}}}});
    ASSERT_EQ(r.status, 201) << r.body;
    EXPECT_EQ(r.json_body().at("count"), 1);
    r = st.call("POST", "/corpus/contexts",
                {{"subject", "music"}, {"entries", {{{"title", "Drum circles"}, {"background", "Rhythm together."}}}}});
    EXPECT_EQ(r.json_body().at("error").at("code"), "all_duplicates");
    r = st.call("GET", "/corpus/pool?subject=music");
    EXPECT_EQ(r.content_type, "application/x-ndjson");
    EXPECT_EQ(std::count(r.body.begin(), r.body.end(), '\n'), 5);
    r = st.call("POST", "/corpus/materials", {{"materials", {{{"title", "New one"}, {"body", "Text."}}}}});
    ASSERT_EQ(r.status, 201) << r.body;
    EXPECT_EQ(r.json_body().at("materials")[0].at("id"), "mat-000011");
}

TEST(ApiConcurrency, MutationsOnOneSessionStayConsistent) {
    TempDir dir;
    Stack st(4, dir.path());
    const auto sid = st.new_session();
    const auto ctxs = st.service.recommend_contexts(sid);
    const auto texts = st.service.analyze_batch(sid, ctxs.at(0));
    std::vector<CardId> cards(ctxs.begin(), ctxs.end());
    cards.insert(cards.end(), texts.begin(), texts.end());

    std::atomic<int> applied{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            std::mt19937_64 rng(static_cast<std::uint64_t>(t));
            for (int i = 0; i < 60; ++i) {
                const auto& card = cards[rng() % cards.size()];
                try {
                    switch (rng() % 4) {
                        case 0: st.service.star(sid, card); break;
                        case 1: st.service.unstar(sid, card); break;
                        case 2: st.service.edit(sid, card, "edit " + std::to_string(t) + "/" + std::to_string(i)); break;
                        default:
                            if (rng() % 8 == 0) st.service.remove(sid, card);
                            else st.service.collection(sid);
                    }
                    ++applied;
                } catch (const Error& e) {
                    EXPECT_EQ(e.code(), ErrorCode::AlreadyDeleted);
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    EXPECT_GT(applied.load(), 0);

    const auto loaded = ss::SessionStore(dir.path()).load(sid);
    ASSERT_TRUE(loaded.has_value());
    EXPECT_EQ(loaded->state().check_invariants(), "");
    EXPECT_EQ(ss::replay(loaded->events()), loaded->state());
    EXPECT_EQ(ss::to_json(loaded->state()), st.service.session_json(sid));
}

TEST(ApiConcurrency, IndependentSessionsInParallel) {
    Stack st(4);
    std::vector<std::thread> threads;
    std::mutex m;
    std::set<std::string> sids;
    for (int t = 0; t < 6; ++t) {
        threads.emplace_back([&] {
            const auto sid = st.new_session();
            const auto cards = st.service.recommend_contexts(sid, 4);
            EXPECT_EQ(cards.size(), 4u);
            std::lock_guard lock(m);
            sids.insert(sid.value);
        });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(sids.size(), 6u);
    EXPECT_EQ(st.service.sessions().size(), 6u);
}

TEST(ApiPersistence, SessionsSurviveRestart) {
    TempDir dir;
    SessionId sid;
    json before;
    {
        Stack st(0, dir.path());
        sid = st.new_session();
        st.service.recommend_contexts(sid, 3);
        st.service.star(sid, CardId("cc-2"));
        before = st.service.session_json(sid);
    }
    Stack again(0, dir.path());
    EXPECT_EQ(again.service.sessions(), std::vector<SessionId>{sid});
    EXPECT_EQ(again.service.session_json(sid), before);
    EXPECT_FALSE(again.service.transcript_jsonl(sid).empty());
    const auto more = again.service.recommend_contexts(sid, 2);
    EXPECT_EQ(more.front().value, "cc-4");
}

TEST(ApiHttp, RealServerRoundTrip) {
    Stack st(2);
    api::HttpServer server(st.router);
    const int port = server.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread runner([&] { server.run(); });

    httplib::Client cli("127.0.0.1", port);
    cli.set_connection_timeout(2);
    httplib::Result health;
    for (int i = 0; i < 100 && !(health = cli.Get("/api/v1/health")); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);

    json ids = json::array();
    for (const auto& id : all_material_ids(*st.corpus)) ids.push_back(id.value);
    auto res = cli.Post("/api/v1/sessions", json{{"subjects", {"informal"}}, {"material_ids", ids}}.dump(),
                        "application/json");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 201) << res->body;
    const auto sid = json::parse(res->body).at("session_id").get<std::string>();

    res = cli.Post("/api/v1/sessions/" + sid + "/contexts/recommend", "", "application/json");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 202);
    const auto job = json::parse(res->body).at("job_id").get<std::string>();
    json doc;
    for (int i = 0; i < 500; ++i) {
        res = cli.Get("/api/v1/jobs/" + job);
        ASSERT_TRUE(res);
        doc = json::parse(res->body);
        if (doc.at("status") != "pending") break;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ASSERT_EQ(doc.at("status"), "done") << doc.dump();
    EXPECT_EQ(doc.at("result").at("cards").size(), 8u);

    res = cli.Get("/api/v1/sessions/" + sid + "/outcome/cc-1/download?format=txt");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 409);
    EXPECT_EQ(json::parse(res->body).at("error").at("code"), "nothing_to_export");
    res = cli.Get("/api/v1/missing");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);

    server.stop();
    runner.join();
}
