#include "pools.hpp"
#include "retrieval_oracle.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace lwtest;
namespace cp = lessonweave::corpus;
namespace rv = lessonweave::retrieval;

namespace {

template <class Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::Internal;
}

class FlakyEmbedder final : public llm::Embedder {
public:
    explicit FlakyEmbedder(std::size_t dim) : dim_(dim) {}
    Embedding embed(std::string_view) override {
        if (fail) throw Error(ErrorCode::ProviderTimeout, "timed out");
        Embedding v(dim_, 0.0f);
        v[0] = 1.0f;
        return v;
    }
    std::string tag() const override { return "flaky"; }
    bool fail = false;
    std::size_t dim_;
};

cp::ContextEntry entry(const std::string& id, const std::string& subject, Embedding v) {
    cp::ContextEntry e;
    e.id = ContextId(id);
    e.subject = subject;
    e.title = id;
    e.background = "b";
    e.embedding = std::move(v);
    return e;
}

cp::ReadingMaterial material(const std::string& id, Embedding v) {
    cp::ReadingMaterial m;
    m.id = MaterialId(id);
    m.title = id;
    m.body = "body";
    m.embedding = std::move(v);
    return m;
}

}  // namespace

TEST(Corpus, SampleImportCountsAndManifest) {
    auto c = sample_corpus(synthetic_gateway());
    const auto m = c->manifest();
    EXPECT_EQ(m.material_count, 10u);
    EXPECT_EQ(m.pool_counts_by_subject.at("informal"), 14u);
    std::size_t subject_total = 0;
    for (const auto& [s, n] : m.pool_counts_by_subject) {
        if (s != "informal") subject_total += n;
    }
    EXPECT_EQ(subject_total, 16u);
    EXPECT_EQ(m.embedding_dimension, 64u);
    EXPECT_EQ(m.provider_tag, "hash-mt19937_64:64");
    const auto snap = c->snapshot();
    EXPECT_EQ(snap->materials.front().id.value, "mat-000001");
    EXPECT_EQ(snap->contexts.front().id.value, "ctx-000001");
    EXPECT_EQ(snap->contexts.back().id.value, "ctx-000030");
}

TEST(Corpus, ReimportIsAllDuplicates) {
    auto c = sample_corpus(synthetic_gateway());
    const auto records = cp::read_pool_file(source_path("data/pools/informal_sample.jsonl"));
    try {
        c->import_contexts(records);
        FAIL() << "expected AllDuplicates";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AllDuplicates);
        EXPECT_EQ(e.detail().at("count"), 0);
        EXPECT_EQ(e.detail().at("duplicates").size(), records.size());
    }
    EXPECT_EQ(c->manifest().pool_counts_by_subject.at("informal"), 14u);
}

TEST(Corpus, PartialDuplicatesReported) {
    auto c = std::make_shared<cp::Corpus>(synthetic_gateway());
    c->import_contexts({{"art", "Colour", "about colour"}});
    const auto r = c->import_contexts(
        {{"art", "Colour", "again"}, {"art", "Line", "lines"}, {"art", "Line", "repeat in batch"}, {"music", "Colour", "other subject"}});
    EXPECT_EQ(r.count, 2u);
    ASSERT_EQ(r.duplicates.size(), 2u);
    EXPECT_EQ(r.duplicates[0].index, 0u);
    EXPECT_EQ(r.duplicates[1].index, 2u);
    EXPECT_EQ(r.ids.size(), 2u);
    EXPECT_EQ(c->snapshot()->find_context("art", "Colour")->background, "about colour");
}

TEST(Corpus, BatchImportUsesSubject) {
    auto c = std::make_shared<cp::Corpus>(synthetic_gateway());
    const auto r = c->import_context_batch("science", {{"", "Magnets", "push and pull"}, {"x", "Ice", "melting"}});
    EXPECT_EQ(r.count, 2u);
    EXPECT_EQ(c->manifest().pool_counts_by_subject.at("science"), 2u);
    EXPECT_EQ(code_of([&] { c->import_context_batch("  ", {{"", "A", "b"}}); }), ErrorCode::EmptySubject);
}

TEST(Corpus, ValidationErrors) {
    auto c = std::make_shared<cp::Corpus>(synthetic_gateway());
    EXPECT_EQ(code_of([&] { c->import_materials({{"T", "  ", ""}}); }), ErrorCode::EmptyBody);
    EXPECT_EQ(code_of([&] { c->import_materials({{"", "body", ""}}); }), ErrorCode::EmptyTitle);
    EXPECT_EQ(code_of([&] { c->import_contexts({{"", "t", "b"}}); }), ErrorCode::EmptySubject);
    EXPECT_EQ(code_of([&] { c->import_contexts({{"s", " ", "b"}}); }), ErrorCode::EmptyTitle);
    EXPECT_EQ(code_of([&] { c->import_contexts({{"s", "t", ""}}); }), ErrorCode::EmptyBackground);
    EXPECT_EQ(c->manifest().material_count, 0u);
    EXPECT_TRUE(c->manifest().pool_counts_by_subject.empty());
}

TEST(Corpus, ImportIsAtomic) {
    auto c = std::make_shared<cp::Corpus>(synthetic_gateway());
    EXPECT_EQ(code_of([&] { c->import_contexts({{"art", "Fine", "ok"}, {"art", "Broken", ""}}); }),
              ErrorCode::EmptyBackground);
    EXPECT_TRUE(c->snapshot()->contexts.empty());

    auto emb = std::make_shared<FlakyEmbedder>(4);
    auto gw = std::make_shared<llm::Gateway>(std::make_shared<llm::SyntheticChatProvider>(), emb);
    cp::Corpus c2(gw);
    c2.import_contexts({{"art", "A", "a"}});
    emb->fail = true;
    EXPECT_EQ(code_of([&] { c2.import_contexts({{"art", "B", "b"}, {"art", "C", "c"}}); }),
              ErrorCode::ProviderUnavailable);
    EXPECT_EQ(c2.snapshot()->contexts.size(), 1u);
}

TEST(Corpus, DimensionChangeRejected) {
    auto emb = std::make_shared<FlakyEmbedder>(4);
    auto gw = std::make_shared<llm::Gateway>(std::make_shared<llm::SyntheticChatProvider>(), emb);
    cp::Corpus c(gw);
    c.import_contexts({{"art", "A", "a"}});
    emb->dim_ = 5;
    EXPECT_EQ(code_of([&] { c.import_contexts({{"art", "B", "b"}}); }), ErrorCode::DimensionMismatch);
}

TEST(Corpus, UserContext) {
    auto c = std::make_shared<cp::Corpus>(synthetic_gateway());
    const auto e = c->embed_user_context("Rainy days", "What we do indoors");
    EXPECT_EQ(e.subject, cp::kUserDefinedSubject);
    EXPECT_EQ(e.origin, cp::Origin::Imported);
    EXPECT_EQ(e.embedding.size(), 64u);
    EXPECT_EQ(code_of([&] { c->embed_user_context("Rainy days", "again"); }), ErrorCode::DuplicateEntry);
    EXPECT_EQ(code_of([&] { c->embed_user_context("", "x"); }), ErrorCode::EmptyTitle);
    EXPECT_EQ(code_of([&] { c->embed_user_context("x", " "); }), ErrorCode::EmptyBackground);
    ASSERT_TRUE(c->context(e.id).has_value());
}

TEST(Corpus, EmbeddingTextIsTitleAndBackground) {
    auto gw = synthetic_gateway();
    auto c = std::make_shared<cp::Corpus>(gw);
    c->import_contexts({{"art", "Colour", "about colour"}});
    EXPECT_EQ(c->snapshot()->contexts[0].embedding, gw->embed("Colour\nabout colour"));
}

TEST(Corpus, PersistsAndReloads) {
    TempDir dir;
    auto gw = synthetic_gateway();
    {
        auto c = cp::Corpus::open(gw, dir.path());
        c->import_materials(cp::read_materials_file(source_path("data/materials/sample_materials.jsonl")));
        c->import_contexts(cp::read_pool_file(source_path("data/pools/informal_sample.jsonl")));
        c->embed_user_context("Mine", "my own");
    }
    auto before = sample_corpus(gw);
    auto c = cp::Corpus::open(gw, dir.path());
    const auto s = c->snapshot();
    EXPECT_EQ(s->materials.size(), 10u);
    EXPECT_EQ(s->contexts.size(), 15u);
    for (std::size_t i = 0; i < 14; ++i) {
        EXPECT_EQ(s->contexts[i].embedding, before->snapshot()->contexts[i].embedding);
    }
    EXPECT_EQ(s->contexts.back().origin, cp::Origin::Imported);
    const auto r = c->import_contexts({{"art", "New", "n"}});
    EXPECT_EQ(r.ids[0].value, "ctx-000016");

    auto other = gateway_with(std::make_shared<llm::SyntheticChatProvider>(), 32);
    EXPECT_EQ(code_of([&] { cp::Corpus::open(other, dir.path()); }), ErrorCode::ProviderMismatch);
}

TEST(Corpus, PoolRoundTripIsByteExact) {
    for (const auto* f : {"data/pools/informal_sample.jsonl", "data/pools/subject_sample.jsonl"}) {
        const auto text = read_file(source_path(f));
        auto c = std::make_shared<cp::Corpus>(synthetic_gateway());
        c->import_contexts(cp::parse_pool(text));
        EXPECT_EQ(cp::export_pool(*c->snapshot()), text) << f;
        EXPECT_EQ(cp::render_pool(cp::parse_pool(text)), text) << f;
    }
}

TEST(Corpus, ExportBySubject) {
    auto c = sample_corpus(synthetic_gateway());
    const auto art = cp::parse_pool(cp::export_pool(*c->snapshot(), "art"));
    EXPECT_EQ(art.size(), 4u);
    for (const auto& r : art) EXPECT_EQ(r.subject, "art");
}

TEST(Corpus, DocumentedPoolSizes) {
    TempDir dir;
    const auto informal = dir.path() / "informal.jsonl";
    const auto subject = dir.path() / "subject.jsonl";
    std::ofstream(informal, std::ios::binary) << cp::render_pool(generated_informal_pool());
    std::ofstream(subject, std::ios::binary) << cp::render_pool(generated_subject_pool());
    auto c = std::make_shared<cp::Corpus>(synthetic_gateway());
    EXPECT_EQ(c->import_contexts(cp::read_pool_file(informal)).count, 113u);
    EXPECT_EQ(c->import_contexts(cp::read_pool_file(subject)).count, 144u);
}

TEST(Corpus, MalformedPoolLine) {
    EXPECT_EQ(code_of([] { cp::parse_pool("{\"subject\":\"a\",\"title\":\"b\"}\nnot json\n"); }),
              ErrorCode::BadRequest);
}

TEST(Cosine, OracleValues) {
    const std::vector<float> a{1, 2, 3}, b{2, 3, 5};
    EXPECT_NEAR(rv::cosine(a, b), 0.997176465, 1e-9);
    const std::vector<float> c{0.5f, -1.0f, 0.25f, 2.0f}, d{1.0f, 1.0f, -0.5f, 1.5f};
    EXPECT_NEAR(rv::cosine(c, d), 0.485744493, 1e-9);
    EXPECT_DOUBLE_EQ(rv::cosine(a, a), 1.0);
}

TEST(Cosine, Errors) {
    const std::vector<float> a{1, 2}, b{1, 2, 3}, z{0, 0};
    EXPECT_EQ(code_of([&] { rv::cosine(a, b); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([&] { rv::cosine(a, z); }), ErrorCode::ZeroVector);
}

TEST(Query, MeanOfMaterialsIsNormalized) {
    std::vector<cp::ReadingMaterial> ms{material("mat-1", {1, 0}), material("mat-2", {0, 1})};
    const auto q = rv::build_session_query(ms);
    EXPECT_EQ(q.provenance, rv::QueryProvenance::MeanOfMaterials);
    EXPECT_NEAR(q.vector[0], 0.70710678, 1e-6);
    EXPECT_NEAR(q.vector[1], 0.70710678, 1e-6);
    EXPECT_EQ(code_of([] { rv::build_session_query({}); }), ErrorCode::EmptyMaterialSet);
    std::vector<cp::ReadingMaterial> opposite{material("mat-1", {1, 0}), material("mat-2", {-1, 0})};
    EXPECT_EQ(code_of([&] { rv::build_session_query(opposite); }), ErrorCode::DegenerateQuery);
    std::vector<cp::ReadingMaterial> mixed{material("mat-1", {1, 0}), material("mat-2", {1, 0, 0})};
    EXPECT_EQ(code_of([&] { rv::build_session_query(mixed); }), ErrorCode::DimensionMismatch);
}

TEST(TopK, TiesBreakByAscendingId) {
    std::vector<cp::ContextEntry> pool{entry("ctx-3", "art", {1, 0}), entry("ctx-1", "art", {1, 0}),
                                       entry("ctx-2", "art", {0, 1}), entry("ctx-0", "music", {1, 0})};
    rv::QueryVector q{{1, 0}, rv::QueryProvenance::MeanOfMaterials};
    const auto hits = rv::top_k_contexts(pool, q, {"art"}, 3);
    ASSERT_EQ(hits.size(), 3u);
    EXPECT_EQ(hits[0].record_id, "ctx-1");
    EXPECT_EQ(hits[1].record_id, "ctx-3");
    EXPECT_EQ(hits[2].record_id, "ctx-2");
    const auto all = rv::top_k_contexts(pool, q, {}, 10);
    EXPECT_EQ(all.size(), 4u);
    EXPECT_EQ(all[0].record_id, "ctx-0");
}

TEST(TopK, ExclusionsAndEmptyResult) {
    std::vector<cp::ContextEntry> pool{entry("ctx-1", "art", {1, 0}), entry("ctx-2", "art", {0, 1})};
    rv::QueryVector q{{1, 0}, rv::QueryProvenance::MeanOfMaterials};
    const auto hits = rv::top_k_contexts(pool, q, {"art"}, 5, {ContextId("ctx-1")});
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].record_id, "ctx-2");
    EXPECT_EQ(code_of([&] { rv::top_k_contexts(pool, q, {"science"}, 5); }), ErrorCode::NoCandidates);
    EXPECT_EQ(code_of([&] { rv::top_k_contexts(pool, q, {"art"}, 0); }), ErrorCode::BadRequest);
    EXPECT_EQ(code_of([&] { rv::top_k_contexts(pool, rv::QueryVector{}, {"art"}, 1); }), ErrorCode::ZeroVector);
    rv::QueryVector wide{{1, 0, 0}, rv::QueryProvenance::MeanOfMaterials};
    EXPECT_EQ(code_of([&] { rv::top_k_contexts(pool, wide, {"art"}, 1); }), ErrorCode::DimensionMismatch);
}

TEST(TopK, MaterialsForContext) {
    std::vector<cp::ReadingMaterial> ms{material("mat-2", {0, 1}), material("mat-1", {1, 1}),
                                        material("mat-3", {1, 0})};
    const auto ctx = entry("ctx-1", "art", {1, 0});
    EXPECT_EQ(rv::context_query(ctx).provenance, rv::QueryProvenance::SingleContext);
    const auto hits = rv::top_k_materials(ctx, ms, 2);
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[0].record_id, "mat-3");
    EXPECT_EQ(hits[1].record_id, "mat-1");
    EXPECT_EQ(code_of([&] { rv::top_k_materials(ctx, ms, 3, {MaterialId("mat-1"), MaterialId("mat-2"), MaterialId("mat-3")}); }),
              ErrorCode::NoCandidates);
}

TEST(TopK, MatchesBruteForceOracle) {
    std::mt19937_64 rng(20261015);
    for (int i = 0; i < 40; ++i) {
        const std::size_t records = 1 + rng() % 400;
        const std::size_t dim = 8 + rng() % 249;
        EXPECT_EQ(check_random_case(rng, records, dim), "") << "case " << i;
    }
}
