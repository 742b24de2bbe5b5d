#include "lessonweave/retrieval/retrieval.hpp"

#include "lessonweave/error.hpp"

#include <algorithm>
#include <cmath>

namespace lessonweave::retrieval {

namespace {

constexpr double kDegenerateNorm = 1e-9;

bool ranks_before(const RankedHit& a, const RankedHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.record_id < b.record_id;
}

void check_query(const QueryVector& query) {
    if (query.vector.empty()) throw Error(ErrorCode::ZeroVector, "query vector is empty");
}

std::vector<RankedHit> select_top(std::vector<RankedHit> hits, std::size_t k) {
    if (hits.empty()) throw Error(ErrorCode::NoCandidates, "no candidates left after filtering");
    const auto keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                      ranks_before);
    hits.resize(keep);
    return hits;
}

}  // namespace

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with dimensions " +
                                                      std::to_string(a.size()) + " and " +
                                                      std::to_string(b.size()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

QueryVector build_session_query(std::span<const corpus::ReadingMaterial> materials) {
    if (materials.empty()) throw Error(ErrorCode::EmptyMaterialSet, "no materials selected");
    const auto dim = materials.front().embedding.size();
    std::vector<double> sum(dim, 0.0);
    for (const auto& m : materials) {
        if (m.embedding.size() != dim) {
            throw Error(ErrorCode::DimensionMismatch, "material embeddings differ in dimension");
        }
        for (std::size_t i = 0; i < dim; ++i) sum[i] += m.embedding[i];
    }
    double sq = 0.0;
    for (auto& x : sum) {
        x /= static_cast<double>(materials.size());
        sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (norm < kDegenerateNorm) {
        throw Error(ErrorCode::DegenerateQuery, "mean of material embeddings is near zero");
    }
    QueryVector q;
    q.provenance = QueryProvenance::MeanOfMaterials;
    q.vector.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) q.vector[i] = static_cast<float>(sum[i] / norm);
    return q;
}

QueryVector context_query(const corpus::ContextEntry& context) {
    return {context.embedding, QueryProvenance::SingleContext};
}

std::vector<RankedHit> top_k_contexts(std::span<const corpus::ContextEntry> pool,
                                      const QueryVector& query,
                                      const std::set<std::string>& subjects, std::size_t k,
                                      const std::set<ContextId>& exclude) {
    if (k == 0) throw Error(ErrorCode::BadRequest, "k must be at least 1");
    check_query(query);
    std::vector<RankedHit> hits;
    for (const auto& entry : pool) {
        if (!subjects.empty() && !subjects.contains(entry.subject)) continue;
        if (exclude.contains(entry.id)) continue;
        hits.push_back({entry.id.value, cosine(query.vector, entry.embedding)});
    }
    return select_top(std::move(hits), k);
}

std::vector<RankedHit> top_k_materials(const corpus::ContextEntry& context,
                                       std::span<const corpus::ReadingMaterial> materials,
                                       std::size_t k, const std::set<MaterialId>& exclude) {
    if (k == 0) throw Error(ErrorCode::BadRequest, "k must be at least 1");
    const auto query = context_query(context);
    check_query(query);
    std::vector<RankedHit> hits;
    for (const auto& m : materials) {
        if (exclude.contains(m.id)) continue;
        hits.push_back({m.id.value, cosine(query.vector, m.embedding)});
    }
    return select_top(std::move(hits), k);
}

}  // namespace lessonweave::retrieval
