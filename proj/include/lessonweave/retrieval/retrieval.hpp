#pragma once

#include "lessonweave/corpus/corpus.hpp"

#include <set>
#include <span>
#include <string>
#include <vector>

namespace lessonweave::retrieval {

// Batch size for context recommendations and text analyses.
inline constexpr std::size_t kDefaultBatch = 8;

enum class QueryProvenance { MeanOfMaterials, SingleContext };

struct QueryVector {
    Embedding vector;
    QueryProvenance provenance = QueryProvenance::MeanOfMaterials;
};

struct RankedHit {
    std::string record_id;
    double score = 0.0;

    bool operator==(const RankedHit&) const = default;
};

// dot(a, b) / (|a| |b|), accumulated in double and clamped to [-1, 1].
double cosine(std::span<const float> a, std::span<const float> b);

// Renormalized arithmetic mean of the materials' embeddings.
QueryVector build_session_query(std::span<const corpus::ReadingMaterial> materials);

QueryVector context_query(const corpus::ContextEntry& context);

// Highest-cosine pool entries whose subject is in `subjects` (empty set means
// every subject) and whose id is not excluded. Sorted by score descending,
// ties by ascending id. Throws NoCandidates when the filter leaves nothing.
std::vector<RankedHit> top_k_contexts(std::span<const corpus::ContextEntry> pool,
                                      const QueryVector& query,
                                      const std::set<std::string>& subjects, std::size_t k,
                                      const std::set<ContextId>& exclude = {});

std::vector<RankedHit> top_k_materials(const corpus::ContextEntry& context,
                                       std::span<const corpus::ReadingMaterial> materials,
                                       std::size_t k, const std::set<MaterialId>& exclude = {});

}  // namespace lessonweave::retrieval
