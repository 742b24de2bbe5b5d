#pragma once

#include "lessonweave/api/router.hpp"

#include <filesystem>
#include <memory>
#include <optional>

namespace lessonweave::cli {

namespace fs = std::filesystem;

struct RuntimeOptions {
    std::optional<fs::path> provider_config;  // JSON ProviderConfig; hash_stub when absent
    std::optional<fs::path> fixtures;         // forces replay from this file
    std::optional<fs::path> corpus_dir;
    std::optional<fs::path> session_dir;
    std::optional<fs::path> catalog_dir;
    std::size_t batch_size = retrieval::kDefaultBatch;
    std::size_t workers = 0;  // job threads; 0 runs jobs inline
    bool record = false;      // wrap the chat provider in a recorder
};

llm::ProviderConfig load_provider_config(const fs::path& path);

// Everything a server or script run needs, wired together.
struct Runtime {
    std::shared_ptr<llm::RecordingChatProvider> recorder;
    std::shared_ptr<llm::Gateway> gateway;
    std::shared_ptr<corpus::Corpus> corpus;
    std::unique_ptr<api::Service> service;
    std::unique_ptr<api::JobQueue> jobs;
    std::unique_ptr<api::Router> router;
};

std::unique_ptr<Runtime> make_runtime(const RuntimeOptions& options);

}  // namespace lessonweave::cli
