#include "lessonweave/cli/runtime.hpp"

#include <fstream>
#include <sstream>

namespace lessonweave::cli {

llm::ProviderConfig load_provider_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read provider config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + ex.what());
    }
    auto config = llm::provider_config_from_json(j);
    if (!config.fixture_path.empty() && fs::path(config.fixture_path).is_relative()) {
        config.fixture_path = (path.parent_path() / config.fixture_path).string();
    }
    return config;
}

std::unique_ptr<Runtime> make_runtime(const RuntimeOptions& options) {
    auto config = options.provider_config ? load_provider_config(*options.provider_config) : llm::ProviderConfig{};
    if (options.fixtures) {
        config.kind = llm::ProviderKind::Replay;
        config.fixture_path = options.fixtures->string();
    }
    auto rt = std::make_unique<Runtime>();
    std::shared_ptr<llm::ChatProvider> chat = llm::make_chat_provider(config);
    if (options.record) {
        rt->recorder = std::make_shared<llm::RecordingChatProvider>(chat);
        chat = rt->recorder;
    }
    rt->gateway = std::make_shared<llm::Gateway>(chat, llm::make_embedder(config), config.char_budget);
    rt->corpus = corpus::Corpus::open(rt->gateway, options.corpus_dir);

    api::ServiceOptions service_options;
    service_options.session_dir = options.session_dir;
    service_options.catalog_dir = options.catalog_dir;
    service_options.batch_size = options.batch_size;
    rt->service = std::make_unique<api::Service>(rt->corpus, rt->gateway, service_options);
    rt->jobs = std::make_unique<api::JobQueue>(options.workers);
    rt->router = std::make_unique<api::Router>(*rt->service, *rt->jobs);
    return rt;
}

}  // namespace lessonweave::cli
