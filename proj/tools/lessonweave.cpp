#include "lessonweave/api/server.hpp"
#include "lessonweave/cli/script.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>

namespace lw = lessonweave;
namespace fs = std::filesystem;

namespace {

lw::api::HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server != nullptr) g_server->stop();
}

std::pair<std::string, int> split_listen(const std::string& listen) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw lw::Error(lw::ErrorCode::InvalidConfig, "--listen expects host:port");
    return {listen.substr(0, colon), std::stoi(listen.substr(colon + 1))};
}

std::optional<fs::path> opt_path(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return fs::path(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lessonweave: context-based reading course planner"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string log_level = "info";
    std::string provider_config;
    std::string corpus_dir;
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")->capture_default_str();
    app.add_option("--provider-config", provider_config, "provider config JSON (default: offline hash_stub)");
    app.add_option("--corpus-dir", corpus_dir, "corpus directory (default: in memory)");

    // serve
    auto* serve = app.add_subcommand("serve", "run the HTTP API");
    std::string listen = "127.0.0.1:8080";
    std::string fixtures;
    std::string session_dir;
    std::string static_dir;
    std::size_t workers = 2;
    std::size_t batch = lw::retrieval::kDefaultBatch;
    serve->add_option("--listen", listen, "host:port")->capture_default_str();
    serve->add_option("--fixtures", fixtures, "replay fixture file (replay mode)");
    serve->add_option("--session-dir", session_dir, "persist sessions here");
    serve->add_option("--static-dir", static_dir, "serve the built web UI from here");
    serve->add_option("--workers", workers, "generation job threads")->capture_default_str();
    serve->add_option("--batch-size", batch, "cards per recommendation or analysis batch")->capture_default_str();

    // corpus-import
    auto* import = app.add_subcommand("corpus-import", "import pool and material files");
    std::vector<std::string> pools;
    std::vector<std::string> materials;
    std::string subject;
    import->add_option("--pool", pools, "pool JSONL file")->check(CLI::ExistingFile);
    import->add_option("--materials", materials, "materials JSONL file")->check(CLI::ExistingFile);
    import->add_option("--subject", subject, "import pools as one batch for this subject");

    // corpus-export
    auto* exp = app.add_subcommand("corpus-export", "write the context pool as JSONL");
    std::string export_subject;
    std::string export_out;
    exp->add_option("--subject", export_subject, "only this subject");
    exp->add_option("-o,--output", export_out, "output file (default: stdout)");

    // run-script / record-fixtures
    std::string script;
    std::string out_dir;
    bool summary_json = false;
    auto* run = app.add_subcommand("run-script", "run a session script headlessly");
    run->add_option("script", script, "session script JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--fixtures", fixtures, "replay fixture file (replay mode)");
    run->add_option("--out-dir", out_dir, "write exports, transcripts and summary.json here");
    run->add_flag("--summary-json", summary_json, "print a machine-readable summary on stdout");

    auto* record = app.add_subcommand("record-fixtures", "run a script against the configured provider and record fixtures");
    std::string fixture_out;
    record->add_option("script", script, "session script JSON")->required()->check(CLI::ExistingFile);
    record->add_option("-o,--output", fixture_out, "fixture file to write")->required();
    record->add_option("--out-dir", out_dir, "write exports, transcripts and summary.json here");
    record->add_flag("--summary-json", summary_json, "print a machine-readable summary on stdout");

    CLI11_PARSE(app, argc, argv);

    spdlog::set_default_logger(spdlog::stderr_color_mt("lessonweave"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    lw::cli::RuntimeOptions options;
    options.provider_config = opt_path(provider_config);
    options.corpus_dir = opt_path(corpus_dir);

    try {
        if (serve->parsed()) {
            options.fixtures = opt_path(fixtures);
            options.session_dir = opt_path(session_dir);
            options.workers = workers;
            options.batch_size = batch;
            auto rt = lw::cli::make_runtime(options);
            lw::api::HttpServer server(*rt->router, opt_path(static_dir));
            const auto [host, port] = split_listen(listen);
            const int bound = server.bind(host, port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            spdlog::info("listening on {}:{}", host, bound);
            server.run();
            g_server = nullptr;
            return 0;
        }

        if (import->parsed()) {
            if (pools.empty() && materials.empty()) {
                std::cerr << "corpus-import: give at least one --pool or --materials file\n";
                return 2;
            }
            auto rt = lw::cli::make_runtime(options);
            lw::json summary{{"materials", lw::json::array()}, {"pools", lw::json::array()}};
            int status = 0;
            for (const auto& f : materials) {
                const auto added = rt->corpus->import_materials(lw::corpus::read_materials_file(f));
                summary["materials"].push_back({{"file", f}, {"count", added.size()}});
            }
            for (const auto& f : pools) {
                const auto records = lw::corpus::read_pool_file(f);
                lw::json entry{{"file", f}};
                try {
                    const auto report = subject.empty() ? rt->corpus->import_contexts(records)
                                                        : rt->corpus->import_context_batch(subject, records);
                    entry["count"] = report.count;
                    entry["duplicates"] = report.duplicates.size();
                } catch (const lw::Error& ex) {
                    if (ex.code() != lw::ErrorCode::AllDuplicates) throw;
                    entry["count"] = 0;
                    entry["duplicates"] = records.size();
                    entry["error"] = lw::error_code_name(ex.code());
                    status = 1;
                }
                summary["pools"].push_back(entry);
            }
            summary["manifest"] = lw::corpus::to_json(rt->corpus->manifest());
            std::cout << summary.dump(2) << "\n";
            return status;
        }

        if (exp->parsed()) {
            auto rt = lw::cli::make_runtime(options);
            const auto text = lw::corpus::export_pool(*rt->corpus->snapshot(), export_subject);
            if (export_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream(export_out, std::ios::binary) << text;
            }
            return 0;
        }

        const bool recording = record->parsed();
        options.fixtures = recording ? std::nullopt : opt_path(fixtures);
        options.record = recording;
        auto rt = lw::cli::make_runtime(options);
        const fs::path script_path(script);
        const auto result =
            lw::cli::run_script(*rt, lw::cli::load_script(script_path), script_path.parent_path(), opt_path(out_dir));
        if (recording) {
            rt->recorder->write(fixture_out);
            spdlog::info("recorded {} fixtures to {}", rt->recorder->records().size(), fixture_out);
        }
        if (summary_json) std::cout << result.summary().dump(2) << "\n";
        return result.ok() ? 0 : 1;
    } catch (const lw::Error& ex) {
        spdlog::error("{}: {}", lw::error_code_name(ex.code()), ex.what());
        return 1;
    }
}
