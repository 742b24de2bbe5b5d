#pragma once

#include "lessonweave/api/router.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace lessonweave::api {

// HTTP front for a Router. Static files (the built web UI) are served from
// `static_dir` outside the API prefix.
class HttpServer {
public:
    HttpServer(const Router& router, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~HttpServer();

    // Port 0 picks a free port. Returns the bound port; throws InvalidConfig.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace lessonweave::api
