#include "lessonweave/api/server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace lessonweave::api {

struct HttpServer::Impl {
    const Router& router;
    httplib::Server server;

    explicit Impl(const Router& r) : router(r) {}

    void dispatch(const httplib::Request& req, httplib::Response& res) {
        const auto out = router.handle({req.method, req.target, req.body});
        res.status = out.status;
        res.set_content(out.body, out.content_type);
        spdlog::info("{} {} -> {}", req.method, req.path, out.status);
    }
};

HttpServer::HttpServer(const Router& router, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(router)) {
    auto* impl = impl_.get();
    const std::string pattern = std::string(kRoutePrefix) + "/.*";
    auto handler = [impl](const httplib::Request& req, httplib::Response& res) { impl->dispatch(req, res); };
    impl->server.Get(pattern, handler);
    impl->server.Post(pattern, handler);
    impl->server.Put(pattern, handler);
    impl->server.Delete(pattern, handler);
    if (static_dir && !impl->server.set_mount_point("/", static_dir->string())) {
        throw Error(ErrorCode::InvalidConfig, "static directory " + static_dir->string() + " does not exist");
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    const bool ok = port == 0 ? (port = impl_->server.bind_to_any_port(host)) > 0
                              : impl_->server.bind_to_port(host, port);
    if (!ok) throw Error(ErrorCode::InvalidConfig, "cannot listen on " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace lessonweave::api
