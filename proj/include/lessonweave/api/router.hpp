#pragma once

#include "lessonweave/api/jobs.hpp"
#include "lessonweave/api/service.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace lessonweave::api {

inline constexpr std::string_view kRoutePrefix = "/api/v1";

struct Request {
    std::string method;
    std::string target;  // path plus optional "?query", percent-encoded
    std::string body;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;

    json json_body() const { return json::parse(body); }
};

std::string percent_decode(std::string_view s, bool plus_is_space = false);
std::string percent_encode(std::string_view s);

// Transport-free request handling; the HTTP server and the script runner both
// go through here. Errors come back as {"error": {...}} with the status from
// error_http_status.
class Router {
public:
    Router(Service& service, JobQueue& jobs);

    Response handle(const Request& request) const;

    // "METHOD /path" for every route, for docs and tests.
    std::vector<std::string> routes() const;

private:
    using Params = std::map<std::string, std::string>;
    using Handler = std::function<Response(const Params& path, const Params& query, const json& body)>;

    struct Route {
        std::string method;
        std::vector<std::string> segments;  // "{name}" captures one segment
        Handler handler;
    };

    void add(std::string method, std::string_view pattern, Handler handler);
    Response job(std::string kind, std::function<json()> work) const;
    void install();

    Service& service_;
    JobQueue& jobs_;
    std::vector<Route> routes_;
};

}  // namespace lessonweave::api
