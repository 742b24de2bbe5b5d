#include "lessonweave/api/router.hpp"

#include <spdlog/spdlog.h>

#include <cctype>
#include <limits>

namespace lessonweave::api {

namespace {

using Params = std::map<std::string, std::string>;

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < path.size()) {
        if (path[i] == '/') {
            ++i;
            continue;
        }
        auto j = path.find('/', i);
        if (j == std::string_view::npos) j = path.size();
        out.emplace_back(path.substr(i, j - i));
        i = j;
    }
    return out;
}

Params parse_query(std::string_view q) {
    Params out;
    std::size_t i = 0;
    while (i <= q.size() && !q.empty()) {
        auto j = q.find('&', i);
        if (j == std::string_view::npos) j = q.size();
        auto part = q.substr(i, j - i);
        if (!part.empty()) {
            auto eq = part.find('=');
            if (eq == std::string_view::npos) {
                out[percent_decode(part, true)] = "";
            } else {
                out[percent_decode(part.substr(0, eq), true)] = percent_decode(part.substr(eq + 1), true);
            }
        }
        i = j + 1;
        if (j == q.size()) break;
    }
    return out;
}

Response json_response(int status, const json& body) {
    return {status, "application/json", body.dump()};
}

Response error_response(const Error& e) {
    return json_response(error_http_status(e.code()), {{"error", error_body(e)}});
}

const json& field(const json& body, const char* name) {
    if (!body.is_object() || !body.contains(name)) {
        throw Error(ErrorCode::BadRequest, std::string("missing field \"") + name + "\"", json{{"field", name}});
    }
    return body.at(name);
}

std::string string_field(const json& body, const char* name) {
    const auto& v = field(body, name);
    if (!v.is_string()) {
        throw Error(ErrorCode::BadRequest, std::string("field \"") + name + "\" must be a string", json{{"field", name}});
    }
    return v.get<std::string>();
}

std::vector<std::string> string_list(const json& body, const char* name) {
    const auto& v = field(body, name);
    std::vector<std::string> out;
    if (v.is_array()) {
        for (const auto& x : v) {
            if (!x.is_string()) break;
            out.push_back(x.get<std::string>());
        }
        if (out.size() == v.size()) return out;
    }
    throw Error(ErrorCode::BadRequest, std::string("field \"") + name + "\" must be a list of strings",
                json{{"field", name}});
}

long long integer_field(const json& body, const char* name) {
    const auto& v = field(body, name);
    if (!v.is_number_integer()) {
        throw Error(ErrorCode::BadRequest, std::string("field \"") + name + "\" must be an integer",
                    json{{"field", name}});
    }
    return v.get<long long>();
}

std::optional<std::size_t> optional_k(const json& body) {
    if (!body.is_object() || !body.contains("k") || body.at("k").is_null()) return std::nullopt;
    const auto k = integer_field(body, "k");
    if (k < 1) throw Error(ErrorCode::BadRequest, "k must be at least 1", json{{"k", k}});
    return static_cast<std::size_t>(k);
}

json pick_cards(const json& state, const char* kind, const std::vector<CardId>& ids) {
    json out = json::array();
    for (const auto& id : ids) {
        for (const auto& c : state.at(kind)) {
            if (c.at("card_id") == id.value) {
                out.push_back(c);
                break;
            }
        }
    }
    return out;
}

json card_of(const json& state, const CardId& id) {
    for (const char* kind : {"contexts", "texts"}) {
        for (const auto& c : state.at(kind)) {
            if (c.at("card_id") == id.value) return c;
        }
    }
    throw Error(ErrorCode::UnknownCard, "no card " + id.value, json{{"card_id", id}});
}

json report_json(const corpus::ImportReport& r) {
    json dups = json::array();
    for (const auto& d : r.duplicates) dups.push_back({{"index", d.index}, {"subject", d.subject}, {"title", d.title}});
    return {{"count", r.count}, {"duplicates", dups}, {"ids", r.ids}};
}

json material_summary(const corpus::ReadingMaterial& m) {
    return {{"id", m.id}, {"title", m.title}, {"source_label", m.source_label}};
}

json context_summary(const corpus::ContextEntry& e) {
    return {{"id", e.id},
            {"subject", e.subject},
            {"title", e.title},
            {"background", e.background},
            {"origin", corpus::to_string(e.origin)}};
}

}  // namespace

std::string percent_decode(std::string_view s, bool plus_is_space) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
            std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
            i += 2;
        } else if (plus_is_space && s[i] == '+') {
            out.push_back(' ');
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::string percent_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

Router::Router(Service& service, JobQueue& jobs) : service_(service), jobs_(jobs) { install(); }

void Router::add(std::string method, std::string_view pattern, Handler handler) {
    routes_.push_back({std::move(method), split_path(pattern), std::move(handler)});
}

std::vector<std::string> Router::routes() const {
    std::vector<std::string> out;
    for (const auto& r : routes_) {
        std::string path(kRoutePrefix);
        for (const auto& s : r.segments) path += "/" + s;
        out.push_back(r.method + " " + path);
    }
    return out;
}

Response Router::job(std::string kind, std::function<json()> work) const {
    const auto id = jobs_.submit(std::move(kind), std::move(work));
    return json_response(202, jobs_.poll(id));
}

Response Router::handle(const Request& request) const {
    try {
        const auto qpos = request.target.find('?');
        const std::string_view path = std::string_view(request.target).substr(0, qpos);
        const Params query =
            qpos == std::string::npos ? Params{} : parse_query(std::string_view(request.target).substr(qpos + 1));

        auto segments = split_path(path);
        const auto prefix = split_path(kRoutePrefix);
        if (segments.size() < prefix.size() || !std::equal(prefix.begin(), prefix.end(), segments.begin())) {
            throw Error(ErrorCode::NotFound, "no route for " + std::string(path));
        }
        segments.erase(segments.begin(), segments.begin() + static_cast<std::ptrdiff_t>(prefix.size()));
        for (auto& s : segments) s = percent_decode(s);

        bool path_known = false;
        for (const auto& route : routes_) {
            if (route.segments.size() != segments.size()) continue;
            Params params;
            bool ok = true;
            for (std::size_t i = 0; i < segments.size() && ok; ++i) {
                const auto& pat = route.segments[i];
                if (pat.size() > 2 && pat.front() == '{' && pat.back() == '}') {
                    params[pat.substr(1, pat.size() - 2)] = segments[i];
                } else {
                    ok = pat == segments[i];
                }
            }
            if (!ok) continue;
            path_known = true;
            if (route.method != request.method) continue;

            json body = json::object();
            if (!request.body.empty()) {
                try {
                    body = json::parse(request.body);
                } catch (const json::exception& ex) {
                    throw Error(ErrorCode::BadRequest, std::string("request body is not JSON: ") + ex.what());
                }
            }
            return route.handler(params, query, body);
        }
        if (path_known) {
            throw Error(ErrorCode::NotFound, request.method + " is not supported on " + std::string(path),
                        json{{"method", request.method}});
        }
        throw Error(ErrorCode::NotFound, "no route for " + std::string(path));
    } catch (const Error& e) {
        return error_response(e);
    } catch (const json::exception& e) {
        return error_response(Error(ErrorCode::BadRequest, e.what()));
    } catch (const std::exception& e) {
        spdlog::error("{} {} failed: {}", request.method, request.target, e.what());
        return error_response(Error(ErrorCode::Internal, e.what()));
    }
}

void Router::install() {
    auto& svc = service_;

    add("GET", "/health", [](const Params&, const Params&, const json&) {
        return json_response(200, {{"status", "ok"}});
    });

    // corpus
    add("GET", "/corpus", [&svc](const Params&, const Params& q, const json&) {
        const auto snap = svc.corpus().snapshot();
        json materials = json::array();
        for (const auto& m : snap->materials) materials.push_back(material_summary(m));
        json contexts = json::array();
        const auto subject = q.find("subject");
        for (const auto& e : snap->contexts) {
            if (subject != q.end() && e.subject != subject->second) continue;
            contexts.push_back(context_summary(e));
        }
        return json_response(200, {{"manifest", corpus::to_json(snap->manifest)},
                                   {"materials", materials},
                                   {"contexts", contexts}});
    });
    add("GET", "/corpus/materials/{id}", [&svc](const Params& p, const Params&, const json&) {
        const auto m = svc.corpus().material(MaterialId(p.at("id")));
        if (!m) throw Error(ErrorCode::UnknownMaterial, "no material " + p.at("id"), json{{"material_id", p.at("id")}});
        auto j = material_summary(*m);
        j["body"] = m->body;
        return json_response(200, j);
    });
    add("POST", "/corpus/materials", [&svc](const Params&, const Params&, const json& body) {
        const auto& list = field(body, "materials");
        if (!list.is_array()) throw Error(ErrorCode::BadRequest, "field \"materials\" must be a list");
        std::vector<corpus::MaterialRecord> records;
        for (const auto& m : list) {
            records.push_back({string_field(m, "title"), string_field(m, "body"),
                               m.contains("source_label") ? string_field(m, "source_label") : std::string()});
        }
        json out = json::array();
        for (const auto& m : svc.corpus().import_materials(records)) out.push_back(material_summary(m));
        return json_response(201, {{"materials", out}});
    });
    add("POST", "/corpus/contexts", [&svc](const Params&, const Params&, const json& body) {
        const auto& list = field(body, "entries");
        if (!list.is_array()) throw Error(ErrorCode::BadRequest, "field \"entries\" must be a list");
        std::vector<corpus::ContextRecord> records;
        if (body.contains("subject")) {
            const auto subject = string_field(body, "subject");
            for (const auto& e : list) {
                records.push_back({subject, string_field(e, "title"), string_field(e, "background")});
            }
            return json_response(201, report_json(svc.corpus().import_context_batch(subject, records)));
        }
        for (const auto& e : list) {
            records.push_back({string_field(e, "subject"), string_field(e, "title"), string_field(e, "background")});
        }
        return json_response(201, report_json(svc.corpus().import_contexts(records, corpus::Origin::Imported)));
    });
    add("GET", "/corpus/pool", [&svc](const Params&, const Params& q, const json&) {
        const auto subject = q.find("subject");
        const auto text = corpus::export_pool(*svc.corpus().snapshot(),
                                              subject == q.end() ? std::string_view{} : subject->second);
        return Response{200, "application/x-ndjson", text};
    });

    // sessions
    add("POST", "/sessions", [&svc](const Params&, const Params&, const json& body) {
        std::vector<MaterialId> ids;
        for (const auto& s : string_list(body, "material_ids")) ids.emplace_back(s);
        const auto language = body.contains("language") ? string_field(body, "language") : std::string("en");
        const auto sid = svc.create_session(string_list(body, "subjects"), ids, language);
        return json_response(201, {{"session_id", sid}, {"session", svc.session_json(sid)}});
    });
    add("GET", "/sessions", [&svc](const Params&, const Params&, const json&) {
        return json_response(200, {{"sessions", svc.sessions()}});
    });
    add("GET", "/sessions/{sid}", [&svc](const Params& p, const Params&, const json&) {
        return json_response(200, svc.session_json(SessionId(p.at("sid"))));
    });
    add("GET", "/sessions/{sid}/transcript", [&svc](const Params& p, const Params&, const json&) {
        return Response{200, "application/x-ndjson", svc.transcript_jsonl(SessionId(p.at("sid")))};
    });

    // contexts
    auto recommend = [this, &svc](const Params& p, const Params&, const json& body) {
        const SessionId sid(p.at("sid"));
        const auto k = optional_k(body);
        return job("recommend_contexts", [&svc, sid, k] {
            const auto ids = svc.recommend_contexts(sid, k);
            return json{{"cards", pick_cards(svc.session_json(sid), "contexts", ids)}};
        });
    };
    add("POST", "/sessions/{sid}/contexts/recommend", recommend);
    add("POST", "/sessions/{sid}/contexts/more", recommend);
    add("POST", "/sessions/{sid}/contexts/manual", [this, &svc](const Params& p, const Params&, const json& body) {
        const SessionId sid(p.at("sid"));
        const auto title = string_field(body, "title");
        const auto background = string_field(body, "background");
        return job("add_manual_context", [&svc, sid, title, background] {
            const auto id = svc.add_manual_context(sid, title, background);
            return json{{"card", card_of(svc.session_json(sid), id)}};
        });
    });

    // cards
    add("POST", "/sessions/{sid}/cards/{cid}/find", [this, &svc](const Params& p, const Params&, const json& body) {
        const SessionId sid(p.at("sid"));
        const CardId cid(p.at("cid"));
        const auto question = string_field(body, "question");
        return job("find", [&svc, sid, cid, question] {
            const auto answer = svc.find(sid, cid, question);
            return json{{"answer", answer}, {"card", card_of(svc.session_json(sid), cid)}};
        });
    });
    add("POST", "/sessions/{sid}/cards/{cid}/star", [&svc](const Params& p, const Params&, const json&) {
        return json_response(200, {{"card", svc.star(SessionId(p.at("sid")), CardId(p.at("cid")))}});
    });
    add("POST", "/sessions/{sid}/cards/{cid}/unstar", [&svc](const Params& p, const Params&, const json&) {
        return json_response(200, {{"card", svc.unstar(SessionId(p.at("sid")), CardId(p.at("cid")))}});
    });
    add("POST", "/sessions/{sid}/cards/{cid}/delete", [&svc](const Params& p, const Params&, const json&) {
        return json_response(200, {{"card", svc.remove(SessionId(p.at("sid")), CardId(p.at("cid")))}});
    });
    add("POST", "/sessions/{sid}/cards/{cid}/edit", [&svc](const Params& p, const Params&, const json& body) {
        return json_response(
            200, {{"card", svc.edit(SessionId(p.at("sid")), CardId(p.at("cid")), string_field(body, "text"))}});
    });
    add("POST", "/sessions/{sid}/cards/{cid}/review", [this, &svc](const Params& p, const Params&, const json& body) {
        const SessionId sid(p.at("sid"));
        const CardId cid(p.at("cid"));
        const auto text = string_field(body, "text");
        return job("review_user_edit", [&svc, sid, cid, text] {
            const auto review = svc.review_user_edit(sid, cid, text);
            return json{{"review", review}, {"card", card_of(svc.session_json(sid), cid)}};
        });
    });

    // texts under a context card
    add("POST", "/sessions/{sid}/contexts/{cid}/analyze",
        [this, &svc](const Params& p, const Params&, const json& body) {
            const SessionId sid(p.at("sid"));
            const CardId cid(p.at("cid"));
            const auto k = optional_k(body);
            return job("analyze_batch", [&svc, sid, cid, k] {
                const auto ids = svc.analyze_batch(sid, cid, k);
                return json{{"cards", pick_cards(svc.session_json(sid), "texts", ids)}};
            });
        });
    add("POST", "/sessions/{sid}/contexts/{cid}/texts", [this, &svc](const Params& p, const Params&, const json& body) {
        const SessionId sid(p.at("sid"));
        const CardId cid(p.at("cid"));
        const MaterialId mid(string_field(body, "material_id"));
        return job("add_text", [&svc, sid, cid, mid] {
            const auto id = svc.add_text(sid, cid, mid);
            return json{{"card", card_of(svc.session_json(sid), id)}};
        });
    });
    add("POST", "/sessions/{sid}/contexts/{cid}/compare",
        [this, &svc](const Params& p, const Params&, const json& body) {
            const SessionId sid(p.at("sid"));
            const CardId cid(p.at("cid"));
            const MaterialId a(string_field(body, "a"));
            const MaterialId b(string_field(body, "b"));
            return job("compare", [&svc, sid, cid, a, b] {
                return json{{"comparison", svc.compare(sid, cid, a, b)}};
            });
        });

    add("GET", "/sessions/{sid}/collection", [&svc](const Params& p, const Params&, const json&) {
        return json_response(200, {{"collection", session::to_json(svc.collection(SessionId(p.at("sid"))))}});
    });
    add("PUT", "/sessions/{sid}/lesson-count", [&svc](const Params& p, const Params&, const json& body) {
        const auto n = integer_field(body, "count");
        if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) {
            throw Error(ErrorCode::InvalidLessonCount, "lesson count out of range", json{{"count", n}});
        }
        const SessionId sid(p.at("sid"));
        svc.set_lesson_count(sid, static_cast<int>(n));
        return json_response(200, {{"expected_lesson_count", n}});
    });

    // outcomes
    add("GET", "/sessions/{sid}/outcome/{cid}", [&svc](const Params& p, const Params&, const json&) {
        return json_response(200, {{"outcome", svc.outcome(SessionId(p.at("sid")), CardId(p.at("cid")))}});
    });
    add("POST", "/sessions/{sid}/outcome/{cid}/plan", [this, &svc](const Params& p, const Params&, const json&) {
        const SessionId sid(p.at("sid"));
        const CardId cid(p.at("cid"));
        return job("generate_plan", [&svc, sid, cid] { return json{{"outcome", svc.generate_plan(sid, cid)}}; });
    });
    add("PUT", "/sessions/{sid}/outcome/{cid}/plan", [&svc](const Params& p, const Params&, const json& body) {
        return json_response(200, {{"outcome", svc.edit_plan(SessionId(p.at("sid")), CardId(p.at("cid")),
                                                             string_field(body, "text"))}});
    });
    add("PUT", "/sessions/{sid}/outcome/{cid}/introduction", [&svc](const Params& p, const Params&, const json& body) {
        return json_response(200, {{"outcome", svc.edit_introduction(SessionId(p.at("sid")), CardId(p.at("cid")),
                                                                     string_field(body, "text"))}});
    });
    add("POST", "/sessions/{sid}/outcome/{cid}/activities", [this, &svc](const Params& p, const Params&, const json&) {
        const SessionId sid(p.at("sid"));
        const CardId cid(p.at("cid"));
        return job("generate_activities",
                   [&svc, sid, cid] { return json{{"outcome", svc.generate_activities(sid, cid)}}; });
    });
    add("DELETE", "/sessions/{sid}/outcome/{cid}/activities/{title}",
        [&svc](const Params& p, const Params&, const json&) {
            return json_response(
                200, {{"outcome", svc.delete_activity(SessionId(p.at("sid")), CardId(p.at("cid")), p.at("title"))}});
        });
    add("GET", "/sessions/{sid}/outcome/{cid}/download", [&svc](const Params& p, const Params& q, const json&) {
        const auto f = q.find("format");
        const auto format = export_format_from_string(f == q.end() ? "txt" : f->second);
        auto text = svc.export_outcome(SessionId(p.at("sid")), CardId(p.at("cid")), format);
        return Response{200,
                        format == ExportFormat::Txt ? "text/plain; charset=utf-8" : "application/xhtml+xml; charset=utf-8",
                        std::move(text)};
    });

    // jobs
    add("GET", "/jobs/{id}", [this](const Params& p, const Params&, const json&) {
        return json_response(200, jobs_.poll(p.at("id")));
    });
}

}  // namespace lessonweave::api
