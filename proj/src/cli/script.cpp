#include "lessonweave/cli/script.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

namespace lessonweave::cli {

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::BadRequest, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::CorpusIo, "cannot write " + path.string());
}

const json& lookup(const json& vars, const std::string& name) {
    const json* cur = &vars;
    std::size_t i = 0;
    while (i <= name.size()) {
        auto j = name.find('.', i);
        if (j == std::string::npos) j = name.size();
        const auto key = name.substr(i, j - i);
        if (cur->is_object() && cur->contains(key)) {
            cur = &cur->at(key);
        } else if (cur->is_array() && !key.empty() && key.find_first_not_of("0123456789") == std::string::npos &&
                   std::stoul(key) < cur->size()) {
            cur = &cur->at(std::stoul(key));
        } else {
            throw Error(ErrorCode::BadRequest, "unknown script variable {{" + name + "}}");
        }
        i = j + 1;
    }
    return *cur;
}

std::string as_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

std::string substitute_text(const std::string& s, const json& vars, bool encode) {
    std::string out;
    std::size_t i = 0;
    for (;;) {
        const auto open = s.find("{{", i);
        if (open == std::string::npos) break;
        const auto close = s.find("}}", open + 2);
        if (close == std::string::npos) break;
        out += s.substr(i, open - i);
        const auto value = as_text(lookup(vars, s.substr(open + 2, close - open - 2)));
        out += encode ? api::percent_encode(value) : value;
        i = close + 2;
    }
    out += s.substr(i);
    return out;
}

json substitute(const json& v, const json& vars) {
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        if (s.size() > 4 && s.starts_with("{{") && s.ends_with("}}") && s.find("{{", 2) == std::string::npos) {
            return lookup(vars, s.substr(2, s.size() - 4));
        }
        return substitute_text(s, vars, false);
    }
    if (v.is_array()) {
        json out = json::array();
        for (const auto& x : v) out.push_back(substitute(x, vars));
        return out;
    }
    if (v.is_object()) {
        json out = json::object();
        for (const auto& [k, x] : v.items()) out[k] = substitute(x, vars);
        return out;
    }
    return v;
}

int status_for(const std::string& code) {
    for (auto c : kAllErrorCodes) {
        if (error_code_name(c) == code) return error_http_status(c);
    }
    return 500;
}

fs::path safe_output(const fs::path& out_dir, const std::string& rel) {
    const fs::path p(rel);
    if (rel.empty() || p.is_absolute()) throw Error(ErrorCode::BadRequest, "save_to must be a relative path");
    for (const auto& part : p) {
        if (part == "..") throw Error(ErrorCode::BadRequest, "save_to must stay inside the output directory");
    }
    return out_dir / p;
}

void setup(Runtime& rt, const json& spec, const fs::path& base, json& vars) {
    json ids = json::array();
    for (const auto& f : spec.value("materials", json::array())) {
        const auto records = corpus::read_materials_file(base / f.get<std::string>());
        for (const auto& m : rt.corpus->import_materials(records)) ids.push_back(m.id.value);
    }
    vars["material_ids"] = ids;
    for (const auto& f : spec.value("pools", json::array())) {
        const auto records = corpus::read_pool_file(base / f.get<std::string>());
        try {
            rt.corpus->import_contexts(records);
        } catch (const Error& ex) {
            if (ex.code() != ErrorCode::AllDuplicates) throw;
        }
    }
}

}  // namespace

bool ScriptRun::ok() const {
    if (skipped != 0) return false;
    for (const auto& s : steps) {
        if (!s.ok) return false;
    }
    return true;
}

json ScriptRun::summary() const {
    json list = json::array();
    for (const auto& s : steps) {
        json j{{"name", s.name}, {"method", s.method}, {"path", s.path}, {"status", s.status}, {"ok", s.ok}};
        if (!s.ok) {
            j["error_code"] = s.error_code;
            j["message"] = s.message;
        }
        list.push_back(j);
    }
    return {{"ok", ok()}, {"steps", list}, {"skipped", skipped}, {"saved", saved}};
}

json load_script(const fs::path& path) {
    try {
        auto j = json::parse(read_text(path));
        if (!j.is_object() || !j.contains("steps") || !j.at("steps").is_array()) {
            throw Error(ErrorCode::BadRequest, path.string() + ": a script needs a \"steps\" list");
        }
        return j;
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::BadRequest, path.string() + ": " + ex.what());
    }
}

ScriptRun run_script(Runtime& rt, const json& script, const fs::path& base_dir,
                     const std::optional<fs::path>& out_dir) {
    ScriptRun run;
    setup(rt, script.value("setup", json::object()), base_dir, run.variables);

    const auto& steps = script.at("steps");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& step = steps[i];
        StepOutcome out;
        out.name = step.value("name", "step-" + std::to_string(i + 1));
        out.method = step.value("method", std::string("GET"));
        try {
            out.path = substitute_text(step.at("path").get<std::string>(), run.variables, true);
            std::string body;
            if (step.contains("body")) body = substitute(step.at("body"), run.variables).dump();

            const auto res = rt.router->handle({out.method, out.path, body});
            out.status = res.status;
            json result;
            if (res.status >= 400) {
                const auto err = res.json_body().at("error");
                throw Error(ErrorCode::Internal, err.at("message").get<std::string>(), err);
            }
            if (res.content_type == "application/json") {
                result = res.json_body();
                if (res.status == 202 && result.contains("job_id")) {
                    result = rt.jobs->wait(result.at("job_id").get<std::string>());
                    if (result.at("status") == "failed") {
                        const auto& err = result.at("error");
                        out.status = status_for(err.at("code").get<std::string>());
                        throw Error(ErrorCode::Internal, err.at("message").get<std::string>(), err);
                    }
                    result = result.at("result");
                }
            } else {
                result = res.body;
            }

            const auto captures = step.value("capture", json::object());
            for (const auto& [var, pointer] : captures.items()) {
                const json::json_pointer ptr(pointer.get<std::string>());
                if (!result.contains(ptr)) {
                    throw Error(ErrorCode::BadRequest, "capture " + var + ": nothing at " + pointer.get<std::string>(),
                                json{{"code", "capture_failed"}});
                }
                run.variables[var] = result.at(ptr);
            }
            if (step.contains("save_to") && out_dir) {
                const auto rel = substitute_text(step.at("save_to").get<std::string>(), run.variables, false);
                write_text(safe_output(*out_dir, rel), result.is_string() ? result.get<std::string>()
                                                                           : result.dump(2) + "\n");
                run.saved.push_back(rel);
            }
            out.ok = true;
        } catch (const Error& ex) {
            const auto& d = ex.detail();
            out.error_code = d.is_object() && d.contains("code") ? d.at("code").get<std::string>()
                                                                  : std::string(error_code_name(ex.code()));
            out.message = ex.what();
            if (out.status == 0) out.status = error_http_status(ex.code());
        } catch (const json::exception& ex) {
            out.error_code = "bad_request";
            out.message = std::string("malformed step: ") + ex.what();
        }
        if (out.ok) {
            spdlog::info("{} {} {} -> {}", out.name, out.method, out.path, out.status);
        } else {
            spdlog::error("{} {} {} -> {} {}: {}", out.name, out.method, out.path, out.status, out.error_code,
                          out.message);
        }
        const bool failed = !out.ok;
        run.steps.push_back(std::move(out));
        if (failed) {
            run.skipped = steps.size() - i - 1;
            break;
        }
    }

    if (out_dir) {
        for (const auto& sid : rt.service->sessions()) {
            write_text(*out_dir / "transcripts" / (sid.value + ".jsonl"), rt.service->transcript_jsonl(sid));
        }
        write_text(*out_dir / "summary.json", run.summary().dump(2) + "\n");
    }
    return run;
}

}  // namespace lessonweave::cli
