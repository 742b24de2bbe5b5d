#pragma once

#include "lessonweave/cli/runtime.hpp"

#include <string>
#include <vector>

namespace lessonweave::cli {

// A session script is one JSON document:
//
//   {
//     "setup": {"materials": ["a.jsonl"], "pools": ["b.jsonl"]},
//     "steps": [
//       {"name": "create", "method": "POST", "path": "/api/v1/sessions",
//        "body": {"subjects": ["art"], "material_ids": "{{material_ids}}"},
//        "capture": {"sid": "/session_id"}},
//       {"method": "GET", "path": "/api/v1/sessions/{{sid}}/outcome/cc-1/download?format=txt",
//        "save_to": "outcome.txt"}
//     ]
//   }
//
// Setup paths are relative to the script. Setup defines the variable
// "material_ids" (every imported material id, in file order). "{{name}}"
// is substituted in paths and body strings; "name.0" or "name.key" index
// into captured JSON, and a string that is exactly one placeholder takes the
// captured JSON value. Job responses are waited on and the job result stands
// in for the response body. The run stops at the first step that fails.
struct StepOutcome {
    std::string name;
    std::string method;
    std::string path;
    int status = 0;
    bool ok = false;
    std::string error_code;
    std::string message;
};

struct ScriptRun {
    std::vector<StepOutcome> steps;
    std::size_t skipped = 0;
    std::vector<std::string> saved;
    json variables = json::object();

    bool ok() const;
    json summary() const;
};

json load_script(const fs::path& path);

// `out_dir` receives save_to files, transcripts/<session>.jsonl and
// summary.json.
ScriptRun run_script(Runtime& runtime, const json& script, const fs::path& base_dir,
                     const std::optional<fs::path>& out_dir);

}  // namespace lessonweave::cli
