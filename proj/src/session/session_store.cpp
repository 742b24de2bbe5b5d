#include "lessonweave/session/session.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace lessonweave::session {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, std::string_view content) {
    const auto tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::CorpusIo, "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error(ErrorCode::CorpusIo, "cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::CorpusIo, "cannot replace " + path.string() + ": " + ec.message());
}

std::optional<std::string> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool safe_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
    }
    return true;
}

}  // namespace

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::CorpusIo, "cannot create " + root_.string() + ": " + ec.message());
}

void SessionStore::save(const Session& session) const {
    if (!safe_id(session.id().value)) throw Error(ErrorCode::BadRequest, "unsafe session id");
    const auto dir = root_ / session.id().value;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::CorpusIo, "cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "events.jsonl", events_to_jsonl(session.events()));
    write_file(dir / "snapshot.json", to_json(session.state()).dump(2) + "\n");
    write_file(dir / "transcript.jsonl", session.transcript().to_jsonl());
}

std::optional<Session> SessionStore::load(const SessionId& id) const {
    if (!safe_id(id.value)) return std::nullopt;
    const auto dir = root_ / id.value;
    auto log = read_file(dir / "events.jsonl");
    if (!log) return std::nullopt;
    auto transcript = read_file(dir / "transcript.jsonl");
    return Session::from_events(events_from_jsonl(*log),
                                transcript ? llm::Transcript::from_jsonl(*transcript) : llm::Transcript{});
}

std::vector<SessionId> SessionStore::list() const {
    std::vector<SessionId> out;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(root_, ec)) {
        if (entry.is_directory() && fs::exists(entry.path() / "events.jsonl")) {
            out.emplace_back(entry.path().filename().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace lessonweave::session
