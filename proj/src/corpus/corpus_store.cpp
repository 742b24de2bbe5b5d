#include "lessonweave/corpus/corpus.hpp"

#include "lessonweave/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lessonweave::corpus {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "embedding sidecar is written in host order, which must be little-endian");

// embeddings.bin:
//   8 bytes  magic "LWEMB001"
//   u32      dimension
//   u32      record count
//   per record: u16 id length, id bytes, dimension x f32
constexpr char kMagic[8] = {'L', 'W', 'E', 'M', 'B', '0', '0', '1'};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::CorpusIo, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::CorpusIo, "cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorCode::CorpusIo, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::CorpusIo, "cannot replace " + path.string() + ": " + ec.message());
}

std::string dump_line(const nlohmann::ordered_json& j) {
    return j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
}

std::vector<json> parse_jsonl(std::string_view text, std::string_view what) {
    std::vector<json> out;
    std::size_t lineno = 0;
    for (const auto& line : split_lines(text)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::BadRequest,
                        std::string(what) + " line " + std::to_string(lineno) + ": " + ex.what(),
                        json{{"line", lineno}});
        }
    }
    return out;
}

template <typename T>
void put(std::string& buf, T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    buf.append(bytes, sizeof(T));
}

template <typename T>
T take(std::string_view& buf) {
    if (buf.size() < sizeof(T)) throw Error(ErrorCode::CorpusIo, "embedding sidecar is truncated");
    T value;
    std::memcpy(&value, buf.data(), sizeof(T));
    buf.remove_prefix(sizeof(T));
    return value;
}

std::string encode_embeddings(const CorpusState& state) {
    std::string buf(kMagic, sizeof(kMagic));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(state.manifest.embedding_dimension));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(state.materials.size() + state.contexts.size()));
    auto record = [&](const std::string& id, const Embedding& v) {
        put<std::uint16_t>(buf, static_cast<std::uint16_t>(id.size()));
        buf.append(id);
        for (float x : v) put<float>(buf, x);
    };
    for (const auto& m : state.materials) record(m.id.value, m.embedding);
    for (const auto& c : state.contexts) record(c.id.value, c.embedding);
    return buf;
}

std::map<std::string, Embedding> decode_embeddings(std::string_view buf, std::size_t& dimension) {
    if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
        throw Error(ErrorCode::CorpusIo, "embedding sidecar has a bad header");
    }
    buf.remove_prefix(sizeof(kMagic));
    dimension = take<std::uint32_t>(buf);
    const auto count = take<std::uint32_t>(buf);
    std::map<std::string, Embedding> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = take<std::uint16_t>(buf);
        if (buf.size() < len) throw Error(ErrorCode::CorpusIo, "embedding sidecar is truncated");
        std::string id(buf.substr(0, len));
        buf.remove_prefix(len);
        Embedding v(dimension);
        for (auto& x : v) x = take<float>(buf);
        out.emplace(std::move(id), std::move(v));
    }
    return out;
}

std::size_t id_number(const std::string& id) {
    const auto dash = id.rfind('-');
    if (dash == std::string::npos) return 0;
    try {
        return std::stoul(id.substr(dash + 1));
    } catch (...) {
        return 0;
    }
}

}  // namespace

std::vector<ContextRecord> parse_pool(std::string_view text) {
    std::vector<ContextRecord> out;
    for (const auto& j : parse_jsonl(text, "pool")) {
        try {
            out.push_back({j.at("subject").get<std::string>(), j.at("title").get<std::string>(),
                           j.at("background").get<std::string>()});
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::BadRequest, std::string("pool record: ") + ex.what());
        }
    }
    return out;
}

std::vector<ContextRecord> read_pool_file(const fs::path& path) { return parse_pool(read_file(path)); }

std::string render_pool(const std::vector<ContextRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        nlohmann::ordered_json j;
        j["subject"] = r.subject;
        j["title"] = r.title;
        j["background"] = r.background;
        out += dump_line(j);
    }
    return out;
}

std::string export_pool(const CorpusState& state, std::string_view subject) {
    std::vector<ContextRecord> records;
    for (const auto& c : state.contexts) {
        if (subject.empty() || c.subject == subject) {
            records.push_back({c.subject, c.title, c.background});
        }
    }
    return render_pool(records);
}

std::vector<MaterialRecord> parse_materials(std::string_view text) {
    std::vector<MaterialRecord> out;
    for (const auto& j : parse_jsonl(text, "materials")) {
        try {
            out.push_back({j.at("title").get<std::string>(), j.at("body").get<std::string>(),
                           j.value("source_label", std::string())});
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::BadRequest, std::string("material record: ") + ex.what());
        }
    }
    return out;
}

std::vector<MaterialRecord> read_materials_file(const fs::path& path) {
    return parse_materials(read_file(path));
}

void save_state(const CorpusState& state, const fs::path& directory) {
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw Error(ErrorCode::CorpusIo, "cannot create " + directory.string() + ": " + ec.message());

    std::string materials;
    for (const auto& m : state.materials) {
        nlohmann::ordered_json j;
        j["id"] = m.id.value;
        j["title"] = m.title;
        j["body"] = m.body;
        j["source_label"] = m.source_label;
        materials += dump_line(j);
    }
    std::string contexts;
    for (const auto& c : state.contexts) {
        nlohmann::ordered_json j;
        j["id"] = c.id.value;
        j["subject"] = c.subject;
        j["title"] = c.title;
        j["background"] = c.background;
        j["origin"] = to_string(c.origin);
        contexts += dump_line(j);
    }
    write_file_atomic(directory / "materials.jsonl", materials);
    write_file_atomic(directory / "contexts.jsonl", contexts);
    write_file_atomic(directory / "embeddings.bin", encode_embeddings(state));
    write_file_atomic(directory / "manifest.json", to_json(state.manifest).dump(2) + "\n");
}

std::optional<CorpusState> load_state(const fs::path& directory) {
    if (!fs::exists(directory / "manifest.json")) return std::nullopt;

    CorpusState state;
    try {
        const auto m = json::parse(read_file(directory / "manifest.json"));
        state.manifest.material_count = m.at("material_count").get<std::size_t>();
        state.manifest.pool_counts_by_subject =
            m.at("pool_counts_by_subject").get<std::map<std::string, std::size_t>>();
        state.manifest.embedding_dimension = m.at("embedding_dimension").get<std::size_t>();
        state.manifest.provider_tag = m.at("provider_tag").get<std::string>();
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::CorpusIo, std::string("bad corpus manifest: ") + ex.what());
    }

    std::size_t dimension = 0;
    auto vectors = decode_embeddings(read_file(directory / "embeddings.bin"), dimension);
    auto take_vector = [&](const std::string& id) {
        auto it = vectors.find(id);
        if (it == vectors.end()) throw Error(ErrorCode::CorpusIo, "no stored embedding for " + id);
        return it->second;
    };

    try {
        for (const auto& j : parse_jsonl(read_file(directory / "materials.jsonl"), "materials")) {
            ReadingMaterial mat;
            mat.id = MaterialId(j.at("id").get<std::string>());
            mat.title = j.at("title").get<std::string>();
            mat.body = j.at("body").get<std::string>();
            mat.source_label = j.value("source_label", std::string());
            mat.embedding = take_vector(mat.id.value);
            state.next_material = std::max(state.next_material, id_number(mat.id.value) + 1);
            state.materials.push_back(std::move(mat));
        }
        for (const auto& j : parse_jsonl(read_file(directory / "contexts.jsonl"), "contexts")) {
            ContextEntry c;
            c.id = ContextId(j.at("id").get<std::string>());
            c.subject = j.at("subject").get<std::string>();
            c.title = j.at("title").get<std::string>();
            c.background = j.at("background").get<std::string>();
            c.origin = j.value("origin", std::string("bundled")) == "imported" ? Origin::Imported
                                                                               : Origin::Bundled;
            c.embedding = take_vector(c.id.value);
            state.next_context = std::max(state.next_context, id_number(c.id.value) + 1);
            state.contexts.push_back(std::move(c));
        }
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::CorpusIo, std::string("bad corpus record: ") + ex.what());
    }

    std::map<std::string, std::size_t> counts;
    for (const auto& c : state.contexts) ++counts[c.subject];
    if (counts != state.manifest.pool_counts_by_subject ||
        state.materials.size() != state.manifest.material_count ||
        (!vectors.empty() && dimension != state.manifest.embedding_dimension)) {
        throw Error(ErrorCode::CorpusIo, "corpus manifest does not match stored records");
    }
    return state;
}

}  // namespace lessonweave::corpus
