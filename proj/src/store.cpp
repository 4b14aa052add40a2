#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <system_error>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "physem/appearance_json.hpp"
#include "physem/error.hpp"
#include "physem/service.hpp"

namespace physem {

namespace fs = std::filesystem;

std::string canonical_config(const AnalysisConfig& cfg) {
    const SegConfig& s = cfg.seg;
    return "merge_threshold=" + format_real(s.merge_threshold) + ";deviation_delta=" + format_real(s.deviation_delta) +
           ";min_seed_size=" + std::to_string(s.min_seed_size) + ";max_refine_iters=" +
           std::to_string(s.max_refine_iters) + ";top_threshold=" + std::to_string(cfg.top_threshold);
}

std::string analysis_id_for(std::span<const std::uint8_t> image, const AnalysisConfig& cfg) {
    const std::string config = canonical_config(cfg);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, image.data(), image.size()) == 1 &&
                    EVP_DigestUpdate(ctx, config.data(), config.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, digest, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) fail(ErrorKind::Io, "sha-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

bool valid_ontology_name(std::string_view name) noexcept {
    if (name.empty() || name.size() > 128 || name.front() == '.') return false;
    for (const char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                        c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

namespace {

bool valid_analysis_id(std::string_view id) noexcept {
    if (id.size() != 64) return false;
    for (const char c : id) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
}

std::string source_extension(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return "pgm";
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return "ppm";
    return "png";
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string as_text(const Bytes& bytes) { return std::string(bytes.begin(), bytes.end()); }

}  // namespace

Store::Store(fs::path data_dir) : root_(std::move(data_dir)) {
    std::error_code ec;
    fs::create_directories(root_ / "analyses", ec);
    if (!ec) fs::create_directories(root_ / "ontologies", ec);
    if (ec) fail(ErrorKind::Io, "cannot create data directory " + root_.string() + ": " + ec.message());
}

fs::path Store::analysis_dir(std::string_view id) const { return root_ / "analyses" / std::string(id); }

fs::path Store::ontology_path(std::string_view name) const {
    if (!valid_ontology_name(name)) fail(ErrorKind::InvalidInput, "invalid ontology name '" + std::string(name) + "'");
    return root_ / "ontologies" / (std::string(name) + ".json");
}

bool Store::has_analysis(std::string_view id) const {
    return valid_analysis_id(id) && fs::exists(analysis_dir(id) / "appearance.json");
}

void Store::check_analysis(std::string_view id) const {
    if (!has_analysis(id)) fail(ErrorKind::NotFound, "unknown analysis '" + std::string(id) + "'");
}

StoredAnalysis Store::analyze_and_store(std::span<const std::uint8_t> image, const AnalysisConfig& cfg) {
    cfg.validate();
    const std::string id = analysis_id_for(image, cfg);
    if (has_analysis(id)) return {id, false};

    const ImagePlane plane = decode_image(image);
    const Analysis result = analyze(plane, cfg);

    // Build the record in a private directory, then publish it with one rename.
    static std::atomic<unsigned> counter{0};
    const fs::path tmp = root_ / "analyses" / (".tmp-" + id + "-" + std::to_string(counter++));
    fs::create_directories(tmp / "annotations");
    try {
        write_file(tmp / ("source." + source_extension(image)), image);
        for (std::size_t k = 0; k < result.states.size(); ++k) {
            const SegmentationState& s = result.states[k];
            write_file(tmp / ("labels_" + std::to_string(k) + ".pgm"), encode_label_pgm(s.labels, s.width, s.height));
        }
        nlohmann::ordered_json meta;
        meta["analysis_id"] = id;
        meta["config"] = canonical_config(cfg);
        meta["source"] = "source." + source_extension(image);
        meta["source_bytes"] = image.size();
        meta["width"] = plane.width();
        meta["height"] = plane.height();
        meta["levels"] = result.states.size();
        meta["created_at"] = utc_now();
        write_file(tmp / "meta.json", meta.dump(2) + "\n");
        write_file(tmp / "appearance.json", export_appearance_list(result.appearance));
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }

    std::error_code ec;
    fs::rename(tmp, analysis_dir(id), ec);
    if (ec) {
        // Lost a race against an identical upload; theirs is just as good.
        fs::remove_all(tmp, ec);
        if (has_analysis(id)) return {id, false};
        fail(ErrorKind::Io, "cannot store analysis " + id);
    }
    return {id, true};
}

std::string Store::appearance_document(std::string_view id) const {
    check_analysis(id);
    return as_text(read_file(analysis_dir(id) / "appearance.json"));
}

AppearanceList Store::appearance(std::string_view id) const {
    return import_appearance_list(appearance_document(id));
}

Bytes Store::labelmap_pgm(std::string_view id, std::size_t level) const {
    check_analysis(id);
    const fs::path p = analysis_dir(id) / ("labels_" + std::to_string(level) + ".pgm");
    if (!fs::exists(p)) fail(ErrorKind::NotFound, "analysis has no level " + std::to_string(level));
    return read_file(p);
}

bool Store::has_ontology(std::string_view name) const { return fs::exists(ontology_path(name)); }

Ontology Store::ontology(std::string_view name) const {
    const fs::path p = ontology_path(name);
    if (!fs::exists(p)) fail(ErrorKind::NotFound, "unknown ontology '" + std::string(name) + "'");
    return load_ontology(p);
}

std::unique_lock<std::mutex> Store::lock_ontology(std::string_view name) {
    std::mutex* m = nullptr;
    {
        std::lock_guard guard(locks_guard_);
        auto it = locks_.find(name);
        if (it == locks_.end()) it = locks_.emplace(std::string(name), std::make_unique<std::mutex>()).first;
        m = it->second.get();
    }
    std::unique_lock lock(*m, std::try_to_lock);
    if (!lock.owns_lock()) {
        fail(ErrorKind::Conflict, "ontology '" + std::string(name) + "' is being modified; retry");
    }
    return lock;
}

std::int64_t Store::put_ontology(std::string_view name, Ontology ont) {
    const fs::path p = ontology_path(name);
    if (ont.name.empty()) ont.name = std::string(name);
    if (ont.name != name) fail(ErrorKind::InvalidInput, "document name '" + ont.name + "' does not match '" + std::string(name) + "'");
    ont.validate();
    const auto lock = lock_ontology(name);
    if (fs::exists(p)) {
        const Ontology current = load_ontology(p);
        if (ont.version != current.version) {
            fail(ErrorKind::Conflict, "ontology '" + std::string(name) + "' is at version " +
                                          std::to_string(current.version) + ", not " + std::to_string(ont.version));
        }
        ont.version = current.version + 1;
    }
    save_ontology_atomic(p, ont);
    return ont.version;
}

std::string Store::annotations_document(std::string_view id, std::string_view ontology_name) {
    check_analysis(id);
    const Ontology ont = ontology(ontology_name);
    const fs::path cached =
        analysis_dir(id) / "annotations" / (ont.name + "@" + std::to_string(ont.version) + ".json");
    if (fs::exists(cached)) return as_text(read_file(cached));
    const std::string doc = export_annotations(ont, annotate(ont, appearance(id)));
    write_file_atomic(cached, doc);
    return doc;
}

std::int64_t Store::apply_teaching(std::string_view ontology_name, const TeachRequest& request) {
    const fs::path p = ontology_path(ontology_name);
    const auto lock = lock_ontology(ontology_name);
    const AppearanceList app = appearance(request.analysis_id);
    const Ontology current = fs::exists(p) ? load_ontology(p) : Ontology{std::string(ontology_name), 1, {}};
    const Ontology next = teach(current, app, request.level, request.region_id, request.label, request.tolerances);
    save_ontology_atomic(p, next);
    return next.version;
}

}  // namespace physem
