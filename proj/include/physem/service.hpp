#pragma once

// Flat-file store for analyses and ontologies, and the HTTP front end that
// the CLI `serve` command and the teaching UI talk to.
//
// Layout under the data directory:
//   analyses/<id>/source.<ext>              uploaded image bytes
//   analyses/<id>/meta.json                 id, config, source, created_at
//   analyses/<id>/appearance.json           canonical appearance list
//   analyses/<id>/labels_<k>.pgm            label map of level k
//   analyses/<id>/annotations/<name>@<v>.json
//   ontologies/<name>.json

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>

#include "physem/analysis.hpp"
#include "physem/image_io.hpp"
#include "physem/ontology.hpp"

namespace physem {

/// Hex SHA-256 of the image bytes followed by the canonical config text.
std::string analysis_id_for(std::span<const std::uint8_t> image, const AnalysisConfig& cfg);

/// Canonical text form of a config, the part of the id that is not image bytes.
std::string canonical_config(const AnalysisConfig& cfg);

/// Ontology names double as file names: [A-Za-z0-9_.-], not starting with '.'.
bool valid_ontology_name(std::string_view name) noexcept;

struct StoredAnalysis {
    std::string id;
    bool created = false;  // false when the same input was already stored
};

struct TeachRequest {
    std::string analysis_id;
    std::size_t level = 0;
    RegionId region_id = kUncommitted;
    std::string label;
    TeachTolerances tolerances;
};

class Store {
public:
    explicit Store(std::filesystem::path data_dir);

    const std::filesystem::path& data_dir() const noexcept { return root_; }

    /// Decodes, analyzes and persists. Idempotent: identical bytes and config
    /// return the stored id without recomputing. Throws InvalidInput for
    /// undecodable images.
    StoredAnalysis analyze_and_store(std::span<const std::uint8_t> image, const AnalysisConfig& cfg = {});

    bool has_analysis(std::string_view id) const;
    std::string appearance_document(std::string_view id) const;
    AppearanceList appearance(std::string_view id) const;
    Bytes labelmap_pgm(std::string_view id, std::size_t level) const;

    bool has_ontology(std::string_view name) const;
    Ontology ontology(std::string_view name) const;

    /// Stores a new ontology at the version it carries. Replacing an existing
    /// one requires `ont.version` to equal the stored version and stores it
    /// as version + 1; a mismatch is a Conflict. Returns the stored version.
    std::int64_t put_ontology(std::string_view name, Ontology ont);

    /// Annotations document for the current version of `ontology_name`,
    /// computed once per (analysis, ontology version).
    std::string annotations_document(std::string_view id, std::string_view ontology_name);

    /// Teaches into `ontology_name` (created empty when missing) and returns
    /// the new version. Throws Conflict if another writer holds the ontology.
    std::int64_t apply_teaching(std::string_view ontology_name, const TeachRequest& request);

    /// Claims the single-writer slot of an ontology without blocking; throws
    /// Conflict if it is taken. Mutations hold this for their whole
    /// read-modify-write.
    std::unique_lock<std::mutex> lock_ontology(std::string_view name);

private:
    std::filesystem::path analysis_dir(std::string_view id) const;
    std::filesystem::path ontology_path(std::string_view name) const;
    void check_analysis(std::string_view id) const;

    std::filesystem::path root_;
    std::mutex locks_guard_;
    std::map<std::string, std::unique_ptr<std::mutex>, std::less<>> locks_;
};

/// HTTP API over a Store. Routes:
///   POST /analyses                              image body (PGM/PPM/PNG) -> {"analysis_id", "created"}
///   GET  /analyses/{id}                         appearance list
///   GET  /analyses/{id}/levels/{k}/labelmap     PGM
///   GET  /analyses/{id}/annotations?ontology=n  annotations document
///   GET  /ontologies/{name}                     ontology document
///   PUT  /ontologies/{name}                     ontology document -> {"name", "version"}
///   POST /ontologies/{name}/teach               teach request -> {"name", "version"}
class HttpService {
public:
    explicit HttpService(Store& store);
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void serve();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Splits "host:port"; a bare port means 127.0.0.1. Throws InvalidInput.
std::pair<std::string, int> parse_listen_address(std::string_view text);

}  // namespace physem
