#include "physem/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "physem/analysis.hpp"
#include "physem/appearance_json.hpp"
#include "physem/error.hpp"
#include "physem/image_io.hpp"
#include "physem/ontology.hpp"
#include "physem/service.hpp"

namespace physem {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string image;
    std::string appearance;
    std::string ontology;
    std::string out;
    std::string label;
    RegionId region = 0;
    std::size_t level = 0;
    bool exclusive = false;
    TeachTolerances tolerances;
    AnalysisConfig config;
    std::string listen;
    std::string data;
};

/// `name.appearance.json` -> `name.annotations.json`; otherwise swaps the extension.
fs::path sibling(const fs::path& input, const std::string& suffix) {
    std::string stem = input.filename().string();
    for (const char* known : {".appearance.json", ".annotations.json"}) {
        const std::string k = known;
        if (stem.size() > k.size() && stem.compare(stem.size() - k.size(), k.size(), k) == 0) {
            stem.resize(stem.size() - k.size());
            return input.parent_path() / (stem + suffix);
        }
    }
    return input.parent_path() / (input.stem().string() + suffix);
}

int cmd_analyze(const Options& o, std::ostream& out) {
    o.config.validate();
    const Analysis result = analyze(read_image_file(o.image), o.config);
    const fs::path target = o.out.empty() ? sibling(o.image, ".appearance.json") : fs::path(o.out);
    save_appearance_list(target, result.appearance);
    for (const auto& level : result.appearance.levels) {
        const std::size_t n = level.regions.size();
        out << "level " << level.level << ": " << n << (n == 1 ? " region" : " regions") << "\n";
    }
    return kExitOk;
}

std::string region_ref(const Annotation& a, std::size_t level_count) {
    if (a.level >= level_count) return "scene";
    if (a.level == 0) return std::to_string(a.region_id);
    return std::to_string(a.region_id) + " (level " + std::to_string(a.level) + ")";
}

int cmd_annotate(const Options& o, std::ostream& out) {
    const Ontology ont = load_ontology(o.ontology);
    const AppearanceList app = load_appearance_list(o.appearance);
    const std::vector<Annotation> annotations = annotate(ont, app, {o.exclusive});
    const fs::path target = o.out.empty() ? sibling(o.appearance, ".annotations.json") : fs::path(o.out);
    write_file(target, export_annotations(ont, annotations));
    for (const auto& a : annotations) out << a.concept_name << ": " << region_ref(a, app.levels.size()) << "\n";
    return kExitOk;
}

int cmd_teach(const Options& o, std::ostream& out) {
    const AppearanceList app = load_appearance_list(o.appearance);
    const fs::path path = o.ontology;
    const Ontology current = fs::exists(path) ? load_ontology(path) : Ontology{path.stem().string(), 1, {}};
    const Ontology next = teach(current, app, o.level, o.region, o.label, o.tolerances);
    save_ontology_atomic(path, next);
    out << "ontology " << next.name << " version " << next.version << "\n";
    return kExitOk;
}

int cmd_serve(const Options& o, std::ostream& out) {
    std::string listen = o.listen;
    std::string data = o.data;
    if (listen.empty()) listen = std::getenv("PHYSEM_LISTEN") ? std::getenv("PHYSEM_LISTEN") : "127.0.0.1:8080";
    if (data.empty()) data = std::getenv("PHYSEM_DATA_DIR") ? std::getenv("PHYSEM_DATA_DIR") : "data";
    const auto [host, port] = parse_listen_address(listen);
    Store store(data);
    HttpService service(store);
    const int bound = service.bind(host, port);
    out << "listening on " << host << ":" << bound << ", data in " << store.data_dir().string() << std::endl;
    service.serve();
    return kExitOk;
}

void add_segmentation_flags(CLI::App& cmd, Options& o) {
    cmd.add_option("--merge-threshold", o.config.seg.merge_threshold, "luminance delta for region growing")
        ->capture_default_str();
    cmd.add_option("--deviation-delta", o.config.seg.deviation_delta, "deviation that uncommits a pixel")
        ->capture_default_str();
    cmd.add_option("--min-seed-size", o.config.seg.min_seed_size, "smallest blob that becomes a new region")
        ->capture_default_str();
    cmd.add_option("--max-refine-iters", o.config.seg.max_refine_iters, "adoption sweeps per level")
        ->capture_default_str();
    cmd.add_option("--top-threshold", o.config.top_threshold, "stop squeezing at this many pixels")
        ->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Coarse-to-fine segmentation with ontology-driven labeling", "physem"};
    app.require_subcommand(1);

    CLI::App* analyze_cmd = app.add_subcommand("analyze", "segment an image and write its appearance list");
    analyze_cmd->add_option("image", o.image, "PGM, PPM or PNG input")->required()->check(CLI::ExistingFile);
    analyze_cmd->add_option("--out", o.out, "appearance list path (default IMAGE.appearance.json)");
    add_segmentation_flags(*analyze_cmd, o);

    CLI::App* annotate_cmd = app.add_subcommand("annotate", "label the regions of an appearance list");
    annotate_cmd->add_option("appearance", o.appearance)->required()->check(CLI::ExistingFile);
    annotate_cmd->add_option("--ontology", o.ontology)->required()->check(CLI::ExistingFile);
    annotate_cmd->add_option("--out", o.out, "annotations path (default NAME.annotations.json)");
    annotate_cmd->add_flag("--exclusive", o.exclusive, "keep only the most specific label per region");

    CLI::App* teach_cmd = app.add_subcommand("teach", "teach a label from one region");
    teach_cmd->add_option("appearance", o.appearance)->required()->check(CLI::ExistingFile);
    teach_cmd->add_option("region", o.region)->required();
    teach_cmd->add_option("label", o.label)->required();
    teach_cmd->add_option("--ontology", o.ontology, "ontology file, created when missing")->required();
    teach_cmd->add_option("--level", o.level, "level of the region")->capture_default_str();
    teach_cmd->add_option("--intensity-half-width", o.tolerances.intensity_half_width)->capture_default_str();
    teach_cmd->add_option("--size-factor", o.tolerances.size_factor)->capture_default_str();

    CLI::App* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    serve_cmd->add_option("--listen", o.listen, "HOST:PORT (default $PHYSEM_LISTEN or 127.0.0.1:8080)");
    serve_cmd->add_option("--data", o.data, "data directory (default $PHYSEM_DATA_DIR or ./data)");

    std::vector<std::string> argv_store{"physem"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (analyze_cmd->parsed()) return cmd_analyze(o, out);
        if (annotate_cmd->parsed()) return cmd_annotate(o, out);
        if (teach_cmd->parsed()) return cmd_teach(o, out);
        return cmd_serve(o, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::Io ? kExitInternal : kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace physem
