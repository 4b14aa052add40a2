#include "physem/appearance_json.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "physem/error.hpp"
#include "physem/image_io.hpp"

namespace physem {

using nlohmann::json;

std::string format_real(double value) {
    char buf[64];
    // Avoid printing "-0.0000" for tiny negatives produced by rounding.
    if (std::abs(value) < 0.00005) value = 0.0;
    std::snprintf(buf, sizeof buf, "%.4f", value);
    return buf;
}

namespace {

template <typename Range>
std::string join_ids(const Range& ids) {
    std::string out = "[";
    bool first = true;
    for (const auto id : ids) {
        if (!first) out += ",";
        out += std::to_string(id);
        first = false;
    }
    return out + "]";
}

std::string record_line(const RegionRecord& r) {
    std::string s = "{\"id\":" + std::to_string(r.id);
    s += ",\"level\":" + std::to_string(r.level);
    s += ",\"size\":" + std::to_string(r.size);
    s += ",\"center_of_mass\":[" + format_real(r.center_of_mass.x) + "," + format_real(r.center_of_mass.y) + "]";
    s += ",\"avg_intensity\":" + format_real(r.avg_intensity);
    const auto& b = r.bounding_box;
    s += ",\"bounding_box\":[" + std::to_string(b.min_x) + "," + std::to_string(b.min_y) + "," +
         std::to_string(b.max_x) + "," + std::to_string(b.max_y) + "]";
    s += ",\"parent_id\":" + (r.parent_id ? std::to_string(*r.parent_id) : std::string("null"));
    s += ",\"adjacent\":" + join_ids(r.adjacent);
    s += ",\"relations\":[";
    for (std::size_t i = 0; i < r.relations.size(); ++i) {
        if (i) s += ",";
        s += "[\"" + std::string(relation_name(r.relations[i].relation)) + "\"," +
             std::to_string(r.relations[i].target) + "]";
    }
    return s + "]}";
}

double as_real(const json& j, const char* what) {
    if (!j.is_number()) fail(ErrorKind::InvalidInput, std::string("appearance list: ") + what + " is not a number");
    return j.get<double>();
}

template <typename T>
T as_int(const json& j, const char* what) {
    if (!j.is_number_integer()) fail(ErrorKind::InvalidInput, std::string("appearance list: ") + what + " is not an integer");
    return j.get<T>();
}

RegionRecord parse_record(const json& j) {
    RegionRecord r;
    r.id = as_int<RegionId>(j.at("id"), "id");
    r.level = as_int<std::size_t>(j.at("level"), "level");
    r.size = as_int<std::uint64_t>(j.at("size"), "size");
    const json& com = j.at("center_of_mass");
    r.center_of_mass = {as_real(com.at(0), "center_of_mass"), as_real(com.at(1), "center_of_mass")};
    r.avg_intensity = as_real(j.at("avg_intensity"), "avg_intensity");
    const json& b = j.at("bounding_box");
    r.bounding_box = {as_int<int>(b.at(0), "bounding_box"), as_int<int>(b.at(1), "bounding_box"),
                      as_int<int>(b.at(2), "bounding_box"), as_int<int>(b.at(3), "bounding_box")};
    if (!j.at("parent_id").is_null()) r.parent_id = as_int<RegionId>(j.at("parent_id"), "parent_id");
    for (const json& id : j.at("adjacent")) r.adjacent.push_back(as_int<RegionId>(id, "adjacent"));
    for (const json& rel : j.at("relations")) {
        const auto relation = parse_relation(rel.at(0).get<std::string>());
        if (!relation) fail(ErrorKind::InvalidInput, "appearance list: unknown relation " + rel.at(0).dump());
        r.relations.push_back({*relation, as_int<RegionId>(rel.at(1), "relation target")});
    }
    return r;
}

}  // namespace

std::string export_appearance_list(const AppearanceList& list) {
    const SegConfig& c = list.config;
    std::string s = "{\n";
    s += "\"format\":\"" + std::string(kAppearanceFormat) + "\",\n";
    s += "\"config\":{\"merge_threshold\":" + format_real(c.merge_threshold) +
         ",\"deviation_delta\":" + format_real(c.deviation_delta) +
         ",\"min_seed_size\":" + std::to_string(c.min_seed_size) +
         ",\"max_refine_iters\":" + std::to_string(c.max_refine_iters) +
         ",\"top_threshold\":" + std::to_string(list.top_threshold) + "},\n";
    s += "\"levels\":[\n";
    for (std::size_t k = 0; k < list.levels.size(); ++k) {
        const LevelRecords& level = list.levels[k];
        s += "{\"level\":" + std::to_string(level.level) + ",\"width\":" + std::to_string(level.width) +
             ",\"height\":" + std::to_string(level.height) + ",\"regions\":[\n";
        for (std::size_t i = 0; i < level.regions.size(); ++i) {
            s += record_line(level.regions[i]);
            s += i + 1 < level.regions.size() ? ",\n" : "\n";
        }
        s += k + 1 < list.levels.size() ? "]},\n" : "]}\n";
    }
    s += "]\n}\n";
    return s;
}

AppearanceList import_appearance_list(std::string_view text) {
    try {
        const json doc = json::parse(text);
        if (doc.value("format", std::string()) != kAppearanceFormat) {
            fail(ErrorKind::InvalidInput, "not an appearance list document");
        }
        AppearanceList list;
        const json& c = doc.at("config");
        list.config.merge_threshold = as_real(c.at("merge_threshold"), "merge_threshold");
        list.config.deviation_delta = as_real(c.at("deviation_delta"), "deviation_delta");
        list.config.min_seed_size = as_int<int>(c.at("min_seed_size"), "min_seed_size");
        list.config.max_refine_iters = as_int<int>(c.at("max_refine_iters"), "max_refine_iters");
        list.top_threshold = as_int<std::size_t>(c.at("top_threshold"), "top_threshold");
        for (const json& l : doc.at("levels")) {
            LevelRecords level;
            level.level = as_int<std::size_t>(l.at("level"), "level");
            level.width = as_int<int>(l.at("width"), "width");
            level.height = as_int<int>(l.at("height"), "height");
            for (const json& r : l.at("regions")) level.regions.push_back(parse_record(r));
            list.levels.push_back(std::move(level));
        }
        return list;
    } catch (const json::exception& e) {
        fail(ErrorKind::InvalidInput, std::string("malformed appearance list: ") + e.what());
    }
}

void save_appearance_list(const std::filesystem::path& path, const AppearanceList& list) {
    write_file(path, export_appearance_list(list));
}

AppearanceList load_appearance_list(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    return import_appearance_list(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace physem
