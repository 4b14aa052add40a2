#include "physem/registry.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <string>
#include <utility>

#include "physem/error.hpp"

namespace physem {

namespace {

constexpr std::array<std::pair<Relation, std::string_view>, 7> kRelationNames{{
    {Relation::SubPartOf, "sub_part_of"},
    {Relation::AdjacentTo, "adjacent_to"},
    {Relation::LeftOf, "left_of"},
    {Relation::RightOf, "right_of"},
    {Relation::Above, "above"},
    {Relation::Below, "below"},
    {Relation::Inside, "inside"},
}};

template <typename Records>
auto find_record(Records& regions, RegionId id) -> decltype(regions.data()) {
    auto it = std::lower_bound(regions.begin(), regions.end(), id,
                               [](const RegionRecord& r, RegionId value) { return r.id < value; });
    return it != regions.end() && it->id == id ? &*it : nullptr;
}

}  // namespace

std::string_view relation_name(Relation relation) noexcept {
    for (const auto& [r, name] : kRelationNames) {
        if (r == relation) return name;
    }
    return "unknown";
}

std::optional<Relation> parse_relation(std::string_view name) noexcept {
    for (const auto& [r, n] : kRelationNames) {
        if (n == name) return r;
    }
    return std::nullopt;
}

bool RegionRecord::has_relation(Relation relation, RegionId target) const noexcept {
    return std::any_of(relations.begin(), relations.end(),
                       [&](const RelationEdge& e) { return e.relation == relation && e.target == target; });
}

const RegionRecord* LevelRecords::find(RegionId id) const noexcept { return find_record(regions, id); }
RegionRecord* LevelRecords::find(RegionId id) noexcept { return find_record(regions, id); }

const RegionRecord* AppearanceList::find(std::size_t level, RegionId id) const noexcept {
    return level < levels.size() ? levels[level].find(id) : nullptr;
}

std::vector<RegionRecord> register_level(const SegmentationState& state) {
    if (!state.fully_committed()) fail(ErrorKind::InvalidInput, "register_level: state has uncommitted pixels");
    const int w = state.width, h = state.height;
    const RegionId max_id = state.labels.empty() ? 0 : *std::max_element(state.labels.begin(), state.labels.end());

    struct Accum {
        std::uint64_t count = 0;
        double sum_x = 0.0;
        double sum_y = 0.0;
        BoundingBox box{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), -1, -1};
    };
    std::vector<Accum> acc(static_cast<std::size_t>(max_id) + 1);
    std::vector<std::pair<RegionId, RegionId>> borders;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const RegionId id = state.labels[i];
            Accum& a = acc[id];
            ++a.count;
            a.sum_x += x;
            a.sum_y += y;
            a.box.min_x = std::min(a.box.min_x, x);
            a.box.min_y = std::min(a.box.min_y, y);
            a.box.max_x = std::max(a.box.max_x, x);
            a.box.max_y = std::max(a.box.max_y, y);
            if (x + 1 < w && state.labels[i + 1] != id) borders.emplace_back(id, state.labels[i + 1]);
            if (y + 1 < h && state.labels[i + w] != id) borders.emplace_back(id, state.labels[i + w]);
        }
    }
    std::sort(borders.begin(), borders.end());
    borders.erase(std::unique(borders.begin(), borders.end()), borders.end());

    std::vector<RegionRecord> records;
    for (RegionId id = 1; id <= max_id; ++id) {
        const Accum& a = acc[id];
        if (a.count == 0) continue;
        const auto stats = state.stats.find(id);
        if (stats == state.stats.end() || stats->second.count != a.count) {
            fail(ErrorKind::InvalidInput, "register_level: stats out of sync for region " + std::to_string(id));
        }
        RegionRecord r;
        r.id = id;
        r.level = state.level;
        r.size = a.count;
        r.center_of_mass = {a.sum_x / static_cast<double>(a.count), a.sum_y / static_cast<double>(a.count)};
        r.avg_intensity = stats->second.mean();
        r.bounding_box = a.box;
        records.push_back(std::move(r));
    }

    auto by_id = [&](RegionId id) { return find_record(records, id); };
    for (const auto& [a, b] : borders) {
        by_id(a)->adjacent.push_back(b);
        by_id(b)->adjacent.push_back(a);
    }
    for (RegionRecord& r : records) {
        std::sort(r.adjacent.begin(), r.adjacent.end());
        r.adjacent.erase(std::unique(r.adjacent.begin(), r.adjacent.end()), r.adjacent.end());
    }
    return records;
}

void link_hierarchy(std::vector<LevelRecords>& levels, const std::vector<SegmentationState>& states) {
    if (levels.size() != states.size()) fail(ErrorKind::InvalidInput, "link_hierarchy: level count mismatch");
    for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
        const SegmentationState& fine = states[k];
        const SegmentationState& coarse = states[k + 1];
        if (coarse.width != (fine.width + 1) / 2 || coarse.height != (fine.height + 1) / 2) {
            fail(ErrorKind::InvalidInput, "link_hierarchy: levels are not a squeeze pair");
        }

        // Overlap counts per (fine region, coarse region), sorted so each fine
        // region's candidates are contiguous and ascending by coarse id.
        std::vector<std::pair<RegionId, RegionId>> pairs;
        pairs.reserve(fine.labels.size());
        for (int y = 0; y < fine.height; ++y) {
            for (int x = 0; x < fine.width; ++x) {
                pairs.emplace_back(fine.labels[static_cast<std::size_t>(y) * fine.width + x],
                                   coarse.labels[static_cast<std::size_t>(y / 2) * coarse.width + x / 2]);
            }
        }
        std::sort(pairs.begin(), pairs.end());

        for (std::size_t i = 0; i < pairs.size();) {
            const RegionId child = pairs[i].first;
            RegionId best = kUncommitted;
            std::size_t best_count = 0;
            while (i < pairs.size() && pairs[i].first == child) {
                const RegionId parent = pairs[i].second;
                std::size_t count = 0;
                while (i < pairs.size() && pairs[i].first == child && pairs[i].second == parent) {
                    ++count;
                    ++i;
                }
                if (count > best_count) {
                    best = parent;
                    best_count = count;
                }
            }
            RegionRecord* rec = levels[k].find(child);
            if (!rec) fail(ErrorKind::InvalidInput, "link_hierarchy: unregistered region " + std::to_string(child));
            rec->parent_id = levels[k + 1].find(child) ? child : best;
        }
    }
    for (RegionRecord& r : levels.back().regions) r.parent_id.reset();
}

void compute_relations(LevelRecords& level) {
    auto& regions = level.regions;
    for (RegionRecord& a : regions) {
        a.relations.clear();
        if (a.parent_id) a.relations.push_back({Relation::SubPartOf, *a.parent_id});
        for (const RegionRecord& b : regions) {
            if (a.id == b.id) continue;
            const auto& ab = a.bounding_box;
            const auto& bb = b.bounding_box;
            const double dx = b.center_of_mass.x - a.center_of_mass.x;
            const double dy = b.center_of_mass.y - a.center_of_mass.y;
            const double x_margin = 0.5 * std::min(ab.width(), bb.width());
            const double y_margin = 0.5 * std::min(ab.height(), bb.height());

            if (std::binary_search(a.adjacent.begin(), a.adjacent.end(), b.id)) {
                a.relations.push_back({Relation::AdjacentTo, b.id});
            }
            if (dx > x_margin) a.relations.push_back({Relation::LeftOf, b.id});
            if (-dx > x_margin) a.relations.push_back({Relation::RightOf, b.id});
            if (dy > y_margin) a.relations.push_back({Relation::Above, b.id});
            if (-dy > y_margin) a.relations.push_back({Relation::Below, b.id});
            if (bb.strictly_contains(ab) && a.adjacent.size() == 1 && a.adjacent.front() == b.id) {
                a.relations.push_back({Relation::Inside, b.id});
            }
        }
    }
}

AppearanceList build_appearance_list(const std::vector<SegmentationState>& states, const SegConfig& cfg,
                                     std::size_t top_threshold) {
    AppearanceList list;
    list.config = cfg;
    list.top_threshold = top_threshold;
    list.levels.resize(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
        list.levels[k].level = k;
        list.levels[k].width = states[k].width;
        list.levels[k].height = states[k].height;
        list.levels[k].regions = register_level(states[k]);
    }
    if (!states.empty()) link_hierarchy(list.levels, states);
    for (std::size_t k = 0; k < states.size(); ++k) compute_relations(list.levels[k]);
    return list;
}

}  // namespace physem
