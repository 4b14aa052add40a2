#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "physem/segmentation.hpp"
#include "physem/types.hpp"

namespace physem {

enum class Relation { SubPartOf, AdjacentTo, LeftOf, RightOf, Above, Below, Inside };

std::string_view relation_name(Relation relation) noexcept;
std::optional<Relation> parse_relation(std::string_view name) noexcept;

struct BoundingBox {
    int min_x = 0;
    int min_y = 0;
    int max_x = 0;
    int max_y = 0;

    int width() const noexcept { return max_x - min_x + 1; }
    int height() const noexcept { return max_y - min_y + 1; }

    /// True when `inner` lies inside this box without touching any of its sides.
    bool strictly_contains(const BoundingBox& inner) const noexcept {
        return inner.min_x > min_x && inner.min_y > min_y && inner.max_x < max_x && inner.max_y < max_y;
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

struct RelationEdge {
    Relation relation = Relation::AdjacentTo;
    RegionId target = kUncommitted;
    friend bool operator==(const RelationEdge&, const RelationEdge&) = default;
};

/// One entry of the appearance list.
struct RegionRecord {
    RegionId id = kUncommitted;
    std::size_t level = 0;
    std::uint64_t size = 0;
    Point2 center_of_mass;
    double avg_intensity = 0.0;
    BoundingBox bounding_box;
    std::optional<RegionId> parent_id;  // region at level + 1; empty on the top level
    std::vector<RegionId> adjacent;     // ascending
    std::vector<RelationEdge> relations;

    bool has_relation(Relation relation, RegionId target) const noexcept;

    friend bool operator==(const RegionRecord&, const RegionRecord&) = default;
};

struct LevelRecords {
    std::size_t level = 0;
    int width = 0;
    int height = 0;
    std::vector<RegionRecord> regions;  // sorted by id

    std::uint64_t area() const noexcept { return static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height); }
    const RegionRecord* find(RegionId id) const noexcept;
    RegionRecord* find(RegionId id) noexcept;

    friend bool operator==(const LevelRecords&, const LevelRecords&) = default;
};

/// Hierarchical registry of every region at every pyramid level.
struct AppearanceList {
    std::vector<LevelRecords> levels;  // index 0 = original resolution
    SegConfig config;
    std::size_t top_threshold = kDefaultTopThreshold;

    std::size_t top_index() const noexcept { return levels.empty() ? 0 : levels.size() - 1; }
    const RegionRecord* find(std::size_t level, RegionId id) const noexcept;

    friend bool operator==(const AppearanceList&, const AppearanceList&) = default;
};

/// One record per region, sorted by id. Parent links and relations are left
/// empty. Throws InvalidInput if the state still has uncommitted pixels.
std::vector<RegionRecord> register_level(const SegmentationState& state);

/// Sets parent_id on every non-top record: the same id one level up when the
/// region was inherited, otherwise the coarser region that receives the most
/// of its pixels under (x, y) -> (x/2, y/2), lowest id on ties.
void link_hierarchy(std::vector<LevelRecords>& levels, const std::vector<SegmentationState>& states);

/// Fills `relations` for every record of one level: sub_part_of (from the
/// parent link), adjacent_to, the four directional relations and inside.
void compute_relations(LevelRecords& level);

/// register_level + link_hierarchy + compute_relations over a full top-down result.
AppearanceList build_appearance_list(const std::vector<SegmentationState>& states, const SegConfig& cfg,
                                     std::size_t top_threshold);

}  // namespace physem
