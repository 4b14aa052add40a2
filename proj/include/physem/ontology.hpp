#pragma once

// Restricted partial ontologies: named concept classes whose attribute
// predicates and relation requirements are matched against the appearance
// list, plus the supervised teaching step that creates or widens concepts
// from a region a human points at.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "physem/registry.hpp"

namespace physem {

enum class ConceptKind { Object, Composite };
enum class ConceptOrigin { Authored, Taught };
enum class Attribute { Intensity, RelativeSize, VerticalPosition };

std::string_view attribute_name(Attribute attribute) noexcept;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const noexcept { return lo <= v && v <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct Predicate {
    Attribute attribute = Attribute::Intensity;
    Interval range;
    friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// For object concepts `subject` is empty and means "the region itself".
/// For composites `subject` names a concept; without a relation the
/// requirement only asks that some region carries `subject`.
struct Requirement {
    std::string subject;
    std::optional<Relation> relation;
    std::string target;
    friend bool operator==(const Requirement&, const Requirement&) = default;
};

struct ConceptClass {
    std::string name;
    ConceptKind kind = ConceptKind::Object;
    ConceptOrigin origin = ConceptOrigin::Authored;
    std::vector<Predicate> predicates;  // objects only; at most one per attribute
    std::vector<Requirement> requirements;

    std::size_t specificity() const noexcept { return predicates.size() + requirements.size(); }
    const Predicate* predicate(Attribute attribute) const noexcept;
    Predicate* predicate(Attribute attribute) noexcept;

    friend bool operator==(const ConceptClass&, const ConceptClass&) = default;
};

struct Ontology {
    std::string name;
    std::int64_t version = 1;
    std::vector<ConceptClass> concepts;  // declaration order matters for tie-breaks

    const ConceptClass* find(std::string_view concept_name) const noexcept;
    std::optional<std::size_t> index_of(std::string_view concept_name) const noexcept;

    /// Throws Validation on duplicate names, ill-ordered intervals, unresolved
    /// requirement subjects/targets, malformed requirements, empty concepts or
    /// dependency cycles.
    void validate() const;

    friend bool operator==(const Ontology&, const Ontology&) = default;
};

enum class AnnotationSource { Matched, Taught };

/// A concept label attached to one region. Composite labels may sit on a
/// coarser level, or on the scene record (region 0 at level = level count)
/// when their constituents share no region below the frame.
struct Annotation {
    RegionId region_id = kUncommitted;
    std::size_t level = 0;
    std::string concept_name;
    double score = 1.0;
    AnnotationSource source = AnnotationSource::Matched;
    friend bool operator==(const Annotation&, const Annotation&) = default;
};

inline constexpr RegionId kSceneRegion = 0;

struct MatchOptions {
    bool exclusive = false;  // keep only the most specific concept per region
};

/// Annotates level-0 regions with every object concept whose predicates and
/// relation requirements all hold. Sorted by (region id, declaration order).
std::vector<Annotation> match_objects(const Ontology& ont, const AppearanceList& app,
                                      const MatchOptions& options = {});

struct DerivationResult {
    std::vector<Annotation> annotations;  // composite annotations only, in firing order
    int passes = 0;                       // passes that produced at least one annotation
};

/// Forward-chains composite concepts to a fixpoint. Each pass evaluates the
/// not-yet-fired composites against the annotations known when the pass began.
DerivationResult derive_composites(const Ontology& ont, const AppearanceList& app,
                                   const std::vector<Annotation>& base);

/// match_objects + derive_composites, base annotations first.
std::vector<Annotation> annotate(const Ontology& ont, const AppearanceList& app, const MatchOptions& options = {});

struct TeachTolerances {
    double intensity_half_width = 20.0;
    double size_factor = 3.0;
};

/// Returns the next version of `ont` in which `label` admits `rec`. A new
/// label becomes an object concept with intensity [avg - h, avg + h] and
/// relative size [s / f, s * f]; an existing object has each interval
/// widened to cover that band (vertical position widened to the region's
/// value). Throws InvalidTeach if `label` names a composite.
Ontology teach(const Ontology& ont, const RegionRecord& rec, std::uint64_t plane_area, int plane_height,
               std::string_view label, const TeachTolerances& tolerances = {});

/// Convenience overload resolving the region and its plane from `app`.
/// Throws NotFound for an unknown region.
Ontology teach(const Ontology& ont, const AppearanceList& app, std::size_t level, RegionId region,
               std::string_view label, const TeachTolerances& tolerances = {});

/// Attribute value of a record on its level, as the matcher sees it.
double attribute_value(Attribute attribute, const RegionRecord& rec, std::uint64_t plane_area, int plane_height);

// Documents. Ontologies round-trip exactly (reals at full precision);
// annotation documents are canonical.
Ontology parse_ontology(std::string_view text);
std::string serialize_ontology(const Ontology& ont);
Ontology load_ontology(const std::filesystem::path& path);
void save_ontology_atomic(const std::filesystem::path& path, const Ontology& ont);

std::string export_annotations(const Ontology& ont, const std::vector<Annotation>& annotations);

}  // namespace physem
