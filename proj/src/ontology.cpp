#include "physem/ontology.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "physem/error.hpp"

namespace physem {

std::string_view attribute_name(Attribute attribute) noexcept {
    switch (attribute) {
        case Attribute::Intensity: return "intensity";
        case Attribute::RelativeSize: return "relative_size";
        case Attribute::VerticalPosition: return "vertical_position";
    }
    return "?";
}

const Predicate* ConceptClass::predicate(Attribute attribute) const noexcept {
    for (const auto& p : predicates) {
        if (p.attribute == attribute) return &p;
    }
    return nullptr;
}

Predicate* ConceptClass::predicate(Attribute attribute) noexcept {
    for (auto& p : predicates) {
        if (p.attribute == attribute) return &p;
    }
    return nullptr;
}

const ConceptClass* Ontology::find(std::string_view concept_name) const noexcept {
    for (const auto& c : concepts) {
        if (c.name == concept_name) return &c;
    }
    return nullptr;
}

std::optional<std::size_t> Ontology::index_of(std::string_view concept_name) const noexcept {
    for (std::size_t i = 0; i < concepts.size(); ++i) {
        if (concepts[i].name == concept_name) return i;
    }
    return std::nullopt;
}

namespace {

[[noreturn]] void invalid(const std::string& concept_name, const std::string& what) {
    fail(ErrorKind::Validation, "concept '" + concept_name + "': " + what);
}

std::vector<std::string> dependencies(const ConceptClass& c) {
    std::vector<std::string> out;
    for (const auto& r : c.requirements) {
        if (!r.subject.empty()) out.push_back(r.subject);
        if (!r.target.empty()) out.push_back(r.target);
    }
    return out;
}

}  // namespace

void Ontology::validate() const {
    std::set<std::string, std::less<>> names;
    for (const auto& c : concepts) {
        if (c.name.empty()) fail(ErrorKind::Validation, "concept with an empty name");
        if (!names.insert(c.name).second) invalid(c.name, "duplicate concept name");
    }
    for (const auto& c : concepts) {
        if (c.specificity() == 0) invalid(c.name, "no predicates or required relations");
        std::set<Attribute> seen;
        for (const auto& p : c.predicates) {
            if (c.kind == ConceptKind::Composite) invalid(c.name, "composite concepts take no attribute predicates");
            if (!seen.insert(p.attribute).second) {
                invalid(c.name, "duplicate predicate " + std::string(attribute_name(p.attribute)));
            }
            if (!std::isfinite(p.range.lo) || !std::isfinite(p.range.hi) || p.range.lo > p.range.hi) {
                invalid(c.name, std::string(attribute_name(p.attribute)) + " interval is not well-ordered");
            }
        }
        for (const auto& r : c.requirements) {
            if (c.kind == ConceptKind::Object) {
                if (!r.subject.empty()) invalid(c.name, "object requirements cannot name a subject");
                if (!r.relation || r.target.empty()) invalid(c.name, "object requirements need a relation and a target");
                const ConceptClass* t = find(r.target);
                if (!t) invalid(c.name, "unresolved relation target '" + r.target + "'");
                if (t->kind != ConceptKind::Object) {
                    invalid(c.name, "object requirement target '" + r.target + "' is a composite");
                }
            } else {
                if (r.subject.empty()) invalid(c.name, "composite requirement without a subject");
                if (!find(r.subject)) invalid(c.name, "unresolved relation subject '" + r.subject + "'");
                if (r.relation.has_value() != !r.target.empty()) {
                    invalid(c.name, "relation and target must be given together");
                }
                if (!r.target.empty() && !find(r.target)) {
                    invalid(c.name, "unresolved relation target '" + r.target + "'");
                }
            }
        }
    }

    // Depth-first search over concept dependencies; any back edge is a cycle.
    std::map<std::string, int, std::less<>> state;  // 0 new, 1 on stack, 2 done
    auto visit = [&](auto&& self, const ConceptClass& c) -> void {
        state[c.name] = 1;
        for (const auto& dep : dependencies(c)) {
            const int s = state[dep];
            if (s == 1) invalid(c.name, "dependency cycle through '" + dep + "'");
            if (s == 0) self(self, *find(dep));
        }
        state[c.name] = 2;
    };
    for (const auto& c : concepts) {
        if (state[c.name] == 0) visit(visit, c);
    }
}

double attribute_value(Attribute attribute, const RegionRecord& rec, std::uint64_t plane_area, int plane_height) {
    switch (attribute) {
        case Attribute::Intensity: return rec.avg_intensity;
        case Attribute::RelativeSize:
            return plane_area == 0 ? 0.0 : static_cast<double>(rec.size) / static_cast<double>(plane_area);
        case Attribute::VerticalPosition:
            return plane_height <= 0 ? 0.0 : (rec.center_of_mass.y + 0.5) / plane_height;
    }
    return 0.0;
}

namespace {

bool predicates_hold(const ConceptClass& c, const RegionRecord& rec, const LevelRecords& level) {
    for (const auto& p : c.predicates) {
        if (!p.range.contains(attribute_value(p.attribute, rec, level.area(), level.height))) return false;
    }
    return true;
}

/// Object concepts ordered so that every relation target comes before the
/// concepts that refer to it.
std::vector<std::size_t> object_order(const Ontology& ont) {
    std::vector<std::size_t> order;
    std::set<std::string, std::less<>> placed;
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < ont.concepts.size(); ++i) {
        if (ont.concepts[i].kind == ConceptKind::Object) pending.push_back(i);
    }
    while (!pending.empty()) {
        std::vector<std::size_t> ready, rest;
        for (const std::size_t i : pending) {
            const auto deps = dependencies(ont.concepts[i]);
            const bool met = std::all_of(deps.begin(), deps.end(), [&](const std::string& d) { return placed.count(d) > 0; });
            (met ? ready : rest).push_back(i);
        }
        if (ready.empty()) break;  // cyclic input; the rest never match
        for (const std::size_t i : ready) {
            order.push_back(i);
            placed.insert(ont.concepts[i].name);
        }
        pending = std::move(rest);
    }
    return order;
}

}  // namespace

std::vector<Annotation> match_objects(const Ontology& ont, const AppearanceList& app, const MatchOptions& options) {
    if (app.levels.empty()) return {};
    const LevelRecords& level = app.levels.front();

    // matched[concept index] = region ids carrying that concept
    std::map<std::size_t, std::vector<RegionId>> matched;
    for (const std::size_t ci : object_order(ont)) {
        const ConceptClass& c = ont.concepts[ci];
        auto& hits = matched[ci];
        for (const auto& rec : level.regions) {
            if (!predicates_hold(c, rec, level)) continue;
            const bool related = std::all_of(c.requirements.begin(), c.requirements.end(), [&](const Requirement& r) {
                const auto& targets = matched[*ont.index_of(r.target)];
                return std::any_of(targets.begin(), targets.end(), [&](RegionId t) {
                    return t != rec.id && rec.has_relation(*r.relation, t);
                });
            });
            if (related) hits.push_back(rec.id);
        }
    }

    std::map<RegionId, std::vector<std::size_t>> per_region;
    for (const auto& [ci, ids] : matched) {
        for (const RegionId id : ids) per_region[id].push_back(ci);
    }

    std::vector<Annotation> out;
    for (auto& [id, cis] : per_region) {
        std::sort(cis.begin(), cis.end());
        if (options.exclusive) {
            // Highest specificity wins; stable max keeps the earliest declaration on ties.
            std::size_t best = cis.front();
            for (const std::size_t ci : cis) {
                if (ont.concepts[ci].specificity() > ont.concepts[best].specificity()) best = ci;
            }
            cis = {best};
        }
        for (const std::size_t ci : cis) {
            const ConceptClass& c = ont.concepts[ci];
            out.push_back({id, 0, c.name, 1.0,
                           c.origin == ConceptOrigin::Taught ? AnnotationSource::Taught : AnnotationSource::Matched});
        }
    }
    return out;
}

namespace {

struct RegionRef {
    std::size_t level = 0;
    RegionId id = kUncommitted;
    friend bool operator==(const RegionRef&, const RegionRef&) = default;
};

/// Follows parent links from `ref` up to `level`; the scene level maps everything to region 0.
std::optional<RegionId> lift(const AppearanceList& app, RegionRef ref, std::size_t level) {
    if (level >= app.levels.size()) return kSceneRegion;
    while (ref.level < level) {
        const RegionRecord* rec = app.find(ref.level, ref.id);
        if (!rec || !rec->parent_id) return std::nullopt;
        ref = {ref.level + 1, *rec->parent_id};
    }
    if (ref.level != level) return std::nullopt;
    return ref.id;
}

bool related(const AppearanceList& app, const RegionRef& a, Relation relation, const RegionRef& b) {
    if (relation == Relation::SubPartOf) {
        return b.level > a.level && lift(app, a, b.level) == b.id;
    }
    // Regions on different levels are compared at the coarser one.
    const std::size_t level = std::max(a.level, b.level);
    if (level >= app.levels.size()) return false;
    const auto la = lift(app, a, level);
    const auto lb = lift(app, b, level);
    if (!la || !lb || *la == *lb) return false;
    const RegionRecord* rec = app.find(level, *la);
    return rec && rec->has_relation(relation, *lb);
}

/// Smallest region containing every constituent, or the scene record.
RegionRef common_parent(const AppearanceList& app, const std::vector<RegionRef>& parts) {
    std::size_t level = 0;
    for (const auto& p : parts) level = std::max(level, p.level);
    for (; level < app.levels.size(); ++level) {
        std::optional<RegionId> shared;
        bool same = true;
        for (const auto& p : parts) {
            const auto id = lift(app, p, level);
            if (!id || (shared && *shared != *id)) {
                same = false;
                break;
            }
            shared = id;
        }
        if (same && shared) return {level, *shared};
    }
    return {app.levels.size(), kSceneRegion};
}

}  // namespace

DerivationResult derive_composites(const Ontology& ont, const AppearanceList& app, const std::vector<Annotation>& base) {
    DerivationResult result;
    std::vector<Annotation> known = base;
    std::set<std::string, std::less<>> fired;

    for (;;) {
        std::vector<Annotation> fresh;
        for (const auto& c : ont.concepts) {
            if (c.kind != ConceptKind::Composite || fired.count(c.name)) continue;
            std::vector<RegionRef> parts;
            bool ok = true;
            for (const auto& req : c.requirements) {
                bool found = false;
                for (const auto& a : known) {
                    if (a.concept_name != req.subject) continue;
                    const RegionRef ra{a.level, a.region_id};
                    if (!req.relation) {
                        parts.push_back(ra);
                        found = true;
                        break;
                    }
                    for (const auto& b : known) {
                        if (b.concept_name != req.target) continue;
                        const RegionRef rb{b.level, b.region_id};
                        if (ra == rb || !related(app, ra, *req.relation, rb)) continue;
                        parts.push_back(ra);
                        parts.push_back(rb);
                        found = true;
                        break;
                    }
                    if (found) break;
                }
                if (!found) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            const RegionRef at = common_parent(app, parts);
            fresh.push_back({at.id, at.level, c.name, 1.0, AnnotationSource::Matched});
        }
        if (fresh.empty()) break;
        ++result.passes;
        for (auto& a : fresh) {
            fired.insert(a.concept_name);
            known.push_back(a);
            result.annotations.push_back(std::move(a));
        }
    }
    return result;
}

std::vector<Annotation> annotate(const Ontology& ont, const AppearanceList& app, const MatchOptions& options) {
    std::vector<Annotation> out = match_objects(ont, app, options);
    DerivationResult derived = derive_composites(ont, app, out);
    out.insert(out.end(), std::make_move_iterator(derived.annotations.begin()),
               std::make_move_iterator(derived.annotations.end()));
    return out;
}

namespace {

Interval hull(const Interval& a, const Interval& b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

}  // namespace

Ontology teach(const Ontology& ont, const RegionRecord& rec, std::uint64_t plane_area, int plane_height,
               std::string_view label, const TeachTolerances& tolerances) {
    if (label.empty()) fail(ErrorKind::InvalidInput, "teach: empty label");
    if (!(tolerances.intensity_half_width >= 0.0) || !(tolerances.size_factor >= 1.0)) {
        fail(ErrorKind::InvalidInput, "teach: need intensity half-width >= 0 and size factor >= 1");
    }
    if (plane_area == 0 || plane_height <= 0) fail(ErrorKind::InvalidInput, "teach: empty plane");

    const double h = tolerances.intensity_half_width;
    const double f = tolerances.size_factor;
    const double avg = rec.avg_intensity;
    const double rs = attribute_value(Attribute::RelativeSize, rec, plane_area, plane_height);
    const Interval intensity{std::clamp(avg - h, 0.0, 255.0), std::clamp(avg + h, 0.0, 255.0)};
    const Interval size{std::clamp(rs / f, 0.0, 1.0), std::clamp(rs * f, 0.0, 1.0)};

    Ontology next = ont;
    ++next.version;
    const auto idx = next.index_of(label);
    if (!idx) {
        ConceptClass c;
        c.name = std::string(label);
        c.kind = ConceptKind::Object;
        c.origin = ConceptOrigin::Taught;
        c.predicates = {{Attribute::Intensity, intensity}, {Attribute::RelativeSize, size}};
        next.concepts.push_back(std::move(c));
        return next;
    }

    ConceptClass& c = next.concepts[*idx];
    if (c.kind == ConceptKind::Composite) {
        fail(ErrorKind::InvalidTeach, "cannot teach '" + std::string(label) + "': it is a composite concept");
    }
    // Only constrained attributes are widened; an absent predicate already admits everything.
    if (Predicate* p = c.predicate(Attribute::Intensity)) p->range = hull(p->range, intensity);
    if (Predicate* p = c.predicate(Attribute::RelativeSize)) p->range = hull(p->range, size);
    if (Predicate* p = c.predicate(Attribute::VerticalPosition)) {
        const double v = attribute_value(Attribute::VerticalPosition, rec, plane_area, plane_height);
        p->range = hull(p->range, {v, v});
    }
    return next;
}

Ontology teach(const Ontology& ont, const AppearanceList& app, std::size_t level, RegionId region,
               std::string_view label, const TeachTolerances& tolerances) {
    const RegionRecord* rec = app.find(level, region);
    if (!rec) {
        fail(ErrorKind::NotFound, "no region " + std::to_string(region) + " at level " + std::to_string(level));
    }
    const LevelRecords& l = app.levels[level];
    return teach(ont, *rec, l.area(), l.height, label, tolerances);
}

}  // namespace physem
