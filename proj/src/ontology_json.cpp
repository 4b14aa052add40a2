#include <algorithm>

#include <nlohmann/json.hpp>

#include "physem/appearance_json.hpp"
#include "physem/error.hpp"
#include "physem/image_io.hpp"
#include "physem/ontology.hpp"

namespace physem {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kOntologyFormat = "physem-ontology";
constexpr std::string_view kAnnotationsFormat = "physem-annotations";

constexpr Attribute kAttributes[] = {Attribute::Intensity, Attribute::RelativeSize, Attribute::VerticalPosition};

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::Validation, "ontology: " + what); }

void allow_keys(const json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
    for (const auto& [k, v] : obj.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) bad(where + ": unknown key '" + k + "'");
    }
}

std::string string_at(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) bad(where + ": '" + key + "' must be a string");
    return it->get<std::string>();
}

Interval parse_interval(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        bad(where + ": interval must be [lo, hi]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

ConceptClass parse_concept(const json& j, std::size_t index) {
    std::string where = "concept #" + std::to_string(index);
    if (!j.is_object()) bad(where + " is not an object");
    allow_keys(j, {"name", "kind", "origin", "predicates", "required_relations"}, where);

    ConceptClass c;
    c.name = string_at(j, "name", where);
    where = "concept '" + c.name + "'";

    const std::string kind = j.contains("kind") ? string_at(j, "kind", where) : "object";
    if (kind == "object") {
        c.kind = ConceptKind::Object;
    } else if (kind == "composite") {
        c.kind = ConceptKind::Composite;
    } else {
        bad(where + ": kind must be object or composite");
    }

    const std::string origin = j.contains("origin") ? string_at(j, "origin", where) : "authored";
    if (origin == "authored") {
        c.origin = ConceptOrigin::Authored;
    } else if (origin == "taught") {
        c.origin = ConceptOrigin::Taught;
    } else {
        bad(where + ": origin must be authored or taught");
    }

    if (const auto it = j.find("predicates"); it != j.end()) {
        if (!it->is_object()) bad(where + ": predicates must be an object");
        allow_keys(*it, {"intensity", "relative_size", "vertical_position"}, where + " predicates");
        for (const Attribute a : kAttributes) {
            const auto p = it->find(std::string(attribute_name(a)));
            if (p != it->end()) c.predicates.push_back({a, parse_interval(*p, where)});
        }
    }

    if (const auto it = j.find("required_relations"); it != j.end()) {
        if (!it->is_array()) bad(where + ": required_relations must be an array");
        for (const json& r : *it) {
            if (!r.is_object()) bad(where + ": required relation is not an object");
            allow_keys(r, {"subject", "relation", "target"}, where + " required relation");
            Requirement req;
            if (r.contains("subject")) req.subject = string_at(r, "subject", where);
            if (r.contains("target")) req.target = string_at(r, "target", where);
            if (r.contains("relation")) {
                const std::string name = string_at(r, "relation", where);
                req.relation = parse_relation(name);
                if (!req.relation) bad(where + ": unknown relation '" + name + "'");
            }
            c.requirements.push_back(std::move(req));
        }
    }
    return c;
}

std::string source_name(AnnotationSource s) { return s == AnnotationSource::Taught ? "taught" : "matched"; }

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

}  // namespace

Ontology parse_ontology(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        bad(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) bad("document is not an object");
    allow_keys(doc, {"format", "name", "version", "concepts"}, "document");
    if (doc.contains("format") && doc["format"] != kOntologyFormat) bad("unexpected format tag");

    Ontology ont;
    ont.name = string_at(doc, "name", "document");
    if (doc.contains("version")) {
        if (!doc["version"].is_number_integer() || doc["version"].get<std::int64_t>() < 1) {
            bad("version must be a positive integer");
        }
        ont.version = doc["version"].get<std::int64_t>();
    }
    if (const auto it = doc.find("concepts"); it != doc.end()) {
        if (!it->is_array()) bad("concepts must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) ont.concepts.push_back(parse_concept((*it)[i], i));
    }
    ont.validate();
    return ont;
}

std::string serialize_ontology(const Ontology& ont) {
    ordered_json doc;
    doc["format"] = kOntologyFormat;
    doc["name"] = ont.name;
    doc["version"] = ont.version;
    doc["concepts"] = ordered_json::array();
    for (const auto& c : ont.concepts) {
        ordered_json jc;
        jc["name"] = c.name;
        jc["kind"] = c.kind == ConceptKind::Object ? "object" : "composite";
        jc["origin"] = c.origin == ConceptOrigin::Taught ? "taught" : "authored";
        if (!c.predicates.empty()) {
            ordered_json preds = ordered_json::object();
            for (const Attribute a : kAttributes) {
                if (const Predicate* p = c.predicate(a)) {
                    preds[std::string(attribute_name(a))] = {p->range.lo, p->range.hi};
                }
            }
            jc["predicates"] = preds;
        }
        if (!c.requirements.empty()) {
            ordered_json reqs = ordered_json::array();
            for (const auto& r : c.requirements) {
                ordered_json jr = ordered_json::object();
                if (!r.subject.empty()) jr["subject"] = r.subject;
                if (r.relation) jr["relation"] = relation_name(*r.relation);
                if (!r.target.empty()) jr["target"] = r.target;
                reqs.push_back(jr);
            }
            jc["required_relations"] = reqs;
        }
        doc["concepts"].push_back(jc);
    }
    return doc.dump(2) + "\n";
}

Ontology load_ontology(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    return parse_ontology(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void save_ontology_atomic(const std::filesystem::path& path, const Ontology& ont) {
    write_file_atomic(path, serialize_ontology(ont));
}

std::string export_annotations(const Ontology& ont, const std::vector<Annotation>& annotations) {
    std::string s = "{\n";
    s += "\"format\":\"" + std::string(kAnnotationsFormat) + "\",\n";
    s += "\"ontology\":" + json_string(ont.name) + ",\n";
    s += "\"ontology_version\":" + std::to_string(ont.version) + ",\n";
    s += "\"annotations\":[\n";
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        const Annotation& a = annotations[i];
        s += "{\"region_id\":" + std::to_string(a.region_id) + ",\"level\":" + std::to_string(a.level) +
             ",\"concept\":" + json_string(a.concept_name) + ",\"score\":" + format_real(a.score) +
             ",\"source\":\"" + source_name(a.source) + "\"}";
        s += i + 1 < annotations.size() ? ",\n" : "\n";
    }
    s += "]\n}\n";
    return s;
}

}  // namespace physem
