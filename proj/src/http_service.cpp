#include <charconv>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "physem/error.hpp"
#include "physem/service.hpp"

namespace physem {

using nlohmann::json;

namespace {

int status_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return 400;
        case ErrorKind::Validation:
        case ErrorKind::InvalidTeach: return 422;
        case ErrorKind::NotFound: return 404;
        case ErrorKind::Conflict: return 409;
        case ErrorKind::Io: return 500;
    }
    return 500;
}

const char* kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid_input";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::InvalidTeach: return "invalid_teach";
        case ErrorKind::NotFound: return "not_found";
        case ErrorKind::Conflict: return "conflict";
        case ErrorKind::Io: return "io";
    }
    return "internal";
}

void send_json(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    send_json(res, status, json{{"error", kind}, {"message", message}}.dump() + "\n");
}

/// Runs a handler, turning exceptions into JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, status_for(e.kind()), kind_name(e.kind()), e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "invalid_input", std::string("malformed JSON: ") + e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

double query_real(const httplib::Request& req, const char* key, double fallback) {
    if (!req.has_param(key)) return fallback;
    const std::string v = req.get_param_value(key);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::InvalidInput, std::string("query parameter ") + key + " is not a number");
}

int query_int(const httplib::Request& req, const char* key, int fallback) {
    if (!req.has_param(key)) return fallback;
    const std::string v = req.get_param_value(key);
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        fail(ErrorKind::InvalidInput, std::string("query parameter ") + key + " is not an integer");
    }
    return out;
}

AnalysisConfig config_from_query(const httplib::Request& req) {
    AnalysisConfig cfg;
    cfg.seg.merge_threshold = query_real(req, "merge_threshold", cfg.seg.merge_threshold);
    cfg.seg.deviation_delta = query_real(req, "deviation_delta", cfg.seg.deviation_delta);
    cfg.seg.min_seed_size = query_int(req, "min_seed_size", cfg.seg.min_seed_size);
    cfg.seg.max_refine_iters = query_int(req, "max_refine_iters", cfg.seg.max_refine_iters);
    const int top = query_int(req, "top_threshold", static_cast<int>(cfg.top_threshold));
    if (top <= 0) fail(ErrorKind::InvalidInput, "top_threshold must be positive");
    cfg.top_threshold = static_cast<std::size_t>(top);
    return cfg;
}

TeachRequest teach_from_json(const json& body) {
    if (!body.is_object()) fail(ErrorKind::InvalidInput, "teach request must be an object");
    TeachRequest r;
    r.analysis_id = body.at("analysis_id").get<std::string>();
    r.level = body.value("level", std::size_t{0});
    r.region_id = body.at("region_id").get<RegionId>();
    r.label = body.at("label").get<std::string>();
    r.tolerances.intensity_half_width = body.value("intensity_half_width", r.tolerances.intensity_half_width);
    r.tolerances.size_factor = body.value("size_factor", r.tolerances.size_factor);
    return r;
}

}  // namespace

struct HttpService::Impl {
    Store& store;
    httplib::Server server;

    explicit Impl(Store& s) : store(s) { routes(); }

    void routes() {
        // The teaching UI is served from another origin.
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS"},
                                    {"Access-Control-Allow-Headers", "Content-Type"}});
        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server.Post("/analyses", guarded([this](const httplib::Request& req, httplib::Response& res) {
            std::string body = req.body;
            if (req.is_multipart_form_data()) {
                if (!req.has_file("image")) fail(ErrorKind::InvalidInput, "multipart upload needs an 'image' field");
                body = req.get_file_value("image").content;
            }
            if (body.empty()) fail(ErrorKind::InvalidInput, "empty upload");
            const auto bytes = std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size());
            const StoredAnalysis stored = store.analyze_and_store(bytes, config_from_query(req));
            send_json(res, stored.created ? 201 : 200,
                      json{{"analysis_id", stored.id}, {"created", stored.created}}.dump() + "\n");
        }));

        server.Get(R"(/analyses/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, store.appearance_document(req.matches[1].str()));
        }));

        server.Get(R"(/analyses/([0-9a-f]+)/levels/(\d+)/labelmap)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string level = req.matches[2].str();
                       if (level.size() > 6) fail(ErrorKind::NotFound, "no such level");
                       const Bytes pgm = store.labelmap_pgm(req.matches[1].str(), std::stoul(level));
                       res.set_content(std::string(pgm.begin(), pgm.end()), "image/x-portable-graymap");
                   }));

        server.Get(R"(/analyses/([0-9a-f]+)/annotations)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       if (!req.has_param("ontology")) fail(ErrorKind::InvalidInput, "missing ?ontology=");
                       send_json(res, 200,
                                 store.annotations_document(req.matches[1].str(), req.get_param_value("ontology")));
                   }));

        server.Get(R"(/ontologies/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, serialize_ontology(store.ontology(req.matches[1].str())));
        }));

        server.Put(R"(/ontologies/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string name = req.matches[1].str();
            const std::int64_t version = store.put_ontology(name, parse_ontology(req.body));
            send_json(res, 200, json{{"name", name}, {"version", version}}.dump() + "\n");
        }));

        server.Post(R"(/ontologies/([^/]+)/teach)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string name = req.matches[1].str();
                        const std::int64_t version = store.apply_teaching(name, teach_from_json(json::parse(req.body)));
                        send_json(res, 200, json{{"name", name}, {"version", version}}.dump() + "\n");
                    }));
    }
};

HttpService::HttpService(Store& store) : impl_(std::make_unique<Impl>(store)) {}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) fail(ErrorKind::Io, "cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) fail(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpService::serve() { impl_->server.listen_after_bind(); }

void HttpService::stop() {
    if (impl_) impl_->server.stop();
}

std::pair<std::string, int> parse_listen_address(std::string_view text) {
    std::string host = "127.0.0.1";
    std::string_view port_text = text;
    if (const auto colon = text.rfind(':'); colon != std::string_view::npos) {
        host = std::string(text.substr(0, colon));
        port_text = text.substr(colon + 1);
        if (host.empty()) host = "0.0.0.0";
    }
    int port = -1;
    const auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || p != port_text.data() + port_text.size() || port < 0 || port > 65535) {
        fail(ErrorKind::InvalidInput, "bad listen address '" + std::string(text) + "'");
    }
    return {host, port};
}

}  // namespace physem
