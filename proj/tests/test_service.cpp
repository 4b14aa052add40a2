#include <gtest/gtest.h>
#include <httplib.h>

#include <nlohmann/json.hpp>
#include <thread>

#include "physem/appearance_json.hpp"
#include "physem/error.hpp"
#include "physem/image_io.hpp"
#include "physem/service.hpp"
#include "support.hpp"

using namespace physem;
using nlohmann::json;

namespace {

const char* kSky = R"({"name":"scene","concepts":[{"name":"sky","predicates":{"intensity":[100,160]}}]})";

/// `ont` plus the authored composite "sun above ground".
Ontology with_landscape(Ontology ont) {
    ont.concepts.push_back({"landscape", ConceptKind::Composite, ConceptOrigin::Authored, {},
                            {{"sun", Relation::Above, "ground"}}});
    return ont;
}

Bytes sky_pgm() { return encode_pgm(physem::testing::sky_scene(128, 40, 22, 11, 86).image); }

RegionId region_near(const AppearanceList& app, double intensity) {
    for (const auto& r : app.levels[0].regions) {
        if (std::abs(r.avg_intensity - intensity) < 10) return r.id;
    }
    return kUncommitted;
}

std::vector<std::string> concepts_in(const std::string& annotations_doc) {
    const json doc = json::parse(annotations_doc);
    std::vector<std::string> out;
    for (const auto& a : doc.at("annotations")) out.push_back(a.at("concept").get<std::string>());
    return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no exception";
    return ErrorKind::Io;
}

class StoreTest : public ::testing::Test {
protected:
    physem::testing::TempDir dir;
    Store store{dir.path()};
};

}  // namespace

TEST_F(StoreTest, SameUploadSameId) {
    const Bytes pgm = sky_pgm();
    const StoredAnalysis first = store.analyze_and_store(pgm);
    const StoredAnalysis second = store.analyze_and_store(pgm);
    EXPECT_TRUE(first.created);
    EXPECT_FALSE(second.created);
    EXPECT_EQ(first.id, second.id);
    EXPECT_EQ(first.id.size(), 64u);

    AnalysisConfig other;
    other.seg.merge_threshold = 30;
    EXPECT_NE(store.analyze_and_store(pgm, other).id, first.id);
}

TEST_F(StoreTest, ConstantImageOneRegionPerLevel) {
    const auto id = store.analyze_and_store(encode_pgm(ImagePlane(64, 64, 99))).id;
    const AppearanceList app = store.appearance(id);
    for (const auto& level : app.levels) EXPECT_EQ(level.regions.size(), 1u);
    const Bytes pgm = store.labelmap_pgm(id, 0);
    EXPECT_EQ(decode_image(pgm), ImagePlane(64, 64, 1));
    EXPECT_EQ(kind_of([&] { store.labelmap_pgm(id, 9); }), ErrorKind::NotFound);
}

TEST_F(StoreTest, TruncatedUploadIsRejected) {
    Bytes pgm = sky_pgm();
    pgm.resize(pgm.size() - 100);
    EXPECT_EQ(kind_of([&] { store.analyze_and_store(pgm); }), ErrorKind::InvalidInput);
}

TEST_F(StoreTest, EmptyOntologyGivesNoAnnotations) {
    const auto id = store.analyze_and_store(sky_pgm()).id;
    store.put_ontology("empty", parse_ontology(R"({"name":"empty","concepts":[]})"));
    EXPECT_TRUE(concepts_in(store.annotations_document(id, "empty")).empty());
    EXPECT_EQ(kind_of([&] { store.annotations_document(id, "missing"); }), ErrorKind::NotFound);
    EXPECT_EQ(kind_of([&] { store.annotations_document(std::string(64, 'a'), "empty"); }), ErrorKind::NotFound);
}

TEST_F(StoreTest, TeachThenAnnotate) {
    const auto id = store.analyze_and_store(sky_pgm()).id;
    const AppearanceList app = store.appearance(id);
    store.put_ontology("scene", parse_ontology(R"({"name":"scene","concepts":[]})"));
    EXPECT_TRUE(concepts_in(store.annotations_document(id, "scene")).empty());

    EXPECT_EQ(store.apply_teaching("scene", {id, 0, region_near(app, 230), "sun", {}}), 2);
    EXPECT_EQ(concepts_in(store.annotations_document(id, "scene")), std::vector<std::string>{"sun"});
    EXPECT_EQ(store.apply_teaching("scene", {id, 0, region_near(app, 30), "ground", {}}), 3);
    EXPECT_EQ(store.put_ontology("scene", with_landscape(store.ontology("scene"))), 4);
    const auto labels = concepts_in(store.annotations_document(id, "scene"));
    EXPECT_EQ(std::multiset<std::string>(labels.begin(), labels.end()),
              (std::multiset<std::string>{"sun", "ground", "landscape"}));
    EXPECT_TRUE(std::filesystem::exists(dir / ("analyses/" + id + "/annotations/scene@2.json")));
    EXPECT_TRUE(std::filesystem::exists(dir / ("analyses/" + id + "/annotations/scene@4.json")));
}

TEST_F(StoreTest, TeachingCreatesMissingOntology) {
    const auto id = store.analyze_and_store(sky_pgm()).id;
    const RegionId sun = region_near(store.appearance(id), 230);
    EXPECT_EQ(store.apply_teaching("fresh", {id, 0, sun, "sun", {}}), 2);
    EXPECT_EQ(store.ontology("fresh").concepts.size(), 1u);
}

TEST_F(StoreTest, TeachingUnknownRegionOrAnalysis) {
    const auto id = store.analyze_and_store(sky_pgm()).id;
    EXPECT_EQ(kind_of([&] { store.apply_teaching("scene", {id, 0, 999, "x", {}}); }), ErrorKind::NotFound);
    EXPECT_EQ(kind_of([&] { store.apply_teaching("scene", {"nope", 0, 1, "x", {}}); }), ErrorKind::NotFound);
    EXPECT_FALSE(store.has_ontology("scene"));
}

TEST_F(StoreTest, HeldLockMeansConflict) {
    const auto id = store.analyze_and_store(sky_pgm()).id;
    const RegionId sun = region_near(store.appearance(id), 230);
    store.put_ontology("scene", parse_ontology(kSky));
    const std::string before = serialize_ontology(store.ontology("scene"));
    {
        auto held = store.lock_ontology("scene");
        std::thread other([&] {
            EXPECT_EQ(kind_of([&] { store.apply_teaching("scene", {id, 0, sun, "sun", {}}); }), ErrorKind::Conflict);
        });
        other.join();
        EXPECT_EQ(serialize_ontology(store.ontology("scene")), before);
    }
    EXPECT_EQ(store.apply_teaching("scene", {id, 0, sun, "sun", {}}), 2);
}

TEST_F(StoreTest, ConcurrentTeachesNeverCorrupt) {
    const auto id = store.analyze_and_store(sky_pgm()).id;
    const RegionId sun = region_near(store.appearance(id), 230);
    std::atomic<int> ok{0}, conflicts{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 10; ++i) {
                try {
                    store.apply_teaching("race", {id, 0, sun, "sun" + std::to_string(t), {}});
                    ++ok;
                } catch (const Error& e) {
                    EXPECT_EQ(e.kind(), ErrorKind::Conflict);
                    ++conflicts;
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    const Ontology final = store.ontology("race");
    EXPECT_EQ(final.version, 1 + ok.load());
    EXPECT_EQ(ok + conflicts, 80);
}

TEST_F(StoreTest, PutRequiresCurrentVersion) {
    EXPECT_EQ(kind_of([&] { store.put_ontology("scene", with_landscape(parse_ontology(kSky))); }),
              ErrorKind::Validation);  // sun and ground are not defined yet
    const Ontology ont = parse_ontology(kSky);
    EXPECT_EQ(store.put_ontology("scene", ont), 1);
    EXPECT_EQ(store.put_ontology("scene", ont), 2);
    EXPECT_EQ(kind_of([&] { store.put_ontology("scene", ont); }), ErrorKind::Conflict);
    EXPECT_EQ(kind_of([&] { store.put_ontology("other", ont); }), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of([&] { store.put_ontology("../evil", ont); }), ErrorKind::InvalidInput);
}

TEST(AnalysisId, PureFunctionOfBytesAndConfig) {
    const Bytes a = {1, 2, 3};
    EXPECT_EQ(analysis_id_for(a, {}), analysis_id_for(a, {}));
    EXPECT_NE(analysis_id_for(a, {}), analysis_id_for(Bytes{1, 2, 4}, {}));
    AnalysisConfig c;
    c.top_threshold = 100;
    EXPECT_NE(analysis_id_for(a, {}), analysis_id_for(a, c));
}

TEST(ListenAddress, Parsing) {
    EXPECT_EQ(parse_listen_address("0.0.0.0:9000"), (std::pair<std::string, int>{"0.0.0.0", 9000}));
    EXPECT_EQ(parse_listen_address("8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
    EXPECT_THROW(parse_listen_address("host:port"), Error);
    EXPECT_THROW(parse_listen_address("host:70000"), Error);
}

class HttpTest : public ::testing::Test {
protected:
    void SetUp() override {
        port = service.bind("127.0.0.1", 0);
        server = std::thread([this] { service.serve(); });
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        client->set_read_timeout(30, 0);
    }
    void TearDown() override {
        service.stop();
        server.join();
    }

    physem::testing::TempDir dir;
    Store store{dir.path()};
    HttpService service{store};
    int port = 0;
    std::thread server;
    std::unique_ptr<httplib::Client> client;
};

TEST_F(HttpTest, EndToEnd) {
    const Bytes pgm = sky_pgm();
    const std::string body(pgm.begin(), pgm.end());
    auto res = client->Post("/analyses", body, "image/x-portable-graymap");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 201) << res->body;
    const std::string id = json::parse(res->body).at("analysis_id");
    res = client->Post("/analyses", body, "image/x-portable-graymap");
    EXPECT_EQ(res->status, 200);

    res = client->Get("/analyses/" + id);
    ASSERT_EQ(res->status, 200);
    EXPECT_EQ(res->body, store.appearance_document(id));
    const AppearanceList app = import_appearance_list(res->body);

    res = client->Get("/analyses/" + id + "/levels/1/labelmap");
    ASSERT_EQ(res->status, 200);
    EXPECT_EQ(res->get_header_value("Content-Type"), "image/x-portable-graymap");
    EXPECT_EQ(decode_image(Bytes(res->body.begin(), res->body.end())).width(), app.levels[1].width);

    res = client->Put("/ontologies/scene", R"({"name":"scene","concepts":[]})", "application/json");
    ASSERT_EQ(res->status, 200) << res->body;
    EXPECT_EQ(json::parse(res->body).at("version"), 1);

    res = client->Get("/analyses/" + id + "/annotations?ontology=scene");
    ASSERT_EQ(res->status, 200);
    EXPECT_TRUE(concepts_in(res->body).empty());

    const json teach = {{"analysis_id", id}, {"region_id", region_near(app, 230)}, {"label", "sun"}};
    res = client->Post("/ontologies/scene/teach", teach.dump(), "application/json");
    ASSERT_EQ(res->status, 200) << res->body;
    EXPECT_EQ(json::parse(res->body).at("version"), 2);

    res = client->Get("/analyses/" + id + "/annotations?ontology=scene");
    EXPECT_EQ(concepts_in(res->body), std::vector<std::string>{"sun"});

    res = client->Get("/ontologies/scene");
    ASSERT_EQ(res->status, 200);
    EXPECT_EQ(parse_ontology(res->body).version, 2);
}

TEST_F(HttpTest, ErrorStatuses) {
    EXPECT_EQ(client->Post("/analyses", "P5\n9 9\n255\n", "image/x-portable-graymap")->status, 400);
    EXPECT_EQ(client->Get("/analyses/" + std::string(64, 'b'))->status, 404);
    EXPECT_EQ(client->Get("/ontologies/nothing")->status, 404);

    auto res = client->Put("/ontologies/bad", R"({"name":"bad","concepts":[{"name":"a","kind":"composite",
        "required_relations":[{"subject":"b"}]}]})", "application/json");
    EXPECT_EQ(res->status, 422);
    EXPECT_NE(json::parse(res->body).at("message").get<std::string>().find("unresolved"), std::string::npos);

    const auto pgm = sky_pgm();
    const std::string id = store.analyze_and_store(pgm).id;
    EXPECT_EQ(client->Get("/analyses/" + id + "/annotations")->status, 400);
    const json teach = {{"analysis_id", id}, {"region_id", 999}, {"label", "x"}};
    EXPECT_EQ(client->Post("/ontologies/scene/teach", teach.dump(), "application/json")->status, 404);
    EXPECT_EQ(client->Post("/ontologies/scene/teach", "{", "application/json")->status, 400);

    const json ok = {{"analysis_id", id}, {"region_id", region_near(store.appearance(id), 230)}, {"label", "x"}};
    {
        auto held = store.lock_ontology("scene");
        EXPECT_EQ(client->Post("/ontologies/scene/teach", ok.dump(), "application/json")->status, 409);
    }
    EXPECT_EQ(client->Post("/ontologies/scene/teach", ok.dump(), "application/json")->status, 200);
}

TEST_F(HttpTest, MultipartUploadAndConfigQuery) {
    const Bytes pgm = encode_pgm(physem::testing::halves_scene(64, 64, 32, 50, 200).image);
    httplib::MultipartFormDataItems items = {{"image", std::string(pgm.begin(), pgm.end()), "h.pgm", "image/x-portable-graymap"}};
    auto res = client->Post("/analyses?merge_threshold=30&min_seed_size=2", items);
    ASSERT_EQ(res->status, 201) << res->body;
    const std::string id = json::parse(res->body).at("analysis_id");
    AnalysisConfig cfg;
    cfg.seg.merge_threshold = 30;
    cfg.seg.min_seed_size = 2;
    EXPECT_EQ(id, analysis_id_for(pgm, cfg));
    EXPECT_EQ(client->Post("/analyses?merge_threshold=abc", std::string(pgm.begin(), pgm.end()), "x")->status, 400);
}
