#include <gtest/gtest.h>

#include <sstream>

#include "physem/appearance_json.hpp"
#include "physem/cli.hpp"
#include "physem/image_io.hpp"
#include "physem/ontology.hpp"
#include "support.hpp"

using namespace physem;

namespace {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    const Bytes b = read_file(p);
    return std::string(b.begin(), b.end());
}

class CliTest : public ::testing::Test {
protected:
    std::string path(const std::string& name) const { return (dir / name).string(); }

    /// Sky scene analyzed into scene.appearance.json; returns the sun and ground ids.
    std::pair<RegionId, RegionId> analyzed_sky() {
        write_file(path("scene.pgm"), encode_pgm(physem::testing::sky_scene(128, 40, 22, 11, 86).image));
        EXPECT_EQ(run({"analyze", path("scene.pgm")}).code, 0);
        const AppearanceList app = load_appearance_list(path("scene.appearance.json"));
        RegionId sun = 0, ground = 0;
        for (const auto& r : app.levels[0].regions) {
            if (r.avg_intensity > 200) sun = r.id;
            if (r.avg_intensity < 60) ground = r.id;
        }
        return {sun, ground};
    }

    physem::testing::TempDir dir;
};

}  // namespace

TEST_F(CliTest, AnalyzeConstant) {
    write_file(path("constant.pgm"), encode_pgm(ImagePlane(64, 64, 120)));
    const CliResult r = run({"analyze", path("constant.pgm"), "--out", path("c.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "level 0: 1 region\nlevel 1: 1 region\nlevel 2: 1 region\nlevel 3: 1 region\n");
    EXPECT_EQ(load_appearance_list(path("c.json")).levels.size(), 4u);
}

TEST_F(CliTest, AnalyzeHalves) {
    write_file(path("halves.pgm"), encode_pgm(physem::testing::halves_scene(64, 64, 32, 50, 200).image));
    const CliResult r = run({"analyze", path("halves.pgm")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "level 0: 2 regions");
    EXPECT_TRUE(std::filesystem::exists(dir / "halves.appearance.json"));
}

TEST_F(CliTest, AnalyzeMissingFile) {
    const CliResult r = run({"analyze", path("missing.pgm")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("missing.pgm"), std::string::npos);
}

TEST_F(CliTest, AnalyzeUndecodableFile) {
    write_file(path("junk.pgm"), std::string("P5\n10 10\n255\nabc"));
    const CliResult r = run({"analyze", path("junk.pgm")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("truncated"), std::string::npos);
}

TEST_F(CliTest, FlagsReachTheConfig) {
    write_file(path("h.pgm"), encode_pgm(physem::testing::halves_scene(32, 32, 16, 100, 120).image));
    EXPECT_EQ(run({"analyze", path("h.pgm"), "--out", path("a.json")}).out.substr(0, 17), "level 0: 1 region");
    EXPECT_EQ(run({"analyze", path("h.pgm"), "--out", path("b.json"), "--merge-threshold", "10"}).out.substr(0, 18),
              "level 0: 2 regions");
    EXPECT_EQ(run({"analyze", path("h.pgm"), "--top-threshold", "4000"}).out, "level 0: 1 region\n");
    EXPECT_EQ(run({"analyze", path("h.pgm"), "--min-seed-size", "0"}).code, 1);
    EXPECT_EQ(load_appearance_list(path("b.json")).config.merge_threshold, 10.0);
}

TEST_F(CliTest, AnnotateEmptyOntology) {
    analyzed_sky();
    write_file(path("empty.json"), std::string(R"({"name":"empty","concepts":[]})"));
    const CliResult r = run({"annotate", path("scene.appearance.json"), "--ontology", path("empty.json")});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "");
    EXPECT_TRUE(std::filesystem::exists(dir / "scene.annotations.json"));
}

TEST_F(CliTest, AnnotateCyclicOntology) {
    analyzed_sky();
    const std::string text = R"({"name":"c","concepts":[
        {"name":"a","kind":"composite","required_relations":[{"subject":"b"}]},
        {"name":"b","kind":"composite","required_relations":[{"subject":"a"}]}]})";
    write_file(path("cyclic.json"), text);
    std::string expected;
    try {
        parse_ontology(text);
    } catch (const std::exception& e) {
        expected = e.what();
    }
    ASSERT_FALSE(expected.empty());
    const CliResult r = run({"annotate", path("scene.appearance.json"), "--ontology", path("cyclic.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find(expected), std::string::npos) << r.err;
}

TEST_F(CliTest, TeachThenAnnotate) {
    const auto [sun, ground] = analyzed_sky();
    ASSERT_NE(sun, 0u);
    ASSERT_NE(ground, 0u);
    const std::string app = path("scene.appearance.json");
    const std::string ont = path("scene.json");
    write_file(ont, std::string(R"({"name":"scene","concepts":[]})"));

    CliResult r = run({"teach", app, std::to_string(sun), "sun", "--ontology", ont});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "ontology scene version 2\n");
    EXPECT_EQ(run({"annotate", app, "--ontology", ont}).out, "sun: " + std::to_string(sun) + "\n");

    EXPECT_EQ(run({"teach", app, std::to_string(ground), "ground", "--ontology", ont}).code, 0);
    Ontology o = load_ontology(ont);
    o.concepts.push_back({"landscape", ConceptKind::Composite, ConceptOrigin::Authored, {},
                          {{"sun", Relation::Above, "ground"}}});
    save_ontology_atomic(ont, o);

    r = run({"annotate", app, "--ontology", ont, "--out", path("ann.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string expected_lines =
        std::min(sun, ground) == sun
            ? "sun: " + std::to_string(sun) + "\nground: " + std::to_string(ground) + "\nlandscape: scene\n"
            : "ground: " + std::to_string(ground) + "\nsun: " + std::to_string(sun) + "\nlandscape: scene\n";
    EXPECT_EQ(r.out, expected_lines);
    EXPECT_NE(slurp(path("ann.json")).find("\"landscape\""), std::string::npos);
}

TEST_F(CliTest, TeachUnknownRegion) {
    analyzed_sky();
    const CliResult r = run({"teach", path("scene.appearance.json"), "99", "sun", "--ontology", path("o.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(std::filesystem::exists(dir / "o.json"));
}

TEST_F(CliTest, ReteachOnlyBumpsVersion) {
    const auto [sun, ground] = analyzed_sky();
    const std::string app = path("scene.appearance.json");
    const std::string ont = path("fresh.json");
    ASSERT_EQ(run({"teach", app, std::to_string(sun), "sun", "--ontology", ont}).code, 0);
    const Ontology once = load_ontology(ont);
    EXPECT_EQ(once.name, "fresh");
    ASSERT_EQ(run({"teach", app, std::to_string(sun), "sun", "--ontology", ont}).code, 0);
    const Ontology twice = load_ontology(ont);
    EXPECT_EQ(twice.concepts, once.concepts);
    EXPECT_EQ(twice.version, once.version + 1);
}

TEST_F(CliTest, TeachCompositeLabelFails) {
    const auto [sun, ground] = analyzed_sky();
    write_file(path("c.json"), std::string(R"({"name":"c","concepts":[
        {"name":"sun","predicates":{"intensity":[200,255]}},
        {"name":"landscape","kind":"composite","required_relations":[{"subject":"sun"}]}]})"));
    const CliResult r = run({"teach", path("scene.appearance.json"), std::to_string(sun), "landscape", "--ontology", path("c.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("composite"), std::string::npos);
}

TEST_F(CliTest, OutputIsDeterministic) {
    write_file(path("n.pgm"), encode_pgm(physem::testing::add_noise(physem::testing::tile_grid_scene(90, 3).image, 5, 4)));
    const CliResult a = run({"analyze", path("n.pgm"), "--out", path("a.json")});
    const CliResult b = run({"analyze", path("n.pgm"), "--out", path("b.json")});
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"frobnicate"}).code, 1);
    EXPECT_EQ(run({"annotate", "x.json"}).code, 1);
    const CliResult help = run({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("analyze"), std::string::npos);
}
