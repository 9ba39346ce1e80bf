#include "fixtures.hpp"

#include "twistedp/error.hpp"
#include "twistedp/mesh_io.hpp"
#include "twistedp/pipeline.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace twistedp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "twistedp_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("OBJ and sidecar round trip")
{
    const fs::path dir = scratch("io");
    int index = 0;
    for (const PeriodicMesh* m : {&testing::sigma(16).mesh, &testing::twisted(16).quotient.mesh}) {
        const fs::path path = dir / ("mesh" + std::to_string(index++) + ".obj");
        export_mesh(*m, path, MeshFormat::obj_sidecar);
        CHECK(fs::exists(path.string() + ".json"));
        const PeriodicMesh back = import_mesh(path);
        CHECK(back.id == m->id);
        CHECK(back.side == m->side);
        CHECK(back.ambient == m->ambient);
        CHECK(back.deck == m->deck);
        CHECK(back.faces == m->faces);
        CHECK(back.lifts == m->lifts);
        REQUIRE(back.positions.size() == m->positions.size());
        bool exact = true;
        for (std::size_t v = 0; v < back.positions.size(); ++v) {
            exact = exact && back.positions[v] == m->positions[v];
        }
        CHECK(exact);
        CHECK(topology(back).genus == 3);
    }

    const auto side = nlohmann::json::parse(slurp(dir / "mesh0.obj.json"));
    CHECK(side.at("ambient") == "torus");
    CHECK(side.at("half_edge_shifts").size() == testing::sigma(16).mesh.faces.size());
}

TEST_CASE("PLY export")
{
    const fs::path path = scratch("ply") / "twisted.ply";
    const PeriodicMesh& m = testing::twisted(16).quotient.mesh;
    export_mesh(m, path, MeshFormat::ply);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "ply");
    int vertices = -1, faces = -1;
    while (std::getline(in, line) && line != "end_header") {
        std::istringstream ls(line);
        std::string a, b;
        int n = 0;
        ls >> a >> b >> n;
        if (a == "element" && b == "vertex") {
            vertices = n;
        }
        if (a == "element" && b == "face") {
            faces = n;
        }
    }
    CHECK(vertices == m.vertex_count());
    CHECK(faces == m.face_count());
}

TEST_CASE("export errors")
{
    CHECK_THROWS_AS(export_mesh(PeriodicMesh{}, scratch("empty") / "e.obj", MeshFormat::obj_sidecar), Error);
    CHECK_THROWS_AS(export_mesh(testing::sigma(16).mesh, "/nonexistent-dir/x.obj", MeshFormat::obj_sidecar), Error);
    CHECK_THROWS_AS(import_mesh(scratch("missing") / "none.obj"), Error);
}

TEST_CASE("configuration")
{
    const RunConfig d = parse_config("{}");
    CHECK(d.n == 32);
    CHECK(d.n_fine == 48);
    CHECK(d.k == 8);
    CHECK(d.target == Target::all);

    const RunConfig c = parse_config(R"({"target": "twisted", "n": 16, "n_fine": 24, "epsilon": 0.1, "seed": 9})");
    CHECK(c.target == Target::twisted);
    CHECK(c.n == 16);
    CHECK(c.epsilon == 0.1);
    CHECK(c.seed == 9);
    CHECK(parse_config(c.to_json()).to_json() == c.to_json());

    CHECK_THROWS_AS(parse_config(R"({"n": 12})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"n": 32, "n_fine": 32})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"k": 4})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"relax_tol": 0})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), Error);
    CHECK_THROWS_AS(parse_config(R"({"target": "gyroid"})"), Error);
    CHECK_THROWS_AS(parse_config("not json"), Error);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("FNV-1a")
{
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("refinement tables")
{
    SpectrumReport a;
    a.surface_id = "sigma";
    a.eigenvalues = Eigen::VectorXd::LinSpaced(6, -3, 2);
    const RefinementTable same = compare_refinements(a, a);
    CHECK(same.e == 0);
    CHECK(same.differences.size() == 6);

    SpectrumReport b = a;
    b.eigenvalues[2] += 0.25;
    CHECK(compare_refinements(a, b).e == doctest::Approx(0.25));
    b.surface_id = "twisted";
    CHECK_THROWS_AS(compare_refinements(a, b), Error);
}

TEST_CASE("calibration square")
{
    const MeshWithBoundary sq = calibration_square(10);
    CHECK(sq.mesh.face_count() == 200);
    CHECK(sq.loops.size() == 1);
    CHECK(sq.loops[0].size() == 40);
    CHECK(total_area(sq.mesh) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("run is deterministic and writes its artifacts")
{
    RunConfig c;
    c.target = Target::schwarz_p;
    c.n = 16;
    c.n_fine = 20;
    c.samples = 500;
    c.output_dir = scratch("run").string();
    const Certificate a = run(c);
    CHECK(a.config_hash == fnv1a_hex(c.to_json()));
    const Claim* c4 = a.find(4);
    REQUIRE(c4 != nullptr);
    CHECK(a.find(5) == nullptr);
    CHECK(a.find(1)->pass);
    CHECK(a.find(9)->pass);

    for (const char* f : {"certificate.json", "smoothing.json", "sigma_n16.obj", "sigma_n16.obj.json",
                          "spectrum_sigma_n16.json", "spectrum_sigma_n16.csv"}) {
        CHECK_MESSAGE(fs::exists(fs::path(c.output_dir) / f), f);
    }
    CHECK_FALSE(fs::exists(fs::path(c.output_dir) / "FAILED"));
    const auto cert = nlohmann::json::parse(slurp(fs::path(c.output_dir) / "certificate.json"));
    CHECK(cert.contains("timestamp"));
    CHECK(cert.at("body").at("config").at("n") == 16);

    const Certificate b = run(c);
    CHECK(a.body_json() == b.body_json());
    CHECK(a.body_json().find("timestamp") == std::string::npos);
}

TEST_CASE("a failing stage leaves a marker and names itself")
{
    RunConfig c;
    c.target = Target::schwarz_p;
    c.n = 16;
    c.n_fine = 20;
    c.relax.tol = 1e-12;
    c.relax.max_iter = 2;
    c.output_dir = scratch("failed").string();
    std::string message;
    try {
        run(c);
    } catch (const Error& e) {
        message = e.what();
    }
    CHECK(message.find("stage") != std::string::npos);
    CHECK(message.find("n=16") != std::string::npos);
    CHECK(fs::exists(fs::path(c.output_dir) / "FAILED"));
}
