#include "doctest.h"

#include "exitfem/commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace exitfem;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = 0;
    std::string out, err;
    json summary() const { return json::parse(out); }
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "exitfem");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Outcome o;
    o.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

std::string source_config(const std::string& name) { return std::string(EXITFEM_SOURCE_DIR) + "/configs/" + name; }

class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag)
        : path_(fs::temp_directory_path() / ("exitfem_cli_" + tag + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~ScratchDir() { fs::remove_all(path_); }
    std::string str() const { return path_.string(); }
    fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

    std::string write(const std::string& name, const json& j) const {
        std::ofstream(path_ / name) << j.dump(2);
        return (path_ / name).string();
    }

private:
    fs::path path_;
};

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> v;
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("models") {
    const Outcome o = run({"models"});
    CHECK(o.code == kExitOk);
    for (const char* name : {"rumor", "gonorrhea", "sir", "tumor"}) CHECK(o.out.find(std::string(name) + " (") != std::string::npos);
    // One unindented header line per model.
    std::size_t entries = 0;
    std::istringstream in(o.out);
    for (std::string l; std::getline(in, l);) entries += !l.empty() && l[0] != ' ';
    CHECK(entries == 4);
    CHECK(o.out.find("alpha=0.0001") != std::string::npos);
    CHECK(o.out.find("alternative: alpha=1.5e-05") != std::string::npos);
    CHECK(o.out.find("Lambda=5") != std::string::npos);
}

TEST_CASE("usage errors") {
    CHECK(run({}).code == kExitConfig);
    CHECK(run({"frobnicate"}).code == kExitConfig);
    CHECK(run({"elliptic", "/nonexistent/run.json"}).code == kExitConfig);
    CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("derive") {
    ScratchDir dir("derive");
    const Outcome o = run({"derive", dir.write("r.json", {{"model", {{"builtin", "rumor"}}}})});
    CHECK(o.code == kExitOk);
    CHECK(o.out.find("a12 = -(0.4*S*I)") != std::string::npos);
    CHECK(o.out.find("b1 = ") != std::string::npos);
    CHECK(o.out.find("d a21 / d S = -(0.4*I)") != std::string::npos);

    const json empty{{"model", {{"variables", {"x", "y"}}, {"transitions", json::array()}}},
                     {"domain", {{"lower", {0, 0}}, {"upper", {1, 1}}}}};
    const Outcome e = run({"derive", dir.write("empty.json", empty)});
    CHECK(e.code == kExitConfig);
    CHECK(e.err.find("no entries") != std::string::npos);

    const json custom{{"model",
                       {{"variables", {"x", "y"}},
                        {"drift", json::array({"1 - x", "0"})},
                        {"diffusion", json::array({json::array({"1 + y^2", "0"}), json::array({"0", "2"})})}}},
                      {"domain", {{"lower", {0, 0}}, {"upper", {1, 1}}}}};
    const Outcome c = run({"derive", dir.write("custom.json", custom)});
    CHECK(c.code == kExitOk);
    CHECK(c.out.find("a11 = 1 + y^2") != std::string::npos);

    json asym = custom;
    asym["model"]["diffusion"] = json::array({json::array({"1", "x"}), json::array({"0", "1"})});
    CHECK(run({"derive", dir.write("asym.json", asym)}).code == kExitConfig);
}

TEST_CASE("configuration errors map to exit code 1") {
    ScratchDir dir("config");
    const json base{{"model", {{"builtin", "rumor"}}}, {"resolution", 8}, {"output", {{"directory", dir.str()}}}};
    json on_boundary = base;
    on_boundary["probes"] = {{0.7, 0.2}};
    const Outcome b = run({"elliptic", dir.write("b.json", on_boundary)});
    CHECK(b.code == kExitConfig);
    CHECK(b.err.find("probe") != std::string::npos);

    json unknown = base;
    unknown["resolutoin"] = 8;
    CHECK(run({"elliptic", dir.write("u.json", unknown)}).code == kExitConfig);
    CHECK(run({"elliptic", dir.write("ok.json", base), "--set", "parabolic.bogus=1"}).code == kExitConfig);
    CHECK(run({"elliptic", dir.write("ok.json", base), "--set", "model.builtin=sirs"}).code == kExitConfig);
    CHECK(run({"elliptic", dir.write("ok.json", base), "--set", "resolution=1"}).code == kExitConfig);
    CHECK(run({"parabolic", dir.write("ok.json", base)}).code == kExitConfig);

    std::ofstream(dir / "broken.json") << "{\"model\": ";
    CHECK(run({"elliptic", (dir / "broken.json").string()}).code == kExitConfig);
}

TEST_CASE("elliptic run writes a summary, sections and the effective config") {
    ScratchDir dir("elliptic");
    const Outcome o = run({"elliptic", source_config("tumor_d2.json"), "--out", dir.str()});
    REQUIRE(o.code == kExitOk);
    const json s = o.summary();
    CHECK(s["model"] == "tumor");
    const double u = s["probes"][0]["value"].get<double>();
    CHECK(u > 0.5);
    CHECK(u < 0.7);
    const auto section = lines(dir / "tumor_d2_section_E3.txt");
    CHECK(section.size() == 1681);
    std::istringstream first(section.front());
    double y = -1, z = -1, v = -1;
    first >> y >> z >> v;
    CHECK(y == 0.0);
    CHECK(z == 0.0);
    CHECK(v == 0.0);
    CHECK(fs::exists(dir / "tumor_d2_elliptic.json"));

    // The effective config reproduces the run.
    ScratchDir again("elliptic_again");
    const Outcome r = run({"elliptic", (dir / "tumor_d2_config.json").string(), "--out", again.str()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.summary()["probes"] == s["probes"]);
    CHECK(slurp(again / "tumor_d2_section_E3.txt") == slurp(dir / "tumor_d2_section_E3.txt"));
}

TEST_CASE("parabolic run writes t v rows") {
    ScratchDir dir("parabolic");
    const Outcome o = run({"parabolic", source_config("tumor_d1.json"), "--out", dir.str(), "--set",
                           "parabolic.snapshots=[0.3]", "--set", "parabolic.snapshot_sections=[{\"axis\": 0, \"value\": 3}]",
                           "--set", "resolution=20"});
    REQUIRE(o.code == kExitOk);
    const json s = o.summary();
    CHECK(s["steps"] == 60);
    CHECK(s["checks_pass"] == true);
    for (const char* name : {"tumor_d1_curve1.txt", "tumor_d1_curve2.txt"}) {
        const auto rows = lines(dir / name);
        REQUIRE(rows.size() == 60);
        double prev = 1.0;
        for (std::size_t m = 0; m < rows.size(); ++m) {
            std::istringstream in(rows[m]);
            double t = 0, v = 0;
            in >> t >> v;
            CHECK(t == doctest::Approx(0.01 * static_cast<double>(m + 1)).epsilon(1e-12));
            CHECK(v <= 1.0);
            CHECK(v >= 0.0);
            CHECK(v <= prev + 1e-8);
            prev = v;
        }
    }
    CHECK(lines(dir / "tumor_d1_snapshot_t0.3_E3.txt").size() == 21 * 21);
}

TEST_CASE("mc run echoes the seed and is reproducible") {
    ScratchDir dir("mc");
    const std::vector<std::string> args{"mc", source_config("rumor.json"), "--out", dir.str(), "--set", "mc.paths=500",
                                        "--set", "mc.dt=1e-4", "--set", "mc.seed=7", "--set",
                                        "mc.survival_times=[0.005, 0.01]"};
    const Outcome a = run(args);
    REQUIRE(a.code == kExitOk);
    const json s = a.summary();
    CHECK(s["seed"] == 7);
    CHECK(s["paths"] == 500);
    CHECK(s["runs"].size() == 2);
    CHECK(lines(dir / "rumor_mc_survival1.txt").size() == 2);
    const Outcome b = run(args);
    CHECK(b.summary()["runs"][0]["mean"] == s["runs"][0]["mean"]);
}

TEST_CASE("validate") {
    ScratchDir dir("validate");
    const std::vector<std::string> quick{"--set", "mc.paths=2000", "--set", "mc.dt=1e-4", "--out", dir.str()};
    std::vector<std::string> good{"validate", source_config("rumor.json")};
    good.insert(good.end(), quick.begin(), quick.end());
    const Outcome ok = run(good);
    CHECK(ok.code == kExitOk);
    CHECK(ok.summary()["pass"] == true);
    CHECK(ok.summary()["seed"] == 20240501);

    // A time step as long as the horizon still gives monotone curves, but the
    // survival integral no longer tracks the mean exit time.
    std::vector<std::string> coarse{"validate", source_config("rumor.json"), "--set", "parabolic.eta=0.01"};
    coarse.insert(coarse.end(), quick.begin(), quick.end());
    const Outcome bad = run(coarse);
    CHECK(bad.code == kExitValidation);
    const json s = bad.summary();
    CHECK(s["pass"] == false);
    bool saw_gap = false;
    for (const auto& c : s["checks"]) {
        if (c["name"] == "survival_monotone" || c["name"] == "survival_range") CHECK(c["pass"] == true);
        if (c["name"] == "integral_vs_mean") {
            CHECK(c["relative_gap"].get<double>() > 0.10);
            saw_gap = true;
        }
    }
    CHECK(saw_gap);
    CHECK(fs::exists(dir / "rumor_validate.json"));
}
