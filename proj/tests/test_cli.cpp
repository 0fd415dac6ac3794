#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "coho_euler/coho_euler.hpp"

using namespace coho_euler;
namespace fs = std::filesystem;

namespace {

const std::string kBin = COHO_EULER_BIN;
const std::string kConfigs = COHO_EULER_CONFIG_DIR;

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "coho_euler_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + kBin + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string capture(const std::string& args) {
    const std::string cmd = kBin + " " + args + " 2>&1";
    std::string out;
    if (FILE* p = popen(cmd.c_str(), "r")) {
        char buf[4096];
        while (std::fgets(buf, sizeof buf, p)) out += buf;
        pclose(p);
    }
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json bundled(const std::string& name) { return read_json_file(kConfigs + "/" + name + ".json"); }

fs::path write_config(const fs::path& dir, const std::string& name, const Json& j) {
    const auto p = dir / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

std::vector<std::string> issues_of(const Json& j) {
    try {
        config_from_json(j);
    } catch (const ConfigError& e) {
        return e.issues();
    }
    return {};
}

bool mentions(const std::vector<std::string>& xs, const std::string& needle) {
    for (const auto& x : xs)
        if (x.find(needle) != std::string::npos) return true;
    return false;
}

// Plain 64-bit FNV-1a.
std::string fnv_hex(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

TEST(Config, ParsesBundledCircle) {
    const auto cfg = parse_config(kConfigs + "/t3_circle.json");
    EXPECT_EQ(cfg.kind, ProblemKind::Circle);
    EXPECT_EQ(cfg.N, 256);
    EXPECT_EQ(cfg.solver.dt, 1e-3);
    EXPECT_EQ(cfg.solver.t_end, 1.0);
    ASSERT_EQ(cfg.initial.v.size(), 2u);
    EXPECT_EQ(cfg.initial.v[0].kind, CoefficientFunction::Kind::Fourier);
    EXPECT_EQ(cfg.output.diagnostics_every, 10);
}

TEST(Config, BundledFilesMatchCatalog) {
    const auto cat = example_catalog();
    ASSERT_EQ(cat.size(), 5u);
    for (const auto& e : cat) {
        EXPECT_EQ(bundled(e.name), e.config) << e.name;
        EXPECT_TRUE(validate_config(config_from_json(e.config)).passed()) << e.name;
    }
}

TEST(Config, FieldErrorsNamePaths) {
    auto j = bundled("t3_circle");
    j["solver"]["N"] = 15;
    EXPECT_TRUE(mentions(issues_of(j), "solver.N"));
    j = bundled("t3_circle");
    j["solver"]["viscosity"] = 0.1;
    EXPECT_TRUE(mentions(issues_of(j), "solver.viscosity: unknown key 'viscosity'"));
    j = bundled("t3_circle");
    j["viscosity"] = 0.1;
    EXPECT_TRUE(mentions(issues_of(j), "unknown key 'viscosity'"));
    j = bundled("t3_circle");
    j["solver"].erase("dt");
    EXPECT_TRUE(mentions(issues_of(j), "solver.dt: missing required field"));
    j = bundled("s3_t2_interval");
    j["initial"]["c"] = 1.0;
    EXPECT_TRUE(mentions(issues_of(j), "initial.c"));
    j = bundled("su2_rigid_body");
    j["metric"]["gram"] = Json::array({Json::array({1, 0}), Json::array({0, 1})});
    EXPECT_TRUE(mentions(issues_of(j), "metric.gram"));
}

TEST(Config, ExplicitBracketsMatchPreset) {
    auto j = bundled("su2_rigid_body");
    j["algebra"] = Json{{"dim", 3},
                        {"brackets", Json::array({Json::array({1, 2, 3, 1.0}), Json::array({2, 3, 1, 1.0}),
                                                  Json::array({3, 1, 2, 1.0})})}};
    const auto cfg = config_from_json(j);
    EXPECT_EQ(cfg.algebra.structure, su2_algebra().structure);
    j["algebra"]["brackets"][0] = Json::array({1, 1, 3, 1.0});
    EXPECT_TRUE(mentions(issues_of(j), "algebra.brackets[0]"));
    j["algebra"]["brackets"][0] = Json::array({0, 1, 3, 1.0});
    EXPECT_TRUE(mentions(issues_of(j), "algebra.brackets[0]"));
}

TEST(Config, HashIsFnvOfCanonicalDump) {
    const auto cfg = parse_config(kConfigs + "/su2_rigid_body.json");
    EXPECT_EQ(cfg.config_hash(), fnv_hex(bundled("su2_rigid_body").dump()));
    auto j = bundled("su2_rigid_body");
    j["seed"] = 1;
    EXPECT_NE(config_from_json(j).config_hash(), cfg.config_hash());
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("exit_codes");
    EXPECT_EQ(run("validate --config " + kConfigs + "/su2_rigid_body.json"), 0);
    EXPECT_EQ(run("examples list"), 0);
    EXPECT_EQ(run("examples show berger_circle"), 0);
    EXPECT_EQ(run("examples show nope"), 2);

    std::ofstream(dir / "broken.json") << "{ \"name\": ";
    EXPECT_EQ(run("validate --config " + (dir / "broken.json").string()), 4);
    EXPECT_EQ(run("run --config " + (dir / "missing.json").string()), 4);
    EXPECT_EQ(run("frobnicate"), 4);
    EXPECT_EQ(run("run"), 4);

    auto j = bundled("t3_circle");
    j["solver"]["N"] = 15;
    EXPECT_EQ(run("validate --config " + write_config(dir, "bad_n.json", j).string()), 2);
    EXPECT_EQ(run("run --config " + write_config(dir, "bad_n.json", j).string()), 2);

    // Validation failure of a well-formed config: odd initial data at a singular endpoint.
    j = bundled("s3_t2_interval");
    j["initial"]["v"][0] = Json{{"polynomial", Json::array({0.0, 1.0})}};
    EXPECT_EQ(run("validate --config " + write_config(dir, "odd.json", j).string()), 2);
    EXPECT_EQ(run("run --config " + (dir / "odd.json").string() + " --out " + (dir / "odd_out").string()), 2);
}

TEST(Cli, RigidBodyRun) {
    const auto dir = scratch("rigid");
    EXPECT_EQ(run("run --config " + kConfigs + "/su2_rigid_body.json --out " + dir.string()), 0);
    const auto summary = Json::parse(slurp(dir / "summary.json"));
    EXPECT_LT(summary["speed_sq_drift_max"].get<double>(), 1e-8);
    EXPECT_LT(summary["speed_drift_max"].get<double>(), 1e-8);
    EXPECT_TRUE(summary["passed"].get<bool>());
    EXPECT_TRUE(summary["failure"].is_null());
    const auto manifest = Json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["problem_kind"], "homogeneous");
    EXPECT_EQ(manifest["config_hash"], fnv_hex(bundled("su2_rigid_body").dump()));
    for (const auto& f : manifest["files"]) EXPECT_TRUE(fs::exists(dir / f.get<std::string>())) << f;
    const auto csv = slurp(dir / "diagnostics.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,E,c,max_speed,c1_monitor,div_residual,p_periodicity");
    // Rows at every 100th of 100000 steps.
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 1001);
}

TEST(Cli, IntervalHeaderCarriesTaylorColumns) {
    const auto dir = scratch("interval");
    auto j = bundled("s3_t2_interval");
    j["solver"]["t_end"] = 0.1;
    EXPECT_EQ(run("run --config " + write_config(dir, "c.json", j).string() + " --out " + (dir / "o").string()), 0);
    const auto csv = slurp(dir / "o" / "diagnostics.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "t,E,c,max_speed,c1_monitor,div_residual,p_periodicity,alpha_1,alpha_2,beta_1,beta_2");
    const auto snap = slurp(dir / "o" / "snapshots" / "snapshot_00000.csv");
    EXPECT_EQ(snap.substr(0, snap.find('\n')), "r,v_1,v_2,p");
}

TEST(Cli, FaultInjectionExitsNumerical) {
    const auto dir = scratch("fault");
    auto j = bundled("berger_circle");
    j["solver"]["t_end"] = 0.1;
    j["test_hooks"] = Json{{"dcdt_offset", 1.0}};
    const auto cfg = write_config(dir, "fault.json", j);
    EXPECT_EQ(run("run --config " + cfg.string() + " --out " + (dir / "o").string()), 3);
    const auto summary = Json::parse(slurp(dir / "o" / "summary.json"));
    ASSERT_TRUE(summary["failure"].is_object());
    EXPECT_EQ(summary["failure"]["kind"], "pressure_periodicity");
    EXPECT_TRUE(summary["flags"]["pressure_periodicity"].get<bool>());
    EXPECT_TRUE(fs::exists(dir / "o" / "diagnostics.csv"));
    EXPECT_TRUE(fs::exists(dir / "o" / "snapshots" / "snapshot_00000.csv"));
}

TEST(Cli, CflFailureExitsNumerical) {
    const auto dir = scratch("cfl");
    auto j = bundled("t3_circle");
    j["initial"]["c"] = 3.0;
    j["solver"]["t_end"] = 0.01;
    EXPECT_EQ(run("run --config " + write_config(dir, "cfl.json", j).string() + " --out " + (dir / "o").string()), 3);
    EXPECT_EQ(Json::parse(slurp(dir / "o" / "summary.json"))["failure"]["kind"], "cfl");
    j["solver"]["dt"] = 5e-4;
    EXPECT_EQ(run("run --config " + write_config(dir, "ok.json", j).string() + " --out " + (dir / "p").string()), 0);
}

TEST(Cli, UnwritableOutputDirectory) {
    const auto dir = scratch("unwritable");
    std::ofstream(dir / "blocker") << "x";
    EXPECT_EQ(run("run --config " + kConfigs + "/su2_rigid_body.json --out " + (dir / "blocker" / "sub").string()), 2);
}

TEST(Cli, RerunsAreByteIdentical) {
    const auto dir = scratch("rerun");
    auto j = bundled("berger_circle");
    j["solver"]["t_end"] = 0.2;
    const auto cfg = write_config(dir, "b.json", j).string();
    ASSERT_EQ(run("run --config " + cfg + " --out " + (dir / "a").string()), 0);
    ASSERT_EQ(run("run --config " + cfg + " --out " + (dir / "b").string()), 0);
    ASSERT_EQ(run("run --config " + cfg + " --out " + (dir / "c").string(), "COHO_EULER_WORKERS=3"), 0);
    for (const char* f : {"diagnostics.csv", "summary.json", "manifest.json", "snapshots/snapshot_00000.csv",
                          "snapshots/snapshot_00001.csv"}) {
        const auto a = slurp(dir / "a" / f);
        EXPECT_FALSE(a.empty()) << f;
        EXPECT_EQ(a, slurp(dir / "b" / f)) << f;
        EXPECT_EQ(a, slurp(dir / "c" / f)) << f;
    }
}

TEST(Cli, ExamplesListOrder) {
    std::istringstream out(capture("examples list"));
    std::vector<std::string> names;
    std::string line;
    while (std::getline(out, line)) names.push_back(line.substr(0, line.find(' ')));
    const std::vector<std::string> expected{"su2_rigid_body", "s3_t2_interval", "t3_circle", "berger_circle",
                                            "boundary_interval"};
    EXPECT_EQ(names, expected);
    EXPECT_EQ(Json::parse(capture("examples show t3_circle")), bundled("t3_circle"));
}

TEST(Cli, ValidateReportsVolumeCollapse) {
    const auto out = capture("validate --config " + kConfigs + "/s3_t2_interval.json");
    EXPECT_NE(out.find("PASS  profile.volume_collapse_left"), std::string::npos) << out;
    EXPECT_NE(out.find("PASS  profile.volume_collapse_right"), std::string::npos);
    EXPECT_NE(out.find("validation passed"), std::string::npos);
}

TEST(Cli, TabulatedNonSpdNamesR) {
    const auto dir = scratch("tabulated");
    {
        std::ofstream csv(dir / "profile.csv");
        csv << "r,g,dg\n";
        for (int k = 0; k <= 8; ++k) csv << k * 0.125 << ',' << (k == 4 ? -1.0 : 1.0) << ",0\n";
    }
    const Json j{{"name", "tab"},
                 {"problem", {{"kind", "interval"}}},
                 {"algebra", {{"preset", "abelian"}, {"dim", 1}}},
                 {"profile",
                  {{"family", "tabulated"},
                   {"length", 1.0},
                   {"endpoints", Json::array({"boundary", "boundary"})},
                   {"csv", "profile.csv"}}},
                 {"initial", {{"v", Json::array({0.5})}}},
                 {"solver", {{"N", 8}, {"dt", 1e-3}, {"t_end", 0.01}}}};
    const auto cfg = write_config(dir, "tab.json", j).string();
    const auto out = capture("validate --config " + cfg);
    EXPECT_NE(out.find("FAIL  profile.spd"), std::string::npos) << out;
    const auto at = out.find("not SPD at r = ");
    ASSERT_NE(at, std::string::npos) << out;
    // The first failing probe lies within one sample spacing of the bad row.
    EXPECT_NEAR(std::stod(out.substr(at + 15)), 0.5, 0.125);
    EXPECT_EQ(run("validate --config " + cfg), 2);

    std::ofstream(dir / "profile.csv") << "r,g,dg\n0,1,0\n0.5,x,0\n1,1,0\n";
    EXPECT_NE(capture("validate --config " + cfg).find("profile.csv:3"), std::string::npos);
    EXPECT_EQ(run("validate --config " + cfg), 2);
}
