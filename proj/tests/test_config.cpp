#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "raman/cli.hpp"
#include "raman/config.hpp"

using namespace raman;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("raman_test_" + name);
    fs::remove_all(dir);
    return dir;
}

/// Keys whose values differ between two configurations.
std::vector<std::string> changed_keys(const RunConfig& a, const RunConfig& b) {
    const auto ja = to_json(a), jb = to_json(b);
    std::vector<std::string> out;
    for (const auto& [k, v] : ja.items())
        if (jb.at(k) != v) out.push_back(k);
    return out;
}

}  // namespace

TEST_CASE("empty config is the documented default", "[config]") {
    RunConfig c;
    std::istringstream empty("");
    apply_config_text(c, empty);
    CHECK(changed_keys(c, RunConfig{}).empty());
    CHECK_NOTHROW(validate(c));
    CHECK(c.grid.n_samples == 1024);
    CHECK(c.grid.dt == 0.01);
    CHECK(c.sim.alpha == 7.0);
    CHECK(c.sim.w1 == -1.0);
    CHECK(c.sim.suppress_q3);
    CHECK(c.scan.n_trials == 200);
    CHECK(c.scan.phi_points == 17);
    CHECK(c.pulse.separation == 3.3);
}

TEST_CASE("overrides touch only their own keys", "[config]") {
    RunConfig c;
    apply_assignment(c, "sim.alpha=3");
    apply_assignment(c, "scan.phi_points=9");
    const auto changed = changed_keys(c, RunConfig{});
    CHECK(changed == std::vector<std::string>{"scan.phi_points", "sim.alpha"});
}

TEST_CASE("file parsing and precedence", "[config]") {
    const auto dir = scratch_dir("precedence");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "run.cfg");
        f << "# comment\n\nsim.alpha = 3   # trailing\nscan.n_trials=5\nsim.suppress_q3=false\n";
    }
    RunConfig c;
    apply_config_file(c, (dir / "run.cfg").string());
    CHECK(c.sim.alpha == 3.0);
    CHECK(c.scan.n_trials == 5);
    CHECK_FALSE(c.sim.suppress_q3);
    apply_assignment(c, "sim.alpha=5");  // flags after the file win
    CHECK(c.sim.alpha == 5.0);
    CHECK_THROWS_AS(apply_config_file(c, (dir / "missing.cfg").string()), ConfigError);
}

TEST_CASE("bad keys and values name the key", "[config]") {
    RunConfig c;
    auto key_of = [&](auto&& fn) -> std::string {
        try {
            fn();
        } catch (const ConfigError& e) {
            return e.key();
        }
        return "";
    };
    CHECK(key_of([&] { apply_assignment(c, "sim.alhpa=3"); }) == "sim.alhpa");
    CHECK(key_of([&] { apply_assignment(c, "sim.alpha=three"); }) == "sim.alpha");
    CHECK(key_of([&] { apply_assignment(c, "scan.n_trials=-4"); }) == "scan.n_trials");
    CHECK(key_of([&] { apply_assignment(c, "sim.suppress_q3=maybe"); }) == "sim.suppress_q3");
    CHECK(key_of([&] { apply_assignment(c, "ga.objective_sign=2"); }) == "ga.objective_sign");

    RunConfig bad;
    apply_assignment(bad, "grid.n_samples=1000");
    CHECK(key_of([&] { validate(bad); }) == "grid.n_samples");
    bad = {};
    apply_assignment(bad, "sim.alpha=-1");
    CHECK(key_of([&] { validate(bad); }) == "sim.alpha");
    bad = {};
    apply_assignment(bad, "ga.elite_count=50");
    CHECK(key_of([&] { validate(bad); }) == "ga.elite_count");
    bad = {};
    apply_assignment(bad, "pulse.separation=120");
    CHECK(key_of([&] { validate(bad); }) == "pulse.separation");
    bad = {};
    apply_assignment(bad, "grid.dt=0.2");
    CHECK(key_of([&] { validate(bad); }) == "grid.dt");
}

TEST_CASE("JSON and text round trips are exact", "[config]") {
    RunConfig c;
    apply_assignment(c, "sim.alpha=0.1");
    apply_assignment(c, "pulse.phase_offset=2.0943951023931953");
    apply_assignment(c, "seed=18446744073709551615");
    apply_assignment(c, "ga.objective_sign=-1");
    apply_assignment(c, "ga.space=free_phase");
    const auto back = config_from_json(to_json(c));
    CHECK(changed_keys(back, c).empty());
    RunConfig from_text;
    std::istringstream in(to_config_text(c));
    apply_config_text(from_text, in);
    CHECK(changed_keys(from_text, c).empty());
    CHECK(from_text.seed == 18446744073709551615ull);
}

TEST_CASE("scan phases", "[config]") {
    ScanSettings s;
    s.phi_points = 4;
    CHECK(s.phases() == std::vector<double>{0.0, std::numbers::pi / 2, std::numbers::pi, 1.5 * std::numbers::pi});
    s.phi_stop = std::numbers::pi;
    s.include_stop = true;
    s.phi_points = 3;
    CHECK(s.phases().back() == std::numbers::pi);
}

TEST_CASE("output directory falls back to RAMAN_SIM_OUT", "[config][cli]") {
    CHECK(cli::output_dir("given") == fs::path("given"));
    ::setenv("RAMAN_SIM_OUT", "/tmp/from_env", 1);
    CHECK(cli::output_dir("") == fs::path("/tmp/from_env"));
    ::unsetenv("RAMAN_SIM_OUT");
    CHECK(cli::output_dir("") == fs::path("raman_out"));
}

TEST_CASE("manifests replay byte-identical outputs", "[config][cli]") {
    RunConfig c;
    apply_assignment(c, "sim.n_x=16");
    apply_assignment(c, "scan.n_trials=2");
    apply_assignment(c, "scan.phi_points=2");
    apply_assignment(c, "guard.calibrate=false");
    apply_assignment(c, "tf.stride=16");
    std::ostringstream log;
    for (const std::string sub : {"pulse", "trial", "scan"}) {
        const auto a = scratch_dir(sub + "_a");
        const auto b = scratch_dir(sub + "_b");
        const auto first = cli::run(sub, c, a, log);
        CHECK(first.status == 0);
        REQUIRE(fs::exists(a / "manifest.json"));
        const auto second = cli::replay(a / "manifest.json", b, log);
        REQUIRE(first.manifest.outputs == second.manifest.outputs);
        for (const auto& f : first.manifest.outputs) {
            INFO(sub << "/" << f);
            CHECK(slurp(a / f) == slurp(b / f));
        }
    }
    const auto scan = slurp(fs::temp_directory_path() / "raman_test_scan_a" / "scan.csv");
    CHECK(scan.rfind("phi,mean_asym,stderr,n_effective\n", 0) == 0);
    CHECK(std::count(scan.begin(), scan.end(), '\n') == 3);
}
