// End-to-end tests of the command line front end, run in-process.
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvlex/cli.hpp"

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

namespace fs = std::filesystem;

fs::path sandbox() {
    const auto dir = fs::temp_directory_path() / "nvlex_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("nvlex");
    for (const auto& a : args) argv.push_back(a.c_str());
    return nvlex::cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json report_at(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

}  // namespace

TEST_CASE("cli rejects missing subcommands and unknown flags", "[cli]") {
    REQUIRE(run_cli({}) != 0);
    REQUIRE(run_cli({"frobnicate"}) != 0);
    REQUIRE(run_cli({"caustic"}) != 0);                       // missing file + --lambda-nm
    REQUIRE(run_cli({"odmr", "nope.csv", "--bogus"}) != 0);   // unknown flag
    REQUIRE(run_cli({"odmr", "/definitely/not/here.csv"}) != 0);
}

TEST_CASE("knife-edge pipeline round trips through CSV and JSON", "[cli]") {
    const auto dir = sandbox();
    const auto csv = (dir / "ke.csv").string();
    const auto rep = (dir / "ke.json").string();

    REQUIRE(run_cli({"simulate", "knife-edge", "--noise", "0.01", "--seed", "5", "--out", csv}) ==
            0);
    REQUIRE(run_cli({"knife-edge", csv, "--out", rep}) == 0);

    const auto j = report_at(rep);
    REQUIRE(j["subcommand"] == "knife-edge");
    REQUIRE(j["tool_version"] == "1.0.0");
    REQUIRE(j["flags"]["converged"] == true);
    // truth W(z=0) = 11.9 um with 1% noise on the scan
    REQUIRE_THAT(j["parameters"]["width_um"]["value"].get<double>(), WithinAbs(11.9, 0.5));
    REQUIRE(j["parameters"]["width_um"]["error"].get<double>() > 0.0);
}

TEST_CASE("caustic pipeline reports beam quality near truth", "[cli]") {
    const auto dir = sandbox();
    const auto csv = (dir / "caustic.csv").string();
    const auto rep = (dir / "caustic.json").string();

    REQUIRE(run_cli({"simulate", "caustic", "--noise", "0.03", "--seed", "11", "--out", csv}) == 0);
    REQUIRE(run_cli({"caustic", csv, "--lambda-nm", "532", "--focal-mm", "3", "--pupil-mm", "8",
                     "--out", rep}) == 0);

    const auto j = report_at(rep);
    REQUIRE_THAT(j["parameters"]["m_squared"]["value"].get<double>(), WithinAbs(1.19, 0.1));
    REQUIRE_THAT(j["parameters"]["waist_radius_um"]["value"].get<double>(), WithinAbs(11.9, 1.0));
    REQUIRE(j["parameters"].contains("spot_size_um"));
    REQUIRE(j["parameters"].contains("confocal_volume_um3"));
    REQUIRE(j["flags"]["converged"] == true);
}

TEST_CASE("g2 pipeline auto-adjusts the window with a warning", "[cli]") {
    const auto dir = sandbox();
    const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
    const auto rep = (dir / "g2.json").string();

    REQUIRE(run_cli({"simulate", "photons", "--emitters", "1", "--duration-ns", "2000000",
                     "--seed", "3", "--out-a", a, "--out-b", b}) == 0);
    // 2*150/0.4 = 750 bins is even: the CLI must adjust, warn and continue
    REQUIRE(run_cli({"g2", a, b, "--window-ns", "150", "--bin-ns", "0.4", "--out", rep}) == 0);

    const auto j = report_at(rep);
    REQUIRE_THAT(j["parameters"]["window_ns"]["value"].get<double>(), WithinRel(150.2, 1e-9));
    REQUIRE(j["parameters"]["n_bins"]["value"].get<double>() == 751.0);
    REQUIRE(j["warnings"].size() >= 1);
    REQUIRE_THAT(j["warnings"][0].get<std::string>(), ContainsSubstring("adjusted"));
    REQUIRE(j["parameters"]["g2_zero"]["value"].get<double>() < 0.15);
    REQUIRE(j["flags"]["is_single"] == true);
}

TEST_CASE("saturation pipeline with background subtraction", "[cli]") {
    const auto dir = sandbox();
    const auto sig = (dir / "sat.csv").string();
    const auto bg = (dir / "bg.csv").string();
    const auto rep = (dir / "sat.json").string();

    REQUIRE(run_cli({"simulate", "saturation", "--b", "40", "--noise", "0.02", "--seed", "9",
                     "--out", sig}) == 0);
    // background measurement: the same linear term, no NV signal
    REQUIRE(run_cli({"simulate", "saturation", "--a", "1e-6", "--b", "40", "--noise", "0.0",
                     "--seed", "10", "--out", bg}) == 0);
    REQUIRE(run_cli({"saturation", sig, "--background", bg, "--out", rep}) == 0);

    const auto j = report_at(rep);
    REQUIRE(j["flags"]["background_subtracted"] == true);
    REQUIRE_THAT(j["parameters"]["p_sat_uW"]["value"].get<double>(), WithinAbs(258.0, 30.0));
    REQUIRE(j["parameters"]["b_counts_per_s_per_uW"]["value"].get<double>() == 0.0);
}

TEST_CASE("polarization pipeline recovers the maximum angle", "[cli]") {
    const auto dir = sandbox();
    const auto csv = (dir / "pol.csv").string();
    const auto rep = (dir / "pol.json").string();

    REQUIRE(run_cli({"simulate", "polarization", "--noise", "0.02", "--seed", "8", "--out",
                     csv}) == 0);
    REQUIRE(run_cli({"polarization", csv, "--out", rep}) == 0);

    const auto j = report_at(rep);
    // default simulation puts the maximum at 41.2 degrees
    REQUIRE_THAT(j["parameters"]["max_angle_deg"]["value"].get<double>(), WithinAbs(41.2, 0.6));
    REQUIRE_THAT(j["parameters"]["visibility"]["value"].get<double>(), WithinAbs(0.45, 0.05));
}

TEST_CASE("spectrum pipeline flags charge state correctly", "[cli]") {
    const auto dir = sandbox();
    const auto good = (dir / "nv_minus.csv").string();
    const auto mixed = (dir / "nv_mixed.csv").string();
    const auto rep1 = (dir / "spec1.json").string();
    const auto rep2 = (dir / "spec2.json").string();

    REQUIRE(run_cli({"simulate", "spectrum", "--seed", "2", "--out", good}) == 0);
    REQUIRE(run_cli({"spectrum", good, "--out", rep1}) == 0);
    const auto j1 = report_at(rep1);
    REQUIRE(j1["flags"]["zpl_present"] == true);
    REQUIRE(j1["flags"]["charge_state_ok"] == true);
    REQUIRE_THAT(j1["parameters"]["zpl_wavelength_nm"]["value"].get<double>(),
                 WithinAbs(637.0, 1.0));

    REQUIRE(run_cli({"simulate", "spectrum", "--nv0-weight", "0.2", "--seed", "2", "--out",
                     mixed}) == 0);
    REQUIRE(run_cli({"spectrum", mixed, "--out", rep2}) == 0);
    const auto j2 = report_at(rep2);
    REQUIRE(j2["flags"]["charge_state_ok"] == false);
}

TEST_CASE("pulse pipeline reports timing and extinction", "[cli]") {
    const auto dir = sandbox();
    const auto csv = (dir / "pulse.csv").string();
    const auto rep = (dir / "pulse.json").string();

    REQUIRE(run_cli({"simulate", "pulse", "--seed", "4", "--out", csv}) == 0);
    REQUIRE(run_cli({"pulse", csv, "--out", rep}) == 0);

    const auto j = report_at(rep);
    REQUIRE_THAT(j["parameters"]["rise_time_ns"]["value"].get<double>(), WithinAbs(28.8, 0.8));
    REQUIRE_THAT(j["parameters"]["fall_time_ns"]["value"].get<double>(), WithinAbs(28.8, 0.8));
    REQUIRE_THAT(j["parameters"]["extinction_ratio"]["value"].get<double>(),
                 WithinRel(460760.0, 0.02));
}

TEST_CASE("odmr pipeline reports both contrast estimators", "[cli]") {
    const auto dir = sandbox();
    const auto csv = (dir / "odmr.csv").string();
    const auto rep = (dir / "odmr.json").string();

    REQUIRE(run_cli({"simulate", "odmr", "--noise", "0.01", "--seed", "6", "--out", csv}) == 0);
    REQUIRE(run_cli({"odmr", csv, "--out", rep}) == 0);

    const auto j = report_at(rep);
    REQUIRE_THAT(j["parameters"]["contrast_lorentzian"]["value"].get<double>(),
                 WithinAbs(0.279, 0.02));
    REQUIRE_THAT(j["parameters"]["contrast_direct"]["value"].get<double>(),
                 WithinAbs(0.279, 0.02));
    REQUIRE_THAT(j["parameters"]["center_frequency_mhz"]["value"].get<double>(),
                 WithinAbs(2870.0, 1.0));
    REQUIRE_THAT(j["parameters"]["linewidth_fwhm_mhz"]["value"].get<double>(),
                 WithinAbs(10.0, 1.0));
}

TEST_CASE("simulation and analysis are byte-for-byte reproducible", "[cli]") {
    const auto dir = sandbox();
    const auto c1 = (dir / "rep1.csv").string(), c2 = (dir / "rep2.csv").string();
    const auto r1 = (dir / "rep1.json").string(), r2 = (dir / "rep2.json").string();

    for (const char* kind :
         {"knife-edge", "caustic", "saturation", "polarization", "spectrum", "odmr"}) {
        REQUIRE(run_cli({"simulate", kind, "--noise", "0.02", "--seed", "77", "--out", c1}) == 0);
        REQUIRE(run_cli({"simulate", kind, "--noise", "0.02", "--seed", "77", "--out", c2}) == 0);
        INFO("simulate " << kind);
        REQUIRE(slurp(c1) == slurp(c2));
    }

    // pulse randomizes its sampling phase from the seed; photons write two files
    REQUIRE(run_cli({"simulate", "pulse", "--ripple", "0.03", "--seed", "77", "--out", c1}) == 0);
    REQUIRE(run_cli({"simulate", "pulse", "--ripple", "0.03", "--seed", "77", "--out", c2}) == 0);
    REQUIRE(slurp(c1) == slurp(c2));

    const auto a1 = (dir / "ph_a1.csv").string(), b1 = (dir / "ph_b1.csv").string();
    const auto a2 = (dir / "ph_a2.csv").string(), b2 = (dir / "ph_b2.csv").string();
    REQUIRE(run_cli({"simulate", "photons", "--duration-ns", "200000", "--seed", "77", "--out-a",
                     a1, "--out-b", b1}) == 0);
    REQUIRE(run_cli({"simulate", "photons", "--duration-ns", "200000", "--seed", "77", "--out-a",
                     a2, "--out-b", b2}) == 0);
    REQUIRE(slurp(a1) == slurp(a2));
    REQUIRE(slurp(b1) == slurp(b2));

    REQUIRE(run_cli({"simulate", "caustic", "--noise", "0.03", "--seed", "123", "--out", c1}) == 0);
    REQUIRE(run_cli({"caustic", c1, "--lambda-nm", "532", "--out", r1}) == 0);
    REQUIRE(run_cli({"caustic", c1, "--lambda-nm", "532", "--out", r2}) == 0);
    REQUIRE(slurp(r1) == slurp(r2));
    REQUIRE_FALSE(slurp(r1).empty());
}

TEST_CASE("flat format and curve output are written on request", "[cli]") {
    const auto dir = sandbox();
    const auto csv = (dir / "flat_in.csv").string();
    const auto rep = (dir / "flat_out.txt").string();
    const auto curve = (dir / "curve.csv").string();

    REQUIRE(run_cli({"simulate", "odmr", "--seed", "1", "--out", csv}) == 0);
    REQUIRE(run_cli({"odmr", csv, "--format", "flat", "--out", rep, "--curve-out", curve}) == 0);

    const auto flat = slurp(rep);
    REQUIRE_THAT(flat, ContainsSubstring("subcommand=odmr"));
    REQUIRE_THAT(flat, ContainsSubstring("contrast_lorentzian="));
    REQUIRE_THAT(flat, ContainsSubstring("converged=true"));

    const auto t = nvlex::csv::read_table(curve);
    REQUIRE(t.rows() > 10);
    REQUIRE(t.find("freq_mhz").has_value());
    REQUIRE(t.find("fluorescence").has_value());
    REQUIRE(t.find("fit").has_value());
}

TEST_CASE("malformed input produces exit code 1 and no report", "[cli]") {
    const auto dir = sandbox();
    const auto bad = dir / "bad.csv";
    const auto rep = (dir / "never.json").string();
    write_file(bad, "freq_mhz,fluorescence\n2820,1.0\n2821,oops\n");
    std::error_code ec;
    fs::remove(rep, ec);

    REQUIRE(run_cli({"odmr", bad.string(), "--out", rep}) == 1);
    REQUIRE_FALSE(fs::exists(rep));

    // wrong schema: the column is missing entirely
    write_file(bad, "frequency,signal\n2820,1.0\n2821,0.9\n");
    REQUIRE(run_cli({"odmr", bad.string(), "--out", rep}) == 1);
}

TEST_CASE("pulse analyzer rejects non-uniform time sampling", "[cli]") {
    const auto dir = sandbox();
    const auto bad = dir / "nonuniform.csv";
    std::ostringstream ss;
    ss << "t_ns,intensity\n";
    for (int i = 0; i < 60; ++i) {
        const double t = i < 30 ? 0.8 * i : 0.8 * i + 0.4;  // step change in dt
        ss << t << "," << (i > 20 && i < 45 ? 1.0 : 0.0) << "\n";
    }
    write_file(bad, ss.str());
    REQUIRE(run_cli({"pulse", bad.string()}) == 1);
}

TEST_CASE("unknown extra csv columns produce a warning, not an error", "[cli]") {
    const auto dir = sandbox();
    const auto csv = (dir / "extra.csv").string();
    const auto rep = (dir / "extra.json").string();

    REQUIRE(run_cli({"simulate", "odmr", "--seed", "14", "--out", csv}) == 0);
    auto content = slurp(csv);
    // append a bogus third column to every line
    std::ostringstream patched;
    std::istringstream in(content);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        patched << line << (first ? ",mystery" : ",0") << "\n";
        first = false;
    }
    write_file(csv, patched.str());

    REQUIRE(run_cli({"odmr", csv, "--out", rep}) == 0);
    const auto j = report_at(rep);
    bool mentioned = false;
    for (const auto& w : j["warnings"]) {
        mentioned = mentioned ||
                    w.get<std::string>().find("mystery") != std::string::npos;
    }
    REQUIRE(mentioned);
}
