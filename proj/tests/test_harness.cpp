#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <set>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "dgmc/dgmc.hpp"
#include "json_io.hpp"

using namespace dgmc;
using namespace dgmc::harness;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("dgmc_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

/// Small, fast circle: n = 128, eps = 3.84 h, about 30 steps.
RunConfig small_circle() {
    RunConfig c;
    c.scenario = "shrinking-circle";
    c.n = 128;
    c.eps = 0.03;
    c.r0 = 0.25;
    c.r_c = 0.125;
    c.T_end = 0.004;
    return c;
}

}  // namespace

TEST(Config, ParsesSectionsAndComments) {
    const auto c = parse_config(
        "# reference\n[scenario]\nscenario = perturbed-circle  # trailing\ndelta = 1.5\n\n[grid]\nn = 128\nL = 2\n"
        "[model]\neps = 0.05\n[time]\ndt = auto\nT_end = 0.01\nscheme = explicit\n");
    EXPECT_EQ(c.scenario, "perturbed-circle");
    EXPECT_EQ(c.delta, 1.5);
    EXPECT_EQ(c.n, 128);
    EXPECT_EQ(c.L, 2.0);
    EXPECT_FALSE(c.dt.has_value());
    EXPECT_EQ(*c.T_end, 0.01);
    EXPECT_EQ(c.scheme, "explicit");
}

TEST(Config, UnknownAndMisplacedKeysAreErrors) {
    EXPECT_THROW(parse_config("colour = red\n"), ConfigError);
    EXPECT_THROW(parse_config("[grid]\neps = 0.1\n"), ConfigError);
    EXPECT_THROW(parse_config("[nonsense]\n"), ConfigError);
    EXPECT_THROW(parse_config("n = 64\nn = 128\n"), ConfigError);
    EXPECT_THROW(parse_config("n 64\n"), ConfigError);
    EXPECT_THROW(parse_config("n = sixty\n"), ConfigError);
    EXPECT_THROW(parse_config("[grid\n"), ConfigError);
    EXPECT_THROW(parse_config("eps =\n"), ConfigError);
    EXPECT_THROW(parse_config("scheme = implicit\n"), ConfigError);
}

TEST(Config, ErrorsCarryLineNumbers) {
    try {
        parse_config("n = 64\n\n# c\nbogus = 1\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    }
}

TEST(Config, LadderRules) {
    const auto c = parse_config("[ladder]\neps = 0.02, 0.01\nn = 256, 512\n");
    ASSERT_EQ(c.ladder.size(), 2u);
    EXPECT_EQ(c.ladder[1].eps, 0.01);
    EXPECT_EQ(c.ladder[1].n, 512);
    EXPECT_THROW(parse_config("[ladder]\neps = 0.02, 0.01\nn = 256\n"), ConfigError);
    EXPECT_THROW(parse_config("dt = 1e-5\n[ladder]\neps = 0.02, 0.01\nn = 256, 512\n"), ConfigError);
    const auto r = rung_config(c, 1);
    EXPECT_EQ(r.eps, 0.01);
    EXPECT_EQ(r.n, 512);
    EXPECT_TRUE(r.ladder.empty());
}

TEST(Config, CanonicalTextRoundTrips) {
    auto c = parse_config("scenario = multiplicity-two\ngap = 1.25\nseed = 7\n[ladder]\neps = 0.02, 0.01\nn = 256, 512\n");
    const auto back = parse_config(to_text(c));
    EXPECT_EQ(to_text(back), to_text(c));
    EXPECT_EQ(content_hash(back), content_hash(c));
}

TEST(Config, HashIgnoresOutputLocation) {
    RunConfig a, b;
    b.out = "elsewhere";
    EXPECT_EQ(content_hash(a), content_hash(b));
    b.eps = 0.011;
    EXPECT_NE(content_hash(a), content_hash(b));
}

TEST(Scenario, ValidationAtLoad) {
    RunConfig c;
    c.scenario = "spiral";
    EXPECT_THROW(make_scenario(c), ConfigError);
    c = RunConfig{};
    c.dim = 3;
    EXPECT_THROW(make_scenario(c), ConfigError);
    c = small_circle();
    c.T_end = 1.0;
    EXPECT_THROW(make_scenario(c), ConfigError);
    c = small_circle();
    c.eps = 0.015;
    EXPECT_THROW(make_scenario(c), ConfigError);
}

TEST(Scenario, AutoValues) {
    RunConfig c;
    const auto s = make_scenario(c);
    EXPECT_DOUBLE_EQ(s.dt, StepScheme::auto_dt(s.spec, c.eps));
    EXPECT_DOUBLE_EQ(s.T_end, 0.8 * s.sphere->t_strong());
    // r_min = 1.25 r_c for the reference circle.
    EXPECT_DOUBLE_EQ(s.sphere->t_strong(), (0.0625 - std::pow(1.25 * 0.125, 2)) / 2.0);
    EXPECT_EQ(default_box(s.spec, c.eps), 64);
    EXPECT_TRUE(s.well_prepared);
}

TEST(Io, CsvHeaderAndRoundTrip) {
    DiagnosticsRecord r;
    r.t = 0.1;
    r.E_eps = 1.0 / 3.0;
    r.mass = std::nextafter(0.2, 1.0);
    r.rho_defect = -0.0;
    r.edi_residual = 1e-300;
    const auto text = csv_text({r, r});
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "t,E_eps,mass,dissipV,dissipVac,dissipH,discL1,discMax,volume,dgSlack,ediRes,Erel,Ebulk,tilt,rhoDefect");
    const auto back = parse_csv(text);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].E_eps, r.E_eps);
    EXPECT_EQ(back[0].mass, r.mass);
    EXPECT_EQ(back[0].edi_residual, r.edi_residual);
    EXPECT_EQ(csv_text(back), text);
    EXPECT_EQ(format_number(0.1), "0.10000000000000001");
}

TEST(Io, CheckpointLayoutIsLittleEndian) {
    GridSpec g(1, 1.0, 8);
    DiffuseState s{ScalarField(g), 0.25, 0.5};
    for (std::size_t i = 0; i < 8; ++i) s.u.data[i] = double(i);
    ByteWriter w;
    write_state(w, s);
    const auto& b = w.data();
    ASSERT_EQ(b.size(), 4u + 3 * 4 + 2 * 8 + 8 * 8);
    EXPECT_EQ(std::memcmp(b.data(), "DGMC", 4), 0);
    const unsigned char head[] = {1, 0, 0, 0, 1, 0, 0, 0, 8, 0, 0, 0};
    EXPECT_EQ(std::memcmp(b.data() + 4, head, 12), 0);
    // eps = 0.25 = 0x3FD0000000000000
    const unsigned char eps[] = {0, 0, 0, 0, 0, 0, 0xD0, 0x3F};
    EXPECT_EQ(std::memcmp(b.data() + 16, eps, 8), 0);
    ByteReader r(b);
    const auto back = read_state(r);
    EXPECT_TRUE(r.at_end());
    EXPECT_EQ(back.u.data, s.u.data);
    EXPECT_EQ(back.eps, 0.25);
    EXPECT_EQ(back.time, 0.5);
}

TEST(Io, CorruptCheckpointsAreRejected) {
    GridSpec g(1, 1.0, 8);
    ByteWriter w;
    write_state(w, DiffuseState{ScalarField(g), 0.25, 0.0});
    auto bytes = w.data();
    auto bad = bytes;
    bad[0] = 'X';
    ByteReader r1(bad);
    EXPECT_THROW(read_state(r1), std::runtime_error);
    auto trunc = bytes;
    trunc.resize(trunc.size() - 3);
    ByteReader r2(trunc);
    EXPECT_THROW(read_state(r2), std::runtime_error);
    auto ver = bytes;
    ver[4] = 9;
    ByteReader r3(ver);
    EXPECT_THROW(read_state(r3), std::runtime_error);
}

TEST(Run, EmptyInterfacePassesVacuously) {
    RunConfig c;
    c.scenario = "empty";
    c.n = 32;
    c.eps = 0.08;
    c.T_end = 0.005;
    const auto s = run(c);
    EXPECT_TRUE(s.completed);
    EXPECT_TRUE(s.pass());
    for (const auto& r : s.records) {
        EXPECT_EQ(r.mass, 0.0);
        EXPECT_EQ(r.E_eps, 0.0);
    }
    EXPECT_FALSE(s.has_gronwall);
}

TEST(Run, EveryCriterionIsNamed) {
    const auto s = run(small_circle());
    ASSERT_FALSE(s.criteria.empty());
    std::set<std::string> names;
    for (const auto& c : s.criteria) {
        EXPECT_FALSE(c.name.empty());
        EXPECT_FALSE(c.relation.empty());
        names.insert(c.name);
    }
    EXPECT_EQ(names.size(), s.criteria.size());
    EXPECT_TRUE(names.count("energy-dissipation identity"));
    EXPECT_TRUE(names.count("coercivity"));
}

TEST(Run, IdenticalConfigsGiveIdenticalArtifacts) {
    const auto a = temp_dir("det_a"), b = temp_dir("det_b");
    RunOptions oa, ob;
    oa.out_dir = a.string();
    ob.out_dir = b.string();
    const auto sa = run(small_circle(), oa);
    const auto sb = run(small_circle(), ob);
    EXPECT_EQ(read_text((a / "diagnostics.csv").string()), read_text((b / "diagnostics.csv").string()));
    EXPECT_EQ(cli::run_json(sa).dump(), cli::run_json(sb).dump());
}

TEST(Run, ResumeIsBitExact) {
    const auto full_dir = temp_dir("full"), part_dir = temp_dir("part");
    RunOptions of;
    of.out_dir = full_dir.string();
    of.stride = 3;
    const auto full = run(small_circle(), of);

    RunOptions op;
    op.out_dir = part_dir.string();
    op.stride = 3;
    op.stop_after = 7;
    const auto part = run(small_circle(), op);
    ASSERT_FALSE(part.completed);
    ASSERT_TRUE(fs::exists(part_dir / "checkpoint.bin"));

    RunOptions orr = op;
    orr.stop_after = -1;
    orr.resume = (part_dir / "checkpoint.bin").string();
    const auto resumed = run(small_circle(), orr);
    ASSERT_TRUE(resumed.completed);
    EXPECT_EQ(read_text((full_dir / "diagnostics.csv").string()), read_text((part_dir / "diagnostics.csv").string()));
    EXPECT_EQ(cli::run_json(full).dump(), cli::run_json(resumed).dump());
}

TEST(Run, CheckpointForAnotherConfigIsRejected) {
    const auto dir = temp_dir("other");
    RunOptions op;
    op.out_dir = dir.string();
    op.stop_after = 2;
    run(small_circle(), op);
    auto other = small_circle();
    other.r0 = 0.24;
    RunOptions orr;
    orr.resume = (dir / "checkpoint.bin").string();
    EXPECT_THROW(run(other, orr), ConfigError);
}

TEST(Ladder, NeedsTwoRungs) {
    RungSummary r;
    r.scenario = "shrinking-circle";
    try {
        ladder_report({r});
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_EQ(std::string(e.what()), "ladder requires ≥ 2 rungs");
    }
}

TEST(Ladder, MixedScenariosAreRejected) {
    RungSummary a, b;
    a.scenario = "shrinking-circle";
    b.scenario = "perturbed-circle";
    EXPECT_THROW(ladder_report({a, b}), std::invalid_argument);
}

TEST(Ladder, IdenticalRungsAreNoRefinement) {
    RungSummary a;
    a.scenario = "shrinking-circle";
    a.eps = 0.01;
    a.pass = true;
    const auto rep = ladder_report({a, a});
    EXPECT_FALSE(rep.refined);
    EXPECT_FALSE(rep.pass());
}

TEST(Ladder, HalvedEpsWithShrinkingDiscrepancy) {
    RungSummary a, b;
    a.scenario = b.scenario = "shrinking-circle";
    a.eps = 0.02;
    b.eps = 0.01;
    a.pass = b.pass = true;
    a.equipartition_L1 = 3e-3;
    b.equipartition_L1 = 1e-3;
    a.E_rel0 = b.E_rel0 = 0.0;
    a.de_giorgi_final = 2e-3;
    b.de_giorgi_final = 7e-4;
    a.transport_diffuse = 0.02;
    b.transport_diffuse = 0.01;
    a.C_fit_rel = 10.0;
    b.C_fit_rel = 12.0;
    // Given out of order: the report sorts coarse to fine.
    const auto rep = ladder_report({b, a});
    EXPECT_TRUE(rep.refined);
    EXPECT_EQ(rep.rungs.front().eps, 0.02);
    EXPECT_TRUE(rep.trends.front().pass);
    EXPECT_EQ(rep.trends.front().name, "equipartition L1");
    EXPECT_TRUE(rep.pass());
    b.equipartition_L1 = 4e-3;
    EXPECT_FALSE(ladder_report({a, b}).trends.front().pass);
}

TEST(Json, SummaryHasExactlyTheFiveKeys) {
    RunSummary s;
    auto j = cli::summary_json(s);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"C_fit_rel", "C_fit_bulk", "E0", "ET", "pass"}));
    EXPECT_TRUE(j["C_fit_rel"].is_null());
}

TEST(Json, RungRoundTrip) {
    RungSummary r;
    r.scenario = "perturbed-circle";
    r.eps = 0.005;
    r.n = 1024;
    r.equipartition_L1 = 1.0 / 3.0;
    r.C_fit_bulk = NAN;
    r.pass = true;
    const auto back = cli::rung_from_json(cli::ordered_json::parse(cli::rung_json(r).dump()));
    EXPECT_EQ(back.scenario, r.scenario);
    EXPECT_EQ(back.n, r.n);
    EXPECT_EQ(back.equipartition_L1, r.equipartition_L1);
    EXPECT_TRUE(std::isnan(back.C_fit_bulk));
    EXPECT_TRUE(back.pass);
}

TEST(Verify, StandingWaveInvariants) {
    RunConfig c;
    c.scenario = "standing-wave-1d";
    c.dim = 1;
    c.n = 1024;
    c.eps = 16.0 / 1024;
    const auto rep = verify(c);
    EXPECT_TRUE(rep.pass());
    EXPECT_LT(std::abs(sigma_by_quadrature() - DoubleWell::sigma()), 1e-10);
}

TEST(Cli, BlowUpExitsWithThree) {
    // A checkpoint whose field has left the stable range: resuming it must
    // end in a blow-up, not a configuration error.
    const auto dir = temp_dir("blowup");
    RunConfig c;
    c.scenario = "empty";
    c.n = 16;
    c.eps = 0.125;
    c.T_end = 0.01;
    write_text((dir / "c.conf").string(), to_text(c));
    RunOptions op;
    op.out_dir = dir.string();
    op.stop_after = 1;
    run(c, op);
    auto bytes = read_file((dir / "checkpoint.bin").string());
    const std::size_t field = 4 + 3 * 4 + 2 * 8;
    for (std::size_t i = 0; i < 16 * 16; ++i) {
        ByteWriter w;
        w.f64(50.0);
        std::memcpy(bytes.data() + field + 8 * i, w.data().data(), 8);
    }
    write_file((dir / "hot.bin").string(), bytes);
    const std::string cmd = std::string(DGMC_CLI_PATH) + " run " + (dir / "c.conf").string() + " --out " +
                            (dir / "o").string() + " --quiet --resume " + (dir / "hot.bin").string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 3);
}
