#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "lowmach/harness.hpp"

using namespace lowmach;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.grid = {0.5, 1.0, 8, 16};
  c.t_end = 0.1;
  c.output_interval = 0.05;
  c.ob_output_interval = 0.005;
  return c;
}

ExperimentConfig zero_data(ExperimentConfig c) {
  c.g0 = 0.0;
  c.t_inner = c.t_outer = 0.0;
  c.initial = InitialProfile{0, 0, 0, 0, 0, 0};
  return c;
}

std::string csv_text(const SweepReport& r) {
  std::ostringstream os;
  sweep_table(r).write(os);
  return os.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lowmach_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Harness, EmptySweepGivesEmptyReport) {
  auto c = small_config();
  c.epsilons.clear();
  auto rep = run_sweep(c);
  EXPECT_TRUE(rep.rows.empty());
  EXPECT_EQ(rep.schema_version, kReportSchemaVersion);
  EXPECT_EQ(sweep_table(rep).size(), 0u);
  EXPECT_FALSE(assess(rep).complete);
}

TEST(Harness, ZeroDataGivesZeroErrors) {
  auto c = zero_data(small_config());
  c.epsilons = {0.4};
  auto rep = run_sweep(c);
  ASSERT_EQ(rep.rows.size(), 1u);
  ASSERT_TRUE(rep.rows[0].ok) << rep.rows[0].error;
  const auto& d = rep.rows[0].diag;
  EXPECT_EQ(d.limit.rho_avg, 0.0);
  EXPECT_EQ(d.limit.theta_avg, 0.0);
  EXPECT_EQ(d.limit.u_avg, 0.0);
  EXPECT_EQ(d.limit.u_inst_rms, 0.0);
  for (double v : d.A) EXPECT_EQ(v, 0.0);
  for (double v : d.D) EXPECT_EQ(v, 0.0);
  for (const auto& w : d.wave) EXPECT_EQ(w.value, 0.0) << w.functional << " " << w.test;
  EXPECT_EQ(rep.rows[0].mass_drift, 0.0);
}

TEST(Harness, FailedEpsilonIsRecordedAndSweepContinues) {
  auto c = small_config();
  c.epsilons = {1.0, 0.4};
  c.initial.rho_mode1 = 1.5;  // rho = 1 + eps rho0 goes negative at eps = 1 only
  auto rep = run_sweep(c);
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_FALSE(rep.rows[0].ok);
  EXPECT_FALSE(rep.rows[0].error.empty());
  EXPECT_TRUE(rep.rows[1].ok) << rep.rows[1].error;
  EXPECT_FALSE(assess(rep).complete);
  auto j = sweep_json(rep);
  EXPECT_FALSE(j["summary"]["complete"].get<bool>());
  EXPECT_FALSE(j["rows"][0]["ok"].get<bool>());
}

TEST(Harness, OutputsAreDeterministic) {
  auto c = small_config();
  c.epsilons = {0.4, 0.3};
  c.random_tests = 2;
  c.seed = 5;
  auto a = run_sweep(c), b = run_sweep(c);
  EXPECT_EQ(csv_text(a), csv_text(b));
  EXPECT_EQ(sweep_json(a).dump(), sweep_json(b).dump());
  EXPECT_NE(csv_text(a).find("random_1"), std::string::npos);
  c.seed = 6;
  EXPECT_NE(csv_text(run_sweep(c)), csv_text(a));
}

TEST(Harness, ReportFilesAndCheckpoints) {
  auto c = small_config();
  c.epsilons = {0.4};
  auto dir = scratch("report");
  SweepOptions o;
  o.checkpoint_dir = (dir / "ck").string();
  auto rep = run_sweep(c, o);
  write_sweep_report(rep, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "sweep.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "sweep_summary.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "effective_config.ini"));
  auto nsf = load_checkpoint(dir / "ck" / "nsf_eps0.4.lmck");
  EXPECT_DOUBLE_EQ(nsf.time, c.t_end);
  EXPECT_NO_THROW(nsf.fields.column("rho"));
  auto ob = load_checkpoint(dir / "ck" / "ob_final.lmck");
  EXPECT_NO_THROW(ob.fields.column("Theta"));
  std::filesystem::remove_all(dir);
}

TEST(Harness, TrendRules) {
  auto t = make_trend("x", {4.0, 2.0, 1.0});
  EXPECT_TRUE(t.monotone);
  EXPECT_DOUBLE_EQ(t.ratio, 4.0);
  EXPECT_FALSE(make_trend("y", {1.0, 2.0, 0.1}).monotone);
  EXPECT_TRUE(bounded(make_trend("z", {1.0, 1.9, 1.5})));
  EXPECT_FALSE(bounded(make_trend("z", {1.0, 2.1})));
  EXPECT_TRUE(bounded(make_trend("z", {0.0, 0.0})));
  EXPECT_FALSE(bounded(make_trend("z", {0.0, 1.0})));
}

TEST(Checkpoint, RoundTripIsExact) {
  auto g = make_grid(0.5, 1.0, 8, 16);
  FieldBundle b{g, {}, {}};
  b.add("f", sample(g, [](double r, double p) { return std::exp(r) * std::sin(3 * p) / 3.0; }));
  b.add("v", VectorField(g, Vec::Random(g->size()), Vec::Random(g->size())));
  auto path = scratch("ck") / "x.lmck";
  save_checkpoint(path, b, 0.123456789);
  auto ck = load_checkpoint(path);
  EXPECT_EQ(ck.time, 0.123456789);
  EXPECT_EQ(ck.fields.grid->nr(), 8);
  EXPECT_EQ(ck.fields.grid->r1(), 0.5);
  ASSERT_EQ(ck.fields.names, b.names);
  for (size_t k = 0; k < b.names.size(); ++k) EXPECT_EQ((ck.fields.columns[k] - b.columns[k]).cwiseAbs().maxCoeff(), 0.0);
  std::filesystem::remove_all(path.parent_path());
}

TEST(Checkpoint, RejectsForeignAndTruncatedFiles) {
  auto dir = scratch("bad");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "junk.lmck") << "not a checkpoint";
  EXPECT_THROW(load_checkpoint(dir / "junk.lmck"), Error);
  auto g = make_grid(0.5, 1.0, 8, 16);
  FieldBundle b{g, {}, {}};
  b.add("f", Vec::Ones(g->size()));
  save_checkpoint(dir / "ok.lmck", b, 1.0);
  std::filesystem::resize_file(dir / "ok.lmck", std::filesystem::file_size(dir / "ok.lmck") - 8);
  EXPECT_THROW(load_checkpoint(dir / "ok.lmck"), Error);
  EXPECT_THROW(load_checkpoint(dir / "missing.lmck"), Error);
  std::filesystem::remove_all(dir);
}

TEST(Csv, FieldFileLayout) {
  auto g = make_grid(0.5, 1.0, 4, 8);
  FieldBundle b{g, {}, {}};
  b.add("f", sample(g, [](double r, double) { return r; }));
  auto path = scratch("csv") / "f.csv";
  write_csv(path, b);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "r,phi,f");
  int n = 0;
  while (std::getline(in, line)) ++n;
  EXPECT_EQ(n, g->size());
  std::filesystem::remove_all(path.parent_path());
}
