#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fbp/fbp.hpp"
#include "fbp/harness/experiments.hpp"
#include "fbp/harness/oracle.hpp"
#include "fbp/io/csv.hpp"
#include "fbp/io/plan_config.hpp"

namespace {

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::size_t page_size = 100;
  std::string cost_mode = "virtual";
  std::string out = "out";
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_cost_mode = true) {
  cmd->add_option("--seed", f.seed, "Seed for generators and the deterministic scheduler");
  cmd->add_flag("--deterministic", f.deterministic, "Use the deterministic round-robin scheduler");
  cmd->add_option("--page-size", f.page_size, "Tuples per queue page")->check(CLI::PositiveNumber);
  if (with_cost_mode)
    cmd->add_option("--cost-mode", f.cost_mode, "virtual or wallclock")->check(CLI::IsMember({"virtual", "wallclock"}));
  cmd->add_option("--out", f.out, "Directory for CSV output");
}

fbp::RunOptions run_options(const CommonFlags& f) {
  fbp::RunOptions o;
  o.scheduler = f.deterministic ? fbp::SchedulerKind::deterministic : fbp::SchedulerKind::concurrent;
  o.seed = f.seed.value_or(0);
  o.page_capacity = f.page_size;
  o.cost_mode = f.cost_mode == "wallclock" ? fbp::CostMode::wallclock : fbp::CostMode::virtual_units;
  return o;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / name);
  if (!out) throw std::runtime_error("cannot write " + (std::filesystem::path(dir) / name).string());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stream engine with feedback punctuation"};
  app.require_subcommand(1);

  CommonFlags run_f, e1_f, e2_f, or_f;

  std::string plan_file;
  auto* run = app.add_subcommand("run", "Execute a plan file");
  run->add_option("plan", plan_file, "Plan file")->required()->check(CLI::ExistingFile);
  add_common(run, run_f);

  fbp::Exp1Config e1;
  auto* exp1 = app.add_subcommand("exp1", "Imputation skew with and without pace feedback");
  add_common(exp1, e1_f);
  exp1->add_option("--tolerance", e1.tolerance, "Pace tolerance D in seconds")->check(CLI::NonNegativeNumber);
  exp1->add_option("--impute-cost", e1.impute_cost, "Work units (or ms) per imputed tuple");
  exp1->add_option("--tuples", e1.tuples, "Stream length")->check(CLI::PositiveNumber);

  fbp::Exp2Config e2;
  std::vector<std::string> schemes{"F0", "F1", "F2", "F3"};
  auto* exp2 = app.add_subcommand("exp2", "Zooming speed map under feedback schemes F0-F3");
  add_common(exp2, e2_f);
  exp2->add_option("--scheme", schemes, "Comma-separated schemes")->delimiter(',')->check(CLI::IsMember({"F0", "F1", "F2", "F3"}));
  exp2->add_option("--scale", e2.scale, "Fraction of the 18-hour stream")->check(CLI::PositiveNumber);
  exp2->add_option("--zoom-interval", e2.zoom_interval, "Seconds between viewport switches")->check(CLI::PositiveNumber);

  std::string oracle_plan;
  auto* oracle = app.add_subcommand("oracle", "Check feedback-on output against the feedback-off run");
  oracle->add_option("--plan", oracle_plan, "Plan file with inject lines")->required()->check(CLI::ExistingFile);
  add_common(oracle, or_f, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*run) {
      auto cfg = fbp::load_plan_config(plan_file);
      auto report = fbp::run_plan(fbp::build_plan(cfg, {.feedback = true, .seed = run_f.seed}), run_options(run_f));
      fbp::write_report(run_f.out, report);
      fbp::write_counters_csv(std::cout, report);
    } else if (*exp1) {
      e1.run = run_options(e1_f);
      if (e1_f.seed) e1.stream.seed = *e1_f.seed;
      auto r = fbp::exp1(e1);
      auto summary = open_out(e1_f.out, "exp1.csv");
      std::ostringstream s;
      s << "feedback,imputed,late,timely_fraction\n"
        << "off," << r.imputed_without << ',' << r.late_without << ',' << r.timely_fraction_without << '\n'
        << "on," << r.imputed_with << ',' << r.late_with << ',' << r.timely_fraction_with << '\n';
      summary << s.str();
      std::cout << s.str();
      auto div = open_out(e1_f.out, "divergence.csv");
      fbp::write_divergence_csv(div, r);
    } else if (*exp2) {
      e2.run = run_options(e2_f);
      if (e2_f.seed) e2.stream.seed = *e2_f.seed;
      e2.schemes.clear();
      for (const auto& s : schemes) e2.schemes.push_back(fbp::parse_scheme(s));
      auto r = fbp::exp2(e2);
      auto out = open_out(e2_f.out, "exp2.csv");
      fbp::write_exp2_csv(out, r);
      fbp::write_exp2_csv(std::cout, r);
    } else if (*oracle) {
      or_f.deterministic = true;
      auto cfg = fbp::load_plan_config(oracle_plan);
      auto res = fbp::oracle_check(cfg, run_options(or_f), or_f.seed);
      std::cout << res.describe() << (res.pass ? "PASS" : "FAIL") << "\n";
      return res.pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
