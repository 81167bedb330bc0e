#include <CLI11.hpp>

#include <iostream>

#include "experiments.hpp"

using namespace translab;
using namespace translab::cli;

// Exit codes: 0 all pass flags true, 1 a check failed or the computation
// broke down, 2 invalid input (unknown key, bad value, violated hypothesis).
namespace {

struct FlagSet {
  std::map<std::string, std::string> values;  // set only when given
  std::string config, report, csv, out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

CLI::App* add_experiment(CLI::App& app, const Experiment& e, FlagSet& f) {
  auto* sub = app.add_subcommand(e.name, e.help);
  sub->add_option("--config", f.config, "config file; flags override it")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "RNG seed")->each([&f](const std::string&) { f.seed_given = true; });
  sub->add_option("--report", f.report, "report JSON path (default: stdout)");
  if (e.outputs.count("csv")) sub->add_option("--csv", f.csv, "CSV table path");
  if (e.outputs.count("out")) sub->add_option("--out", f.out, "trajectory dump path");
  for (const auto& [key, p] : e.params) {
    const std::string k = key;
    sub->add_option_function<std::string>("--" + k, [&f, k](const std::string& v) { f.values[k] = v; }, p.help);
  }
  return sub;
}

Resolved from_flags(const Experiment& e, const FlagSet& f) {
  Resolved r = f.config.empty() ? resolve_config(json{{"experiment", e.name}}) : resolve_config(read_json(f.config), e.name);
  for (const auto& [k, v] : f.values) {
    const std::string key = "params." + k;
    r.params[k] = from_flag(e.params.at(k), v, key);
  }
  if (f.seed_given) r.seed = f.seed;
  if (!f.report.empty()) r.outputs["report"] = f.report;
  if (!f.csv.empty()) r.outputs["csv"] = f.csv;
  if (!f.out.empty()) r.outputs["out"] = f.out;
  return r;
}

int finish(const json& report, bool to_stdout) {
  if (to_stdout) std::cout << report.dump(2) << '\n';
  const bool pass = report["pass"];
  std::cerr << report["command"].get<std::string>() << ": " << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"translab: numerical checks of transversal convolution and Zakharov well-posedness estimates"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TRANSLAB_VERSION);

  std::vector<FlagSet> flags(experiments().size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < experiments().size(); ++i) subs.push_back(add_experiment(app, experiments()[i], flags[i]));

  std::string run_config, run_report;
  std::uint64_t run_seed = 0;
  bool run_seed_given = false;
  auto* run = app.add_subcommand("run", "run the experiment named in a config file");
  run->add_option("--config", run_config, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", run_seed, "RNG seed (overrides the config)")->each([&](const std::string&) { run_seed_given = true; });
  run->add_option("--report", run_report, "report JSON path (overrides the config)");

  std::vector<std::string> merge_inputs;
  std::string merge_out;
  auto* merge = app.add_subcommand("report-merge", "aggregate reports of one schema version");
  merge->add_option("reports", merge_inputs, "report files");
  merge->add_option("--out", merge_out, "summary path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      Resolved r = resolve_config(read_json(run_config));
      if (run_seed_given) r.seed = run_seed;
      if (!run_report.empty()) r.outputs["report"] = run_report;
      const bool to_stdout = output(r.outputs, "report").empty();
      return finish(execute(r), to_stdout);
    }
    if (merge->parsed()) {
      std::vector<json> reports;
      for (const auto& f : merge_inputs) reports.push_back(read_json(f));
      const json summary = merge_reports(reports);
      if (merge_out.empty()) std::cout << summary.dump(2) << '\n';
      else write_text(merge_out, summary.dump(2) + "\n");
      return 0;
    }
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      const Resolved r = from_flags(experiments()[i], flags[i]);
      return finish(execute(r), output(r.outputs, "report").empty());
    }
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
