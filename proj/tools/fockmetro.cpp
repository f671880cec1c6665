#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fockmetro/cli/config.hpp"
#include "fockmetro/cli/runner.hpp"
#include "fockmetro/errors.hpp"

using namespace fockmetro;
using namespace fockmetro::cli;

namespace {

struct SubcommandArgs {
  Task task;
  std::string config;
  std::string out;
  int workers = 0;
  bool allow_long = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fockmetro: phase-estimation metrology of non-Gaussian bosonic states"};
  app.require_subcommand(1);

  const std::vector<Task> tasks = {Task::QfiSweep,         Task::BetaSweep, Task::SensitivitySweep,
                                   Task::FixedObsSweep,    Task::DecoherenceSweep, Task::ScSweep,
                                   Task::FitBeta,          Task::StateInfo};
  std::vector<SubcommandArgs> args(tasks.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    auto& a = args[i];
    a.task = tasks[i];
    auto* sub = app.add_subcommand(task_subcommand(a.task), std::string("run a ") + task_name(a.task) + " config");
    sub->add_option("--config", a.config, "JSON config file")->required();
    sub->add_option("--out", a.out, "output directory (overrides the config)");
    sub->add_option("--workers", a.workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_flag("--allow-long", a.allow_long, "permit runs whose estimate exceeds the long-run threshold");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const auto& a = args[i];
    RunOptions opts;
    if (!a.out.empty()) opts.out_dir = a.out;
    if (a.workers > 0) opts.workers = a.workers;
    opts.allow_long = a.allow_long;
    try {
      const SweepConfig cfg = load_config(a.config, a.task);
      return run(cfg, opts);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ConfigError) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
      std::cerr << "error: " << e.what() << "\n";
      return kExitPartial;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitPartial;
    }
  }
  return kExitConfig;
}
