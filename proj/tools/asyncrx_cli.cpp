// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: asyncrx {run|sweep|compare|calibrate} [--config FILE] [--<field> VALUE]...

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "asyncrx/config.hpp"
#include "asyncrx/error.hpp"
#include "asyncrx/experiment.hpp"

namespace {

struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

Command add_command(CLI::App& root, const std::string& name, const std::string& help) {
  Command cmd;
  cmd.app = root.add_subcommand(name, help);
  return cmd;
}

void add_field_flags(Command& cmd) {
  cmd.app->add_option("--config", cmd.config_path, "key = value config file");
  for (const auto& [key, help] : asyncrx::config_fields())
    cmd.app->add_option("--" + key, cmd.overrides[key], help);
}

asyncrx::ExperimentConfig resolve(const Command& cmd) {
  asyncrx::ExperimentConfig config;
  if (!cmd.config_path.empty()) config = asyncrx::load_config(cmd.config_path);
  if (const char* dir = std::getenv("ASYNCRX_OUTPUT_DIR"); dir != nullptr && *dir != '\0') config.output_dir = dir;
  for (const auto& [key, value] : cmd.overrides)
    if (cmd.app->count("--" + key) > 0) asyncrx::set_field(config, key, value);
  asyncrx::validate(config);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous online training of modular deep receivers"};
  app.require_subcommand(1);

  Command run = add_command(app, "run", "run one policy at snr_db for every seed");
  Command sweep = add_command(app, "sweep", "average BER versus SNR over snr_list");
  Command compare = add_command(app, "compare", "paired comparison of the listed policies");
  Command calibrate = add_command(app, "calibrate", "threshold grid search toward calibrate_target retrains");
  for (Command* c : {&run, &sweep, &compare, &calibrate}) add_field_flags(*c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run.app->parsed()) {
      for (const auto& s : asyncrx::run(resolve(run)))
        std::cout << s.policy << " seed " << s.seed << ": retrains " << s.retrains << ", params " << s.params
                  << ", ratio " << s.ratio << ", avg BER " << s.avg_ber << '\n';
    } else if (sweep.app->parsed()) {
      for (const auto& r : asyncrx::sweep_snr(resolve(sweep)))
        std::cout << "snr " << r.snr_db << " dB: avg BER " << r.avg_ber << ", retrains " << r.retrains << '\n';
    } else if (compare.app->parsed()) {
      for (const auto& r : asyncrx::compare_policies(resolve(compare)))
        std::cout << r.label << ": params " << r.params << ", ratio " << r.ratio << ", avg BER " << r.avg_ber << '\n';
    } else if (calibrate.app->parsed()) {
      const auto cal = asyncrx::calibrate(resolve(calibrate));
      for (const auto& r : cal.grid)
        std::cout << "lambda " << r.lambda << ": retrains " << r.retrains << ", avg BER " << r.avg_ber << '\n';
      std::cout << "best lambda " << cal.best_lambda << '\n';
    }
  } catch (const asyncrx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const asyncrx::TrainingError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
