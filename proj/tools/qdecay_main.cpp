#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "qdecay/config.hpp"
#include "qdecay/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"qdecay: s-wave nonescape probability and its long-time decay"};
  app.set_version_flag("--version", std::string(qdecay::version()));
  app.require_subcommand(1, 1);

  std::string config_path;
  qdecay::RunOptions opts;
  int threads = 0;
  bool print_config = false;

  const struct {
    const char* name;
    const char* help;
  } cmds[] = {{"evolve", "write Psi(r, t) snapshots"},
              {"decay", "P(t) curve and power-law fit"},
              {"scan", "decay exponent across couplings"},
              {"poles", "resonance poles and bound states"}};
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "JSON run config (defaults when omitted)");
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "OpenMP threads (0: default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", opts.seed, "reserved, nothing is random yet");
    sub->add_flag("--print-config", print_config, "print the resolved config and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : qdecay::kConfigError;
  }

  qdecay::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = qdecay::load_config(config_path);
    qdecay::validate(cfg);
  } catch (const qdecay::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return qdecay::kConfigError;
  }
  if (print_config) {
    std::cout << qdecay::dump_config(cfg) << "\n";
    return qdecay::kOk;
  }

  qdecay::set_num_threads(threads);
  const std::string name = app.get_subcommands().front()->get_name();
  return qdecay::run_command(name, cfg, opts);
}
