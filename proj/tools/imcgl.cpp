#include <iostream>

#include <CLI11.hpp>

#include "imcgl/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Inertial-manifold experiments for the modified 3D complex Ginzburg-Landau system"};
  app.set_version_flag("--version", std::string(imcgl::kCodeVersion));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  for (const std::string& name : imcgl::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides [run] out)");
    sub->add_option("--seed", seed, "random seed (overrides [run] seed)");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string experiment = app.get_subcommands().front()->get_name();
  const bool seed_given = app.get_subcommands().front()->count("--seed") > 0;
  imcgl::RunConfig cfg;
  try {
    cfg = imcgl::load_config(config_path);
  } catch (const std::exception& e) {
    imcgl::report_error(out_dir, experiment, e, std::cerr);
    return imcgl::exit_status(e);
  }
  cfg.experiment = experiment;
  if (!out_dir.empty()) cfg.out = out_dir;
  if (seed_given) cfg.seed = seed;
  const int status = imcgl::run_and_report(cfg, std::cerr);
  if (status == 0) std::cout << "wrote " << cfg.out.string() << "\n";
  return status;
}
