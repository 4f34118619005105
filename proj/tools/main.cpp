#include "mtvf/app.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mtvf::app;
  CLI::App cli{"Total variation flow of curves in manifolds"};
  cli.require_subcommand(1);

  FlowArgs flow;
  std::string f_manifold, f_eps, f_grid, f_dt, f_tmax, f_seed;
  auto* c_flow = cli.add_subcommand("flow", "Run a solver from a config file and an initial curve");
  c_flow->add_option("--config", flow.config_path, "key = value config file")->required();
  c_flow->add_option("--input", flow.input_path, "initial curve CSV")->required();
  c_flow->add_option("--out", flow.out_dir, "run directory")->required();
  c_flow->add_option("--manifold", f_manifold, "overrides manifold");
  c_flow->add_option("--eps", f_eps, "overrides epsilon");
  c_flow->add_option("--grid", f_grid, "overrides grid_n");
  c_flow->add_option("--dt", f_dt, "overrides dt (number or auto)");
  c_flow->add_option("--t-max", f_tmax, "overrides t_max");
  c_flow->add_option("--seed", f_seed, "overrides seed");

  DenoiseArgs den;
  std::string d_tstop = "auto";
  auto* c_den = cli.add_subcommand("denoise", "Smooth a sampled curve with the regularized flow");
  c_den->add_option("--input", den.input_path, "sampled curve CSV")->required();
  c_den->add_option("--manifold", den.manifold, "manifold id of the input")->required();
  c_den->add_option("--eps", den.epsilon, "regularization epsilon");
  c_den->add_option("--t-max", d_tstop, "stopping time, or auto");
  c_den->add_option("--tv-drop", den.tv_drop, "fraction of TV removed in auto mode");
  c_den->add_option("--out", den.out_dir, "run directory")->required();

  VerifyArgs ver;
  std::string v_checks = "energy,monotone";
  auto* c_ver = cli.add_subcommand("verify", "Audit a stored trajectory");
  c_ver->add_option("--input", ver.trajectory_path, "run directory or trajectory.csv")->required();
  c_ver->add_option("--checks", v_checks, "comma list: energy,monotone,vi,sphere,z_field,p_energy,stopping");
  c_ver->add_option("--against", ver.vi_curve_path, "comparison step curve for vi");
  c_ver->add_option("--p", ver.p, "exponent of p_energy");
  c_ver->add_option("--out", ver.report_path, "CSV report file");

  LabArgs lab;
  double l_r = 0.0;
  auto* c_lab = cli.add_subcommand("lab", "Comparison-geometry experiments");
  c_lab->add_option("subcommand", lab.subcommand, "semiconvexity, hessian, stability or square")->required();
  c_lab->add_option("--n-max", lab.n_max);
  auto* o_r = c_lab->add_option("--r", l_r, "distance for hessian (default: sweep)");
  c_lab->add_option("--dirs", lab.dirs);
  c_lab->add_option("--samples", lab.samples);
  c_lab->add_option("--radius", lab.radius);
  c_lab->add_option("--bins", lab.bins);
  c_lab->add_option("--seed", lab.seed);
  c_lab->add_option("--out", lab.out_path, "CSV file (default: stdout)");

  GenerateArgs gen;
  auto* c_gen = cli.add_subcommand("generate", "Write synthetic data");
  c_gen->add_option("kind", gen.kind, "staircase, noisy_field or two_jump_square")->required();
  c_gen->add_option("--manifold", gen.manifold);
  c_gen->add_option("--plateaus", gen.plateaus);
  c_gen->add_option("--grid", gen.grid_n);
  c_gen->add_option("--noise", gen.noise);
  c_gen->add_option("--a", gen.a);
  c_gen->add_option("--eps", gen.eps);
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--out", gen.out_path, "curve file (directory for two_jump_square)")->required();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (*c_flow) {
    const std::pair<const char*, const std::string*> map[] = {{"manifold", &f_manifold}, {"epsilon", &f_eps},
                                                              {"grid_n", &f_grid},       {"dt", &f_dt},
                                                              {"t_max", &f_tmax},        {"seed", &f_seed}};
    for (const auto& [key, value] : map)
      if (!value->empty()) flow.overrides[key] = *value;
    return cmd_flow(flow, std::cout, std::cerr);
  }
  if (*c_den) {
    if (d_tstop != "auto") {
      try {
        den.t_stop = mtvf::io::parse_double(d_tstop, "--t-max");
      } catch (const mtvf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
      }
    }
    return cmd_denoise(den, std::cout, std::cerr);
  }
  if (*c_ver) {
    ver.checks = split_list(v_checks);
    return cmd_verify(ver, std::cout, std::cerr);
  }
  if (*c_lab) {
    if (o_r->count()) lab.r = l_r;
    return cmd_lab(lab, std::cout, std::cerr);
  }
  return cmd_generate(gen, std::cout, std::cerr);
}
