// Command-line front end: run a load schedule, check the local solver, inspect a mesh.
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cohadm/driver.hpp"
#include "cohadm/errors.hpp"
#include "cohadm/io.hpp"
#include "cohadm/local_oracle.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNonConvergence = 2;
constexpr int kExitUsage = 64;

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + '"';
}

void report(const cohadm::Error& e) {
  std::cerr << "error kind=" << e.kind();
  if (const auto* pe = dynamic_cast<const cohadm::ParseError*>(&e)) {
    std::cerr << " file=" << quoted(pe->file()) << " line=" << pe->line();
  }
  if (const auto* ne = dynamic_cast<const cohadm::RunAborted*>(&e)) {
    std::cerr << " step=" << ne->step() << " iterations=" << ne->iterations()
              << " primal=" << cohadm::format_double(ne->last_residuals().primal)
              << " dual=" << cohadm::format_double(ne->last_residuals().dual);
  }
  std::cerr << " msg=" << quoted(e.what()) << '\n';
}

std::string describe(const cohadm::RunConfig& c, double rho, const std::string& mesh_path) {
  std::ostringstream os;
  using cohadm::format_double;
  os << "mesh " << mesh_path << '\n'
     << "material E=" << format_double(c.material.youngs_modulus) << " nu=" << format_double(c.material.poisson_ratio)
     << " mode=" << (c.material.mode == cohadm::PlaneMode::plane_stress ? "plane_stress" : "plane_strain")
     << " thickness=" << format_double(c.material.thickness) << '\n'
     << "cohesive sigma_c=" << format_double(c.cohesive.sigma_c) << " delta_c=" << format_double(c.cohesive.delta_c)
     << " beta=" << format_double(c.cohesive.beta) << '\n'
     << "admm alpha=" << format_double(c.admm.alpha) << " rho=" << format_double(rho)
     << " c_primal=" << format_double(c.admm.c_primal) << " c_dual=" << format_double(c.admm.c_dual)
     << " max_iters=" << c.admm.max_iters << '\n'
     << "schedule bc_set=" << c.schedule.bc_set << " direction=" << (c.schedule.direction == cohadm::Axis::x ? "x" : "y")
     << " u_start=" << format_double(c.schedule.u_start) << " u_end=" << format_double(c.schedule.u_end)
     << " n_steps=" << c.schedule.n_steps << '\n'
     << "policy extrapolation=" << (c.policy.enabled ? "on" : "off")
     << " quality_threshold=" << format_double(c.policy.quality_threshold) << '\n'
     << "interface gauss_points=" << c.gauss_per_edge << '\n'
     << "columns: step iter primal dual";
  return os.str();
}

int cmd_run(const std::string& mesh_path, const std::string& config_path, const std::string& out_dir,
            bool no_extrapolation, bool seed_log) {
  std::vector<std::string> warnings;
  const cohadm::InputMesh input = cohadm::parse_mesh(mesh_path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  cohadm::RunConfig cfg = cohadm::parse_config(config_path);
  if (!out_dir.empty()) cfg.output.directory = out_dir;
  if (no_extrapolation) cfg.policy.enabled = false;

  const cohadm::Discretization disc = cohadm::discretize(input, cfg.material, cfg.gauss_per_edge);
  cohadm::OutputWriter writer(cfg.output.directory, disc, cfg.cohesive, cfg.output.dump_fields);
  if (seed_log) {
    const double rho = cfg.admm.rho_override > 0.0
                           ? cfg.admm.rho_override
                           : cohadm::penalty_from_alpha(cfg.admm.alpha, disc.jump.mean_area(), cfg.cohesive);
    writer.write_log_header(describe(cfg, rho, mesh_path));
  }
  const auto outcome = cohadm::run_quasistatic(disc, cfg.cohesive, cfg.schedule, cfg.admm, cfg.policy, &writer);
  writer.finish(outcome.final_state, outcome.history);
  std::cout << "steps " << outcome.record.steps.size() << " iterations " << outcome.record.total_iterations()
            << " peak_stress " << cohadm::format_double(outcome.record.peak_stress()) << '\n';
  return kExitOk;
}

int cmd_info(const std::string& mesh_path) {
  std::vector<std::string> warnings;
  const cohadm::InputMesh input = cohadm::parse_mesh(mesh_path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  const cohadm::BrokenMesh broken = cohadm::break_mesh(input);
  std::cout << "elements " << broken.triangles.size() << '\n'
            << "nodes " << input.nodes.size() << '\n'
            << "interfaces " << broken.interfaces.size() << '\n'
            << "dofs " << broken.num_dofs() << '\n';
  for (const auto& [name, ids] : input.boundary_sets) std::cout << "set " << name << ' ' << ids.size() << '\n';
  return kExitOk;
}

int cmd_local_oracle(std::size_t samples, std::uint64_t seed) {
  const auto r = cohadm::run_local_oracle(samples, seed);
  std::cout << "samples " << r.samples << '\n'
            << "max_gap " << cohadm::format_double(r.max_gap) << '\n'
            << "min_gap " << cohadm::format_double(r.min_gap) << '\n'
            << "worst_sample " << r.worst_sample << '\n';
  return r.max_gap < 1e-8 ? kExitOk : kExitNonConvergence;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasistatic cohesive fracture with ADMM"};
  app.require_subcommand(1);

  std::string mesh_path, config_path, out_dir;
  bool no_extrapolation = false, seed_log = false;
  auto* run = app.add_subcommand("run", "Run a displacement-controlled load schedule");
  run->add_option("--mesh", mesh_path, "Mesh file")->required();
  run->add_option("--config", config_path, "YAML run configuration")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output.directory)");
  run->add_flag("--no-extrapolation", no_extrapolation, "Always warm-start from the previous step");
  run->add_flag("--seed-log", seed_log, "Write the resolved parameters at the top of iterations.log");

  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  auto* oracle = app.add_subcommand("local-oracle", "Compare the closed-form local solver against brute force");
  oracle->add_option("--samples", samples, "Number of random instances")->check(CLI::PositiveNumber);
  oracle->add_option("--seed", seed, "Random seed");

  std::string info_mesh;
  auto* info = app.add_subcommand("info", "Print element, interface and DOF counts");
  info->add_option("--mesh", info_mesh, "Mesh file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error kind=usage msg=" << quoted(e.what()) << '\n' << app.help();
    return kExitUsage;
  }

  try {
    if (*run) return cmd_run(mesh_path, config_path, out_dir, no_extrapolation, seed_log);
    if (*oracle) return cmd_local_oracle(samples, seed);
    if (*info) return cmd_info(info_mesh);
  } catch (const cohadm::NonConvergenceError& e) {
    report(e);
    return kExitNonConvergence;
  } catch (const cohadm::Error& e) {
    report(e);
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error kind=internal msg=" << quoted(e.what()) << '\n';
    return kExitInput;
  }
  return kExitUsage;
}
