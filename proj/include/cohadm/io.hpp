#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "cohadm/driver.hpp"

namespace cohadm {

/// Reads the plain-text mesh format ($Nodes, $Triangles, $NodeSets). Ids in the file are
/// 1-based; the returned mesh is 0-based. Clockwise triangles are reoriented and a warning
/// is appended to `warnings` when given. Throws ParseError with the offending line.
InputMesh parse_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
InputMesh parse_mesh_text(const std::string& text, const std::string& source_name,
                          std::vector<std::string>* warnings = nullptr);

/// Writes `mesh` so that parse_mesh reproduces every coordinate bit for bit.
void write_mesh(std::ostream& os, const InputMesh& mesh);
void write_mesh(const std::filesystem::path& path, const InputMesh& mesh);

struct OutputOptions {
  std::filesystem::path directory = "out";
  bool dump_fields = false;
};

struct RunConfig {
  Material material;
  CohesiveParams cohesive;
  AdmmConfig admm;
  LoadSchedule schedule;
  ExtrapolationPolicy policy;
  OutputOptions output;
  int gauss_per_edge = 2;
};

/// YAML run configuration; every invariant is checked here and reported with its line.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::string& source_name);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

enum class PointStatus { closed, opening, unloading, failed };
const char* to_string(PointStatus s);
PointStatus classify_point(const Opening& delta, double delta_max, const CohesiveParams& params);

void write_crack_field(const std::filesystem::path& path, const JumpOperator& jump, const SolverState& state,
                       const CohesiveState& history, const CohesiveParams& params);

/// Appends stress_strain.csv rows and iterations.log lines as a run progresses, flushing
/// after every load step so a failed run leaves its completed steps on disk.
class OutputWriter : public RunObserver {
public:
  OutputWriter(const std::filesystem::path& dir, const Discretization& disc, const CohesiveParams& params,
               bool dump_fields = false);

  void write_log_header(const std::string& text);
  void on_iteration(std::size_t step, std::size_t iteration, const Residuals& r) override;
  void on_step(const StepRecord& record, const SolverState& state, const CohesiveState& history) override;
  void finish(const SolverState& state, const CohesiveState& history);

private:
  std::filesystem::path dir_;
  const Discretization& disc_;
  CohesiveParams params_;
  bool dump_fields_;
  std::ofstream stress_;
  std::ofstream log_;
};

/// One-shot form of OutputWriter: stress_strain.csv, iterations.log and crack_field.csv.
void write_outputs(const RunRecord& record, const SolverState& final_state, const CohesiveState& history,
                   const Discretization& disc, const CohesiveParams& params, const std::filesystem::path& dir);

} // namespace cohadm
