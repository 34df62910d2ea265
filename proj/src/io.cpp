#include "cohadm/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "cohadm/errors.hpp"

namespace cohadm {

// ===========================================================================
// mesh format
// ===========================================================================

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string_view> tokens;
  bool blank; // empty or whitespace only (comment-only lines are not blank)
};

std::vector<std::string_view> tokenize(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<Line> split_lines(const std::string& text) {
  std::vector<Line> lines;
  std::size_t start = 0;
  std::size_t number = 1;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view raw(text.data() + start, end - start);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    const bool blank = raw.find_first_not_of(" \t") == std::string_view::npos;
    std::string_view body = raw.substr(0, raw.find('#'));
    lines.push_back({number, tokenize(body), blank});
    if (end == text.size()) break;
    start = end + 1;
    ++number;
  }
  return lines;
}

class MeshParser {
public:
  MeshParser(const std::string& text, std::string source) : lines_(split_lines(text)), source_(std::move(source)) {}

  InputMesh parse(std::vector<std::string>* warnings) {
    InputMesh mesh;
    expect_header("$Nodes");
    const std::size_t n_nodes = read_count("$Nodes");
    for (std::size_t k = 0; k < n_nodes; ++k) {
      const Line& l = next_entry("$Nodes", n_nodes, k);
      if (l.tokens.size() != 3) fail(l.number, "node line must be 'id x y'");
      check_id(l, parse_index(l, l.tokens[0]), k, "node");
      mesh.nodes.emplace_back(parse_real(l, l.tokens[1]), parse_real(l, l.tokens[2]));
    }
    expect_header("$Triangles");
    const std::size_t n_tris = read_count("$Triangles");
    for (std::size_t k = 0; k < n_tris; ++k) {
      const Line& l = next_entry("$Triangles", n_tris, k);
      if (l.tokens.size() != 4) fail(l.number, "triangle line must be 'id n1 n2 n3'");
      check_id(l, parse_index(l, l.tokens[0]), k, "triangle");
      std::array<std::size_t, 3> tri{};
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t id = parse_index(l, l.tokens[j + 1]);
        if (id < 1 || id > n_nodes) {
          fail(l.number, "triangle references node " + std::to_string(id) + " but only " + std::to_string(n_nodes) +
                             " nodes are defined");
        }
        tri[j] = id - 1;
      }
      if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) fail(l.number, "triangle repeats a node");
      mesh.triangles.push_back(tri);
      const double area = mesh.signed_area(mesh.triangles.size() - 1);
      if (area == 0.0 || !std::isfinite(area)) fail(l.number, "triangle has zero area");
      if (area < 0.0) {
        std::swap(mesh.triangles.back()[1], mesh.triangles.back()[2]);
        if (warnings) {
          warnings->push_back(source_ + ":" + std::to_string(l.number) + ": triangle " + std::to_string(k + 1) +
                              " was clockwise and has been reoriented");
        }
      }
    }

    skip_ignorable();
    if (pos_ < lines_.size()) {
      const Line& h = lines_[pos_];
      if (h.tokens.size() != 1 || h.tokens[0] != "$NodeSets") fail(h.number, "expected $NodeSets or end of file");
      ++pos_;
      parse_node_sets(mesh, n_nodes);
    }

    try {
      mesh.validate();
    } catch (const TopologyError& e) {
      throw ParseError(source_, 0, e.what());
    }
    return mesh;
  }

private:
  [[noreturn]] void fail(std::size_t line, const std::string& msg) const { throw ParseError(source_, line, msg); }

  void skip_ignorable() {
    while (pos_ < lines_.size() && lines_[pos_].tokens.empty()) ++pos_;
  }

  void expect_header(std::string_view name) {
    skip_ignorable();
    if (pos_ >= lines_.size()) fail(lines_.empty() ? 0 : lines_.back().number, "missing section " + std::string(name));
    const Line& l = lines_[pos_];
    if (l.tokens.size() != 1 || l.tokens[0] != name) {
      fail(l.number, "expected section " + std::string(name) + ", found '" + std::string(l.tokens[0]) + "'");
    }
    ++pos_;
  }

  std::size_t read_count(std::string_view section) {
    skip_ignorable();
    if (pos_ >= lines_.size()) fail(lines_.back().number, "missing count for " + std::string(section));
    const Line& l = lines_[pos_++];
    if (l.tokens.size() != 1) fail(l.number, "expected a single count after " + std::string(section));
    return parse_index(l, l.tokens[0]);
  }

  const Line& next_entry(std::string_view section, std::size_t count, std::size_t k) {
    skip_ignorable();
    if (pos_ >= lines_.size() || lines_[pos_].tokens[0].starts_with("$")) {
      const std::size_t at = pos_ < lines_.size() ? lines_[pos_].number : lines_.back().number;
      fail(at, std::string(section) + " declares " + std::to_string(count) + " entries but only " + std::to_string(k) +
                   " are present");
    }
    return lines_[pos_++];
  }

  void check_id(const Line& l, std::size_t id, std::size_t k, const char* what) const {
    if (id != k + 1) {
      const bool duplicate = id >= 1 && id <= k;
      fail(l.number, std::string(duplicate ? "duplicate " : "non-contiguous ") + what + " id " + std::to_string(id) +
                         " (expected " + std::to_string(k + 1) + ")");
    }
  }

  void parse_node_sets(InputMesh& mesh, std::size_t n_nodes) {
    std::optional<std::string> current;
    auto close = [&] { current.reset(); };
    for (; pos_ < lines_.size(); ++pos_) {
      const Line& l = lines_[pos_];
      if (l.blank) {
        close();
        continue;
      }
      if (l.tokens.empty()) continue;
      if (l.tokens[0].starts_with("$")) fail(l.number, "unexpected section after $NodeSets");
      std::size_t first = 0;
      if (!current) {
        std::string name(l.tokens[0]);
        if (!mesh.boundary_sets.emplace(name, std::vector<std::size_t>{}).second) {
          fail(l.number, "duplicate node set '" + name + "'");
        }
        current = name;
        first = 1;
      }
      auto& ids = mesh.boundary_sets[*current];
      for (std::size_t t = first; t < l.tokens.size(); ++t) {
        const std::size_t id = parse_index(l, l.tokens[t]);
        if (id < 1 || id > n_nodes) {
          fail(l.number, "node set '" + *current + "' references node " + std::to_string(id) + " of " +
                             std::to_string(n_nodes));
        }
        ids.push_back(id - 1);
      }
    }
  }

  std::size_t parse_index(const Line& l, std::string_view tok) const {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      fail(l.number, "expected a non-negative integer, found '" + std::string(tok) + "'");
    }
    return v;
  }

  double parse_real(const Line& l, std::string_view tok) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
      fail(l.number, "expected a finite number, found '" + std::string(tok) + "'");
    }
    return v;
  }

  std::vector<Line> lines_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

InputMesh parse_mesh_text(const std::string& text, const std::string& source_name, std::vector<std::string>* warnings) {
  return MeshParser(text, source_name).parse(warnings);
}

InputMesh parse_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  return parse_mesh_text(read_file(path), path.string(), warnings);
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_mesh(std::ostream& os, const InputMesh& mesh) {
  os << "$Nodes\n" << mesh.nodes.size() << '\n';
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    os << i + 1 << ' ' << format_double(mesh.nodes[i].x()) << ' ' << format_double(mesh.nodes[i].y()) << '\n';
  }
  os << "$Triangles\n" << mesh.triangles.size() << '\n';
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    os << t + 1 << ' ' << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
  }
  if (mesh.boundary_sets.empty()) return;
  os << "$NodeSets\n";
  for (const auto& [name, ids] : mesh.boundary_sets) {
    os << name;
    for (std::size_t k = 0; k < ids.size(); ++k) os << (k % 16 == 0 ? '\n' : ' ') << ids[k] + 1;
    os << "\n\n";
  }
}

void write_mesh(const std::filesystem::path& path, const InputMesh& mesh) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  write_mesh(os, mesh);
}

// ===========================================================================
// run configuration
// ===========================================================================

namespace {

class ConfigReader {
public:
  explicit ConfigReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    const auto mark = node.Mark();
    throw ParseError(source_, mark.line >= 0 ? static_cast<std::size_t>(mark.line) + 1 : 0, msg);
  }

  YAML::Node section(const YAML::Node& root, const char* name, bool required) const {
    YAML::Node n = root[name];
    if (!n) {
      if (required) fail(root, std::string("missing section '") + name + "'");
      return n;
    }
    if (!n.IsMap()) fail(n, std::string("section '") + name + "' must be a mapping");
    return n;
  }

  void only_keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& where) const {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  template <typename T>
  T get(const YAML::Node& map, const char* key, const std::string& where, std::optional<T> fallback = {}) const {
    const YAML::Node n = map[key];
    if (!n) {
      if (fallback) return *fallback;
      fail(map, "missing key '" + where + "." + key + "'");
    }
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "invalid value for '" + where + "." + key + "'");
    }
  }

  template <typename Validate>
  void check(const YAML::Node& at, Validate&& validate) const {
    try {
      validate();
    } catch (const ConfigError& e) {
      // point at the key the message names, falling back to the section
      const std::string msg = e.what();
      YAML::Node where = at;
      for (const auto& kv : at) {
        const auto key = kv.first.as<std::string>();
        if (msg.find(key) != std::string::npos) {
          where = kv.first;
          break;
        }
      }
      fail(where, msg);
    }
  }

private:
  std::string source_;
};

} // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source_name) {
  ConfigReader rd(source_name);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(source_name, static_cast<std::size_t>(e.mark.line) + 1, e.msg);
  }
  if (!root || !root.IsMap()) throw ParseError(source_name, 1, "configuration must be a YAML mapping");
  rd.only_keys(root, {"material", "cohesive", "admm", "schedule", "policy", "output", "interface"}, "top level");

  RunConfig cfg;

  const YAML::Node mat = rd.section(root, "material", true);
  rd.only_keys(mat, {"youngs_modulus", "poisson_ratio", "mode", "thickness"}, "material");
  cfg.material.youngs_modulus = rd.get<double>(mat, "youngs_modulus", "material");
  cfg.material.poisson_ratio = rd.get<double>(mat, "poisson_ratio", "material");
  cfg.material.thickness = rd.get<double>(mat, "thickness", "material", 1.0);
  const auto mode = rd.get<std::string>(mat, "mode", "material");
  if (mode == "plane_stress") {
    cfg.material.mode = PlaneMode::plane_stress;
  } else if (mode == "plane_strain") {
    cfg.material.mode = PlaneMode::plane_strain;
  } else {
    rd.fail(mat["mode"], "material.mode must be plane_stress or plane_strain");
  }
  rd.check(mat, [&] { cfg.material.validate(); });

  const YAML::Node coh = rd.section(root, "cohesive", true);
  rd.only_keys(coh, {"sigma_c", "delta_c", "beta"}, "cohesive");
  cfg.cohesive.sigma_c = rd.get<double>(coh, "sigma_c", "cohesive");
  cfg.cohesive.delta_c = rd.get<double>(coh, "delta_c", "cohesive");
  cfg.cohesive.beta = rd.get<double>(coh, "beta", "cohesive", 1.0);
  rd.check(coh, [&] { cfg.cohesive.validate(); });

  if (const YAML::Node admm = rd.section(root, "admm", false)) {
    rd.only_keys(admm, {"alpha", "c_primal", "c_dual", "max_iters", "rho"}, "admm");
    cfg.admm.alpha = rd.get<double>(admm, "alpha", "admm", cfg.admm.alpha);
    cfg.admm.c_primal = rd.get<double>(admm, "c_primal", "admm", cfg.admm.c_primal);
    cfg.admm.c_dual = rd.get<double>(admm, "c_dual", "admm", cfg.admm.c_dual);
    const auto iters = rd.get<long long>(admm, "max_iters", "admm", static_cast<long long>(cfg.admm.max_iters));
    if (iters < 1) rd.fail(admm["max_iters"], "admm.max_iters must be at least 1");
    cfg.admm.max_iters = static_cast<std::size_t>(iters);
    cfg.admm.rho_override = rd.get<double>(admm, "rho", "admm", 0.0);
    rd.check(admm, [&] { cfg.admm.validate(); });
  }

  const YAML::Node sch = rd.section(root, "schedule", true);
  rd.only_keys(sch, {"bc_set", "direction", "u_start", "u_end", "n_steps", "fixed_sets"}, "schedule");
  cfg.schedule.bc_set = rd.get<std::string>(sch, "bc_set", "schedule");
  const auto dir = rd.get<std::string>(sch, "direction", "schedule", std::string("x"));
  if (dir == "x") {
    cfg.schedule.direction = Axis::x;
  } else if (dir == "y") {
    cfg.schedule.direction = Axis::y;
  } else {
    rd.fail(sch["direction"], "schedule.direction must be x or y");
  }
  cfg.schedule.u_start = rd.get<double>(sch, "u_start", "schedule", 0.0);
  cfg.schedule.u_end = rd.get<double>(sch, "u_end", "schedule");
  const auto steps = rd.get<long long>(sch, "n_steps", "schedule");
  if (steps < 1) rd.fail(sch["n_steps"], "schedule.n_steps must be at least 1");
  cfg.schedule.n_steps = static_cast<std::size_t>(steps);
  if (const YAML::Node fixed = sch["fixed_sets"]) {
    if (!fixed.IsSequence()) rd.fail(fixed, "schedule.fixed_sets must be a list");
    for (const auto& entry : fixed) {
      if (!entry.IsMap()) rd.fail(entry, "fixed_sets entries must be mappings with 'set' and 'components'");
      rd.only_keys(entry, {"set", "components"}, "schedule.fixed_sets");
      FixedSet fs;
      fs.set = rd.get<std::string>(entry, "set", "fixed_sets");
      const auto comps = rd.get<std::string>(entry, "components", "fixed_sets", std::string("xy"));
      if (comps != "x" && comps != "y" && comps != "xy") rd.fail(entry["components"], "components must be x, y or xy");
      fs.fix_x = comps.find('x') != std::string::npos;
      fs.fix_y = comps.find('y') != std::string::npos;
      cfg.schedule.fixed_sets.push_back(fs);
    }
  }
  rd.check(sch, [&] { cfg.schedule.validate(); });

  if (const YAML::Node pol = rd.section(root, "policy", false)) {
    rd.only_keys(pol, {"extrapolation", "quality_threshold"}, "policy");
    cfg.policy.enabled = rd.get<bool>(pol, "extrapolation", "policy", true);
    cfg.policy.quality_threshold = rd.get<double>(pol, "quality_threshold", "policy", 2.0);
    rd.check(pol, [&] { cfg.policy.validate(); });
  }

  if (const YAML::Node out = rd.section(root, "output", false)) {
    rd.only_keys(out, {"directory", "dump_fields"}, "output");
    cfg.output.directory = rd.get<std::string>(out, "directory", "output", std::string("out"));
    cfg.output.dump_fields = rd.get<bool>(out, "dump_fields", "output", false);
  }

  if (const YAML::Node intf = rd.section(root, "interface", false)) {
    rd.only_keys(intf, {"gauss_points"}, "interface");
    cfg.gauss_per_edge = rd.get<int>(intf, "gauss_points", "interface", 2);
    if (cfg.gauss_per_edge < 1 || cfg.gauss_per_edge > 3) {
      rd.fail(intf["gauss_points"], "interface.gauss_points must be 1, 2 or 3");
    }
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) { return parse_config_text(read_file(path), path.string()); }

// ===========================================================================
// outputs
// ===========================================================================

const char* to_string(PointStatus s) {
  switch (s) {
  case PointStatus::closed:
    return "closed";
  case PointStatus::opening:
    return "opening";
  case PointStatus::unloading:
    return "unloading";
  case PointStatus::failed:
    return "failed";
  }
  return "closed";
}

PointStatus classify_point(const Opening& delta, double delta_max, const CohesiveParams& params) {
  if (delta_max >= params.delta_c) return PointStatus::failed;
  if (delta_max == 0.0) return PointStatus::closed;
  const double eff = effective_opening(delta, params.beta);
  return eff >= delta_max * (1.0 - 1e-9) ? PointStatus::opening : PointStatus::unloading;
}

void write_crack_field(const std::filesystem::path& path, const JumpOperator& jump, const SolverState& state,
                       const CohesiveState& history, const CohesiveParams& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << "gauss_point,x,y,delta_n,delta_s,delta_max,status\n";
  for (std::size_t i = 0; i < jump.points.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(2 * i);
    const Opening d(state.delta[k], state.delta[k + 1]);
    const auto& pt = jump.points[i];
    os << i << ',' << format_double(pt.position.x()) << ',' << format_double(pt.position.y()) << ','
       << format_double(d.x()) << ',' << format_double(d.y()) << ',' << format_double(history.delta_max[i]) << ','
       << to_string(classify_point(d, history.delta_max[i], params)) << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

OutputWriter::OutputWriter(const std::filesystem::path& dir, const Discretization& disc, const CohesiveParams& params,
                           bool dump_fields)
    : dir_(dir), disc_(disc), params_(params), dump_fields_(dump_fields) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  stress_.open(dir_ / "stress_strain.csv", std::ios::binary | std::ios::trunc);
  if (!stress_) throw IoError("cannot write " + (dir_ / "stress_strain.csv").string());
  log_.open(dir_ / "iterations.log", std::ios::binary | std::ios::trunc);
  if (!log_) throw IoError("cannot write " + (dir_ / "iterations.log").string());
  stress_ << "step,u_applied,reaction_force,avg_stress,avg_strain,iterations,extrapolated,wall_ms\n";
  stress_.flush();
}

void OutputWriter::write_log_header(const std::string& text) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) log_ << "# " << line << '\n';
}

void OutputWriter::on_iteration(std::size_t step, std::size_t iteration, const Residuals& r) {
  log_ << step << ' ' << iteration << ' ' << format_double(r.primal) << ' ' << format_double(r.dual) << '\n';
}

void OutputWriter::on_step(const StepRecord& rec, const SolverState& state, const CohesiveState& history) {
  stress_ << rec.step << ',' << format_double(rec.u_applied) << ',' << format_double(rec.reaction_force) << ','
          << format_double(rec.avg_stress) << ',' << format_double(rec.avg_strain) << ',' << rec.iterations << ','
          << (rec.extrapolated ? 1 : 0) << ',' << format_double(rec.wall_ms) << '\n';
  stress_.flush();
  log_.flush();
  if (!stress_ || !log_) throw IoError("write failed in " + dir_.string());
  if (dump_fields_) {
    std::array<char, 32> name{};
    std::snprintf(name.data(), name.size(), "crack_field_step%04zu.csv", rec.step);
    write_crack_field(dir_ / name.data(), disc_.jump, state, history, params_);
  }
}

void OutputWriter::finish(const SolverState& state, const CohesiveState& history) {
  write_crack_field(dir_ / "crack_field.csv", disc_.jump, state, history, params_);
}

void write_outputs(const RunRecord& record, const SolverState& final_state, const CohesiveState& history,
                   const Discretization& disc, const CohesiveParams& params, const std::filesystem::path& dir) {
  OutputWriter w(dir, disc, params);
  for (const auto& rec : record.steps) {
    for (std::size_t k = 0; k < rec.residuals.size(); ++k) w.on_iteration(rec.step, k + 1, rec.residuals[k]);
    w.on_step(rec, final_state, history);
  }
  w.finish(final_state, history);
}

} // namespace cohadm
