#include "viscoflow/presets.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace viscoflow {

bool is_preset(std::string_view name) {
  return name == "sine" || name == "pulse" || name == "zero";
}

double preset_value(std::string_view name, double t, double x, double T) {
  using std::numbers::pi;
  if (name == "sine") return t * std::sin(pi * x);
  if (name == "pulse") return std::sin(pi * t / T) * std::exp(-50.0 * (x - 0.5) * (x - 0.5));
  if (name == "zero") return 0.0;
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

TimeSeries preset_series(std::string_view name, double scale, const Mesh& mesh,
                         const TimeGrid& grid) {
  TimeSeries s;
  s.reserve(grid.steps() + 1);
  for (int k = 0; k <= grid.steps(); ++k) {
    const double t = grid.t(k);
    s.push_back(mesh.interpolate([&](double x) { return scale * preset_value(name, t, x, grid.T()); }));
  }
  return s;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

TimeSeries read_series_csv(const std::filesystem::path& path, const Mesh& mesh,
                           const TimeGrid& grid) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");

  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_csv(line);
    break;
  }
  int ck = -1, cn = -1, cv = -1;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (header[i] == "k") ck = i;
    if (header[i] == "node") cn = i;
  }
  for (const char* name : {"value", "g", "z"}) {
    for (int i = 0; i < static_cast<int>(header.size()) && cv < 0; ++i)
      if (header[i] == name) cv = i;
  }
  if (ck < 0 || cn < 0 || cv < 0)
    throw std::runtime_error("'" + path.string() + "': header needs columns k, node and value/g/z");

  TimeSeries s(grid.steps() + 1, Vector::Constant(mesh.nodes(), std::nan("")));
  long seen = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv(line);
    const auto need = static_cast<std::size_t>(std::max({ck, cn, cv}));
    if (cells.size() <= need) throw std::runtime_error("'" + path.string() + "': short row");
    const int k = std::stoi(cells[ck]);
    const int i = std::stoi(cells[cn]);
    if (k < 0 || k > grid.steps() || i < 0 || i >= mesh.nodes())
      throw std::runtime_error("'" + path.string() + "': (k, node) outside the grid");
    if (std::isnan(s[k][i])) ++seen;
    s[k][i] = std::stod(cells[cv]);
  }
  if (seen != static_cast<long>(grid.steps() + 1) * mesh.nodes())
    throw std::runtime_error("'" + path.string() + "': field does not cover every (k, node)");
  return s;
}

TimeSeries load_series(const std::string& source, double scale, const Mesh& mesh,
                       const TimeGrid& grid) {
  if (is_preset(source)) return preset_series(source, scale, mesh, grid);
  TimeSeries s = read_series_csv(source, mesh, grid);
  for (auto& v : s) v *= scale;
  return s;
}

}  // namespace viscoflow
