#include "lgcp/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "lgcp/csv.hpp"
#include "lgcp/error.hpp"

namespace lgcp {

namespace {

std::string at_line(int line) { return line > 0 ? fmt::format("line {}: ", line) : std::string{}; }

}  // namespace

SlopeUnitGraph::SlopeUnitGraph(int n_su, std::vector<std::pair<int, int>> edges) : n_su_(n_su) {
  if (n_su < 1) throw InputError("slope-unit graph needs at least one node");
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n_su || b >= n_su)
      throw InputError(fmt::format("edge ({}, {}) references a node outside 1..{}", a + 1, b + 1, n_su));
    if (a == b) throw InputError(fmt::format("self-loop on slope unit {}", a + 1));
    auto key = std::minmax(a, b);
    if (!seen.insert({key.first, key.second}).second)
      throw InputError(fmt::format("duplicate edge ({}, {})", key.first + 1, key.second + 1));
  }
  edges_.assign(seen.begin(), seen.end());
  degrees_.assign(n_su, 0);
  neighbors_.assign(n_su, {});
  for (auto [a, b] : edges_) {
    ++degrees_[a];
    ++degrees_[b];
    neighbors_[a].push_back(b);
    neighbors_[b].push_back(a);
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
  if (n_su > 1) {
    for (int i = 0; i < n_su; ++i)
      if (degrees_[i] == 0) throw InputError(fmt::format("slope unit {} has no neighbours", i + 1));
  }
  if (!is_connected(n_su, edges_)) throw InputError("slope-unit graph is not connected");
}

bool SlopeUnitGraph::is_connected(int n_su, const std::vector<std::pair<int, int>>& edges) {
  if (n_su <= 1) return true;
  std::vector<int> parent(n_su);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  int components = n_su;
  for (auto [a, b] : edges) {
    const int ra = find(a);
    const int rb = find(b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components == 1;
}

std::vector<double> standardize_column(const std::vector<double>& values) {
  const auto n = values.size();
  if (n < 2) throw InputError("standardization needs at least two values");
  // two-pass for accuracy
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double variance = ss / static_cast<double>(n - 1);
  if (!(variance > 0.0) || !std::isfinite(variance)) throw InputError("constant covariate");
  const double sd = std::sqrt(variance);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (values[i] - mean) / sd;
  return out;
}

int bin_aspect(double angle) {
  if (!std::isfinite(angle)) throw InputError("non-finite aspect angle");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a < 0.0) a += two_pi;
  if (a >= two_pi) a -= two_pi;
  const int bin = static_cast<int>(std::floor(a / (two_pi / kAspectBins)));
  return std::clamp(bin, 0, kAspectBins - 1);
}

int bin_slope(double value, double min, double max) {
  if (!(min < max)) throw InputError("slope binning needs min < max");
  if (!(value >= min && value <= max))
    throw InputError(fmt::format("slope value {} outside [{}, {}]", value, min, max));
  const int cls = static_cast<int>(std::floor((value - min) / (max - min) * kSlopeClasses));
  return std::clamp(cls, 0, kSlopeClasses - 1);
}

SpatialDomain::SpatialDomain(const RawPixelTable& raw, SlopeUnitGraph graph, double pixel_area)
    : graph_(std::move(graph)),
      pixel_area_(pixel_area),
      continuous_names_(raw.continuous_names),
      categorical_names_(raw.categorical_names) {
  if (!(pixel_area > 0.0) || !std::isfinite(pixel_area)) throw InputError("pixel_area must be positive");
  const std::size_t n = raw.rows();
  if (n < 2) throw InputError("pixel table needs at least two rows");
  auto line_of = [&](std::size_t row) { return row < raw.line.size() ? raw.line[row] : 0; };

  std::unordered_set<std::int64_t> ids;
  for (std::size_t r = 0; r < n; ++r) {
    if (!ids.insert(raw.pixel_id[r]).second)
      throw InputError(fmt::format("{}duplicate pixel id {}", at_line(line_of(r)), raw.pixel_id[r]));
    if (raw.su_id[r] < 1 || raw.su_id[r] > graph_.n_su())
      throw InputError(fmt::format("{}unknown slope unit {}", at_line(line_of(r)), raw.su_id[r]));
    if (raw.count[r] < 0) throw InputError(fmt::format("{}negative count", at_line(line_of(r))));
  }

  std::vector<std::vector<double>> cont;
  cont.reserve(raw.continuous.size());
  for (std::size_t c = 0; c < raw.continuous.size(); ++c) {
    try {
      cont.push_back(standardize_column(raw.continuous[c]));
    } catch (const InputError& e) {
      throw InputError(fmt::format("column {}: {}", raw.continuous_names[c], e.what()));
    }
  }
  std::vector<double> slope;
  try {
    slope = standardize_column(raw.slope_raw);
  } catch (const InputError& e) {
    throw InputError(fmt::format("column slope_raw: {}", e.what()));
  }
  slope_min_ = *std::min_element(slope.begin(), slope.end());
  slope_max_ = *std::max_element(slope.begin(), slope.end());

  for (std::size_t c = 0; c < raw.categorical.size(); ++c) {
    std::set<std::int64_t> levels;
    for (std::size_t r = 0; r < n; ++r) {
      const auto code = raw.categorical[c][r];
      if (code < 0)
        throw InputError(fmt::format("{}negative category code in column {}", at_line(line_of(r)),
                                     raw.categorical_names[c]));
      levels.insert(code);
    }
    const auto top = *levels.rbegin();
    if (static_cast<std::int64_t>(levels.size()) != top + 1)
      throw InputError(fmt::format("column {}: category codes must be dense 0..{} without gaps",
                                   raw.categorical_names[c], top));
    categorical_levels_.push_back(static_cast<int>(top + 1));
  }

  pixels_.resize(n);
  su_members_.assign(graph_.n_su(), {});
  for (std::size_t r = 0; r < n; ++r) {
    PixelRecord& p = pixels_[r];
    p.pixel_id = raw.pixel_id[r];
    p.su_index = static_cast<int>(raw.su_id[r] - 1);
    p.count = static_cast<int>(raw.count[r]);
    p.continuous.resize(cont.size());
    for (std::size_t c = 0; c < cont.size(); ++c) p.continuous[c] = cont[c][r];
    p.categorical.resize(raw.categorical.size());
    for (std::size_t c = 0; c < raw.categorical.size(); ++c)
      p.categorical[c] = static_cast<int>(raw.categorical[c][r]);
    try {
      p.aspect_bin = bin_aspect(raw.aspect[r]);
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}{}", at_line(line_of(r)), e.what()));
    }
    p.slope_value = slope[r];
    p.slope_class = bin_slope(slope[r], slope_min_, slope_max_);
    su_members_[p.su_index].push_back(static_cast<int>(r));
  }
}

std::vector<int> SpatialDomain::counts() const {
  std::vector<int> y(pixels_.size());
  std::transform(pixels_.begin(), pixels_.end(), y.begin(), [](const PixelRecord& p) { return p.count; });
  return y;
}

RawPixelTable read_pixel_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open pixel table {}", path.string()));
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw InputError(fmt::format("{}: empty pixel table", path.string()));
  if (header.size() < 5 || header[0] != "pixel_id" || header[1] != "su_id" || header[2] != "count" ||
      header[header.size() - 2] != "aspect" || header.back() != "slope_raw")
    throw InputError(fmt::format(
        "{}: line 1: header must be pixel_id,su_id,count,<covariates...>,aspect,slope_raw", path.string()));

  RawPixelTable raw;
  std::vector<bool> is_categorical;
  for (std::size_t c = 3; c + 2 < header.size(); ++c) {
    const bool cat = header[c].rfind("cat_", 0) == 0;
    is_categorical.push_back(cat);
    (cat ? raw.categorical_names : raw.continuous_names).push_back(header[c]);
  }
  raw.continuous.resize(raw.continuous_names.size());
  raw.categorical.resize(raw.categorical_names.size());

  std::vector<std::string> cells;
  while (reader.next(cells)) {
    const int line = reader.line();
    if (cells.size() != header.size())
      throw InputError(fmt::format("{}: line {}: expected {} columns, found {}", path.string(), line,
                                   header.size(), cells.size()));
    auto integer = [&](std::size_t c) {
      return parse_integer(cells[c]).value_or_throw(
          [&] { return fmt::format("line {}: non-numeric value '{}' in column {}", line, cells[c], header[c]); });
    };
    auto real = [&](std::size_t c) {
      return parse_real(cells[c]).value_or_throw(
          [&] { return fmt::format("line {}: non-numeric value '{}' in column {}", line, cells[c], header[c]); });
    };
    raw.pixel_id.push_back(integer(0));
    raw.su_id.push_back(integer(1));
    raw.count.push_back(integer(2));
    std::size_t ci = 0;
    std::size_t ki = 0;
    for (std::size_t c = 3; c + 2 < header.size(); ++c) {
      if (is_categorical[c - 3])
        raw.categorical[ki++].push_back(integer(c));
      else
        raw.continuous[ci++].push_back(real(c));
    }
    raw.aspect.push_back(real(header.size() - 2));
    raw.slope_raw.push_back(real(header.size() - 1));
    raw.line.push_back(line);
  }
  return raw;
}

SlopeUnitGraph read_adjacency(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open adjacency file {}", path.string()));
  CsvReader reader(in);
  std::vector<std::string> cells;
  if (!reader.next(cells) || cells.size() != 2 || cells[0] != "su_a" || cells[1] != "su_b")
    throw InputError(fmt::format("{}: line 1: header must be su_a,su_b", path.string()));
  std::vector<std::pair<int, int>> edges;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::int64_t max_id = 0;
  while (reader.next(cells)) {
    const int line = reader.line();
    if (cells.size() != 2)
      throw InputError(fmt::format("{}: line {}: expected 2 columns", path.string(), line));
    std::int64_t ab[2];
    for (int k = 0; k < 2; ++k) {
      ab[k] = parse_integer(cells[k]).value_or_throw(
          [&] { return fmt::format("line {}: non-numeric node id '{}'", line, cells[k]); });
      if (ab[k] < 1) throw InputError(fmt::format("line {}: node ids must be positive", line));
    }
    if (ab[0] == ab[1]) throw InputError(fmt::format("line {}: self-loop on slope unit {}", line, ab[0]));
    if (!seen.insert(std::minmax(ab[0], ab[1])).second)
      throw InputError(fmt::format("line {}: duplicate edge ({}, {})", line, ab[0], ab[1]));
    max_id = std::max({max_id, ab[0], ab[1]});
    edges.emplace_back(static_cast<int>(ab[0] - 1), static_cast<int>(ab[1] - 1));
  }
  if (edges.empty()) throw InputError(fmt::format("{}: no edges", path.string()));
  return SlopeUnitGraph(static_cast<int>(max_id), std::move(edges));
}

SpatialDomain load_domain(const std::filesystem::path& pixel_table_path,
                          const std::filesystem::path& adjacency_path, double pixel_area) {
  auto graph = read_adjacency(adjacency_path);
  auto raw = read_pixel_table(pixel_table_path);
  return SpatialDomain(raw, std::move(graph), pixel_area);
}

void write_pixel_table(const std::filesystem::path& path, const RawPixelTable& raw, std::string_view comment) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "pixel_id,su_id,count";
  for (const auto& name : raw.continuous_names) out << ',' << name;
  for (const auto& name : raw.categorical_names) out << ',' << name;
  out << ",aspect,slope_raw\n";
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    out << raw.pixel_id[r] << ',' << raw.su_id[r] << ',' << raw.count[r];
    for (const auto& col : raw.continuous) out << ',' << fmt::format("{:.17g}", col[r]);
    for (const auto& col : raw.categorical) out << ',' << col[r];
    out << ',' << fmt::format("{:.17g}", raw.aspect[r]) << ',' << fmt::format("{:.17g}", raw.slope_raw[r])
        << '\n';
  }
}

void write_adjacency(const std::filesystem::path& path, const SlopeUnitGraph& graph, std::string_view comment) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "su_a,su_b\n";
  for (auto [a, b] : graph.edges()) out << a + 1 << ',' << b + 1 << '\n';
}

}  // namespace lgcp
