#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lgcp {

inline constexpr int kAspectBins = 16;
inline constexpr int kSlopeClasses = 10;

/// One pixel after validation: standardized continuous covariates, dense
/// category codes, binned aspect and slope.
struct PixelRecord {
  std::int64_t pixel_id = 0;
  int su_index = 0;  ///< 0-based slope-unit index (file id minus one)
  int count = 0;
  std::vector<double> continuous;
  std::vector<int> categorical;
  int aspect_bin = 0;
  int slope_class = 0;
  double slope_value = 0.0;  ///< standardized slope steepness
};

/// Undirected slope-unit adjacency graph on nodes 0..n_su-1.
class SlopeUnitGraph {
 public:
  SlopeUnitGraph() = default;

  /// Validates and builds the graph. Throws InputError on self-loops,
  /// duplicate edges, isolated nodes or a disconnected graph.
  SlopeUnitGraph(int n_su, std::vector<std::pair<int, int>> edges);

  int n_su() const { return n_su_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& degrees() const { return degrees_; }
  const std::vector<int>& neighbors(int node) const { return neighbors_[node]; }

  static bool is_connected(int n_su, const std::vector<std::pair<int, int>>& edges);

 private:
  int n_su_ = 0;
  std::vector<std::pair<int, int>> edges_;  ///< (a, b) with a < b, sorted
  std::vector<int> degrees_;
  std::vector<std::vector<int>> neighbors_;
};

/// Pixel table as read from disk, before standardization and binning.
struct RawPixelTable {
  std::vector<std::string> continuous_names;
  std::vector<std::string> categorical_names;
  std::vector<std::int64_t> pixel_id;
  std::vector<std::int64_t> su_id;  ///< 1-based, as in the files
  std::vector<std::int64_t> count;
  std::vector<std::vector<double>> continuous;  ///< column-major: [column][row]
  std::vector<std::vector<std::int64_t>> categorical;
  std::vector<double> aspect;  ///< radians
  std::vector<double> slope_raw;
  std::vector<int> line;  ///< 1-based source line per row, 0 when synthetic

  std::size_t rows() const { return pixel_id.size(); }
};

/// Validated, immutable study domain.
class SpatialDomain {
 public:
  /// Validates the raw table against the graph, standardizes continuous
  /// covariates and slope, and bins aspect and slope.
  SpatialDomain(const RawPixelTable& raw, SlopeUnitGraph graph, double pixel_area);

  const std::vector<PixelRecord>& pixels() const { return pixels_; }
  int n_grid() const { return static_cast<int>(pixels_.size()); }
  int n_su() const { return graph_.n_su(); }
  const SlopeUnitGraph& su_graph() const { return graph_; }
  double pixel_area() const { return pixel_area_; }

  const std::vector<std::string>& continuous_names() const { return continuous_names_; }
  const std::vector<std::string>& categorical_names() const { return categorical_names_; }
  /// Number of levels of each categorical covariate.
  const std::vector<int>& categorical_levels() const { return categorical_levels_; }

  /// Observed range of the standardized slope column used for the classes.
  double slope_min() const { return slope_min_; }
  double slope_max() const { return slope_max_; }

  /// Pixel indices belonging to each slope unit.
  const std::vector<std::vector<int>>& su_members() const { return su_members_; }

  std::vector<int> counts() const;

 private:
  std::vector<PixelRecord> pixels_;
  SlopeUnitGraph graph_;
  double pixel_area_ = 1.0;
  std::vector<std::string> continuous_names_;
  std::vector<std::string> categorical_names_;
  std::vector<int> categorical_levels_;
  double slope_min_ = 0.0;
  double slope_max_ = 0.0;
  std::vector<std::vector<int>> su_members_;
};

/// Centers and scales to empirical mean 0 and variance 1 (denominator n-1).
std::vector<double> standardize_column(const std::vector<double>& values);

/// Aspect angle (radians, reduced modulo 2*pi) to one of 16 bins of 22.5 degrees.
int bin_aspect(double angle);

/// Equidistant classes over [min, max]; value == max falls in the last class.
int bin_slope(double value, double min, double max);

RawPixelTable read_pixel_table(const std::filesystem::path& path);
SlopeUnitGraph read_adjacency(const std::filesystem::path& path);

SpatialDomain load_domain(const std::filesystem::path& pixel_table_path,
                          const std::filesystem::path& adjacency_path, double pixel_area);

/// Writes pixels.csv / su_adjacency.csv in the formats read above, with an
/// optional leading `# comment` line.
void write_pixel_table(const std::filesystem::path& path, const RawPixelTable& raw, std::string_view comment = {});
void write_adjacency(const std::filesystem::path& path, const SlopeUnitGraph& graph, std::string_view comment = {});

}  // namespace lgcp
