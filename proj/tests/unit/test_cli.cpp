#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lgcp/cli.hpp"
#include "lgcp/csv.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "lgcp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = lgcp::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> rows(const fs::path& p) {
  std::ifstream in(p);
  lgcp::CsvReader reader(in);
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> cells;
  while (reader.next(cells)) out.push_back(cells);
  return out;
}

// Simulates a small grid once and returns a config that fits it.
fs::path workspace() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "lgcp_cli_unit";
    fs::remove_all(d);
    fs::create_directories(d);
    std::ofstream(d / "sim.ini") << "[data]\npixel_area = 1\n[model]\nid = M0\naspect_effect = false\n"
                                    "[simulate]\nnx = 8\nny = 8\nsu_x = 4\nsu_y = 3\nn_continuous = 1\n"
                                    "hyperparameters = 2\nfixed_effects = -0.5, 0.5, -0.3\n[run]\nseed = 3\nout = .\n";
    REQUIRE(invoke({"simulate", "--config", (d / "sim.ini").string()}).code == 0);
    std::ofstream(d / "fit.ini") << "[data]\npixels = pixels.csv\nadjacency = su_adjacency.csv\npixel_area = 1\n"
                                    "[model]\nid = M0\naspect_effect = false\n[sampling]\nn_samples = 200\n[cv]\nn_folds = 10\n";
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("fnv1a reference values") {
  CHECK(lgcp::cli::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(lgcp::cli::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(lgcp::cli::fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config parsing") {
  const fs::path d = fs::temp_directory_path() / "lgcp_cli_cfg";
  fs::create_directories(d);
  std::ofstream(d / "a.ini") << "[data]\npixels = p.csv\n[model]\nid = M1b\naspect_effect = true\n"
                                "[priors]\nlse_u = 2\nlse_alpha = 0.05\n[run]\nseed = 42\nthreads = 2\n";
  const auto c = lgcp::cli::load_config(d / "a.ini");
  CHECK(c.model_id == lgcp::ModelId::M1b);
  CHECK(c.model.aspect_effect);
  CHECK(c.model.lse.u == 2.0);
  CHECK(c.model.lse.alpha == 0.05);
  CHECK(c.seed == 42);
  CHECK(c.threads == 2);
  CHECK(c.pixels == d / "p.csv");
  CHECK(c.pixel_area == 225.0);
  CHECK(c.n_samples == 5000);

  std::ofstream(d / "b.ini") << "[model]\nidd = M0\n";
  CHECK_THROWS_WITH(lgcp::cli::load_config(d / "b.ini"), "unknown config key model.idd");
  std::ofstream(d / "c.ini") << "[priors]\nlse_alpha = 1.5\n";
  CHECK_THROWS(lgcp::cli::load_config(d / "c.ini"));
  std::ofstream(d / "e.ini") << "[data]\npixel_area = -1\n";
  CHECK_THROWS(lgcp::cli::load_config(d / "e.ini"));
}

TEST_CASE("fit writes the summary files") {
  const auto d = workspace();
  const auto r = invoke({"fit", "--config", (d / "fit.ini").string(), "--out", (d / "fit").string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"fit_summary.csv", "theta_grid.csv", "intensity.csv", "effects_lse.csv"})
    CHECK(fs::exists(d / "fit" / f));
  CHECK_FALSE(fs::exists(d / "fit" / "samples.csv"));
  CHECK(slurp(d / "fit" / "fit_summary.csv").rfind("# lgcp fit model=M0 seed=1 config_hash=", 0) == 0);

  const auto intensity = rows(d / "fit" / "intensity.csv");
  CHECK(intensity.size() == 65);
  CHECK(intensity[0] == std::vector<std::string>{"pixel_id", "post_mean_log_intensity", "post_sd"});

  const auto grid = rows(d / "fit" / "theta_grid.csv");
  double total = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) total += std::stod(grid[i][2]);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-4));

  const auto summary = rows(d / "fit" / "fit_summary.csv");
  CHECK(summary[0].size() == 7);
  int info = 0;
  for (const auto& row : summary) info += row[0] == "information";
  CHECK(info == 3);
}

TEST_CASE("reruns are byte-identical") {
  const auto d = workspace();
  REQUIRE(invoke({"fit", "--config", (d / "fit.ini").string(), "--out", (d / "r1").string(), "--seed", "9"}).code == 0);
  REQUIRE(invoke({"fit", "--config", (d / "fit.ini").string(), "--out", (d / "r2").string(), "--seed", "9",
                  "--threads", "2"})
              .code == 0);
  for (const char* f : {"fit_summary.csv", "theta_grid.csv", "intensity.csv", "effects_lse.csv"})
    CHECK(slurp(d / "r1" / f) == slurp(d / "r2" / f));
  REQUIRE(invoke({"fit", "--config", (d / "fit.ini").string(), "--out", (d / "r3").string(), "--seed", "10"}).code == 0);
  CHECK(slurp(d / "r1" / "fit_summary.csv") != slurp(d / "r3" / "fit_summary.csv"));
}

TEST_CASE("cv writes one row per fold plus the aggregate") {
  const auto d = workspace();
  const auto r = invoke({"cv", "--config", (d / "fit.ini").string(), "--out", (d / "cv").string()});
  REQUIRE(r.code == 0);
  const auto table = rows(d / "cv" / "scores.csv");
  REQUIRE(table.size() == 12);
  CHECK(table[0] == std::vector<std::string>{"fold", "auc_grid", "auc_su", "rsa_grid", "rsa_su", "rss_grid", "rss_su",
                                             "crps_grid", "crps_su"});
  CHECK(table.back()[0] == "aggregate");
  for (std::size_t col = 1; col < 9; ++col) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t f = 1; f <= 10; ++f) {
      const double v = std::stod(table[f][col]);
      if (!std::isnan(v)) {
        sum += v;
        ++n;
      }
    }
    if (n == 0)
      CHECK(std::isnan(std::stod(table.back()[col])));
    else
      CHECK(std::stod(table.back()[col]) == doctest::Approx(sum / n).epsilon(1e-5));
  }
}

TEST_CASE("score writes in-sample scores and information criteria") {
  const auto d = workspace();
  REQUIRE(invoke({"score", "--config", (d / "fit.ini").string(), "--out", (d / "score").string()}).code == 0);
  const auto scores = rows(d / "score" / "scores.csv");
  REQUIRE(scores.size() == 2);
  CHECK(scores[1][0] == "all");
  const auto info = rows(d / "score" / "information.csv");
  REQUIRE(info.size() == 4);
  CHECK(info[1][0] == "dic");
  CHECK(std::isfinite(std::stod(info[1][1])));
}

TEST_CASE("usage and validation errors") {
  const auto d = workspace();
  const auto cfg = (d / "fit.ini").string();
  auto r = invoke({"fit", "--config", cfg, "--model", "M9"});
  CHECK(r.code == 2);
  CHECK(r.err == "error: unknown model M9\n");

  r = invoke({"cv", "--config", cfg, "--out", (d / "bad").string(), "--model", "M0"});
  CHECK(r.code == 0);
  std::ofstream(d / "many.ini") << "[data]\npixels = pixels.csv\nadjacency = su_adjacency.csv\n[cv]\nn_folds = 13\n";
  r = invoke({"cv", "--config", (d / "many.ini").string(), "--out", (d / "bad").string()});
  CHECK(r.code == 2);
  CHECK(r.err == "error: more folds than slope units\n");

  CHECK(invoke({"fit"}).code == 2);
  CHECK(invoke({"explode", "--config", cfg}).code == 2);
  CHECK(invoke({"fit", "--config", (d / "missing.ini").string()}).code == 2);
  CHECK(invoke({"fit", "--config", cfg, "--threads", "0"}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("simulate writes a loadable dataset with its truth") {
  const auto d = workspace();
  const auto truth = rows(d / "truth.csv");
  REQUIRE(truth.size() > 3);
  CHECK(truth[1] == std::vector<std::string>{"hyperparameter", "tau_lse", "2"});
  CHECK(slurp(d / "pixels.csv").rfind("# lgcp simulate model=M0 seed=3", 0) == 0);
  const auto c = lgcp::cli::load_config(d / "fit.ini");
  const auto domain = lgcp::load_domain(c.pixels, c.adjacency, 1.0);
  CHECK(domain.n_grid() == 64);
  CHECK(domain.n_su() == 12);
}
