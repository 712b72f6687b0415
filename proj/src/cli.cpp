#include "lgcp/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "lgcp/csv.hpp"
#include "lgcp/error.hpp"
#include "lgcp/sampler.hpp"
#include "lgcp/scoring.hpp"

namespace lgcp::cli {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"data", {"pixels", "adjacency", "pixel_area"}},
      {"model",
       {"id", "aspect_effect", "svr_sum_to_zero", "intercept_mean", "intercept_precision", "fixed_mean",
        "fixed_precision", "beta_mean", "beta_precision"}},
      {"priors",
       {"categorical_u", "categorical_alpha", "aspect_u", "aspect_alpha", "slope_rw1_u", "slope_rw1_alpha", "iid_u",
        "iid_alpha", "lse_u", "lse_alpha", "svr_u", "svr_alpha"}},
      {"inference",
       {"grid_step", "drop_threshold", "newton_tolerance", "newton_max_iterations", "max_hyperparameters",
        "max_grid_points"}},
      {"sampling", {"n_samples", "dump"}},
      {"cv", {"n_folds"}},
      {"run", {"seed", "threads", "out"}},
      {"simulate", {"nx", "ny", "su_x", "su_y", "n_continuous", "categorical_levels", "hyperparameters", "fixed_effects"}},
  };
  return keys;
}

class Section {
 public:
  Section(const pt::ptree& root, std::string name) : name_(std::move(name)) {
    if (auto child = root.get_child_optional(name_)) tree_ = *child;
  }

  std::optional<std::string> text(const std::string& key) const {
    if (auto v = tree_.get_optional<std::string>(key)) return std::string(trim(*v));
    return std::nullopt;
  }

  void real(const std::string& key, double& target) const {
    if (auto v = text(key)) target = parse_real(*v).value_or_throw([&] { return bad(key, *v); });
  }

  void positive(const std::string& key, double& target) const {
    real(key, target);
    if (!(target > 0.0)) throw InputError(fmt::format("{}.{} must be positive", name_, key));
  }

  void integer(const std::string& key, int& target, int min) const {
    if (auto v = text(key)) {
      const auto n = parse_integer(*v).value_or_throw([&] { return bad(key, *v); });
      if (n < min || n > 1'000'000'000) throw InputError(fmt::format("{}.{} must be at least {}", name_, key, min));
      target = static_cast<int>(n);
    }
  }

  void flag(const std::string& key, bool& target) const {
    if (auto v = text(key)) {
      if (*v == "true" || *v == "1" || *v == "yes") {
        target = true;
      } else if (*v == "false" || *v == "0" || *v == "no") {
        target = false;
      } else {
        throw InputError(bad(key, *v));
      }
    }
  }

  void prior(const std::string& stem, PCPrior& target) const {
    positive(stem + "_u", target.u);
    real(stem + "_alpha", target.alpha);
    if (!(target.alpha > 0.0 && target.alpha < 1.0))
      throw InputError(fmt::format("{}.{}_alpha must lie in (0, 1)", name_, stem));
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    if (auto v = text(key)) {
      std::stringstream ss(*v);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(parse_real(item).value_or_throw([&] { return bad(key, *v); }));
    }
    return out;
  }

 private:
  std::string bad(const std::string& key, const std::string& value) const {
    return fmt::format("invalid value '{}' for {}.{}", value, name_, key);
  }

  std::string name_;
  pt::ptree tree_;
};

std::string header(const RunConfig& config, std::string_view command) {
  return fmt::format("lgcp {} model={} seed={} config_hash={:016x}", command, to_string(config.model_id), config.seed,
                     config_hash(config));
}

std::ofstream open_output(const fs::path& path, const RunConfig& config, std::string_view command) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
  out << "# " << header(config, command) << '\n';
  return out;
}

std::string num(double v) { return fmt::format("{:.6g}", v); }

std::string file_stem(std::string_view name) {
  std::string s(name);
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  return s;
}

void prepare_out(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw InputError(fmt::format("cannot create output directory {}", config.out_dir.string()));
}

SpatialDomain load(const RunConfig& config) {
  if (config.pixels.empty()) throw InputError("config is missing data.pixels");
  if (config.adjacency.empty()) throw InputError("config is missing data.adjacency");
  return load_domain(config.pixels, config.adjacency, config.pixel_area);
}

InferenceOptions inference_options(const RunConfig& config) {
  InferenceOptions o = config.inference;
  o.threads = config.threads;
  return o;
}

void write_information(std::ostream& out, const InformationCriteria& ic) {
  out << "information,1,dic," << num(ic.dic) << ",,,\n";
  out << "information,2,waic," << num(ic.waic) << ",,,\n";
  out << "information,3,n_eff," << num(ic.p_d) << ",,,\n";
}

void write_scores_header(std::ostream& out) {
  out << "fold,auc_grid,auc_su,rsa_grid,rsa_su,rss_grid,rss_su,crps_grid,crps_su\n";
}

void write_score_row(std::ostream& out, const ScoreRecord& r) {
  out << r.fold << ',' << num(r.auc_grid) << ',' << num(r.auc_su) << ',' << num(r.rsa_grid) << ',' << num(r.rsa_su)
      << ',' << num(r.rss_grid) << ',' << num(r.rss_su) << ',' << num(r.crps_grid) << ',' << num(r.crps_su) << '\n';
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const RunConfig& config) {
  return fnv1a(fmt::format("{}\n--model={}\n--seed={}", config.source_text, to_string(config.model_id), config.seed));
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot read config {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunConfig c;
  c.source_text = buffer.str();
  pt::ptree root;
  try {
    std::istringstream text(c.source_text);
    pt::read_ini(text, root);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(fmt::format("config line {}: {}", e.line(), e.message()));
  }
  for (const auto& [section, child] : root) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw InputError(fmt::format("unknown config section [{}]", section));
    for (const auto& [key, value] : child)
      if (!it->second.count(key)) throw InputError(fmt::format("unknown config key {}.{}", section, key));
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  const Section data(root, "data");
  if (auto v = data.text("pixels")) c.pixels = resolve(*v);
  if (auto v = data.text("adjacency")) c.adjacency = resolve(*v);
  data.positive("pixel_area", c.pixel_area);
  c.grid.pixel_area = c.pixel_area;

  const Section model(root, "model");
  if (auto v = model.text("id")) c.model_id = parse_model_id(*v);
  model.flag("aspect_effect", c.model.aspect_effect);
  model.flag("svr_sum_to_zero", c.model.svr_sum_to_zero);
  model.real("intercept_mean", c.model.intercept_mean);
  model.positive("intercept_precision", c.model.intercept_precision);
  model.real("fixed_mean", c.model.fixed_mean);
  model.positive("fixed_precision", c.model.fixed_precision);
  model.real("beta_mean", c.model.beta_mean);
  model.positive("beta_precision", c.model.beta_precision);

  const Section priors(root, "priors");
  priors.prior("categorical", c.model.categorical);
  priors.prior("aspect", c.model.aspect);
  priors.prior("slope_rw1", c.model.slope_rw1);
  priors.prior("iid", c.model.iid);
  priors.prior("lse", c.model.lse);
  priors.prior("svr", c.model.svr);

  const Section inference(root, "inference");
  inference.positive("grid_step", c.inference.grid_step);
  inference.positive("drop_threshold", c.inference.drop_threshold);
  inference.positive("newton_tolerance", c.inference.newton_tolerance);
  inference.integer("newton_max_iterations", c.inference.newton_max_iterations, 1);
  inference.integer("max_hyperparameters", c.inference.max_hyperparameters, 0);
  inference.integer("max_grid_points", c.inference.max_grid_points, 1);

  const Section sampling(root, "sampling");
  sampling.integer("n_samples", c.n_samples, 1);
  sampling.flag("dump", c.dump_samples);

  Section(root, "cv").integer("n_folds", c.n_folds, 2);

  const Section run(root, "run");
  if (auto v = run.text("seed")) {
    const auto s = parse_integer(*v).value_or_throw([&] { return fmt::format("invalid value '{}' for run.seed", *v); });
    if (s < 0) throw InputError("run.seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  run.integer("threads", c.threads, 1);
  if (auto v = run.text("out")) c.out_dir = resolve(*v);

  const Section sim(root, "simulate");
  sim.integer("nx", c.grid.nx, 1);
  sim.integer("ny", c.grid.ny, 1);
  sim.integer("su_x", c.grid.su_x, 1);
  sim.integer("su_y", c.grid.su_y, 1);
  sim.integer("n_continuous", c.grid.n_continuous, 0);
  for (double v : sim.reals("categorical_levels")) {
    if (v != std::floor(v) || v < 2.0) throw InputError("simulate.categorical_levels must be integers >= 2");
    c.grid.categorical_levels.push_back(static_cast<int>(v));
  }
  c.true_hyperparameters = sim.reals("hyperparameters");
  c.true_fixed_effects = sim.reals("fixed_effects");
  return c;
}

void run_fit(const RunConfig& config) {
  const SpatialDomain domain = load(config);
  const LatentModel model = assemble(config.model_id, domain, config.model);
  const auto obs = Observations::poisson(domain.counts(), domain.pixel_area());
  const PosteriorFit fit = explore_hyperparameters(model, obs, inference_options(config));

  InformationAccumulator info(obs);
  prepare_out(config);
  std::ofstream dump;
  if (config.dump_samples) {
    dump = open_output(config.out_dir / "samples.csv", config, "fit");
    dump << "sample_id,pixel_id,count\n";
  }
  SamplingOptions so;
  so.threads = config.threads;
  so.keep_latent = false;
  for_each_sample(fit, config.n_samples, config.seed, so, [&](const PosteriorDraw& d) {
    if (config.n_samples >= 100) info.add(d.predictor);
    if (config.dump_samples)
      for (int i = 0; i < domain.n_grid(); ++i)
        dump << d.sample_id << ',' << domain.pixels()[static_cast<std::size_t>(i)].pixel_id << ',' << d.counts[i]
             << '\n';
  });

  auto summary = open_output(config.out_dir / "fit_summary.csv", config, "fit");
  summary << "component,index,label,post_mean,post_sd,q025,q975\n";
  for (const auto& c : model.components())
    for (int j = 0; j < c.size; ++j) {
      const int k = c.offset + j;
      summary << c.name << ',' << j + 1 << ',' << c.labels[static_cast<std::size_t>(j)] << ',' << num(fit.latent_mean[k])
              << ',' << num(fit.latent_sd[k]) << ',' << num(fit.latent_quantile(k, 0.025)) << ','
              << num(fit.latent_quantile(k, 0.975)) << '\n';
    }
  for (int h = 0; h < model.n_hyper(); ++h) {
    const auto& m = fit.hyper_marginals[static_cast<std::size_t>(h)];
    summary << model.hyperparameters()[static_cast<std::size_t>(h)].name << ",1,theta," << num(m.mean) << ','
            << num(m.sd) << ',' << num(m.q025) << ',' << num(m.q975) << '\n';
  }
  if (config.n_samples >= 100) write_information(summary, info.finish(fit.predictor_mean));

  auto grid = open_output(config.out_dir / "theta_grid.csv", config, "fit");
  for (int h = 0; h < model.n_hyper(); ++h) grid << "theta_" << h + 1 << ',';
  grid << "log_density,weight\n";
  for (std::size_t k = 0; k < fit.theta_points.size(); ++k) {
    for (int h = 0; h < model.n_hyper(); ++h) grid << num(fit.theta_points[k].theta[h]) << ',';
    grid << num(fit.log_density[static_cast<Eigen::Index>(k)]) << ',' << num(fit.weights[static_cast<Eigen::Index>(k)])
         << '\n';
  }

  auto intensity = open_output(config.out_dir / "intensity.csv", config, "fit");
  intensity << "pixel_id,post_mean_log_intensity,post_sd\n";
  for (int i = 0; i < domain.n_grid(); ++i)
    intensity << domain.pixels()[static_cast<std::size_t>(i)].pixel_id << ',' << num(fit.predictor_mean[i]) << ','
              << num(fit.predictor_sd[i]) << '\n';

  for (const auto& c : model.components()) {
    if (!c.structure) continue;
    auto effects = open_output(config.out_dir / ("effects_" + file_stem(c.name) + ".csv"), config, "fit");
    effects << "index,label,post_mean,post_sd,q025,q975\n";
    for (int j = 0; j < c.size; ++j) {
      const int k = c.offset + j;
      effects << j + 1 << ',' << c.labels[static_cast<std::size_t>(j)] << ',' << num(fit.latent_mean[k]) << ','
              << num(fit.latent_sd[k]) << ',' << num(fit.latent_quantile(k, 0.025)) << ','
              << num(fit.latent_quantile(k, 0.975)) << '\n';
    }
  }
}

void run_cv(const RunConfig& config) {
  const SpatialDomain domain = load(config);
  if (config.n_folds > domain.n_su()) throw InputError("more folds than slope units");
  CrossValidationOptions o;
  o.n_folds = config.n_folds;
  o.n_samples = config.n_samples;
  o.seed = config.seed;
  o.threads = config.threads;
  o.inference = config.inference;
  const ScoreReport report = cross_validate(config.model_id, domain, config.model, o);
  prepare_out(config);
  auto out = open_output(config.out_dir / "scores.csv", config, "cv");
  write_scores_header(out);
  for (const auto& r : report.per_fold) write_score_row(out, r);
  write_score_row(out, report.aggregate);
}

void run_score(const RunConfig& config) {
  const SpatialDomain domain = load(config);
  const LatentModel model = assemble(config.model_id, domain, config.model);
  const auto obs = Observations::poisson(domain.counts(), domain.pixel_area());
  const PosteriorFit fit = explore_hyperparameters(model, obs, inference_options(config));
  std::vector<int> all(static_cast<std::size_t>(domain.n_grid()));
  std::iota(all.begin(), all.end(), 0);
  ScoreRecord r = score_units(fit, domain, all, config.n_samples, config.seed);
  r.fold = "all";
  const auto ic = information_criteria(fit, obs, config.n_samples, config.seed, config.threads);
  prepare_out(config);
  auto out = open_output(config.out_dir / "scores.csv", config, "score");
  write_scores_header(out);
  write_score_row(out, r);
  auto info = open_output(config.out_dir / "information.csv", config, "score");
  info << "criterion,value\n";
  info << "dic," << num(ic.dic) << "\nwaic," << num(ic.waic) << "\nn_eff," << num(ic.p_d) << '\n';
}

void run_simulate(const RunConfig& config) {
  TruthConfig truth;
  truth.model_id = config.model_id;
  truth.model_config = config.model;
  truth.grid = config.grid;
  truth.seed = config.seed;
  truth.hyperparameters = Eigen::Map<const Eigen::VectorXd>(config.true_hyperparameters.data(),
                                                            static_cast<Eigen::Index>(config.true_hyperparameters.size()));
  truth.fixed_effects = Eigen::Map<const Eigen::VectorXd>(config.true_fixed_effects.data(),
                                                          static_cast<Eigen::Index>(config.true_fixed_effects.size()));
  const SimulatedData sim = simulate_counts(truth);
  const LatentModel model = assemble(config.model_id, sim.domain, config.model);
  prepare_out(config);
  const std::string comment = header(config, "simulate");
  write_pixel_table(config.out_dir / "pixels.csv", sim.raw, comment);
  write_adjacency(config.out_dir / "su_adjacency.csv", sim.graph, comment);
  auto out = open_output(config.out_dir / "truth.csv", config, "simulate");
  out << "kind,name,value\n";
  for (int h = 0; h < model.n_hyper(); ++h)
    out << "hyperparameter," << model.hyperparameters()[static_cast<std::size_t>(h)].name << ','
        << num(truth.hyperparameters[h]) << '\n';
  for (std::size_t j = 0; j < sim.latent_labels.size(); ++j)
    out << "latent," << sim.latent_labels[j] << ',' << num(sim.latent[static_cast<Eigen::Index>(j)]) << '\n';
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Log-Gaussian Cox process landslide models", "lgcp"};
  std::string command, config_path, out_dir, model;
  std::optional<std::int64_t> seed;
  std::optional<int> threads;
  app.add_option("command", command, "fit, cv, simulate or score")->required();
  app.add_option("--config", config_path, "INI configuration file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--model", model, "M0, M1a, M1b, M2, M3, M4 or M5");
  app.add_option("--threads", threads, "worker threads");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  try {
    if (command != "fit" && command != "cv" && command != "simulate" && command != "score")
      throw InputError(fmt::format("unknown command {}", command));
    RunConfig config = load_config(config_path);
    if (!model.empty()) config.model_id = parse_model_id(model);
    if (seed) {
      if (*seed < 0) throw InputError("--seed must be non-negative");
      config.seed = static_cast<std::uint64_t>(*seed);
    }
    if (threads) {
      if (*threads < 1) throw InputError("--threads must be at least 1");
      config.threads = *threads;
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (command == "fit") run_fit(config);
    if (command == "cv") run_cv(config);
    if (command == "simulate") run_simulate(config);
    if (command == "score") run_score(config);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace lgcp::cli
