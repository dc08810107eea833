// Command-line front end: pointwise derivative inference from CSV ensembles,
// single optimization/sampling runs, and Monte Carlo batches.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "egi/core.hpp"
#include "egi/errors.hpp"
#include "egi/harness.hpp"

namespace {

// Plain numeric CSV, one row per line, no header.
std::vector<std::vector<double>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw egi::IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = egi::detail::trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell = egi::detail::trim(cell);
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != cell.size())
        throw egi::ParseError(path + " line " + std::to_string(line_no) +
                              ": bad number '" + cell + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw egi::ParseError(path + " line " + std::to_string(line_no) +
                            ": ragged row");
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_gradinf(const std::string& points_path, const std::string& values_path,
                long reference_index, double xi, double gamma, bool bayes,
                double prior_scale) {
  const auto point_rows = read_csv(points_path);
  const auto value_rows = read_csv(values_path);
  if (point_rows.empty()) throw egi::ValidationError("no points in " + points_path);
  if (value_rows.size() != point_rows.size())
    throw egi::ValidationError("points and values row counts differ");

  egi::EvaluatedEnsemble ens;
  ens.values.resize(static_cast<Eigen::Index>(value_rows.size()));
  for (std::size_t j = 0; j < point_rows.size(); ++j) {
    if (value_rows[j].size() != 1)
      throw egi::ValidationError("values file must have one column");
    ens.points.push_back(Eigen::Map<const Eigen::VectorXd>(
        point_rows[j].data(), static_cast<Eigen::Index>(point_rows[j].size())));
    ens.values[static_cast<Eigen::Index>(j)] = value_rows[j][0];
  }

  egi::EgiConfig cfg;
  cfg.xi = xi;
  cfg.gamma = gamma;
  const egi::DesignSystem sys = egi::build_design_system(ens, reference_index, cfg);

  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  if (bayes) {
    const Eigen::Index m2 = sys.A.cols();
    const Eigen::MatrixXd prior =
        prior_scale * prior_scale * Eigen::MatrixXd::Identity(m2, m2);
    const egi::DerivativePosterior post = egi::infer_bayes(sys, prior);
    const egi::DerivativeEstimate est = post.map_estimate();
    grad = est.gradient();
    hess = est.hessian_matrix();
  } else {
    const egi::DerivativeEstimate est = egi::infer_lsq(sys);
    grad = est.gradient();
    hess = est.hessian_matrix();
  }

  std::string out = "gradient";
  for (Eigen::Index i = 0; i < grad.size(); ++i)
    out += "," + egi::detail::format_double(grad[i]);
  out += "\n";
  for (Eigen::Index r = 0; r < hess.rows(); ++r) {
    out += "hessian_row_" + std::to_string(r);
    for (Eigen::Index c = 0; c < hess.cols(); ++c)
      out += "," + egi::detail::format_double(hess(r, c));
    out += "\n";
  }
  std::cout << out;
  return 0;
}

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<long> trace_every;
};

egi::ExperimentConfig load_config(const std::string& path, const RunOverrides& ov) {
  egi::ExperimentConfig cfg = egi::parse_config_file(path);
  if (ov.seed) cfg.base_seed = *ov.seed;
  if (ov.out) cfg.output_dir = *ov.out;
  if (ov.trace_every) cfg.trace_every = *ov.trace_every;
  if (cfg.output_dir.empty()) cfg.output_dir = "out/" + cfg.experiment_name;
  return cfg;
}

int run_single(const std::string& path, const RunOverrides& ov, bool want_sampler) {
  const egi::ExperimentConfig cfg = load_config(path, ov);
  const bool is_sampler = cfg.kind == egi::AlgorithmKind::sampler;
  if (is_sampler != want_sampler)
    throw egi::ValidationError(want_sampler
                                   ? "config does not describe a sampling algorithm"
                                   : "config does not describe an optimization algorithm");
  const auto init = egi::sample_init_ensemble(cfg.init_box_lo, cfg.init_box_hi,
                                              cfg.ensemble_size, cfg.base_seed);
  const egi::RunRecord rec = egi::run_experiment_single(cfg, 0, init);
  const std::filesystem::path dir = std::filesystem::path(cfg.output_dir) / "run_000";
  egi::write_record(rec, dir);
  if (!rec.abort_reason.empty()) {
    std::cerr << "run aborted at iteration " << rec.abort_iteration << ": "
              << rec.abort_reason << "\n";
    return 2;
  }
  std::cout << "wrote " << dir.string() << "\n";
  return 0;
}

int run_mc(const std::string& path, const RunOverrides& ov) {
  const egi::ExperimentConfig cfg = load_config(path, ov);
  const std::vector<egi::RunRecord> records = egi::run_monte_carlo(cfg);
  egi::write_monte_carlo(records, cfg.output_dir);
  long failures = 0;
  for (const auto& rec : records)
    if (!rec.abort_reason.empty()) ++failures;
  std::cout << "wrote " << records.size() << " runs to " << cfg.output_dir;
  if (failures) std::cout << " (" << failures << " aborted)";
  std::cout << "\n";
  return failures ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ensemble-based derivative inference, optimization and sampling"};
  app.require_subcommand(1);

  std::string points_path, values_path;
  long reference_index = 0;
  double xi = 0.0, gamma = 1.0, prior_scale = 1.0;
  bool bayes = false;
  CLI::App* gradinf = app.add_subcommand(
      "gradinf", "infer gradient and Hessian from an evaluated ensemble");
  gradinf->add_option("--points", points_path, "CSV of ensemble points, one row per member")
      ->required();
  gradinf->add_option("--values", values_path, "CSV of potential values, one per row")
      ->required();
  gradinf->add_option("--reference-index", reference_index, "0-based reference member");
  gradinf->add_option("--xi", xi, "additive noise floor");
  gradinf->add_option("--gamma", gamma, "cubic noise scale");
  gradinf->add_flag("--bayes", bayes, "Gaussian posterior MAP instead of least squares");
  gradinf->add_option("--prior-scale", prior_scale, "prior std for --bayes");

  RunOverrides ov;
  std::string config_path_opt, config_path_smp, config_path_mc;
  auto add_run_opts = [&ov](CLI::App* sub, std::string& config_path) {
    sub->add_option("config", config_path, "experiment config file")->required();
    sub->add_option("--seed", ov.seed, "override base_seed");
    sub->add_option("--out", ov.out, "override output_dir");
    sub->add_option("--trace-every", ov.trace_every, "override trace_every");
  };
  CLI::App* optimize = app.add_subcommand("optimize", "single optimization run");
  add_run_opts(optimize, config_path_opt);
  CLI::App* sample = app.add_subcommand("sample", "single sampling run");
  add_run_opts(sample, config_path_smp);
  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo batch of runs");
  add_run_opts(mc, config_path_mc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 0;
  }

  try {
    if (gradinf->parsed())
      return run_gradinf(points_path, values_path, reference_index, xi, gamma,
                         bayes, prior_scale);
    if (optimize->parsed()) return run_single(config_path_opt, ov, false);
    if (sample->parsed()) return run_single(config_path_smp, ov, true);
    if (mc->parsed()) return run_mc(config_path_mc, ov);
  } catch (const egi::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const egi::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
