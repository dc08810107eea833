#pragma once

// Experiment front end: flat key=value configs, seeded initialization,
// Monte Carlo batching, histogram metrics against a quadrature reference, and
// deterministic file output.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "egi/cbo.hpp"
#include "egi/errors.hpp"
#include "egi/potentials.hpp"
#include "egi/record.hpp"
#include "egi/samplers.hpp"

namespace egi {

enum class AlgorithmKind { cbo, egi_cbo, sampler };

struct ExperimentConfig {
  std::string experiment_name;
  std::string potential_name;
  Eigen::Index dimension = 0;
  long ensemble_size = 0;
  Eigen::VectorXd init_box_lo;
  Eigen::VectorXd init_box_hi;
  bool allow_degenerate_box = false;

  AlgorithmKind kind = AlgorithmKind::cbo;
  CboConfig cbo;          // kind == cbo / egi_cbo
  SamplerConfig sampler;  // kind == sampler
  long burn_in = -1;      // samplers; -1 means 25% of n_iters

  long n_mc_runs = 1;
  std::uint64_t base_seed = 0;
  long trace_every = 1;
  std::string output_dir;

  std::vector<std::pair<std::string, std::string>> raw_entries;

  long effective_burn_in() const {
    return burn_in >= 0 ? burn_in : sampler.n_iters / 4;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_array(const std::string& value, int line_no) {
  std::string v = trim(value);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ParseError("line " + std::to_string(line_no) + ": expected bracketed array");
  v = v.substr(1, v.size() - 2);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty array element");
    std::size_t pos = 0;
    double d = std::stod(item, &pos);
    if (pos != item.size())
      throw ParseError("line " + std::to_string(line_no) + ": bad number '" + item + "'");
    out.push_back(d);
  }
  if (out.empty())
    throw ParseError("line " + std::to_string(line_no) + ": empty array");
  return out;
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double d;
  try {
    d = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ValidationError("key '" + key + "': bad number '" + value + "'");
  }
  if (pos != value.size())
    throw ValidationError("key '" + key + "': bad number '" + value + "'");
  return d;
}

inline long parse_long(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long v;
  try {
    v = std::stol(value, &pos);
  } catch (const std::exception&) {
    throw ValidationError("key '" + key + "': bad integer '" + value + "'");
  }
  if (pos != value.size())
    throw ValidationError("key '" + key + "': bad integer '" + value + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ValidationError("key '" + key + "': expected true/false, got '" + value + "'");
}

inline Eigen::VectorXd broadcast_box(const std::vector<double>& v, Eigen::Index dim,
                                     const std::string& key) {
  if (static_cast<Eigen::Index>(v.size()) == dim)
    return Eigen::Map<const Eigen::VectorXd>(v.data(), dim);
  if (v.size() == 1) return Eigen::VectorXd::Constant(dim, v[0]);
  throw ValidationError("key '" + key + "': array length must be 1 or match dimension");
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<int> entry_lines;
  {
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ParseError("line " + std::to_string(line_no) + ": expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty())
        throw ParseError("line " + std::to_string(line_no) + ": empty key");
      for (const auto& [k, v] : entries)
        if (k == key)
          throw ParseError("line " + std::to_string(line_no) + ": duplicate key '" +
                           key + "'");
      entries.emplace_back(key, value);
      entry_lines.push_back(line_no);
    }
  }

  ExperimentConfig cfg;
  cfg.raw_entries = entries;
  std::optional<std::vector<double>> box_lo, box_hi;
  std::string algorithm;
  std::optional<double> alpha, lambda, sigma, kappa, xi, gamma, tau, step;
  std::optional<long> n_iters;
  std::optional<std::string> noise_mode;
  std::optional<bool> extrapolate, aldi_correction;
  std::optional<std::uint64_t> base_seed;

  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [key, value] = entries[i];
    const int line_no = entry_lines[i];
    if (key == "experiment_name") cfg.experiment_name = value;
    else if (key == "potential") cfg.potential_name = value;
    else if (key == "dimension") cfg.dimension = detail::parse_long(key, value);
    else if (key == "ensemble_size") cfg.ensemble_size = detail::parse_long(key, value);
    else if (key == "init_box_lo") box_lo = detail::parse_array(value, line_no);
    else if (key == "init_box_hi") box_hi = detail::parse_array(value, line_no);
    else if (key == "allow_degenerate_box") cfg.allow_degenerate_box = detail::parse_bool(key, value);
    else if (key == "algorithm") algorithm = value;
    else if (key == "alpha") alpha = detail::parse_double(key, value);
    else if (key == "lambda") lambda = detail::parse_double(key, value);
    else if (key == "sigma") sigma = detail::parse_double(key, value);
    else if (key == "kappa") kappa = detail::parse_double(key, value);
    else if (key == "xi") xi = detail::parse_double(key, value);
    else if (key == "gamma") gamma = detail::parse_double(key, value);
    else if (key == "tau") tau = detail::parse_double(key, value);
    else if (key == "step") step = detail::parse_double(key, value);
    else if (key == "n_iters") n_iters = detail::parse_long(key, value);
    else if (key == "noise_mode") noise_mode = value;
    else if (key == "extrapolate") extrapolate = detail::parse_bool(key, value);
    else if (key == "aldi_correction") aldi_correction = detail::parse_bool(key, value);
    else if (key == "burn_in") cfg.burn_in = detail::parse_long(key, value);
    else if (key == "n_mc_runs") cfg.n_mc_runs = detail::parse_long(key, value);
    else if (key == "base_seed") base_seed = static_cast<std::uint64_t>(detail::parse_long(key, value));
    else if (key == "trace_every") cfg.trace_every = detail::parse_long(key, value);
    else if (key == "output_dir") cfg.output_dir = value;
    else throw ValidationError("unknown key '" + key + "'");
  }

  if (cfg.experiment_name.empty()) throw ValidationError("experiment_name required");
  if (cfg.potential_name.empty()) throw ValidationError("potential required");
  if (cfg.dimension < 1) throw ValidationError("dimension required and must be >= 1");
  if (cfg.ensemble_size < 1) throw ValidationError("ensemble_size must be >= 1");
  if (!box_lo || !box_hi) throw ValidationError("init_box_lo and init_box_hi required");
  cfg.init_box_lo = detail::broadcast_box(*box_lo, cfg.dimension, "init_box_lo");
  cfg.init_box_hi = detail::broadcast_box(*box_hi, cfg.dimension, "init_box_hi");
  for (Eigen::Index i = 0; i < cfg.dimension; ++i) {
    if (!std::isfinite(cfg.init_box_lo[i]) || !std::isfinite(cfg.init_box_hi[i]))
      throw ValidationError("init box bounds must be finite");
    if (cfg.init_box_lo[i] > cfg.init_box_hi[i] ||
        (cfg.init_box_lo[i] == cfg.init_box_hi[i] && !cfg.allow_degenerate_box))
      throw ValidationError("init box requires lower < upper per coordinate");
  }
  if (!n_iters || *n_iters < 1) throw ValidationError("n_iters must be >= 1");
  if (cfg.n_mc_runs < 1) throw ValidationError("n_mc_runs must be >= 1");
  if (cfg.trace_every < 1) throw ValidationError("trace_every must be >= 1");
  if (base_seed) cfg.base_seed = *base_seed;

  // validate potential name / dimension early
  make_potential(cfg.potential_name, cfg.dimension);

  auto sampler_method = [&]() -> std::optional<SamplerMethod> {
    if (algorithm == "egi_ls") return SamplerMethod::egi_ls;
    if (algorithm == "egi_mala") return SamplerMethod::egi_mala;
    if (algorithm == "aldi_gradfree") return SamplerMethod::aldi_gradfree;
    if (algorithm == "egi_aldi") return SamplerMethod::egi_aldi;
    if (algorithm == "egi_aldi_extra") return SamplerMethod::egi_aldi_extra;
    return std::nullopt;
  }();

  if (algorithm == "cbo" || algorithm == "egi_cbo") {
    cfg.kind = algorithm == "cbo" ? AlgorithmKind::cbo : AlgorithmKind::egi_cbo;
    CboConfig& c = cfg.cbo;
    if (alpha) c.alpha = *alpha;
    if (lambda) c.lambda_drift = *lambda;
    if (sigma) c.sigma = *sigma;
    if (kappa) c.kappa = *kappa;
    if (xi) c.xi = *xi;
    if (gamma) c.gamma = *gamma;
    if (tau) c.tau = *tau;
    c.n_iters = *n_iters;
    if (noise_mode) {
      if (*noise_mode == "norm_proportional") c.noise_mode = NoiseMode::norm_proportional;
      else if (*noise_mode == "component_wise") c.noise_mode = NoiseMode::component_wise;
      else throw ValidationError("key 'noise_mode': unknown mode '" + *noise_mode + "'");
    }
    if (extrapolate) c.extrapolate = *extrapolate;
    if (c.alpha < 0 || c.lambda_drift < 0 || c.sigma < 0 || c.kappa < 0 || c.xi < 0 ||
        c.gamma <= 0 || c.tau <= 0)
      throw ValidationError("cbo parameters violate sign constraints");
    if (cfg.kind == AlgorithmKind::cbo && c.kappa != 0)
      throw ValidationError("algorithm cbo requires kappa = 0");
  } else if (sampler_method) {
    cfg.kind = AlgorithmKind::sampler;
    SamplerConfig& s = cfg.sampler;
    s.method = *sampler_method;
    if (step) s.step = *step;
    else if (tau) s.step = *tau;
    s.n_iters = *n_iters;
    if (xi) s.xi = *xi;
    if (gamma) s.gamma = *gamma;
    if (aldi_correction) s.aldi_correction = *aldi_correction;
    if (s.step <= 0 || s.xi < 0 || s.gamma <= 0)
      throw ValidationError("sampler parameters violate sign constraints");
    if (cfg.ensemble_size < 2)
      throw ValidationError("sampling requires ensemble_size >= 2");
    if (cfg.burn_in > s.n_iters)
      throw ValidationError("burn_in cannot exceed n_iters");
  } else if (algorithm.empty()) {
    throw ValidationError("algorithm required");
  } else {
    throw ValidationError("key 'algorithm': unknown algorithm '" + algorithm + "'");
  }
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::vector<Eigen::VectorXd> sample_init_ensemble(const Eigen::VectorXd& lo,
                                                         const Eigen::VectorXd& hi,
                                                         long J, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(J));
  for (long j = 0; j < J; ++j) {
    Eigen::VectorXd p(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      std::uniform_real_distribution<double> dist(lo[i], hi[i]);
      p[i] = dist(rng);
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline InverseProblemSpec make_inverse_problem(const std::string& name) {
  InverseProblemSpec spec;
  if (name == "banana_posterior") {
    spec.forward = [](const Eigen::VectorXd& x) {
      Eigen::VectorXd g(1);
      g[0] = (x[1] - 2.0) * (x[1] - 2.0) - (x[0] - 3.5) - 1.0;
      return g;
    };
    spec.data = Eigen::VectorXd::Zero(1);
    spec.noise_cov = Eigen::MatrixXd::Constant(1, 1, 0.25);
    spec.prior_mean = Eigen::VectorXd::Zero(2);
    spec.prior_cov = 4.0 * Eigen::MatrixXd::Identity(2, 2);
  } else if (name == "linear_gaussian_1d") {
    spec.forward = [](const Eigen::VectorXd& x) { return x; };
    spec.data = Eigen::VectorXd::Ones(1);
    spec.noise_cov = Eigen::MatrixXd::Identity(1, 1);
    spec.prior_mean = Eigen::VectorXd::Zero(1);
    spec.prior_cov = Eigen::MatrixXd::Identity(1, 1);
  } else {
    throw UnknownPotential("no inverse problem named '" + name + "'");
  }
  return spec;
}

// One run of the configured algorithm. Run k of a Monte Carlo batch shares
// the initial ensemble (drawn from base_seed) and uses dynamics seed
// base_seed + k + 1.
inline RunRecord run_experiment_single(const ExperimentConfig& cfg, long run_index,
                                       const std::vector<Eigen::VectorXd>& init) {
  const Potential potential = make_potential(cfg.potential_name, cfg.dimension);
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(run_index) + 1;

  RunRecord rec;
  if (cfg.kind == AlgorithmKind::cbo || cfg.kind == AlgorithmKind::egi_cbo) {
    CboConfig c = cfg.cbo;
    c.seed = seed;
    rec = run_optimizer(potential, init, c, cfg.trace_every,
                        cfg.kind == AlgorithmKind::egi_cbo);
  } else {
    SamplerConfig s = cfg.sampler;
    s.seed = seed;
    std::optional<InverseProblemSpec> problem;
    if (s.method == SamplerMethod::aldi_gradfree)
      problem = make_inverse_problem(cfg.potential_name);
    rec = run_sampler(&potential, problem ? &*problem : nullptr, init, s,
                      cfg.effective_burn_in(), cfg.trace_every);
  }
  rec.config_snapshot = cfg.raw_entries;
  rec.config_snapshot.emplace_back("run_index", std::to_string(run_index));
  rec.config_snapshot.emplace_back("dynamics_seed", std::to_string(seed));
  return rec;
}

// Monte Carlo batch over a worker pool; results are ordered by run index no
// matter the execution order. Individual failures are recorded in-place.
inline std::vector<RunRecord> run_monte_carlo(const ExperimentConfig& cfg,
                                              unsigned n_threads = 0) {
  const std::vector<Eigen::VectorXd> init =
      sample_init_ensemble(cfg.init_box_lo, cfg.init_box_hi, cfg.ensemble_size,
                           cfg.base_seed);
  std::vector<RunRecord> records(static_cast<std::size_t>(cfg.n_mc_runs));
  if (n_threads == 0)
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(cfg.n_mc_runs));

  std::atomic<long> next{0};
  auto worker = [&]() {
    for (;;) {
      const long k = next.fetch_add(1);
      if (k >= cfg.n_mc_runs) return;
      try {
        records[static_cast<std::size_t>(k)] = run_experiment_single(cfg, k, init);
      } catch (const std::exception& e) {
        RunRecord failed;
        failed.config_snapshot = cfg.raw_entries;
        failed.config_snapshot.emplace_back("run_index", std::to_string(k));
        failed.abort_reason = e.what();
        records[static_cast<std::size_t>(k)] = std::move(failed);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return records;
}

// ---------------------------------------------------------------------------
// Histograms and metrics
// ---------------------------------------------------------------------------

struct Histogram2d {
  using CountMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;
  double bin_width = 1.0;
  long i0 = 0, j0 = 0;  // bin index offset of counts(0, 0)
  CountMatrix counts;
};

struct MarginalHistogram {
  int axis = 0;
  Eigen::VectorXd edges;      // n_bins + 1, equal width
  Eigen::VectorXd counts;     // mass per bin (integer-valued for samples)
  Eigen::VectorXd densities;  // integrate to 1 over the binned range
};

inline Histogram2d final_mean_histogram_2d(const std::vector<RunRecord>& records,
                                           double bin_width) {
  std::vector<std::pair<long, long>> bins;
  for (const auto& rec : records) {
    if (rec.rows.empty()) continue;
    const Eigen::VectorXd& m = rec.rows.back().mean;
    if (m.size() != 2) throw DimensionMismatch("final_mean_histogram_2d needs 2d records");
    bins.emplace_back(static_cast<long>(std::floor(m[0] / bin_width)),
                      static_cast<long>(std::floor(m[1] / bin_width)));
  }
  Histogram2d h;
  h.bin_width = bin_width;
  if (bins.empty()) {
    h.counts.resize(0, 0);
    return h;
  }
  long i_lo = bins[0].first, i_hi = bins[0].first;
  long j_lo = bins[0].second, j_hi = bins[0].second;
  for (const auto& [i, j] : bins) {
    i_lo = std::min(i_lo, i); i_hi = std::max(i_hi, i);
    j_lo = std::min(j_lo, j); j_hi = std::max(j_hi, j);
  }
  h.i0 = i_lo;
  h.j0 = j_lo;
  h.counts = Histogram2d::CountMatrix::Zero(i_hi - i_lo + 1, j_hi - j_lo + 1);
  for (const auto& [i, j] : bins) ++h.counts(i - i_lo, j - j_lo);
  return h;
}

inline MarginalHistogram histogram_from_samples(const std::vector<Eigen::VectorXd>& samples,
                                                int axis, double lo, double hi,
                                                int n_bins) {
  MarginalHistogram h;
  h.axis = axis;
  h.edges = Eigen::VectorXd::LinSpaced(n_bins + 1, lo, hi);
  h.counts = Eigen::VectorXd::Zero(n_bins);
  const double width = (hi - lo) / n_bins;
  for (const auto& s : samples) {
    const double v = s[axis];
    if (v < lo || v >= hi) continue;
    const int b = std::min<int>(n_bins - 1, static_cast<int>((v - lo) / width));
    h.counts[b] += 1.0;
  }
  const double total = h.counts.sum();
  h.densities = total > 0 ? (h.counts / (total * width)).eval()
                          : Eigen::VectorXd::Zero(n_bins);
  return h;
}

// Tensor-grid quadrature of exp(-V) for a 2d potential, integrated over the
// other axis and binned. The quadrature grid may be wider than the binned
// range.
inline MarginalHistogram reference_marginal(const Potential& potential, int axis,
                                            double grid_lo, double grid_hi,
                                            int n_nodes, int n_bins,
                                            std::optional<double> bin_lo = std::nullopt,
                                            std::optional<double> bin_hi = std::nullopt) {
  if (potential.dim != 2) throw DimensionMismatch("reference_marginal needs a 2d potential");
  if (n_nodes < 100) throw ValidationError("reference_marginal needs n_nodes >= 100");
  const double blo = bin_lo.value_or(grid_lo);
  const double bhi = bin_hi.value_or(grid_hi);

  const Eigen::VectorXd nodes = Eigen::VectorXd::LinSpaced(n_nodes, grid_lo, grid_hi);
  Eigen::MatrixXd logw(n_nodes, n_nodes);
  Eigen::VectorXd x(2);
  for (int i = 0; i < n_nodes; ++i)
    for (int j = 0; j < n_nodes; ++j) {
      x[0] = nodes[i];
      x[1] = nodes[j];
      const double v = potential(x);
      if (!std::isfinite(v) && v < 0)
        throw QuadratureOverflow("potential is -inf on the grid");
      logw(i, j) = -v;
    }
  const double shift = logw.maxCoeff();
  const Eigen::MatrixXd w = (logw.array() - shift).exp();

  // marginal mass per node of the requested axis
  Eigen::VectorXd marg = axis == 0 ? Eigen::VectorXd(w.rowwise().sum())
                                   : Eigen::VectorXd(w.colwise().sum().transpose());
  marg /= marg.sum();

  MarginalHistogram h;
  h.axis = axis;
  h.edges = Eigen::VectorXd::LinSpaced(n_bins + 1, blo, bhi);
  h.counts = Eigen::VectorXd::Zero(n_bins);
  const double width = (bhi - blo) / n_bins;
  for (int i = 0; i < n_nodes; ++i) {
    const double v = nodes[i];
    if (v < blo || v >= bhi) continue;
    const int b = std::min<int>(n_bins - 1, static_cast<int>((v - blo) / width));
    h.counts[b] += marg[i];
  }
  const double total = h.counts.sum();
  h.densities = total > 0 ? (h.counts / (total * width)).eval()
                          : Eigen::VectorXd::Zero(n_bins);
  return h;
}

inline double tv_distance(const MarginalHistogram& h1, const MarginalHistogram& h2) {
  if (h1.edges.size() != h2.edges.size() ||
      (h1.edges - h2.edges).cwiseAbs().maxCoeff() > 1e-12)
    throw BinMismatch("histograms have different bin edges");
  const Eigen::VectorXd p = h1.counts / h1.counts.sum();
  const Eigen::VectorXd q = h2.counts / h2.counts.sum();
  return 0.5 * (p - q).cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// File output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

// Emits trace.csv, samples.csv (when samples were pooled) and meta.json.
// Output is byte-identical across reruns with identical config and seed.
inline void write_record(const RunRecord& record, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());

  const Eigen::Index d = record.rows.empty() ? 0 : record.rows.front().mean.size();
  std::string trace = "iteration";
  for (Eigen::Index i = 0; i < d; ++i) trace += ",mean_" + std::to_string(i);
  trace += ",V_mean,spread,accept_rate\n";
  for (const auto& row : record.rows) {
    trace += std::to_string(row.iteration);
    for (Eigen::Index i = 0; i < d; ++i)
      trace += "," + detail::format_double(row.mean[i]);
    trace += "," + detail::format_double(row.v_mean);
    trace += "," + detail::format_double(row.spread);
    trace += "," + detail::format_double(row.accept_rate);
    trace += "\n";
  }
  detail::atomic_write(dir / "trace.csv", trace);

  if (!record.samples.empty()) {
    const Eigen::Index sd = record.samples.front().size();
    std::string samples;
    for (Eigen::Index i = 0; i < sd; ++i)
      samples += (i ? "," : "") + ("x_" + std::to_string(i));
    samples += "\n";
    for (const auto& s : record.samples) {
      for (Eigen::Index i = 0; i < sd; ++i)
        samples += (i ? "," : "") + detail::format_double(s[i]);
      samples += "\n";
    }
    detail::atomic_write(dir / "samples.csv", samples);
  }

  std::string meta = "{\n  \"config\": {\n";
  for (std::size_t i = 0; i < record.config_snapshot.size(); ++i) {
    const auto& [k, v] = record.config_snapshot[i];
    meta += "    \"" + detail::json_escape(k) + "\": \"" + detail::json_escape(v) + "\"";
    meta += (i + 1 < record.config_snapshot.size()) ? ",\n" : "\n";
  }
  meta += "  },\n";
  meta += "  \"n_rows\": " + std::to_string(record.rows.size()) + ",\n";
  meta += "  \"n_samples\": " + std::to_string(record.samples.size()) + ",\n";
  meta += "  \"empty_sample_pool\": " +
          std::string(record.empty_sample_pool ? "true" : "false") + ",\n";
  meta += "  \"abort_iteration\": " + std::to_string(record.abort_iteration) + ",\n";
  meta += "  \"abort_reason\": \"" + detail::json_escape(record.abort_reason) + "\"\n";
  meta += "}\n";
  detail::atomic_write(dir / "meta.json", meta);
}

inline std::vector<std::filesystem::path> write_monte_carlo(
    const std::vector<RunRecord>& records, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> dirs;
  for (std::size_t k = 0; k < records.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03zu", k);
    const std::filesystem::path run_dir = dir / name;
    write_record(records[k], run_dir);
    dirs.push_back(run_dir);
  }
  return dirs;
}

}  // namespace egi
