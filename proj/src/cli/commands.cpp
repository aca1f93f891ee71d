#include "lowrankseg/cli.hpp"

#include "lowrankseg/data.hpp"
#include "lowrankseg/linalg.hpp"
#include "lowrankseg/prox.hpp"
#include "lowrankseg/record.hpp"
#include "lowrankseg/segmentation.hpp"
#include "lowrankseg/solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace lowrankseg::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Corruption draws must not reuse the stream that generated the data.
std::uint64_t corruption_seed(std::uint64_t seed) {
  return seed ^ 0x9E3779B97F4A7C15ULL;
}

double parse_double(std::string_view token) {
  while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
  while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() ||
      !std::isfinite(v)) {
    throw ParameterError("invalid number '" + std::string(token) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------- options

struct InputOptions {
  std::string input;
  std::string labels;
  bool toy = false;
  std::uint64_t seed = 1;
  int subspaces = 5;
  int subspace_dim = 4;
  int ambient_dim = 100;
  int samples_per = 20;
  std::string corruption_model = "random_entries";
  double fraction = 0.0;
  double sigma_scale = 0.3;
};

struct CorruptionFlagNames {
  const char* model = "--corruption-model";
  const char* fraction = "--fraction";
  const char* scale = "--sigma-scale";
};

void add_input_options(CLI::App* sub, InputOptions& o, bool allow_file,
                       const CorruptionFlagNames& names = {}) {
  if (allow_file) {
    sub->add_option("--input", o.input, "Data matrix CSV (columns are samples)");
    sub->add_option("--labels", o.labels, "Ground-truth labels CSV");
    sub->add_flag("--toy", o.toy, "Use the synthetic union-of-subspaces data");
  } else {
    sub->add_flag("--toy", o.toy, "Synthetic data (the only source for this command)");
  }
  sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  sub->add_option("--subspaces", o.subspaces, "Toy data: number of subspaces")->capture_default_str();
  sub->add_option("--subspace-dim", o.subspace_dim, "Toy data: subspace dimension")->capture_default_str();
  sub->add_option("--ambient-dim", o.ambient_dim, "Toy data: ambient dimension")->capture_default_str();
  sub->add_option("--samples-per", o.samples_per, "Toy data: samples per subspace")->capture_default_str();
  sub->add_option(names.model, o.corruption_model, "random_entries | sample_specific")
      ->capture_default_str();
  sub->add_option(names.fraction, o.fraction, "Fraction of entries/samples corrupted")
      ->capture_default_str();
  sub->add_option(names.scale, o.sigma_scale,
                  "Noise magnitude relative to ||X||_F (per-entry std scale)")
      ->capture_default_str();
}

Json echo(const InputOptions& o) {
  Json j;
  if (!o.input.empty()) {
    j["input"] = o.input;
    if (!o.labels.empty()) j["labels"] = o.labels;
  } else {
    j["toy"] = true;
    j["subspaces"] = o.subspaces;
    j["subspace_dim"] = o.subspace_dim;
    j["ambient_dim"] = o.ambient_dim;
    j["samples_per"] = o.samples_per;
  }
  j["seed"] = o.seed;
  j["corruption_model"] = o.corruption_model;
  j["fraction"] = o.fraction;
  j["sigma_scale"] = o.sigma_scale;
  return j;
}

struct LoadedInput {
  Mat x;
  std::optional<data::Labels> labels;
  std::optional<data::Mask> mask;
};

LoadedInput load_input(const InputOptions& o) {
  if (!o.input.empty() && o.toy) {
    throw ParameterError("--input and --toy are mutually exclusive");
  }
  LoadedInput in;
  if (!o.input.empty()) {
    in.x = data::load_matrix(o.input);
    if (!o.labels.empty()) {
      in.labels = data::load_labels(o.labels);
      if (static_cast<Eigen::Index>(in.labels->size()) != in.x.cols()) {
        throw ParameterError("labels file has " + std::to_string(in.labels->size()) +
                             " entries but the data has " +
                             std::to_string(in.x.cols()) + " samples");
      }
    }
  } else {
    data::ToyOptions toy;
    toy.num_subspaces = o.subspaces;
    toy.subspace_dim = o.subspace_dim;
    toy.ambient_dim = o.ambient_dim;
    toy.samples_per = o.samples_per;
    data::Dataset ds = data::generate_toy(o.seed, toy);
    in.x = std::move(ds.x);
    in.labels = std::move(ds.labels);
  }
  if (o.fraction > 0.0 && o.sigma_scale > 0.0) {
    data::CorruptionSpec spec;
    spec.model = data::parse_corruption_model(o.corruption_model);
    spec.fraction = o.fraction;
    spec.sigma_scale = o.sigma_scale;
    spec.seed = corruption_seed(o.seed);
    data::Corrupted c = data::corrupt(in.x, spec);
    in.x = std::move(c.x);
    in.mask = std::move(c.mask);
  } else {
    // still validates the model name and range
    data::CorruptionSpec spec;
    spec.model = data::parse_corruption_model(o.corruption_model);
    spec.fraction = o.fraction;
    spec.sigma_scale = o.sigma_scale;
    spec.validate();
  }
  return in;
}

struct AlmOptions {
  double lambda = 1.0;
  std::string noise = "l21";
  bool psd = false;
  double tol = 1e-6;
  int max_iter = 1000;
  double mu0 = 1e-6;
  double rho = 1.1;
  double mu_max = 1e10;
};

void add_alm_options(CLI::App* sub, AlmOptions& o, bool with_psd_flag,
                     const char* noise_flag = "--noise") {
  sub->add_option("--lambda", o.lambda, "Noise trade-off lambda")->capture_default_str();
  sub->add_option(noise_flag, o.noise, "Noise norm: l1 | l21")->capture_default_str();
  if (with_psd_flag) sub->add_flag("--psd", o.psd, "Solve robust LRR-PSD instead of LRR");
  sub->add_option("--tol", o.tol, "Convergence tolerance (max-abs residuals)")->capture_default_str();
  sub->add_option("--max-iter", o.max_iter, "Iteration cap")->capture_default_str();
  sub->add_option("--mu0", o.mu0, "Initial penalty")->capture_default_str();
  sub->add_option("--rho", o.rho, "Penalty growth factor")->capture_default_str();
  sub->add_option("--mu-max", o.mu_max, "Penalty cap")->capture_default_str();
}

solver::AlmConfig to_config(const AlmOptions& o) {
  solver::AlmConfig cfg;
  cfg.lambda = o.lambda;
  cfg.noise_norm = solver::parse_noise_norm(o.noise);
  cfg.psd = o.psd;
  cfg.tol = o.tol;
  cfg.max_iter = o.max_iter;
  cfg.mu0 = o.mu0;
  cfg.rho = o.rho;
  cfg.mu_max = o.mu_max;
  cfg.validate();
  return cfg;
}

Json echo(const solver::AlmConfig& cfg) {
  return Json{{"lambda", cfg.lambda},
              {"noise", std::string(solver::to_string(cfg.noise_norm))},
              {"psd", cfg.psd},
              {"tol", cfg.tol},
              {"max_iter", cfg.max_iter},
              {"mu0", cfg.mu0},
              {"rho", cfg.rho},
              {"mu_max", cfg.mu_max}};
}

// ---------------------------------------------------------------- json helpers

Json count_map(const std::map<double, std::size_t>& counts) {
  Json j = Json::object();
  for (const auto& [threshold, count] : counts) {
    char key[32];
    std::snprintf(key, sizeof key, "%g", threshold);
    j[key] = count;
  }
  return j;
}

Json spectrum_json(const solver::SpectrumReport& r) {
  return Json{{"eigenvalues", to_json(r.eigenvalues)},
              {"singular_values", to_json(r.singular_values)},
              {"eigen_count_above", count_map(r.eigen_count_above)},
              {"singular_count_above", count_map(r.singular_count_above)},
              {"max_abs_eig_sv_diff",
               (r.eigenvalues - r.singular_values).cwiseAbs().maxCoeff()}};
}

Json step_timing_json(const solver::StepTiming& t) {
  return Json{{"z_step_s", t.z_step},
              {"e_step_s", t.e_step},
              {"j_step_s", t.j_step},
              {"multiplier_step_s", t.multiplier_step}};
}

Json solve_summary(const solver::SolveResult& r) {
  Json j{{"converged", r.converged}, {"iterations", r.iterations}};
  if (!r.history.empty()) {
    const auto& last = r.history.back();
    j["primal_residual"] = last.primal_residual;
    j["gap"] = last.gap;
    j["objective"] = last.objective;
  }
  const double zn = r.z.norm();
  j["asymmetry"] = zn > 0.0 ? (r.z - r.z.transpose()).norm() / zn : 0.0;
  return j;
}

Json history_json(const solver::SolveResult& r) {
  Json rows = Json::array();
  for (const auto& h : r.history) {
    rows.push_back(Json::array({h.iteration, h.primal_residual, h.gap, h.objective}));
  }
  return rows;
}

void emit(Record& rec, const std::string& out_path, std::ostream& out) {
  const std::string text = rec.finish().dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + out_path + "'");
  f << text;
}

segmentation::AffinityMode default_mode(bool psd) {
  return psd ? segmentation::AffinityMode::psd_direct
             : segmentation::AffinityMode::abs_sym;
}

int num_groups(const data::Labels& labels) {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

bool is_sorted_labels(const data::Labels& labels) {
  return std::is_sorted(labels.begin(), labels.end());
}

// ---------------------------------------------------------------- solve

struct SolveCmd {
  InputOptions in;
  AlmOptions alm;
  std::string out;
  std::string dump_z;
  std::string dump_e;
  bool no_history = false;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("solve", "Solve robust LRR or LRR-PSD by inexact ALM");
    add_input_options(sub, in, true);
    add_alm_options(sub, alm, true);
    sub->add_option("--out", out, "Write the JSON record here instead of stdout");
    sub->add_option("--dump-z", dump_z, "Write the learned Z as CSV");
    sub->add_option("--dump-e", dump_e, "Write the noise estimate E as CSV");
    sub->add_flag("--no-history", no_history, "Omit the per-iteration history");
  }

  int run(const std::vector<std::string>& argv, std::ostream& os) const {
    if (in.input.empty() && !in.toy) {
      throw ParameterError("solve: one of --input or --toy is required");
    }
    const LoadedInput data = load_input(in);
    const solver::AlmConfig cfg = to_config(alm);

    Record rec("solve", argv);
    rec.params()["data"] = echo(in);
    rec.params()["solver"] = echo(cfg);
    rec.params()["dump_z"] = dump_z;
    rec.params()["dump_e"] = dump_e;

    const auto t0 = Clock::now();
    const solver::SolveResult r = solver::solve(data.x, cfg);
    const double wall = seconds_since(t0);

    Json& res = rec.results();
    res["data_shape"] = Json::array({data.x.rows(), data.x.cols()});
    res["data_rank"] = linalg::numerical_rank(data.x);
    res["solver"] = solve_summary(r);
    res["spectrum"] = spectrum_json(solver::spectrum_report(r.z));
    res["z_rank"] = linalg::numerical_rank(r.z);
    if (data.labels && is_sorted_labels(*data.labels)) {
      const auto sizes = segmentation::group_sizes(*data.labels);
      res["block_diagonal_mass"] = segmentation::block_diagonal_mass(r.z, sizes);
    }
    if (data.labels) {
      const int k = num_groups(*data.labels);
      const Mat w = segmentation::affinity_from_representation(r.z, default_mode(cfg.psd));
      const auto cl = segmentation::spectral_cluster(w, k, in.seed);
      res["clustering"] = Json{{"k", k},
                               {"affinity", std::string(segmentation::to_string(default_mode(cfg.psd)))},
                               {"accuracy", segmentation::segmentation_accuracy(cl.labels, *data.labels)}};
    }
    if (!no_history) res["history"] = history_json(r);

    rec.timing() = step_timing_json(r.timing);
    rec.timing()["solve_wall_s"] = wall;

    if (!dump_z.empty()) data::save_matrix(dump_z, r.z);
    if (!dump_e.empty()) data::save_matrix(dump_e, r.e);
    emit(rec, out, os);
    return r.converged ? kExitOk : kExitNotConverged;
  }
};

// ---------------------------------------------------------------- spectrum-sweep

struct SweepCmd {
  InputOptions in;
  AlmOptions alm;
  std::string lambdas;
  std::string psd = "both";
  std::string out;
  std::string csv;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("spectrum-sweep",
                                   "Eigen/singular spectra of the learned Z over a lambda grid");
    in.sigma_scale = 0.0;
    in.fraction = 0.1;
    in.corruption_model = "sample_specific";
    add_input_options(sub, in, false,
                      CorruptionFlagNames{"--noise-model", "--fraction", "--noise-level"});
    add_alm_options(sub, alm, false, "--noise-norm");
    sub->add_option("--lambdas", lambdas, "Grid start:step:end (inclusive) or a list")
        ->required();
    sub->add_option("--psd", psd, "on | off | both")
        ->check(CLI::IsMember({"on", "off", "both"}))
        ->capture_default_str();
    sub->add_option("--out", out, "Write the JSON record here instead of stdout");
    sub->add_option("--csv", csv,
                    "CSV companion: lambda, psd, eigenvalues..., singular values...");
  }

  int run(const std::vector<std::string>& argv, std::ostream& os) const {
    const std::vector<double> grid = parse_grid(lambdas);
    const LoadedInput data = load_input(in);
    std::vector<bool> variants;
    if (psd != "on") variants.push_back(false);
    if (psd != "off") variants.push_back(true);

    Record rec("spectrum-sweep", argv);
    rec.params()["data"] = echo(in);
    rec.params()["lambdas"] = grid;
    rec.params()["psd"] = psd;
    solver::AlmConfig base = to_config(alm);
    rec.params()["solver"] = echo(base);
    rec.params()["solver"].erase("lambda");
    rec.params()["solver"].erase("psd");
    rec.params()["csv"] = csv;

    Json rows = Json::array();
    Json cross = Json::array();
    Json timings = Json::array();
    const Eigen::Index n = data.x.cols();
    Mat table(static_cast<Eigen::Index>(grid.size() * variants.size()), 2 + 2 * n);
    Eigen::Index table_row = 0;
    bool all_converged = true;

    for (const double lambda : grid) {
      std::optional<Mat> z_lrr;
      std::optional<Mat> z_psd;
      for (const bool variant : variants) {
        solver::AlmConfig cfg = base;
        cfg.lambda = lambda;
        cfg.psd = variant;
        cfg.validate();
        const solver::SolveResult r = solver::solve(data.x, cfg);
        all_converged = all_converged && r.converged;
        const solver::SpectrumReport spec = solver::spectrum_report(r.z);
        rows.push_back(Json{{"lambda", lambda},
                            {"variant", variant ? "lrr-psd" : "lrr"},
                            {"solver", solve_summary(r)},
                            {"spectrum", spectrum_json(spec)}});
        timings.push_back(step_timing_json(r.timing));
        table(table_row, 0) = lambda;
        table(table_row, 1) = variant ? 1.0 : 0.0;
        table.row(table_row).segment(2, n) = spec.eigenvalues.transpose();
        table.row(table_row).segment(2 + n, n) = spec.singular_values.transpose();
        ++table_row;
        (variant ? z_psd : z_lrr) = r.z;
      }
      if (z_lrr && z_psd) {
        const double denom = z_lrr->norm();
        cross.push_back(Json{{"lambda", lambda},
                             {"relative_difference",
                              denom > 0.0 ? (*z_psd - *z_lrr).norm() / denom
                                          : z_psd->norm()}});
      }
    }
    rec.results()["rows"] = std::move(rows);
    if (!cross.empty()) rec.results()["cross_variant"] = std::move(cross);
    rec.timing()["per_row"] = std::move(timings);

    if (!csv.empty()) data::save_matrix(csv, table);
    emit(rec, out, os);
    return all_converged ? kExitOk : kExitNotConverged;
  }
};

// ---------------------------------------------------------------- noise-compare

struct NoiseCompareCmd {
  std::string fractions = "0:0.05:0.5";
  int seeds = 5;
  double sigma_scale = 0.3;
  std::string corruption_model = "random_entries";
  std::string variant = "lrr-psd";
  AlmOptions alm;
  data::ToyOptions toy;
  std::string out;
  std::string csv;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand(
        "noise-compare", "Segmentation accuracy vs corruption for the l1 and l21 noise models");
    alm.lambda = 0.12;
    sub->add_option("--fractions", fractions, "Corruption grid start:step:end or list")
        ->capture_default_str();
    sub->add_option("--seeds", seeds, "Number of seeds (1..N)")->capture_default_str();
    sub->add_option("--sigma-scale", sigma_scale, "Noise magnitude relative to ||X||_F")
        ->capture_default_str();
    sub->add_option("--corruption-model", corruption_model, "random_entries | sample_specific")
        ->capture_default_str();
    sub->add_option("--variant", variant, "lrr | lrr-psd")
        ->check(CLI::IsMember({"lrr", "lrr-psd"}))
        ->capture_default_str();
    sub->add_option("--lambda", alm.lambda, "Noise trade-off lambda")->capture_default_str();
    sub->add_option("--tol", alm.tol, "Convergence tolerance")->capture_default_str();
    sub->add_option("--max-iter", alm.max_iter, "Iteration cap")->capture_default_str();
    sub->add_option("--subspaces", toy.num_subspaces, "Toy data: number of subspaces")->capture_default_str();
    sub->add_option("--subspace-dim", toy.subspace_dim, "Toy data: subspace dimension")->capture_default_str();
    sub->add_option("--ambient-dim", toy.ambient_dim, "Toy data: ambient dimension")->capture_default_str();
    sub->add_option("--samples-per", toy.samples_per, "Toy data: samples per subspace")->capture_default_str();
    sub->add_option("--out", out, "Write the JSON record here instead of stdout");
    sub->add_option("--csv", csv, "CSV companion: fraction, mean_l1, std_l1, mean_l21, std_l21");
  }

  struct Job {
    double fraction;
    std::uint64_t seed;
    double acc[2];
    int iterations[2];
    bool converged[2];
  };

  int run(const std::vector<std::string>& argv, std::ostream& os) const {
    const std::vector<double> grid = parse_grid(fractions);
    if (seeds < 1) throw ParameterError("--seeds must be at least 1");
    const data::CorruptionModel model = data::parse_corruption_model(corruption_model);
    AlmOptions opts = alm;
    opts.psd = variant == "lrr-psd";
    const solver::AlmConfig base = to_config(opts);
    for (const double f : grid) {
      if (f < 0.0 || f > 1.0) throw ParameterError("fractions must lie in [0, 1]");
    }

    Record rec("noise-compare", argv);
    rec.params()["fractions"] = grid;
    rec.params()["seeds"] = seeds;
    rec.params()["sigma_scale"] = sigma_scale;
    rec.params()["corruption_model"] = corruption_model;
    rec.params()["variant"] = variant;
    rec.params()["toy"] = Json{{"subspaces", toy.num_subspaces},
                               {"subspace_dim", toy.subspace_dim},
                               {"ambient_dim", toy.ambient_dim},
                               {"samples_per", toy.samples_per}};
    rec.params()["solver"] = echo(base);
    rec.params()["solver"].erase("noise");
    rec.params()["csv"] = csv;
    const unsigned threads = worker_threads();

    std::vector<Job> jobs;
    for (const double f : grid) {
      for (int s = 1; s <= seeds; ++s) {
        jobs.push_back(Job{f, static_cast<std::uint64_t>(s), {0, 0}, {0, 0}, {false, false}});
      }
    }
    const auto t0 = Clock::now();
    parallel_for(jobs.size(), threads, [&](std::size_t i) {
      Job& job = jobs[i];
      const data::Dataset clean = data::generate_toy(job.seed, toy);
      data::CorruptionSpec spec;
      spec.model = model;
      spec.fraction = job.fraction;
      spec.sigma_scale = sigma_scale;
      spec.seed = corruption_seed(job.seed);
      const Mat x = data::corrupt(clean.x, spec).x;
      const int k = toy.num_subspaces;
      for (int m = 0; m < 2; ++m) {
        solver::AlmConfig cfg = base;
        cfg.noise_norm = m == 0 ? solver::NoiseNorm::l1 : solver::NoiseNorm::l21;
        const solver::SolveResult r = solver::solve(x, cfg);
        const Mat w = segmentation::affinity_from_representation(r.z, default_mode(cfg.psd));
        const auto cl = segmentation::spectral_cluster(w, k, job.seed);
        job.acc[m] = segmentation::segmentation_accuracy(cl.labels, clean.labels);
        job.iterations[m] = r.iterations;
        job.converged[m] = r.converged;
      }
    });
    const double wall = seconds_since(t0);

    Json rows = Json::array();
    Mat table(static_cast<Eigen::Index>(grid.size()), 5);
    bool all_converged = true;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      Json row{{"fraction", grid[g]}};
      table(static_cast<Eigen::Index>(g), 0) = grid[g];
      for (int m = 0; m < 2; ++m) {
        std::vector<double> accs;
        Json iters = Json::array();
        int converged = 0;
        for (const Job& job : jobs) {
          if (job.fraction != grid[g]) continue;
          accs.push_back(job.acc[m]);
          iters.push_back(job.iterations[m]);
          converged += job.converged[m] ? 1 : 0;
        }
        double mean = 0.0;
        for (const double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (const double a : accs) var += (a - mean) * (a - mean);
        const double sd = std::sqrt(var / static_cast<double>(accs.size()));
        all_converged = all_converged && converged == static_cast<int>(accs.size());
        row[m == 0 ? "l1" : "l21"] = Json{{"mean", mean},
                                          {"std", sd},
                                          {"accuracies", accs},
                                          {"iterations", iters},
                                          {"converged", converged}};
        table(static_cast<Eigen::Index>(g), 1 + 2 * m) = mean;
        table(static_cast<Eigen::Index>(g), 2 + 2 * m) = sd;
      }
      rows.push_back(std::move(row));
    }
    rec.results()["rows"] = std::move(rows);
    rec.timing()["wall_s"] = wall;
    rec.timing()["threads"] = threads;

    if (!csv.empty()) data::save_matrix(csv, table);
    emit(rec, out, os);
    return all_converged ? kExitOk : kExitNotConverged;
  }
};

// ---------------------------------------------------------------- bench

struct BenchCmd {
  std::string sizes = "100,500,1000,2000";
  int reps = 5;
  std::uint64_t seed = 1;
  double tau = 1.0;
  std::string out;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand(
        "bench", "Median time of symmetric eigen-decomposition vs full SVD, and of the J-steps");
    sub->add_option("--sizes", sizes, "Comma-separated matrix sizes")->capture_default_str();
    sub->add_option("--reps", reps, "Repetitions per size")->capture_default_str();
    sub->add_option("--seed", seed, "Random seed")->capture_default_str();
    sub->add_option("--tau", tau, "Threshold used in the J-step timings")->capture_default_str();
    sub->add_option("--out", out, "Write the JSON record here instead of stdout");
  }

  int run(const std::vector<std::string>& argv, std::ostream& os) const {
    const std::vector<int> ns = parse_int_list(sizes);
    if (reps < 1) throw ParameterError("--reps must be at least 1");
    if (!(tau > 0.0)) throw ParameterError("--tau must be positive");
    for (const int n : ns) {
      if (n < 1) throw ParameterError("sizes must be positive");
    }

    Record rec("bench", argv);
    rec.params()["sizes"] = ns;
    rec.params()["reps"] = reps;
    rec.params()["seed"] = seed;
    rec.params()["tau"] = tau;

    data::Rng rng(seed);
    Json rows = Json::array();
    for (const int n : ns) {
      std::vector<double> eig_t, svd_t, jpsd_t, jlrr_t;
      for (int r = 0; r < reps; ++r) {
        const Mat a = data::gaussian_matrix(n, n, rng);
        const Mat s = 0.5 * (a + a.transpose());

        auto t = Clock::now();
        const linalg::EigSym e = linalg::eig_sym(s);
        eig_t.push_back(seconds_since(t));

        t = Clock::now();
        const linalg::Svd f = linalg::svd(a);
        svd_t.push_back(seconds_since(t));

        t = Clock::now();
        const Mat jp = prox::psd_eig_threshold(a, tau);
        jpsd_t.push_back(seconds_since(t));

        t = Clock::now();
        const Mat jl = prox::svt(a, tau);
        jlrr_t.push_back(seconds_since(t));
      }
      rows.push_back(Json{{"n", n},
                          {"timing",
                           {{"eig_median_s", median(eig_t)},
                            {"svd_median_s", median(svd_t)},
                            {"jstep_lrr_psd_median_s", median(jpsd_t)},
                            {"jstep_lrr_median_s", median(jlrr_t)},
                            {"eig_s", eig_t},
                            {"svd_s", svd_t},
                            {"jstep_lrr_psd_s", jpsd_t},
                            {"jstep_lrr_s", jlrr_t}}}});
    }
    rec.results()["rows"] = std::move(rows);
    emit(rec, out, os);
    return kExitOk;
  }
};

// ---------------------------------------------------------------- cluster

struct ClusterCmd {
  InputOptions in;
  AlmOptions alm;
  int k = 0;
  std::string method = "lrr-psd";
  std::optional<double> sigma;
  int pca_dim = 0;
  std::string out;
  std::string dump_labels;

  void attach(CLI::App& app) {
    auto* sub = app.add_subcommand("cluster", "Spectral clustering on a chosen affinity");
    add_input_options(sub, in, true);
    add_alm_options(sub, alm, false);
    sub->add_option("--k", k, "Number of clusters (defaults to the number of true groups)");
    sub->add_option("--method", method, "lrr | lrr-psd | gauss | linear")
        ->check(CLI::IsMember({"lrr", "lrr-psd", "gauss", "linear"}))
        ->capture_default_str();
    sub->add_option("--sigma", sigma, "Gaussian kernel bandwidth (required for gauss)");
    sub->add_option("--pca-dim", pca_dim, "Project samples onto the top principal directions first (0 = off)")
        ->capture_default_str();
    sub->add_option("--out", out, "Write the JSON record here instead of stdout");
    sub->add_option("--dump-labels", dump_labels, "Write predicted labels as CSV");
  }

  int run(const std::vector<std::string>& argv, std::ostream& os) const {
    if (in.input.empty() && !in.toy) {
      throw ParameterError("cluster: one of --input or --toy is required");
    }
    if (method == "gauss" && !sigma) {
      throw ParameterError("cluster: --sigma is required for the gauss method");
    }
    LoadedInput data = load_input(in);
    int clusters = k;
    if (clusters == 0) {
      if (!data.labels) throw ParameterError("cluster: --k is required without labels");
      clusters = num_groups(*data.labels);
    }
    if (clusters < 1) throw ParameterError("cluster: --k must be positive");
    if (pca_dim < 0) throw ParameterError("cluster: --pca-dim must be nonnegative");
    if (pca_dim > 0 && pca_dim < data.x.rows()) {
      const linalg::Svd f = linalg::svd(data.x);
      const Eigen::Index p = std::min<Eigen::Index>(pca_dim, f.u.cols());
      data.x = f.u.leftCols(p).transpose() * data.x;
    }

    Record rec("cluster", argv);
    rec.params()["data"] = echo(in);
    rec.params()["k"] = clusters;
    rec.params()["method"] = method;
    rec.params()["sigma"] = sigma ? Json(*sigma) : Json(nullptr);
    rec.params()["pca_dim"] = pca_dim;

    const auto t0 = Clock::now();
    Mat w;
    Json& res = rec.results();
    if (method == "lrr" || method == "lrr-psd") {
      AlmOptions opts = alm;
      opts.psd = method == "lrr-psd";
      const solver::AlmConfig cfg = to_config(opts);
      rec.params()["solver"] = echo(cfg);
      const solver::SolveResult r = solver::solve(data.x, cfg);
      res["solver"] = solve_summary(r);
      rec.timing()["solver"] = step_timing_json(r.timing);
      w = segmentation::affinity_from_representation(r.z, default_mode(cfg.psd));
      res["affinity"] = std::string(segmentation::to_string(default_mode(cfg.psd)));
    } else if (method == "gauss") {
      w = segmentation::gaussian_affinity(data.x, *sigma);
      res["affinity"] = "gauss";
    } else {
      w = segmentation::linear_affinity(data.x);
      res["affinity"] = "linear";
    }

    const segmentation::ClusteringResult cl = segmentation::spectral_cluster(w, clusters, in.seed);
    res["k"] = clusters;
    res["labels"] = cl.labels;
    res["kmeans_inertia"] = cl.inertia;
    if (data.labels) {
      res["accuracy"] = segmentation::segmentation_accuracy(cl.labels, *data.labels);
      if (is_sorted_labels(*data.labels)) {
        res["block_diagonal_mass"] =
            segmentation::block_diagonal_mass(w, segmentation::group_sizes(*data.labels));
      }
    }
    rec.timing()["wall_s"] = seconds_since(t0);

    if (!dump_labels.empty()) {
      Mat lab(static_cast<Eigen::Index>(cl.labels.size()), 1);
      for (std::size_t i = 0; i < cl.labels.size(); ++i) {
        lab(static_cast<Eigen::Index>(i), 0) = cl.labels[i];
      }
      data::save_matrix(dump_labels, lab);
    }
    emit(rec, out, os);
    return kExitOk;
  }
};

}  // namespace

std::vector<double> parse_grid(std::string_view spec) {
  if (spec.find_first_not_of(" ") == std::string_view::npos) {
    throw ParameterError("empty grid");
  }
  if (spec.find(':') != std::string_view::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw ParameterError("grid must be start:step:end");
    const double start = parse_double(parts[0]);
    const double step = parse_double(parts[1]);
    const double end = parse_double(parts[2]);
    if (!(step > 0.0)) throw ParameterError("grid step must be positive");
    if (end < start) throw ParameterError("empty grid: end precedes start");
    // count derived up front so the endpoint survives rounding
    const auto count = static_cast<long>(std::floor((end - start) / step + 1e-9)) + 1;
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) {
      // round to 12 decimals so 0.1 * 3 prints as 0.3
      const double v = start + static_cast<double>(i) * step;
      grid.push_back(std::round(v * 1e12) / 1e12);
    }
    return grid;
  }
  std::vector<double> grid;
  for (const auto part : split(spec, ',')) grid.push_back(parse_double(part));
  return grid;
}

std::vector<int> parse_int_list(std::string_view spec) {
  std::vector<int> out;
  for (const auto part : split(spec, ',')) {
    const double v = parse_double(part);
    if (v != std::floor(v) || std::abs(v) > 1e9) {
      throw ParameterError("expected an integer, got '" + std::string(part) + "'");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

unsigned worker_threads() {
  const char* env = std::getenv("LOWRANKSEG_THREADS");
  if (env == nullptr) return 1;
  const std::string_view s(env);
  unsigned v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v == 0) return 1;
  return v;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank and PSD representations for subspace segmentation", "lowrankseg"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SolveCmd solve_cmd;
  SweepCmd sweep_cmd;
  NoiseCompareCmd noise_cmd;
  BenchCmd bench_cmd;
  ClusterCmd cluster_cmd;
  solve_cmd.attach(app);
  sweep_cmd.attach(app);
  noise_cmd.attach(app);
  bench_cmd.attach(app);
  cluster_cmd.attach(app);

  std::vector<const char*> cargv;
  cargv.reserve(args.size());
  for (const auto& a : args) cargv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitInputError;
  }

  try {
    if (app.got_subcommand("solve")) return solve_cmd.run(args, out);
    if (app.got_subcommand("spectrum-sweep")) return sweep_cmd.run(args, out);
    if (app.got_subcommand("noise-compare")) return noise_cmd.run(args, out);
    if (app.got_subcommand("bench")) return bench_cmd.run(args, out);
    if (app.got_subcommand("cluster")) return cluster_cmd.run(args, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace lowrankseg::cli
