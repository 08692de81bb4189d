#include "fastpca/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "fastpca/errors.hpp"

namespace fastpca {

namespace {

// Stream tags for per-trial seed derivation.
enum SeedStream : std::uint64_t {
  kRotationStream = 1,
  kSampleStream = 2,
  kTopologyStream = 3,
  kInitStream = 4,
  kShardStream = 5,
};

std::vector<double> to_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

std::vector<Matrix> node_estimates(const NetworkState& state) {
  std::vector<Matrix> xs;
  xs.reserve(state.nodes.size());
  for (const auto& node : state.nodes) xs.push_back(node.X);
  return xs;
}

Matrix column_mean(const std::vector<Matrix>& xs) {
  Matrix mean = Matrix::Zero(xs.front().rows(), xs.front().cols());
  for (const auto& x : xs) mean += x;
  return mean / static_cast<double>(xs.size());
}

// Sine of the angle between the averaged iterate and each true eigenvector.
Vector average_sine_angles(const std::vector<Matrix>& xs, const Spectrum& truth,
                           int K) {
  const Matrix mean = column_mean(xs);
  Vector out(K);
  for (int k = 0; k < K; ++k) {
    const double norm = mean.col(k).norm();
    if (norm == 0.0) {
      out(k) = 1.0;
      continue;
    }
    const double cosine = mean.col(k).dot(truth.eigenvectors.col(k)) / norm;
    out(k) = std::sqrt(std::max(0.0, 1.0 - cosine * cosine));
  }
  return out;
}

Vector relative_tracker(const NetworkState& state,
                        const std::vector<DataShard>& shards) {
  const TrackerResidual tr = tracker_residual(state, shards);
  Vector out(tr.residual.size());
  for (int k = 0; k < out.size(); ++k)
    out(k) = tr.residual(k) / (1.0 + tr.g_norm(k));
  return out;
}

bool below_early_stop(const TraceRow& row, const TraceOptions& opts) {
  return opts.early_stop && row.angle_error < *opts.early_stop &&
         row.consensus_total() < *opts.early_stop;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

// --- configuration -------------------------------------------------------

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("load_config: cannot open " + path);

  ExperimentConfig cfg;
  cfg.algorithms.clear();
  AlgorithmSpec* current_algo = nullptr;

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;

    auto fail = [&](const std::string& why) {
      throw FormatError(path + ": line " + std::to_string(line_no) + ": " + why);
    };

    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      std::istringstream header(line.substr(1, line.size() - 2));
      std::string word, name;
      header >> word >> name;
      if (word != "algorithm" || name.empty())
        fail("expected [algorithm <name>]");
      cfg.algorithms.push_back(AlgorithmSpec{name, 0.0, 50});
      current_algo = &cfg.algorithms.back();
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail("empty key or value");

    try {
      if (current_algo) {
        if (key == "alpha")
          current_algo->alpha = std::stod(value);
        else if (key == "t_consensus")
          current_algo->t_consensus = std::stoi(value);
        else
          fail("unknown algorithm key '" + key + "'");
        continue;
      }
      if (key == "data") {
        if (value == "synthetic") {
          cfg.synthetic = true;
        } else if (value == "idx" || value == "cifar" || value == "csv") {
          cfg.synthetic = false;
          cfg.dataset_kind = value;
        } else {
          fail("data must be synthetic | idx | cifar | csv");
        }
      } else if (key == "dataset_path") {
        cfg.dataset_paths.push_back(value);
      } else if (key == "d") {
        cfg.synth.d = std::stoi(value);
      } else if (key == "K") {
        cfg.K = std::stoi(value);
      } else if (key == "gap_ratio") {
        cfg.synth.gap_ratio = std::stod(value);
      } else if (key == "spectrum_mode") {
        if (value == "distinct")
          cfg.synth.mode = SpectrumMode::distinct;
        else if (value == "repeated")
          cfg.synth.mode = SpectrumMode::repeated;
        else
          fail("spectrum_mode must be distinct | repeated");
      } else if (key == "top_value") {
        cfg.synth.top_value = std::stod(value);
      } else if (key == "samples_per_node") {
        cfg.samples_per_node = std::stoi(value);
      } else if (key == "shard_strategy") {
        if (value == "uniform")
          cfg.shard_strategy = ShardStrategy::uniform;
        else if (value == "contiguous")
          cfg.shard_strategy = ShardStrategy::contiguous;
        else
          fail("shard_strategy must be uniform | contiguous");
      } else if (key == "topology") {
        if (value == "erdos_renyi")
          cfg.topology = TopologyKind::erdos_renyi;
        else if (value == "cycle")
          cfg.topology = TopologyKind::cycle;
        else if (value == "complete")
          cfg.topology = TopologyKind::complete;
        else if (value == "star")
          cfg.topology = TopologyKind::star;
        else
          fail("unknown topology '" + value + "'");
      } else if (key == "M") {
        cfg.M = std::stoi(value);
      } else if (key == "edge_prob") {
        cfg.edge_prob = std::stod(value);
      } else if (key == "comm_budget") {
        cfg.comm_budget = std::stol(value);
      } else if (key == "trials") {
        cfg.n_trials = std::stoi(value);
      } else if (key == "seed") {
        cfg.master_seed = std::stoull(value);
      } else if (key == "accounting") {
        if (value == "paper")
          cfg.accounting = Accounting::paper;
        else if (value == "payload")
          cfg.accounting = Accounting::payload;
        else
          fail("accounting must be paper | payload");
      } else if (key == "safe_alpha") {
        cfg.safe_alpha = (value == "true" || value == "1");
      } else if (key == "seqpm_outer_per_component") {
        cfg.seqpm_outer_per_component = std::stoi(value);
      } else if (key == "out") {
        cfg.out_dir = value;
      } else {
        fail("unknown key '" + key + "'");
      }
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception& e) {
      fail(std::string("bad value: ") + e.what());
    }
  }

  // Default step sizes: 0.7 on well-mixed graphs, 0.1 on the cycle.
  const double default_alpha = cfg.topology == TopologyKind::cycle ? 0.1 : 0.7;
  for (auto& algo : cfg.algorithms)
    if (algo.alpha == 0.0 && (algo.name == "fastpca" || algo.name == "dsa"))
      algo.alpha = default_alpha;

  cfg.synth.K = cfg.K;
  cfg.synth.seed = cfg.master_seed;
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.n_trials < 1) throw ValidationError("config: trials must be >= 1");
  if (cfg.comm_budget <= 0)
    throw ValidationError("config: comm budget must be > 0");
  if (cfg.M < 1) throw ValidationError("config: M must be >= 1");
  if (cfg.K < 1) throw ValidationError("config: K must be >= 1");
  if (cfg.algorithms.empty())
    throw ValidationError("config: no algorithms listed");
  for (const auto& algo : cfg.algorithms) {
    if (algo.name != "fastpca" && algo.name != "dsa" &&
        algo.name != "seqdistpm" && algo.name != "oi")
      throw ValidationError("config: unknown algorithm '" + algo.name + "'");
    if ((algo.name == "fastpca" || algo.name == "dsa") && !(algo.alpha > 0.0))
      throw ValidationError("config: alpha must be > 0 for " + algo.name);
    if (algo.name == "seqdistpm" && algo.t_consensus < 1)
      throw ValidationError("config: t_consensus must be >= 1");
  }
  if (cfg.synthetic) {
    if (cfg.samples_per_node < 1)
      throw ValidationError("config: samples_per_node must be >= 1");
    if (cfg.synth.d < 2) throw ValidationError("config: d must be >= 2");
  } else {
    if (cfg.dataset_paths.empty())
      throw ValidationError("config: dataset_path required for file data");
  }
}

// --- trial preparation ---------------------------------------------------

TrialData prepare_trial(const ExperimentConfig& cfg, int trial_index) {
  const std::uint64_t trial_seed =
      derive_seed(cfg.master_seed, static_cast<std::uint64_t>(trial_index));

  TrialData trial;
  if (cfg.synthetic) {
    SyntheticSpec spec = cfg.synth;
    spec.K = cfg.K;
    const auto lam = make_spectrum(spec);
    const int n_total = cfg.samples_per_node * cfg.M;
    const Matrix samples =
        synth_gaussian(lam, derive_seed(trial_seed, kRotationStream), n_total,
                       derive_seed(trial_seed, kSampleStream));
    trial.shards = covariance_shards(samples, even_partition(n_total, cfg.M));
    trial.d = spec.d;
  } else {
    RawDataset ds;
    if (cfg.dataset_kind == "idx")
      ds = load_idx(cfg.dataset_paths.front());
    else if (cfg.dataset_kind == "cifar")
      ds = load_cifar_bin(cfg.dataset_paths);
    else
      ds = load_csv(cfg.dataset_paths.front());
    trial.shards =
        shard(ds, cfg.M, cfg.shard_strategy, derive_seed(trial_seed, kShardStream));
    trial.d = ds.d;
  }

  trial.truth = eig_sym(global_covariance(trial.shards));

  switch (cfg.topology) {
    case TopologyKind::erdos_renyi:
      trial.topo = erdos_renyi(cfg.M, cfg.edge_prob,
                               derive_seed(trial_seed, kTopologyStream));
      break;
    case TopologyKind::cycle:
      trial.topo = cycle(cfg.M);
      break;
    case TopologyKind::complete:
      trial.topo = complete(cfg.M);
      break;
    case TopologyKind::star:
      trial.topo = star(cfg.M);
      break;
  }
  trial.mixing = metropolis_weights(trial.topo);

  try {
    trial.alpha_bound =
        step_size_bound(to_std(trial.truth.eigenvalues), cfg.K, trial.mixing.beta);
  } catch (const ValidationError&) {
    trial.alpha_bound = 0.0;  // degenerate realized spectrum
  }
  return trial;
}

// --- per-algorithm trace runners -----------------------------------------

Trace run_fastpca_trace(const TrialData& trial, const AlgoConfig& algo,
                        const TraceOptions& opts) {
  Trace trace;
  trace.metadata = {{"algorithm", "fastpca"},
                    {"alpha", format_g17(algo.alpha)},
                    {"beta", format_g17(trial.mixing.beta)}};

  NetworkState state = fastpca_init(trial.shards, trial.d, algo.K, algo.seed);
  auto record = [&](const NetworkState& s) {
    TraceRow row;
    row.t = s.iteration;
    row.comm_units = s.comm_units;
    const auto xs = node_estimates(s);
    row.angle_error = angle_error(xs, trial.truth, algo.K);
    row.consensus_per_k = consensus_error(xs);
    row.tracker_per_k = relative_tracker(s, trial.shards);
    row.dist_per_k = average_sine_angles(xs, trial.truth, algo.K);
    trace.rows.push_back(std::move(row));
  };

  record(state);
  while (state.comm_units < opts.comm_budget &&
         state.iteration < algo.max_iters) {
    state = fastpca_step(state, trial.mixing, algo.alpha, trial.shards,
                         opts.accounting);
    record(state);
    if (below_early_stop(trace.rows.back(), opts)) break;
  }
  return trace;
}

Trace run_dsa_trace(const TrialData& trial, const AlgoConfig& algo,
                    const TraceOptions& opts) {
  Trace trace;
  trace.metadata = {{"algorithm", "dsa"},
                    {"alpha", format_g17(algo.alpha)},
                    {"beta", format_g17(trial.mixing.beta)}};

  NetworkState state = fastpca_init(trial.shards, trial.d, algo.K, algo.seed);
  auto record = [&](const NetworkState& s) {
    TraceRow row;
    row.t = s.iteration;
    row.comm_units = s.comm_units;
    const auto xs = node_estimates(s);
    row.angle_error = angle_error(xs, trial.truth, algo.K);
    row.consensus_per_k = consensus_error(xs);
    row.dist_per_k = average_sine_angles(xs, trial.truth, algo.K);
    trace.rows.push_back(std::move(row));
  };

  record(state);
  while (state.comm_units < opts.comm_budget &&
         state.iteration < algo.max_iters) {
    state = dsa_step(state, trial.mixing, algo.alpha, trial.shards);
    record(state);
    if (below_early_stop(trace.rows.back(), opts)) break;
  }
  return trace;
}

Trace run_seqpm_trace(const TrialData& trial, const AlgoConfig& algo,
                      const TraceOptions& opts) {
  Trace trace;
  trace.metadata = {{"algorithm", "seqdistpm"},
                    {"t_consensus", std::to_string(algo.t_consensus)},
                    {"beta", format_g17(trial.mixing.beta)}};

  SeqDistPm pm(trial.shards, trial.mixing, algo.K, algo.t_consensus,
               algo.seed);
  auto record = [&](long t) {
    TraceRow row;
    row.t = t;
    row.comm_units = pm.comm_units();
    const auto xs = pm.estimates();
    row.angle_error = angle_error(xs, trial.truth, algo.K);
    row.consensus_per_k = consensus_error(xs);
    row.dist_per_k = average_sine_angles(xs, trial.truth, algo.K);
    trace.rows.push_back(std::move(row));
  };

  record(0);
  long t = 0;
  int steps_in_component = 0;
  while (!pm.finished() && pm.comm_units() < opts.comm_budget &&
         t < algo.max_iters) {
    pm.outer_step();
    ++t;
    ++steps_in_component;
    if (steps_in_component >= opts.seqpm_outer_per_component) {
      pm.advance_component();
      steps_in_component = 0;
    }
    record(t);
    if (below_early_stop(trace.rows.back(), opts)) break;
  }
  return trace;
}

Trace run_oi_trace(const TrialData& trial, const AlgoConfig& algo,
                   const TraceOptions& opts) {
  Trace trace;
  trace.metadata = {
      {"algorithm", "oi"},
      {"note",
       "centralized reference; orthogonal iteration recovers the eigenvector "
       "basis only when the top-K eigenvalues are distinct"}};

  const Matrix c = global_covariance(trial.shards);
  Rng rng(algo.seed);
  Matrix q = random_orthonormal(trial.d, algo.K, rng);

  auto record = [&](long t) {
    TraceRow row;
    row.t = t;
    row.comm_units = t;  // one reference unit per iteration
    const std::vector<Matrix> xs{q};
    row.angle_error = angle_error(xs, trial.truth, algo.K);
    row.dist_per_k = average_sine_angles(xs, trial.truth, algo.K);
    trace.rows.push_back(std::move(row));
  };

  record(0);
  const long iters = std::min<long>(opts.comm_budget, algo.max_iters);
  for (long t = 1; t <= iters; ++t) {
    q = orthonormalize(c * q);
    record(t);
    if (below_early_stop(trace.rows.back(), opts)) break;
  }
  return trace;
}

// --- trial averaging ------------------------------------------------------

Trace mean_trace(const std::vector<Trace>& trials, long comm_budget) {
  if (trials.empty()) throw ValidationError("mean_trace: no trials");
  const double n = static_cast<double>(trials.size());

  Trace mean;
  mean.metadata = trials.front().metadata;
  mean.metadata.emplace_back("mean_over_trials", std::to_string(trials.size()));

  std::vector<std::size_t> cursor(trials.size(), 0);
  for (long u = 0; u <= comm_budget; ++u) {
    TraceRow row;
    row.t = u;
    row.comm_units = u;
    double angle = 0, consensus = 0, tracker = 0, dist = 0;
    for (std::size_t j = 0; j < trials.size(); ++j) {
      const auto& rows = trials[j].rows;
      while (cursor[j] + 1 < rows.size() &&
             rows[cursor[j] + 1].comm_units <= u)
        ++cursor[j];
      const TraceRow& r = rows[cursor[j]];
      angle += r.angle_error;
      consensus += r.consensus_total();
      tracker += r.tracker_max();
      dist += r.dist_max();
    }
    row.angle_error = angle / n;
    row.consensus_per_k = Vector::Constant(1, consensus / n);
    row.tracker_per_k = Vector::Constant(1, tracker / n);
    row.dist_per_k = Vector::Constant(1, dist / n);
    mean.rows.push_back(std::move(row));
  }
  // Rewind cursors for reuse safety (cursor is local; nothing to do).
  return mean;
}

// --- run orchestration ----------------------------------------------------

namespace {

double resolve_alpha(const ExperimentConfig& cfg, const AlgorithmSpec& algo,
                     const TrialData& trial) {
  if (!cfg.safe_alpha) return algo.alpha;
  if (trial.alpha_bound <= 0.0)
    throw ValidationError(
        "safe_alpha: the realized spectrum has no usable eigengap");
  return 0.9 * trial.alpha_bound;
}

int resolve_seqpm_outer(const ExperimentConfig& cfg,
                        const AlgorithmSpec& algo) {
  if (cfg.seqpm_outer_per_component > 0) return cfg.seqpm_outer_per_component;
  const long outer_total = cfg.comm_budget / std::max(1, algo.t_consensus);
  return std::max(1L, outer_total / cfg.K);
}

RunResult run_common(const ExperimentConfig& cfg, bool write_files) {
  validate_config(cfg);

  RunResult result;
  for (const auto& algo : cfg.algorithms)
    result.algos.push_back({algo.name, {}, {}});

  namespace fs = std::filesystem;
  std::ostringstream meta;
  if (write_files) {
    fs::create_directories(cfg.out_dir);
    meta << "data = " << (cfg.synthetic ? "synthetic" : cfg.dataset_kind)
         << "\n";
    if (cfg.synthetic) {
      meta << "d = " << cfg.synth.d << "\n"
           << "gap_ratio = " << format_g17(cfg.synth.gap_ratio) << "\n"
           << "spectrum_mode = "
           << (cfg.synth.mode == SpectrumMode::repeated ? "repeated"
                                                        : "distinct")
           << "\n"
           << "top_value = " << format_g17(cfg.synth.top_value) << "\n"
           << "samples_per_node = " << cfg.samples_per_node << "\n";
    } else {
      for (const auto& path : cfg.dataset_paths)
        meta << "dataset_path = " << path << "\n";
    }
    meta << "K = " << cfg.K << "\n"
         << "M = " << cfg.M << "\n"
         << "comm_budget = " << cfg.comm_budget << "\n"
         << "trials = " << cfg.n_trials << "\n"
         << "seed = " << cfg.master_seed << "\n"
         << "accounting = "
         << (cfg.accounting == Accounting::payload ? "payload" : "paper")
         << "\n";
  }

  for (int t = 0; t < cfg.n_trials; ++t) {
    const TrialData trial = prepare_trial(cfg, t);
    const std::uint64_t trial_seed =
        derive_seed(cfg.master_seed, static_cast<std::uint64_t>(t));
    const std::uint64_t init_seed = derive_seed(trial_seed, kInitStream);

    if (write_files) {
      const std::string topo_path =
          (fs::path(cfg.out_dir) / ("topology_trial" + std::to_string(t) + ".txt"))
              .string();
      save_topology(trial.topo, topo_path);
      result.written_files.push_back(topo_path);

      meta << "trial." << t << ".beta = " << format_g17(trial.mixing.beta)
           << "\n"
           << "trial." << t
           << ".alpha_bound = " << format_g17(trial.alpha_bound) << "\n";
      meta << "trial." << t << ".eigenvalues_top =";
      const int show = std::min(cfg.K + 1, trial.truth.dim());
      for (int l = 0; l < show; ++l)
        meta << " " << format_g17(trial.truth.eigenvalues(l));
      meta << "\n";
    }

    TraceOptions opts;
    opts.comm_budget = cfg.comm_budget;
    opts.accounting = cfg.accounting;

    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
      const auto& spec = cfg.algorithms[a];
      AlgoConfig algo;
      algo.K = cfg.K;
      algo.t_consensus = spec.t_consensus;
      algo.seed = init_seed;
      try {
        Trace trace;
        if (spec.name == "fastpca") {
          algo.alpha = resolve_alpha(cfg, spec, trial);
          trace = run_fastpca_trace(trial, algo, opts);
        } else if (spec.name == "dsa") {
          algo.alpha = resolve_alpha(cfg, spec, trial);
          trace = run_dsa_trace(trial, algo, opts);
        } else if (spec.name == "seqdistpm") {
          TraceOptions pm_opts = opts;
          pm_opts.seqpm_outer_per_component = resolve_seqpm_outer(cfg, spec);
          trace = run_seqpm_trace(trial, algo, pm_opts);
        } else {
          trace = run_oi_trace(trial, algo, opts);
        }
        result.algos[a].trials.push_back(std::move(trace));
      } catch (const std::exception& e) {
        throw DiagnosticError("trial " + std::to_string(t) + ", algorithm " +
                              spec.name + ": " + e.what());
      }
    }
  }

  for (std::size_t a = 0; a < result.algos.size(); ++a) {
    result.algos[a].mean = mean_trace(result.algos[a].trials, cfg.comm_budget);
    if (write_files) {
      for (int t = 0; t < cfg.n_trials; ++t) {
        const std::string path =
            (fs::path(cfg.out_dir) /
             (result.algos[a].name + "_trial" + std::to_string(t) + ".csv"))
                .string();
        write_trace_csv(result.algos[a].trials[t], path);
        result.written_files.push_back(path);
      }
      const std::string mean_path =
          (fs::path(cfg.out_dir) / (result.algos[a].name + "_mean.csv"))
              .string();
      write_trace_csv(result.algos[a].mean, mean_path);
      result.written_files.push_back(mean_path);

      for (const auto& [key, value] : result.algos[a].mean.metadata)
        meta << "algo." << result.algos[a].name << "." << key << " = " << value
             << "\n";
    }
  }

  if (write_files) {
    const std::string meta_path =
        (fs::path(cfg.out_dir) / "run_meta.txt").string();
    std::ofstream out(meta_path, std::ios::binary);
    if (!out) throw FormatError("run: cannot open " + meta_path);
    out << meta.str();
    result.written_files.push_back(meta_path);
  }
  return result;
}

}  // namespace

RunResult run_in_memory(const ExperimentConfig& cfg) {
  return run_common(cfg, false);
}

RunResult run(const ExperimentConfig& cfg) { return run_common(cfg, true); }

// --- theory-validation suite ----------------------------------------------

namespace {

Spectrum random_covariance_spectrum(int d, Rng& rng) {
  // Distinct descending eigenvalues with healthy gaps.
  std::vector<double> lam(d);
  double v = 1.0;
  for (int l = 0; l < d; ++l) {
    lam[l] = v;
    v *= rng.uniform(0.45, 0.85);
  }
  Matrix q = random_orthonormal(d, d, rng);
  Matrix c = Matrix::Zero(d, d);
  for (int l = 0; l < d; ++l)
    c += lam[l] * q.col(l) * q.col(l).transpose();
  return eig_sym(0.5 * (c + c.transpose()));
}

}  // namespace

ValidationReport validate(const ValidateOptions& opts) {
  ValidationReport report;
  auto add = [&](const std::string& name, const std::string& bound,
                 double observed, bool pass, bool warning = false) {
    report.checks.push_back({name, bound, observed, pass, warning});
    if (!pass && !warning) report.all_passed = false;
  };

  Rng rng(opts.seed);

  // Lipschitz bounds of the pseudo-gradient map.
  for (int k : {1, 3}) {
    double worst_margin = 0.0;
    bool ok = true;
    for (int rep = 0; rep < 3; ++rep) {
      const Spectrum cov = random_covariance_spectrum(8, rng);
      Matrix c = cov.eigenvectors *
                 cov.eigenvalues.asDiagonal() *
                 cov.eigenvectors.transpose();
      const double lambda_1 = cov.eigenvalues(0);
      Matrix prefix(8, k - 1);
      if (k > 1) prefix = cov.eigenvectors.leftCols(k - 1);
      const double ratio =
          lipschitz_probe(c, k, prefix, 2000, rng.next_u64());
      const double bound = (k + 5.0) * lambda_1;
      worst_margin = std::max(worst_margin, ratio / bound);
      ok = ok && ratio <= bound;
    }
    add("lipschitz bound, k=" + std::to_string(k),
        "observed/bound <= 1 with bound (k+5)*lambda_1", worst_margin, ok);
  }

  // Coefficient decay of the centralized auxiliary recursion.
  {
    bool ok = true;
    double worst = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
      const int d = 6;
      const Spectrum cov = random_covariance_spectrum(d, rng);
      const Matrix c = cov.eigenvectors * cov.eigenvalues.asDiagonal() *
                       cov.eigenvectors.transpose();
      const int k = 1 + static_cast<int>(rng.next_below(3));
      const double alpha = rng.uniform(0.05, 0.9) / cov.eigenvalues(0);
      Vector x(d);
      do {
        for (int i = 0; i < d; ++i) x(i) = rng.gaussian();
      } while (std::abs(cov.eigenvectors.col(k - 1).dot(x)) < 1e-3 * x.norm());
      x /= x.norm();

      std::vector<Vector> zs;
      const Matrix prefix = cov.eigenvectors.leftCols(k - 1);
      for (int t = 0; t < 200; ++t) {
        zs.push_back(eigen_coefficients(x, cov));
        x = oracle_krasulina_step(c, prefix, x, alpha);
      }
      const DecayReport decay = coefficient_decay_check(zs, k, alpha, cov);
      ok = ok && decay.lower_ok && decay.upper_ok;
      if (decay.upper_steps > 0 && decay.rho_bound > 0)
        worst = std::max(worst, decay.worst_upper_ratio / decay.rho_bound);
      if (decay.lower_steps > 0 && decay.gamma_bound > 0)
        worst = std::max(worst, decay.worst_lower_ratio / decay.gamma_bound);
    }
    add("coefficient decay, 20 random draws",
        "per-step ratio within 1.05x of gamma_k / rho_k", worst, ok);
  }

  // Oracle linear rate toward the k-th eigenvector.
  {
    Vector lam(3);
    lam << 3.0, 2.0, 1.0;
    Matrix c = lam.asDiagonal();
    const Spectrum cov = eig_sym(c);
    const double alpha = 0.1;
    const int k = 2;
    const double rho =
        std::pow((1.0 + alpha * lam(2)) / (1.0 + alpha * lam(1)), 2);
    Vector x = Vector::Ones(3) / std::sqrt(3.0);
    const Matrix prefix = cov.eigenvectors.leftCols(k - 1);
    double worst_ratio = 0.0;
    double prev = -1.0;
    for (int t = 0; t < 400; ++t) {
      const Vector unit = x / x.norm();
      const Vector q = cov.eigenvectors.col(k - 1);
      const double sin2 = (unit - q * q.dot(unit)).squaredNorm();
      if (t > 20 && prev > 1e-24)
        worst_ratio = std::max(worst_ratio, sin2 / prev);
      prev = sin2;
      x = oracle_krasulina_step(c, prefix, x, alpha);
    }
    add("oracle iterate rate, k=2", "per-step sin^2 factor <= rho_k + 0.05",
        worst_ratio, worst_ratio <= rho + 0.05);
  }

  // Spectral radius of the error-system matrix under the step-size bound.
  {
    bool ok = true;
    double worst = 0.0;
    for (int draw = 0; draw < 50; ++draw) {
      const int d = 2 + static_cast<int>(rng.next_below(6));
      const Spectrum cov = random_covariance_spectrum(d + 1, rng);
      const int k = 1 + static_cast<int>(rng.next_below(
                            static_cast<std::uint64_t>(d)));
      const double beta = rng.uniform(0.0, 0.95);
      const double bound = step_size_bound(to_std(cov.eigenvalues), k, beta);
      const double rho =
          p_spectral_radius(0.9 * bound, k, cov.eigenvalues(k - 1),
                            cov.eigenvalues(k), cov.eigenvalues(0), beta);
      worst = std::max(worst, rho);
      ok = ok && rho < 1.0;
    }
    add("error-system spectral radius at 0.9x bound", "< 1 on 50 draws", worst,
        ok);
    const double at_zero = p_spectral_radius(0.0, 1, 0.9, 0.5, 1.0, 0.4);
    add("error-system spectral radius at alpha=0", "== 1 exactly", at_zero,
        at_zero == 1.0);
  }

  // Tracking identity and average dynamics on a desk-scale run. The top
  // eigenvalue equals M so the per-node covariances have unit scale.
  {
    ExperimentConfig cfg;
    cfg.synth = {10, 3, 0.6, SpectrumMode::distinct, 10.0, opts.seed};
    cfg.samples_per_node = 500;
    cfg.M = 10;
    cfg.K = 3;
    cfg.n_trials = 1;
    cfg.master_seed = opts.seed;
    const TrialData trial = prepare_trial(cfg, 0);

    const double alpha = opts.alpha_override > 0 ? opts.alpha_override : 0.7;
    if (opts.strict_alpha && alpha > trial.alpha_bound)
      add("step size vs theoretical bound",
          "alpha <= " + format_g17(trial.alpha_bound), alpha, true, true);

    NetworkState state =
        fastpca_init(trial.shards, trial.d, cfg.K, derive_seed(opts.seed, 99));
    double worst_tracker = 0.0;
    double worst_avg_drift = 0.0;
    for (int t = 0; t < 100; ++t) {
      // Predicted average-iterate update from the current round.
      Matrix xbar = Matrix::Zero(trial.d, cfg.K);
      Matrix sbar = xbar;
      for (const auto& node : state.nodes) {
        xbar += node.X;
        sbar += node.S;
      }
      xbar /= state.node_count();
      sbar /= state.node_count();

      state = fastpca_step(state, trial.mixing, alpha, trial.shards);
      if (opts.corrupt_tracker && t == 50)
        state.nodes[0].S.array() += 1e-3;

      Matrix xbar_next = Matrix::Zero(trial.d, cfg.K);
      for (const auto& node : state.nodes) xbar_next += node.X;
      xbar_next /= state.node_count();
      worst_avg_drift = std::max(
          worst_avg_drift,
          (xbar_next - (xbar + alpha * sbar)).norm() / (1.0 + xbar.norm()));

      worst_tracker = std::max(
          worst_tracker, relative_tracker(state, trial.shards).maxCoeff());
    }
    add("tracking identity over 100 rounds", "<= 1e-10 relative",
        worst_tracker, worst_tracker <= 1e-10);
    add("average-iterate dynamics over 100 rounds", "<= 1e-10 relative",
        worst_avg_drift, worst_avg_drift <= 1e-10);
  }

  // Linear convergence and consensus decay on the desk-scale benchmark.
  {
    ExperimentConfig cfg;
    cfg.synth = {20, 5, 0.8, SpectrumMode::distinct, 20.0, opts.seed};
    cfg.samples_per_node = 2000;
    cfg.M = 20;
    cfg.K = 5;
    cfg.master_seed = opts.seed + 1;
    const TrialData trial = prepare_trial(cfg, 0);

    TraceOptions topts;
    topts.comm_budget = 3000;
    topts.early_stop = 1e-13;
    AlgoConfig algo;
    algo.alpha = 0.7;
    algo.K = cfg.K;
    algo.seed = derive_seed(opts.seed, 100);
    const Trace trace = run_fastpca_trace(trial, algo, topts);
    std::vector<double> angle, consensus;
    for (const auto& row : trace.rows) {
      angle.push_back(row.angle_error);
      consensus.push_back(row.consensus_total());
    }
    // Consensus starts at zero (shared init) and rises before decaying;
    // fit the decay segment from its peak.
    const auto peak =
        std::max_element(consensus.begin(), consensus.end());
    const std::vector<double> decay(peak, consensus.end());

    const RateReport angle_fit = rate_fit(angle);
    const RateReport cons_fit = rate_fit(decay);
    add("angle error log-linear fit", "R^2 >= 0.95 and rho < 1",
        angle_fit.r_squared,
        angle_fit.r_squared >= 0.95 && angle_fit.rho_hat < 1.0);
    add("consensus error log-linear fit", "R^2 >= 0.95 and rho < 1",
        cons_fit.r_squared,
        cons_fit.r_squared >= 0.95 && cons_fit.rho_hat < 1.0);

    // Eventual monotonicity: once past the burn-in, the angle error keeps
    // shrinking until it reaches the numerical noise floor.
    double worst_step = 0.0;
    bool past_burn_in = false;
    for (std::size_t t = 0; t + 1 < angle.size(); ++t) {
      past_burn_in = past_burn_in || angle[t] < 1e-2;
      if (past_burn_in && angle[t] > 1e-12 && angle[t] > 0.0)
        worst_step = std::max(worst_step, angle[t + 1] / angle[t]);
    }
    add("angle error eventually monotone decreasing",
        "per-step ratio <= 1 past burn-in", worst_step, worst_step <= 1.0);
  }

  return report;
}

std::string ValidationReport::to_string() const {
  std::ostringstream out;
  for (const auto& check : checks) {
    out << (check.warning ? "[warn] " : (check.pass ? "[pass] " : "[FAIL] "))
        << check.name << ": observed " << format_g17(check.observed) << " ("
        << check.bound << ")\n";
  }
  out << (all_passed ? "validation passed" : "VALIDATION FAILED") << "\n";
  return out.str();
}

// --- sweeps ----------------------------------------------------------------

std::vector<SweepRow> sweep(const ExperimentConfig& cfg,
                            const std::string& axis,
                            const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("sweep: empty value list");
  if (axis != "alpha" && axis != "beta" && axis != "gap")
    throw ValidationError("sweep: axis must be alpha | beta | gap");

  const AlgorithmSpec* fast = nullptr;
  for (const auto& algo : cfg.algorithms)
    if (algo.name == "fastpca") fast = &algo;
  if (!fast) throw ValidationError("sweep: config must list fastpca");

  std::vector<SweepRow> rows;
  for (double value : values) {
    ExperimentConfig local = cfg;
    double alpha = fast->alpha;
    if (axis == "gap") local.synth.gap_ratio = value;
    if (axis == "alpha") alpha = value;
    if (axis == "beta") {
      if (!(value >= 0.0 && value < 1.0))
        throw ValidationError("sweep: beta values must lie in [0, 1)");
      local.topology = TopologyKind::complete;  // the swept W conforms to it
    }
    validate_config(local);

    std::vector<Trace> trials;
    for (int t = 0; t < local.n_trials; ++t) {
      TrialData trial = prepare_trial(local, t);
      if (axis == "beta") {
        // Convex combination of self-loop and full averaging on the
        // complete graph; its mixing parameter is exactly `value`.
        const int m = local.M;
        trial.mixing.W = value * Matrix::Identity(m, m) +
                         (1.0 - value) / m * Matrix::Ones(m, m);
        trial.mixing.beta = value;
      }
      TraceOptions topts;
      topts.comm_budget = local.comm_budget;
      topts.accounting = local.accounting;
      topts.early_stop = 1e-13;
      AlgoConfig algo;
      algo.alpha = alpha;
      algo.K = local.K;
      algo.seed = derive_seed(
          derive_seed(local.master_seed, static_cast<std::uint64_t>(t)),
          kInitStream);
      trials.push_back(run_fastpca_trace(trial, algo, topts));
    }
    const Trace mean = mean_trace(trials, local.comm_budget);

    SweepRow row;
    row.value = value;
    row.final_angle_error = mean.rows.back().angle_error;
    row.comm_to_1e6 = -1;
    for (const auto& r : mean.rows)
      if (r.angle_error <= 1e-6) {
        row.comm_to_1e6 = r.comm_units;
        break;
      }
    std::vector<double> angle;
    for (const auto& r : mean.rows) angle.push_back(r.angle_error);
    try {
      row.rho_hat = rate_fit(angle).rho_hat;
    } catch (const ValidationError&) {
      row.rho_hat = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows,
                         const std::string& axis) {
  std::ostringstream out;
  out << axis << ",final_angle_error,rho_hat,comm_to_1e-6\n";
  for (const auto& row : rows)
    out << format_g17(row.value) << ',' << format_g17(row.final_angle_error)
        << ',' << format_g17(row.rho_hat) << ',' << row.comm_to_1e6 << '\n';
  return out.str();
}

}  // namespace fastpca
