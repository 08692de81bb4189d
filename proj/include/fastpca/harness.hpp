#ifndef FASTPCA_HARNESS_HPP
#define FASTPCA_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fastpca/analysis.hpp"
#include "fastpca/consensus_pca.hpp"
#include "fastpca/ingest.hpp"
#include "fastpca/network.hpp"

namespace fastpca {

enum class TopologyKind { erdos_renyi, cycle, complete, star };

struct AlgorithmSpec {
  std::string name;     // fastpca | dsa | seqdistpm | oi
  double alpha = 0.0;   // tracker / combine-and-adapt methods
  int t_consensus = 50; // seqdistpm
};

struct ExperimentConfig {
  // data source: synthetic spec or dataset files
  bool synthetic = true;
  SyntheticSpec synth;
  int samples_per_node = 5000;
  std::string dataset_kind;  // idx | cifar | csv
  std::vector<std::string> dataset_paths;
  ShardStrategy shard_strategy = ShardStrategy::uniform;

  // topology
  TopologyKind topology = TopologyKind::erdos_renyi;
  int M = 20;
  double edge_prob = 0.5;

  // run control
  int K = 5;
  long comm_budget = 3000;
  int n_trials = 1;
  std::uint64_t master_seed = 1;
  Accounting accounting = Accounting::paper;
  bool safe_alpha = false;  // replace alpha by 0.9x the theoretical bound
  int seqpm_outer_per_component = 0;  // 0: derive from the comm budget
  std::string out_dir = "out";

  std::vector<AlgorithmSpec> algorithms;
};

// Flat key-value config file with [algorithm <name>] sections.
ExperimentConfig load_config(const std::string& path);
void validate_config(const ExperimentConfig& config);

// Everything one trial needs, derived deterministically from
// (config, master_seed, trial_index).
struct TrialData {
  std::vector<DataShard> shards;
  Spectrum truth;          // eig_sym of the realized global covariance
  Topology topo;
  MixingMatrix mixing;
  double alpha_bound = 0;  // theoretical step-size bound for this trial
  int d = 0;
};

TrialData prepare_trial(const ExperimentConfig& config, int trial_index);

// Options shared by the per-algorithm trace runners.
struct TraceOptions {
  long comm_budget = 3000;
  Accounting accounting = Accounting::paper;
  // Stop once both angle and consensus errors are below this threshold;
  // the mean-alignment grid holds the last value afterwards.
  std::optional<double> early_stop;
  int seqpm_outer_per_component = 40;
};

Trace run_fastpca_trace(const TrialData& trial, const AlgoConfig& algo,
                        const TraceOptions& opts);
Trace run_dsa_trace(const TrialData& trial, const AlgoConfig& algo,
                    const TraceOptions& opts);
Trace run_seqpm_trace(const TrialData& trial, const AlgoConfig& algo,
                      const TraceOptions& opts);
Trace run_oi_trace(const TrialData& trial, const AlgoConfig& algo,
                   const TraceOptions& opts);

// Mean over trials on a common comm_units grid (one row per unit),
// holding the last recorded value between outer steps.
Trace mean_trace(const std::vector<Trace>& trials, long comm_budget);

struct AlgoTraces {
  std::string name;
  std::vector<Trace> trials;
  Trace mean;
};

struct RunResult {
  std::vector<AlgoTraces> algos;
  std::vector<std::string> written_files;
};

// Monte-Carlo orchestration. `run` additionally writes per-trial CSVs, a
// mean CSV per algorithm, per-trial topology edge lists and a metadata file.
RunResult run_in_memory(const ExperimentConfig& config);
RunResult run(const ExperimentConfig& config);

// Theory-validation suite ----------------------------------------------

struct ValidateOptions {
  std::uint64_t seed = 7;
  double alpha_override = 0.0;  // 0: use the default desk-run alpha
  bool strict_alpha = false;    // record a warning when alpha exceeds the bound
  bool corrupt_tracker = false; // negative control: perturb one tracker
};

struct CheckResult {
  std::string name;
  std::string bound;
  double observed = 0.0;
  bool pass = false;
  bool warning = false;  // recorded, does not fail the report
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_passed = true;
  std::string to_string() const;
};

ValidationReport validate(const ValidateOptions& opts = {});

// Parameter sweeps -------------------------------------------------------

struct SweepRow {
  double value = 0.0;
  double final_angle_error = 0.0;
  double rho_hat = 1.0;
  long comm_to_1e6 = -1;  // -1: threshold never reached
};

// axis: alpha | beta | gap. The beta axis runs on a complete graph with
// W = theta I + (1-theta)/M 11^T, whose mixing parameter is exactly theta.
std::vector<SweepRow> sweep(const ExperimentConfig& config,
                            const std::string& axis,
                            const std::vector<double>& values);
std::string sweep_to_csv(const std::vector<SweepRow>& rows,
                         const std::string& axis);

}  // namespace fastpca

#endif
