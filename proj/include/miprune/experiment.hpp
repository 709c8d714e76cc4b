#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "miprune/dataset.hpp"
#include "miprune/mi.hpp"
#include "miprune/pruning.hpp"
#include "miprune/probe.hpp"
#include "miprune/train.hpp"

namespace miprune {

struct ArchSpec {
  int hidden_layers = 1;
  Index width = 64;
};

struct ExperimentSpec {
  std::vector<ArchSpec> architectures;
  std::vector<Method> methods;
  std::vector<double> max_rates;
  std::vector<uint64_t> seeds;
  TrainConfig train;  // per-run seed comes from `seeds`
  ProbeConfig probe;
  HistogramConfig hist;
  int jobs = 1;
};

struct ExperimentRecord {
  std::string arch;
  int hidden_layers = 0;
  Index width = 0;
  std::string method;  // "baseline" marks the unpruned reference row
  double max_rate = 0.0;
  uint64_t seed = 0;
  double test_error = 0.0;
  double baseline_error = 0.0;
};

using RecordSink = std::function<void(const ExperimentRecord&)>;

// For each (arch, seed): train once, probe once, estimate MI once, then prune
// the same trained model per (method, rate) and evaluate on the test split.
// Records stream through `sink` in deterministic order (also with jobs > 1);
// a failing cell yields NaN records instead of aborting the sweep.
std::vector<ExperimentRecord> run_experiment(const ExperimentSpec& spec,
                                             const Dataset& train_data,
                                             const Dataset& test_data,
                                             const RecordSink& sink = {});

// "arch,hidden_layers,width,method,max_rate,seed,test_error,baseline_error"
void write_results_csv(const std::vector<ExperimentRecord>& records, std::ostream& os);
std::vector<ExperimentRecord> read_results_csv(std::istream& is);

// Per-layer agreement between MI scores (all inputs kept) and incoming-L2
// magnitude scores; covers every layer 1..L including the output layer.
struct RankAgreement {
  int layer = 0;
  std::optional<double> spearman;
  std::optional<double> kendall;
};

std::vector<RankAgreement> rank_similarity(const Networkf& net,
                                           const std::vector<MIMatrix>& mi);

// Mean/std across seeds, skipping undefined values; count says how many
// seeds were defined (0 = reported missing).
struct RankReportRow {
  int layer = 0;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

std::vector<RankReportRow> aggregate_rank_reports(
    const std::vector<std::vector<RankAgreement>>& per_seed);

// "layer,metric,mean,std"; missing values print empty fields.
void write_rank_report_csv(const std::vector<RankReportRow>& rows, std::ostream& os);

}  // namespace miprune
