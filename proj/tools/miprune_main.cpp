// miprune: data-free structured pruning of fully-connected nets, driven by
// input-output mutual information measured under a Gaussian input probe.
//
// The pipeline is split into resumable stages with explicit cache files:
//   train -> probe (trace) -> mi (cache) -> score/prune -> eval
// plus `experiment` for full sweeps and `rank-report` for score-agreement
// tables. Exit codes: 0 ok, 1 usage error, 2 data/format error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "miprune/dataset.hpp"
#include "miprune/experiment.hpp"
#include "miprune/io_util.hpp"
#include "miprune/mi.hpp"
#include "miprune/model_io.hpp"
#include "miprune/probe.hpp"
#include "miprune/pruning.hpp"
#include "miprune/rank.hpp"
#include "miprune/train.hpp"

namespace {

using namespace miprune;

std::ofstream open_text_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  return os;
}

ArchSpec parse_arch_token(const std::string& token) {
  const auto x = token.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= token.size()) {
    throw InvalidInput("bad --arch token '" + token + "', expected <hidden>x<width>");
  }
  ArchSpec a;
  try {
    a.hidden_layers = std::stoi(token.substr(0, x));
    a.width = static_cast<Index>(std::stoll(token.substr(x + 1)));
  } catch (const std::exception&) {
    throw InvalidInput("bad --arch token '" + token + "'");
  }
  if (a.hidden_layers < 1 || a.width < 1) {
    throw InvalidInput("bad --arch token '" + token + "'");
  }
  return a;
}

struct CommonFlags {
  std::string model, out, trace_path, mi_cache;
  std::vector<std::string> data;
  uint64_t seed = 0;
  int samples = 5000;
  int bins = 32;
  std::string method = "mi";
  double rate = 0.0;
  int jobs = 1;
  int epochs = 200;
  double lr = 1e-3;
  double lr_gamma = 0.99;
  double weight_decay = 1e-4;
  std::vector<std::string> arch;
  std::vector<std::string> methods;
  std::vector<std::string> rates;
  std::vector<std::string> seeds;
  std::vector<std::string> traces;
  std::vector<std::string> mi_caches;
};

TrainConfig train_config(const CommonFlags& f) {
  TrainConfig cfg;
  cfg.epochs = f.epochs;
  cfg.initial_lr = f.lr;
  cfg.lr_decay_gamma = f.lr_gamma;
  cfg.weight_decay = f.weight_decay;
  cfg.seed = f.seed;
  return cfg;
}

void cmd_train(const CommonFlags& f) {
  const Dataset data = load_dataset(f.data.at(0));
  std::vector<Index> dims;
  dims.push_back(data.dim());
  for (const auto& tok : f.arch) dims.push_back(static_cast<Index>(std::stoll(tok)));
  dims.push_back(data.num_classes);
  const Networkf net = train(dims, data, train_config(f));
  save_model(net, f.out);
}

void cmd_probe(const CommonFlags& f) {
  const Networkf net = load_model(f.model);
  ProbeConfig cfg;
  cfg.num_samples = f.samples;
  cfg.seed = f.seed;
  save_trace(record_trace(net, cfg), f.out);
}

void cmd_mi(const CommonFlags& f) {
  const ActivationTrace trace = load_trace(f.trace_path);
  HistogramConfig cfg{f.bins};
  save_mi(all_layer_mi(trace, cfg), cfg.bins, trace.num_samples, f.out);
}

// Loads the MI matrices for scoring/pruning: prefer a cache file, else
// recompute from the trace.
std::vector<MIMatrix> mi_for(const CommonFlags& f, const ActivationTrace* trace) {
  if (!f.mi_cache.empty()) return load_mi(f.mi_cache).layers;
  if (trace == nullptr) throw InvalidInput("mi scoring needs --mi-cache or --trace");
  return all_layer_mi(*trace, HistogramConfig{f.bins});
}

void cmd_score(const CommonFlags& f) {
  const Networkf net = load_model(f.model);
  const Method method = parse_method(f.method);
  LayerScores scores;
  ActivationTrace trace;
  const bool have_trace = !f.trace_path.empty();
  if (have_trace) trace = load_trace(f.trace_path);
  switch (method) {
    case Method::MI: {
      const auto mi = mi_for(f, have_trace ? &trace : nullptr);
      std::vector<std::vector<uint8_t>> keep;
      keep.push_back(std::vector<uint8_t>(static_cast<size_t>(net.input_dim), 1));
      for (const auto& l : net.layers) {
        keep.push_back(std::vector<uint8_t>(static_cast<size_t>(l.out_dim()), 1));
      }
      scores = score_mi(mi, keep);
      break;
    }
    case Method::Magnitude:
      scores = score_magnitude(net);
      break;
    case Method::Random:
      scores = score_random(net, f.seed);
      break;
    case Method::Correlation:
      if (!have_trace) throw InvalidInput("correlation scoring needs --trace");
      scores = score_correlation(trace);
      break;
    case Method::WeightSimilarity:
      scores = score_weight_similarity(net);
      break;
  }
  auto os = open_text_output(f.out);
  write_scores_csv(method, scores, os);
}

void cmd_prune(const CommonFlags& f) {
  const Networkf net = load_model(f.model);
  const Method method = parse_method(f.method);
  ActivationTrace trace;
  std::vector<MIMatrix> mi;
  const ActivationTrace* trace_ptr = nullptr;
  const std::vector<MIMatrix>* mi_ptr = nullptr;
  if (!f.trace_path.empty()) {
    trace = load_trace(f.trace_path);
    trace_ptr = &trace;
  }
  if (method == Method::MI) {
    mi = mi_for(f, trace_ptr);
    mi_ptr = &mi;
  }
  const PruneResult result = prune(net, method, f.rate, trace_ptr, mi_ptr, f.seed);
  save_model(result.network, f.out);
  auto os = open_text_output(f.out + ".plan");
  write_plan(result.plan, os);
}

void cmd_eval(const CommonFlags& f) {
  const Networkf net = load_model(f.model);
  const Dataset data = load_dataset(f.data.at(0));
  std::cout << format_double(evaluate(net, data)) << "\n";
}

void cmd_experiment(const CommonFlags& f) {
  if (f.data.size() != 2) {
    throw InvalidInput("experiment needs --data <train.bin> <test.bin>");
  }
  ExperimentSpec spec;
  for (const auto& tok : f.arch) spec.architectures.push_back(parse_arch_token(tok));
  for (const auto& tok : f.methods) spec.methods.push_back(parse_method(tok));
  for (const auto& tok : f.rates) spec.max_rates.push_back(std::stod(tok));
  for (const auto& tok : f.seeds) spec.seeds.push_back(std::stoull(tok));
  spec.train = train_config(f);
  spec.probe.num_samples = f.samples;
  spec.hist.bins = f.bins;
  spec.jobs = f.jobs;

  const Dataset train_data = load_dataset(f.data[0]);
  const Dataset test_data = load_dataset(f.data[1]);
  auto os = open_text_output(f.out);
  os << "arch,hidden_layers,width,method,max_rate,seed,test_error,baseline_error\n";
  run_experiment(spec, train_data, test_data, [&](const ExperimentRecord& r) {
    os << r.arch << ',' << r.hidden_layers << ',' << r.width << ',' << r.method << ','
       << format_double(r.max_rate) << ',' << r.seed << ','
       << format_double(r.test_error) << ',' << format_double(r.baseline_error)
       << '\n';
    os.flush();  // partial runs stay usable
  });
}

void cmd_rank_report(const CommonFlags& f) {
  const Networkf net = load_model(f.model);
  if (f.traces.empty() && f.mi_caches.empty()) {
    throw InvalidInput("rank-report needs --trace and/or --mi-cache files");
  }
  std::vector<std::vector<RankAgreement>> per_seed;
  if (!f.mi_caches.empty()) {
    for (const auto& path : f.mi_caches) {
      per_seed.push_back(rank_similarity(net, load_mi(path).layers));
    }
  } else {
    for (const auto& path : f.traces) {
      const ActivationTrace trace = load_trace(path);
      per_seed.push_back(rank_similarity(net, all_layer_mi(trace, HistogramConfig{f.bins})));
    }
  }
  auto os = open_text_output(f.out);
  write_rank_report_csv(aggregate_rank_reports(per_seed), os);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-free structured pruning via mutual information under a Gaussian probe"};
  app.require_subcommand(1);

  CommonFlags f;

  auto* train_cmd = app.add_subcommand("train", "train a fully-connected net");
  train_cmd->add_option("--data", f.data, "dataset file (MIPD)")->required()->expected(1);
  train_cmd->add_option("--arch", f.arch, "comma-separated hidden widths, e.g. 64 or 128,64")
      ->required()->delimiter(',');
  train_cmd->add_option("--out", f.out, "output model file")->required();
  train_cmd->add_option("--epochs", f.epochs, "training epochs")->capture_default_str();
  train_cmd->add_option("--lr", f.lr, "initial learning rate")->capture_default_str();
  train_cmd->add_option("--lr-gamma", f.lr_gamma, "per-epoch LR decay factor")
      ->check(CLI::Range(1e-9, 1.0))->capture_default_str();
  train_cmd->add_option("--weight-decay", f.weight_decay, "decoupled weight decay")
      ->capture_default_str();
  train_cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();

  auto* probe_cmd = app.add_subcommand("probe", "record a Gaussian-probe activation trace");
  probe_cmd->add_option("--model", f.model, "model file")->required();
  probe_cmd->add_option("--out", f.out, "output trace file")->required();
  probe_cmd->add_option("--samples", f.samples, "probe sample count S")
      ->check(CLI::Range(2, 1 << 24))->capture_default_str();
  probe_cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();

  auto* mi_cmd = app.add_subcommand("mi", "estimate per-connection mutual information");
  mi_cmd->add_option("--trace", f.trace_path, "trace file")->required();
  mi_cmd->add_option("--out", f.out, "output MI cache file")->required();
  mi_cmd->add_option("--bins", f.bins, "histogram bins per axis B")
      ->check(CLI::Range(2, 65535))->capture_default_str();

  auto* score_cmd = app.add_subcommand("score", "dump per-neuron scores as CSV");
  score_cmd->add_option("--model", f.model, "model file")->required();
  score_cmd->add_option("--method", f.method, "mi|magnitude|random|correlation|weight-similarity")
      ->required()
      ->check(CLI::IsMember({"mi", "magnitude", "random", "correlation", "weight-similarity"}));
  score_cmd->add_option("--out", f.out, "output CSV")->required();
  score_cmd->add_option("--trace", f.trace_path, "trace file (mi, correlation)");
  score_cmd->add_option("--mi-cache", f.mi_cache, "MI cache file (mi)");
  score_cmd->add_option("--bins", f.bins, "histogram bins when recomputing MI")
      ->check(CLI::Range(2, 65535))->capture_default_str();
  score_cmd->add_option("--seed", f.seed, "RNG seed (random)")->capture_default_str();

  auto* prune_cmd = app.add_subcommand("prune", "prune a model and write model + plan");
  prune_cmd->add_option("--model", f.model, "model file")->required();
  prune_cmd->add_option("--method", f.method, "mi|magnitude|random|correlation|weight-similarity")
      ->required()
      ->check(CLI::IsMember({"mi", "magnitude", "random", "correlation", "weight-similarity"}));
  prune_cmd->add_option("--rate", f.rate, "maximum pruning rate")
      ->check(CLI::Range(0.0, 1.0))->required();
  prune_cmd->add_option("--out", f.out, "output model file (plan goes to <out>.plan)")
      ->required();
  prune_cmd->add_option("--trace", f.trace_path, "trace file (mi, correlation)");
  prune_cmd->add_option("--mi-cache", f.mi_cache, "MI cache file (mi)");
  prune_cmd->add_option("--bins", f.bins, "histogram bins when recomputing MI")
      ->check(CLI::Range(2, 65535))->capture_default_str();
  prune_cmd->add_option("--seed", f.seed, "RNG seed (random)")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "print test error of a model on a dataset");
  eval_cmd->add_option("--model", f.model, "model file")->required();
  eval_cmd->add_option("--data", f.data, "dataset file (MIPD)")->required()->expected(1);

  auto* exp_cmd = app.add_subcommand("experiment",
                                     "sweep (arch x method x rate x seed) and emit results CSV");
  exp_cmd->add_option("--data", f.data, "train and test dataset files")
      ->required()->expected(2);
  exp_cmd->add_option("--arch", f.arch, "arch tokens <hidden>x<width>, e.g. 1x64,2x128")
      ->required()->delimiter(',');
  exp_cmd->add_option("--method", f.methods, "methods to compare, e.g. mi,magnitude,random")
      ->required()->delimiter(',')
      ->check(CLI::IsMember({"mi", "magnitude", "random", "correlation", "weight-similarity"}));
  exp_cmd->add_option("--rate", f.rates, "max pruning rates, e.g. 0.1,0.3,0.5")
      ->required()->delimiter(',');
  exp_cmd->add_option("--seed", f.seeds, "seeds, e.g. 1,2,3")->required()->delimiter(',');
  exp_cmd->add_option("--out", f.out, "output results CSV")->required();
  exp_cmd->add_option("--epochs", f.epochs, "training epochs")->capture_default_str();
  exp_cmd->add_option("--lr", f.lr, "initial learning rate")->capture_default_str();
  exp_cmd->add_option("--lr-gamma", f.lr_gamma, "per-epoch LR decay factor")
      ->check(CLI::Range(1e-9, 1.0))->capture_default_str();
  exp_cmd->add_option("--weight-decay", f.weight_decay, "decoupled weight decay")
      ->capture_default_str();
  exp_cmd->add_option("--samples", f.samples, "probe sample count S")
      ->check(CLI::Range(2, 1 << 24))->capture_default_str();
  exp_cmd->add_option("--bins", f.bins, "histogram bins per axis B")
      ->check(CLI::Range(2, 65535))->capture_default_str();
  exp_cmd->add_option("--jobs", f.jobs, "parallel training cells")
      ->check(CLI::Range(1, 256))->capture_default_str();

  auto* rank_cmd = app.add_subcommand("rank-report",
                                      "MI vs magnitude rank agreement per layer");
  rank_cmd->add_option("--model", f.model, "model file")->required();
  rank_cmd->add_option("--trace", f.traces, "trace files (one per seed)")->delimiter(',');
  rank_cmd->add_option("--mi-cache", f.mi_caches, "MI cache files (one per seed)")
      ->delimiter(',');
  rank_cmd->add_option("--out", f.out, "output CSV")->required();
  rank_cmd->add_option("--bins", f.bins, "histogram bins when recomputing MI")
      ->check(CLI::Range(2, 65535))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) cmd_train(f);
    if (probe_cmd->parsed()) cmd_probe(f);
    if (mi_cmd->parsed()) cmd_mi(f);
    if (score_cmd->parsed()) cmd_score(f);
    if (prune_cmd->parsed()) cmd_prune(f);
    if (eval_cmd->parsed()) cmd_eval(f);
    if (exp_cmd->parsed()) cmd_experiment(f);
    if (rank_cmd->parsed()) cmd_rank_report(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
