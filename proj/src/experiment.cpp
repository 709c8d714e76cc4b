#include "miprune/experiment.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "miprune/io_util.hpp"
#include "miprune/rank.hpp"

namespace miprune {

namespace {

struct Cell {
  ArchSpec arch;
  uint64_t seed = 0;
};

std::string arch_name(const ArchSpec& a) {
  return "mlp-" + std::to_string(a.hidden_layers) + "x" + std::to_string(a.width);
}

std::vector<ExperimentRecord> run_cell(const ExperimentSpec& spec, const Cell& cell,
                                       const Dataset& train_data,
                                       const Dataset& test_data) {
  std::vector<ExperimentRecord> records;
  ExperimentRecord base;
  base.arch = arch_name(cell.arch);
  base.hidden_layers = cell.arch.hidden_layers;
  base.width = cell.arch.width;
  base.seed = cell.seed;

  auto emit_failure = [&](const std::string& why) {
    std::cerr << "experiment cell " << base.arch << " seed " << cell.seed
              << " failed: " << why << "\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    ExperimentRecord r = base;
    r.method = "baseline";
    r.test_error = r.baseline_error = nan;
    records.push_back(r);
    for (Method m : spec.methods) {
      for (double rate : spec.max_rates) {
        r.method = method_name(m);
        r.max_rate = rate;
        records.push_back(r);
      }
    }
  };

  try {
    std::vector<Index> dims;
    dims.push_back(train_data.dim());
    for (int h = 0; h < cell.arch.hidden_layers; ++h) dims.push_back(cell.arch.width);
    dims.push_back(train_data.num_classes);

    TrainConfig tcfg = spec.train;
    tcfg.seed = cell.seed;
    const Networkf net = train(dims, train_data, tcfg);
    const double baseline_error = evaluate(net, test_data);

    ProbeConfig pcfg = spec.probe;
    pcfg.seed = cell.seed;
    const ActivationTrace trace = record_trace(net, pcfg);
    const std::vector<MIMatrix> mi = all_layer_mi(trace, spec.hist);

    ExperimentRecord r = base;
    r.baseline_error = baseline_error;
    r.method = "baseline";
    r.max_rate = 0.0;
    r.test_error = baseline_error;
    records.push_back(r);

    for (Method m : spec.methods) {
      for (double rate : spec.max_rates) {
        r.method = method_name(m);
        r.max_rate = rate;
        try {
          const PruneResult pruned = prune(net, m, rate, &trace, &mi, cell.seed);
          r.test_error = evaluate(pruned.network, test_data);
        } catch (const Error& e) {
          std::cerr << "experiment cell " << base.arch << " seed " << cell.seed
                    << " method " << r.method << " rate " << rate
                    << " failed: " << e.what() << "\n";
          r.test_error = std::numeric_limits<double>::quiet_NaN();
        }
        records.push_back(r);
      }
    }
  } catch (const Error& e) {
    records.clear();
    emit_failure(e.what());
  }
  return records;
}

// Runs cells on `jobs` threads but consumes results strictly in cell order,
// so emitted output does not depend on scheduling.
void for_each_cell_ordered(int n, int jobs,
                           const std::function<std::vector<ExperimentRecord>(int)>& work,
                           const std::function<void(std::vector<ExperimentRecord>&)>& consume) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) {
      auto r = work(i);
      consume(r);
    }
    return;
  }
  std::vector<std::vector<ExperimentRecord>> slots(static_cast<size_t>(n));
  std::vector<char> done(static_cast<size_t>(n), 0);
  std::atomic<int> next{0};
  std::mutex mu;
  std::condition_variable cv;
  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      auto r = work(i);
      {
        std::lock_guard<std::mutex> lock(mu);
        slots[static_cast<size_t>(i)] = std::move(r);
        done[static_cast<size_t>(i)] = 1;
      }
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, n);
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (int i = 0; i < n; ++i) {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait(lock, [&] { return done[static_cast<size_t>(i)] == 1; });
    auto r = std::move(slots[static_cast<size_t>(i)]);
    lock.unlock();
    consume(r);
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<ExperimentRecord> run_experiment(const ExperimentSpec& spec,
                                             const Dataset& train_data,
                                             const Dataset& test_data,
                                             const RecordSink& sink) {
  if (spec.architectures.empty() || spec.methods.empty() || spec.max_rates.empty() ||
      spec.seeds.empty()) {
    throw InvalidInput("experiment spec needs architectures, methods, rates and seeds");
  }
  for (double r : spec.max_rates) {
    if (r < 0.0 || r > 1.0) {
      throw InvalidInput("experiment rate " + format_double(r) + " outside [0,1]");
    }
  }
  std::vector<Cell> cells;
  for (const auto& a : spec.architectures) {
    for (uint64_t s : spec.seeds) cells.push_back({a, s});
  }
  std::vector<ExperimentRecord> all;
  for_each_cell_ordered(
      static_cast<int>(cells.size()), spec.jobs,
      [&](int i) { return run_cell(spec, cells[static_cast<size_t>(i)], train_data, test_data); },
      [&](std::vector<ExperimentRecord>& records) {
        for (auto& r : records) {
          if (sink) sink(r);
          all.push_back(std::move(r));
        }
      });
  return all;
}

void write_results_csv(const std::vector<ExperimentRecord>& records, std::ostream& os) {
  os << "arch,hidden_layers,width,method,max_rate,seed,test_error,baseline_error\n";
  for (const auto& r : records) {
    os << r.arch << ',' << r.hidden_layers << ',' << r.width << ',' << r.method << ','
       << format_double(r.max_rate) << ',' << r.seed << ','
       << format_double(r.test_error) << ',' << format_double(r.baseline_error) << '\n';
  }
}

std::vector<ExperimentRecord> read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("results CSV is empty");
  if (line != "arch,hidden_layers,width,method,max_rate,seed,test_error,baseline_error") {
    throw FormatError("unexpected results CSV header: " + line);
  }
  std::vector<ExperimentRecord> records;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 8) {
      throw FormatError("results CSV row has " + std::to_string(fields.size()) +
                        " fields: " + line);
    }
    ExperimentRecord r;
    r.arch = fields[0];
    r.hidden_layers = std::stoi(fields[1]);
    r.width = static_cast<Index>(std::stoll(fields[2]));
    r.method = fields[3];
    r.max_rate = std::stod(fields[4]);
    r.seed = std::stoull(fields[5]);
    r.test_error = std::stod(fields[6]);
    r.baseline_error = std::stod(fields[7]);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<RankAgreement> rank_similarity(const Networkf& net,
                                           const std::vector<MIMatrix>& mi) {
  net.validate();
  if (static_cast<Index>(mi.size()) != net.depth()) {
    throw ShapeError("need one MI matrix per layer");
  }
  std::vector<std::vector<uint8_t>> keep;
  keep.push_back(std::vector<uint8_t>(static_cast<size_t>(net.input_dim), 1));
  for (const auto& l : net.layers) {
    keep.push_back(std::vector<uint8_t>(static_cast<size_t>(l.out_dim()), 1));
  }
  const LayerScores mi_s = mi_scores(mi, keep);
  const LayerScores mag_s = magnitude_scores(net);
  std::vector<RankAgreement> out;
  for (size_t l = 0; l < mi_s.size(); ++l) {
    RankAgreement a;
    a.layer = static_cast<int>(l) + 1;
    a.spearman = spearman(mi_s[l], mag_s[l]);
    a.kendall = kendall_tau(mi_s[l], mag_s[l]);
    out.push_back(a);
  }
  return out;
}

std::vector<RankReportRow> aggregate_rank_reports(
    const std::vector<std::vector<RankAgreement>>& per_seed) {
  if (per_seed.empty()) throw InvalidInput("no rank reports to aggregate");
  const size_t layers = per_seed.front().size();
  for (const auto& r : per_seed) {
    if (r.size() != layers) throw ShapeError("rank reports differ in layer count");
  }
  std::vector<RankReportRow> rows;
  for (size_t l = 0; l < layers; ++l) {
    for (const char* metric : {"spearman", "kendall"}) {
      RankReportRow row;
      row.layer = static_cast<int>(l) + 1;
      row.metric = metric;
      std::vector<double> vals;
      for (const auto& seed_report : per_seed) {
        const auto& a = seed_report[l];
        const auto& v = (row.metric == "spearman") ? a.spearman : a.kendall;
        if (v.has_value()) vals.push_back(*v);
      }
      row.count = static_cast<int>(vals.size());
      if (!vals.empty()) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var /= static_cast<double>(vals.size());
        row.mean = mean;
        row.stddev = std::sqrt(var);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_rank_report_csv(const std::vector<RankReportRow>& rows, std::ostream& os) {
  os << "layer,metric,mean,std\n";
  for (const auto& r : rows) {
    os << r.layer << ',' << r.metric << ',';
    if (r.count > 0) {
      os << format_double(r.mean) << ',' << format_double(r.stddev);
    } else {
      os << ',';  // undefined stays missing rather than 0
    }
    os << '\n';
  }
}

}  // namespace miprune
