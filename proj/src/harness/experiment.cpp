#include "diloco/harness/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <thread>

#include "diloco/error.hpp"

#ifndef DILOCO_VERSION
#define DILOCO_VERSION "unknown"
#endif

namespace diloco::harness {

namespace {

// Runs task(i) for i in [0, count) on `threads` workers. The first exception
// (by index) is rethrown after every worker has stopped.
template <class Task>
void parallel_for(std::size_t count, std::size_t threads, Task&& task) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <class T>
std::vector<T> axis_or(const std::vector<T>& axis, T fallback) {
  return axis.empty() ? std::vector<T>{fallback} : axis;
}

std::string optional_number(double v) { return std::isfinite(v) ? format_number(v) : ""; }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::filesystem::path& path, const ExperimentConfig& cfg,
                    std::size_t runs, std::size_t diverged,
                    const std::vector<std::string>& outputs) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << cfg.name;
  e << YAML::Key << "config_hash" << YAML::Value << config_hash(cfg);
  e << YAML::Key << "created" << YAML::Value << utc_timestamp();
  e << YAML::Key << "versions" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "diloco_sim" << YAML::Value << DILOCO_VERSION;
  e << YAML::Key << "compiler" << YAML::Value << __VERSION__;
  e << YAML::Key << "cxx_standard" << YAML::Value << std::to_string(__cplusplus);
  e << YAML::EndMap;
  e << YAML::Key << "seeds" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto s : cfg.seeds()) e << std::to_string(s);
  e << YAML::EndSeq;
  e << YAML::Key << "runs" << YAML::Value << std::to_string(runs);
  e << YAML::Key << "diverged" << YAML::Value << std::to_string(diverged);
  e << YAML::Key << "outputs" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& o : outputs) e << o;
  e << YAML::EndSeq;
  e << YAML::Key << "config" << YAML::Value << YAML::Load(emit_config(cfg));
  e << YAML::EndMap;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << e.c_str() << "\n";
}

}  // namespace

std::vector<TrainingJob> expand_training(const ExperimentConfig& cfg) {
  if (cfg.kind != ExperimentKind::Training) {
    throw ConfigError("expand_training: not a training experiment");
  }
  cfg.validate();
  std::vector<TrainingJob> jobs;
  const auto& s = cfg.sweep;
  for (const auto& v : cfg.variants) {
    const auto& base = v.config;
    // The delay axis means nothing to synchronous methods; sweeping it would
    // only duplicate rows.
    const auto delays = is_delayed(base.method) ? axis_or(s.delay, base.delay)
                                                : std::vector<std::int64_t>{base.delay};
    for (auto H : axis_or(s.H, base.H)) {
      for (auto k : delays) {
        for (auto M : axis_or(s.replicas, base.replicas)) {
          for (auto F : axis_or(s.fragments, base.fragments)) {
            for (auto q : axis_or(s.quant, base.quant)) {
              for (auto seed : cfg.seeds()) {
                TrainConfig c = base;
                c.H = H;
                c.delay = k;
                c.replicas = M;
                c.fragments = F;
                c.quant = q;
                c.seed = seed;
                c.objective.seed = seed;
                try {
                  c.validate();
                } catch (const ConfigError& e) {
                  throw ConfigError("variant '" + v.name + "' (H=" + std::to_string(H) +
                                    "): " + e.what());
                }
                jobs.push_back({v.name, std::move(c)});
              }
            }
          }
        }
      }
    }
  }
  return jobs;
}

std::vector<TrainingResult> run_training_jobs(const std::vector<TrainingJob>& jobs,
                                              std::size_t threads) {
  std::vector<TrainingResult> results(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const auto trace = run_training(jobs[i].config);
    auto& r = results[i];
    r.variant = jobs[i].variant;
    r.config = jobs[i].config;
    r.final_eval_loss = trace.final_eval_loss();
    r.diverged = trace.diverged;
    r.total_payload_bytes = trace.payload_bytes;
    r.replica_divergence = trace.final_divergence();
  });
  return results;
}

NetsimResult run_netsim_sweep(const ExperimentConfig& cfg, std::size_t threads) {
  if (cfg.kind != ExperimentKind::Netsim) {
    throw ConfigError("run_netsim_sweep: not a netsim experiment");
  }
  cfg.validate();
  const auto& n = cfg.netsim;
  const auto grid = netsim::log_grid(n.bandwidth_min, n.bandwidth_max, n.bandwidth_points);

  struct Cell {
    const netsim::ModelSpec* model;
    const NetsimStrategy* strategy;
    std::int64_t H;
    QuantFormat format;
  };
  std::vector<Cell> cells;
  for (const auto& m : n.models) {
    for (const auto& s : n.strategies) {
      for (auto H : n.H) {
        for (auto f : n.formats) cells.push_back({&m, &s, H, f});
      }
    }
  }

  std::vector<std::vector<NetsimPoint>> curves(cells.size());
  std::vector<std::vector<MinBandwidthPoint>> mins(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const auto& cell = cells[i];
    netsim::OverlapStrategy st = cell.strategy->strategy;
    st.H = cell.H;
    st.format = cell.format;
    const std::int64_t k = st.kind == netsim::OverlapKind::OuterStepOverlap ? st.delay_rounds : 0;
    const std::int64_t steps = n.total_steps > 0 ? n.total_steps : netsim::default_total_steps(st);
    for (double bw : grid) {
      const auto rep = netsim::simulate(*cell.model, st, n.replicas, bw, steps);
      curves[i].push_back(
          {cell.strategy->name, cell.model->name, cell.H, k, cell.format, bw, rep.utilization});
    }
    for (double target : n.cu_targets) {
      mins[i].push_back({cell.strategy->name, cell.model->name, cell.H, k, cell.format, target,
                         netsim::min_bandwidth_for_cu(*cell.model, st, n.replicas, target, steps)});
    }
  });

  NetsimResult out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out.curve.insert(out.curve.end(), curves[i].begin(), curves[i].end());
    out.min_bandwidth.insert(out.min_bandwidth.end(), mins[i].begin(), mins[i].end());
  }
  return out;
}

CsvTable training_table(const std::vector<TrainingResult>& results) {
  CsvTable t;
  t.header = {"variant",   "method",  "objective",      "H",
              "k",         "M",       "format",         "outer_lr",
              "fragments", "seed",    "final_eval_loss", "diverged",
              "total_payload_bytes",  "replica_divergence"};
  for (const auto& r : results) {
    const auto& c = r.config;
    t.rows.push_back({r.variant,
                      std::string(to_string(c.method)),
                      std::string(to_string(c.objective.kind)),
                      std::to_string(c.H),
                      std::to_string(c.effective_delay()),
                      std::to_string(c.replicas),
                      std::string(to_string(c.quant)),
                      format_number(c.outer.lr),
                      std::to_string(c.fragments),
                      std::to_string(c.seed),
                      r.diverged ? "" : optional_number(r.final_eval_loss),
                      r.diverged ? "true" : "false",
                      std::to_string(r.total_payload_bytes),
                      optional_number(r.replica_divergence)});
  }
  return t;
}

CsvTable netsim_table(const std::vector<NetsimPoint>& points) {
  CsvTable t;
  t.header = {"method", "model", "H", "k", "format", "bandwidth_gbps", "utilization"};
  for (const auto& p : points) {
    t.rows.push_back({p.method, p.model, std::to_string(p.H), std::to_string(p.k),
                      std::string(to_string(p.format)), format_number(p.bandwidth_gbps),
                      format_number(p.utilization)});
  }
  return t;
}

CsvTable min_bandwidth_table(const std::vector<MinBandwidthPoint>& points) {
  CsvTable t;
  t.header = {"method", "model", "H", "k", "format", "target_cu", "min_bandwidth_gbps"};
  for (const auto& p : points) {
    t.rows.push_back({p.method, p.model, std::to_string(p.H), std::to_string(p.k),
                      std::string(to_string(p.format)), format_number(p.target_cu),
                      format_number(p.min_bandwidth_gbps)});
  }
  return t;
}

ExperimentReport run_experiment(ExperimentConfig cfg, const RunOptions& options) {
  if (options.seed) cfg.seed = *options.seed;
  cfg.validate();

  ExperimentReport report;
  std::vector<std::string> outputs{"runs.csv"};
  CsvTable runs;
  std::optional<CsvTable> extra;
  if (cfg.kind == ExperimentKind::Training) {
    const auto jobs = expand_training(cfg);
    const auto results = run_training_jobs(jobs, options.jobs);
    for (const auto& r : results) report.diverged += r.diverged ? 1 : 0;
    runs = training_table(results);
  } else {
    const auto result = run_netsim_sweep(cfg, options.jobs);
    runs = netsim_table(result.curve);
    if (!result.min_bandwidth.empty()) {
      extra = min_bandwidth_table(result.min_bandwidth);
      outputs.push_back("min_bandwidth.csv");
    }
  }

  std::filesystem::create_directories(options.out_dir);
  report.runs_csv = options.out_dir / "runs.csv";
  report.manifest = options.out_dir / "manifest.yaml";
  report.rows = runs.rows.size();
  write_csv_file(report.runs_csv, runs);
  if (extra) write_csv_file(options.out_dir / "min_bandwidth.csv", *extra);
  write_manifest(report.manifest, cfg, report.rows, report.diverged, outputs);
  report.config = std::move(cfg);
  return report;
}

ExperimentReport run_experiment_file(const std::filesystem::path& path,
                                     const RunOptions& options) {
  return run_experiment(load_config(path), options);
}

}  // namespace diloco::harness
