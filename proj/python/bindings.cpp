#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "diloco/error.hpp"
#include "diloco/harness/compare.hpp"
#include "diloco/harness/experiment.hpp"
#include "diloco/harness/presets.hpp"
#include "diloco/netsim.hpp"
#include "diloco/objectives.hpp"
#include "diloco/optim.hpp"
#include "diloco/protocol.hpp"
#include "diloco/quant.hpp"

namespace py = pybind11;
using namespace diloco;

namespace {

using Vec = std::vector<double>;

ParamVector pv(const Vec& v) { return ParamVector(v); }
Vec vec(const ParamVector& p) { return p.values(); }

py::dict trace_dict(const TrainingTrace& t) {
  py::dict d;
  d["eval_loss"] = t.eval_loss;
  d["outer_grad_norms"] = t.outer_grad_norms;
  d["replica_divergence"] = t.replica_divergence;
  d["reduce_count"] = t.reduce_count;
  d["payload_bits"] = t.payload_bits;
  d["payload_bytes"] = t.payload_bytes;
  d["diverged"] = t.diverged;
  d["diverged_at"] = t.diverged_at;
  d["final_eval_loss"] = t.final_eval_loss();
  d["final_divergence"] = t.final_divergence();
  std::vector<Vec> params;
  for (const auto& p : t.final_params) params.push_back(p.values());
  d["final_params"] = params;
  py::list consumed;
  for (const auto& r : t.consumed) {
    consumed.append(py::make_tuple(r.fragment, r.sent_round, r.consumed_round));
  }
  d["consumed"] = consumed;
  return d;
}

py::dict summary_dict(const harness::CompareSummary& s) {
  py::dict d;
  d["baseline"] = s.baseline;
  d["candidate"] = s.candidate;
  d["pairs"] = s.pairs.size();
  d["baseline_diverged"] = s.baseline_diverged;
  d["candidate_diverged"] = s.candidate_diverged;
  d["mean_delta"] = s.mean_delta;
  d["mean_relative"] = s.mean_relative;
  d["median_relative"] = s.median_relative;
  d["candidate_worse"] = s.candidate_worse;
  d["candidate_better"] = s.candidate_better;
  d["ties"] = s.ties;
  d["verdict"] = s.verdict;
  py::list deltas;
  for (const auto& p : s.pairs) {
    deltas.append(py::make_tuple(p.key, p.seed, p.baseline, p.candidate, p.delta));
  }
  d["deltas"] = deltas;
  return d;
}

py::dict report_dict(const harness::ExperimentReport& r) {
  py::dict d;
  d["name"] = r.config.name;
  d["runs_csv"] = r.runs_csv;
  d["manifest"] = r.manifest;
  d["rows"] = r.rows;
  d["diverged"] = r.diverged;
  return d;
}

harness::RunOptions options(const std::string& out_dir, std::size_t jobs,
                            std::optional<std::uint64_t> seed) {
  harness::RunOptions o;
  o.out_dir = out_dir;
  o.jobs = jobs;
  o.seed = seed;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "DiLoCo desk-scale simulator core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::enum_<Method>(m, "Method")
      .value("DataParallel", Method::DataParallel)
      .value("Standard", Method::Standard)
      .value("NaiveDelayed", Method::NaiveDelayed)
      .value("EagerDelayed", Method::EagerDelayed);

  py::enum_<QuantFormat>(m, "QuantFormat")
      .value("Fp32", QuantFormat::Fp32)
      .value("Bf16", QuantFormat::Bf16)
      .value("Fp8E4M3", QuantFormat::Fp8E4M3)
      .value("Fp4E2M1", QuantFormat::Fp4E2M1);

  py::enum_<ObjectiveKind>(m, "ObjectiveKind")
      .value("Quadratic", ObjectiveKind::Quadratic)
      .value("Logistic", ObjectiveKind::Logistic)
      .value("MlpRegression", ObjectiveKind::MlpRegression)
      .value("Linear", ObjectiveKind::Linear);

  // tensorcore
  m.def("average", [](const std::vector<Vec>& xs) {
    std::vector<ParamVector> ps;
    for (const auto& x : xs) ps.emplace_back(x);
    return vec(average_vectors(ps));
  });
  m.def("l2_norm", [](const Vec& x) { return l2_norm(pv(x)); });

  // quant
  m.def("parse_format", [](const std::string& s) { return parse_quant_format(s); });
  m.def("round_to_format", &round_to_format, py::arg("x"), py::arg("format"));
  m.def("quantize", [](const Vec& x, QuantFormat f) { return vec(quantize_dequantize(pv(x), f)); },
        py::arg("values"), py::arg("format"));
  m.def("payload_bits", &payload_bits, py::arg("dim"), py::arg("format"));

  // objectives
  py::class_<ObjectiveSpec>(m, "ObjectiveSpec")
      .def(py::init<>())
      .def_readwrite("kind", &ObjectiveSpec::kind)
      .def_readwrite("dim", &ObjectiveSpec::dim)
      .def_readwrite("heterogeneity", &ObjectiveSpec::heterogeneity)
      .def_readwrite("noise", &ObjectiveSpec::noise)
      .def_readwrite("seed", &ObjectiveSpec::seed)
      .def_readwrite("batch_size", &ObjectiveSpec::batch_size)
      .def_readwrite("probe_size", &ObjectiveSpec::probe_size)
      .def_readwrite("input_dim", &ObjectiveSpec::input_dim)
      .def_readwrite("condition", &ObjectiveSpec::condition)
      .def_readwrite("curvature_spread", &ObjectiveSpec::curvature_spread);

  py::class_<Batch>(m, "Batch")
      .def_readonly("rows", &Batch::rows)
      .def_readonly("cols", &Batch::cols)
      .def_readonly("inputs", &Batch::inputs)
      .def_readonly("targets", &Batch::targets);

  py::class_<ShardSet>(m, "ShardSet")
      .def(py::init<ObjectiveSpec, std::size_t, std::uint64_t>(), py::arg("spec"),
           py::arg("shards"), py::arg("seed"))
      .def("batch", &ShardSet::batch, py::arg("shard"), py::arg("step"))
      .def("probe", &ShardSet::probe, py::arg("shard"))
      .def("target", [](const ShardSet& s, std::size_t m) { return vec(s.target(m)); })
      .def("initial_params", [](const ShardSet& s) { return vec(s.initial_params()); });

  m.def("loss_and_grad",
        [](const ObjectiveSpec& spec, const Vec& theta, const Batch& batch) {
          auto [l, g] = loss_and_grad(spec, pv(theta), batch);
          return py::make_tuple(l, vec(g));
        },
        py::arg("spec"), py::arg("theta"), py::arg("batch"));
  m.def("finite_diff_grad",
        [](const ObjectiveSpec& spec, const Vec& theta, const Batch& batch, double eps) {
          return vec(finite_diff_grad(spec, pv(theta), batch, eps));
        },
        py::arg("spec"), py::arg("theta"), py::arg("batch"), py::arg("eps") = 1e-5);

  // optim
  py::class_<AdamConfig>(m, "AdamConfig")
      .def(py::init<>())
      .def_readwrite("lr", &AdamConfig::lr)
      .def_readwrite("beta1", &AdamConfig::beta1)
      .def_readwrite("beta2", &AdamConfig::beta2)
      .def_readwrite("eps", &AdamConfig::eps)
      .def_readwrite("weight_decay", &AdamConfig::weight_decay);

  py::class_<NesterovConfig>(m, "NesterovConfig")
      .def(py::init<>())
      .def_readwrite("lr", &NesterovConfig::lr)
      .def_readwrite("momentum", &NesterovConfig::momentum);

  // Functional Adam: returns (theta, m, v, t).
  m.def("adam_step",
        [](const Vec& theta, const Vec& grad, const Vec& m1, const Vec& v1, std::uint64_t t,
           const AdamConfig& cfg) {
          AdamState s{cfg, pv(m1), pv(v1), t};
          auto [next, out] = adam_step(std::move(s), pv(theta), pv(grad));
          return py::make_tuple(vec(out), vec(next.m), vec(next.v), next.t);
        },
        py::arg("theta"), py::arg("grad"), py::arg("m"), py::arg("v"), py::arg("t"),
        py::arg("config") = AdamConfig{});
  // Returns (theta, velocity).
  m.def("nesterov_outer_step",
        [](const Vec& anchor, const Vec& delta, const Vec& velocity, const NesterovConfig& cfg) {
          NesterovState s{cfg, pv(velocity)};
          auto [next, out] = nesterov_outer_step(std::move(s), pv(anchor), pv(delta));
          return py::make_tuple(vec(out), vec(next.velocity));
        },
        py::arg("anchor"), py::arg("delta"), py::arg("velocity"),
        py::arg("config") = NesterovConfig{});

  // protocol
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("method", &TrainConfig::method)
      .def_readwrite("replicas", &TrainConfig::replicas)
      .def_readwrite("H", &TrainConfig::H)
      .def_readwrite("steps", &TrainConfig::steps)
      .def_readwrite("delay", &TrainConfig::delay)
      .def_readwrite("objective", &TrainConfig::objective)
      .def_readwrite("inner", &TrainConfig::inner)
      .def_readwrite("outer", &TrainConfig::outer)
      .def_readwrite("fragments", &TrainConfig::fragments)
      .def_readwrite("quant", &TrainConfig::quant)
      .def_readwrite("resync_period", &TrainConfig::resync_period)
      .def_readwrite("reset_inner_state", &TrainConfig::reset_inner_state)
      .def_readwrite("seed", &TrainConfig::seed)
      .def("validate", &TrainConfig::validate);

  m.def("eager_combine",
        [](const Vec& now, const Vec& stale, const Vec& avg, std::size_t replicas) {
          return vec(eager_combine(pv(now), pv(stale), pv(avg), replicas));
        },
        py::arg("local_now"), py::arg("local_stale"), py::arg("avg_stale"), py::arg("replicas"));
  m.def("run_training",
        [](const TrainConfig& c) {
          TrainingTrace t;
          {
            py::gil_scoped_release release;
            t = run_training(c);
          }
          return trace_dict(t);
        },
        py::arg("config"));

  // netsim
  auto ns = m.def_submodule("netsim", "Compute-utilization model");
  py::enum_<netsim::OverlapKind>(ns, "OverlapKind")
      .value("DataParallel", netsim::OverlapKind::DataParallel)
      .value("NoOverlap", netsim::OverlapKind::NoOverlap)
      .value("InnerStepOverlap", netsim::OverlapKind::InnerStepOverlap)
      .value("OuterStepOverlap", netsim::OverlapKind::OuterStepOverlap);
  py::class_<netsim::ModelSpec>(ns, "ModelSpec")
      .def(py::init<>())
      .def_static("preset", &netsim::ModelSpec::preset)
      .def_readwrite("name", &netsim::ModelSpec::name)
      .def_readwrite("params", &netsim::ModelSpec::params)
      .def_readwrite("layers", &netsim::ModelSpec::layers)
      .def_readwrite("step_time", &netsim::ModelSpec::step_time);
  py::class_<netsim::OverlapStrategy>(ns, "OverlapStrategy")
      .def(py::init<>())
      .def_readwrite("kind", &netsim::OverlapStrategy::kind)
      .def_readwrite("H", &netsim::OverlapStrategy::H)
      .def_readwrite("overlap_steps", &netsim::OverlapStrategy::overlap_steps)
      .def_readwrite("delay_rounds", &netsim::OverlapStrategy::delay_rounds)
      .def_readwrite("layers_per_fragment", &netsim::OverlapStrategy::layers_per_fragment)
      .def_readwrite("format", &netsim::OverlapStrategy::format);
  py::class_<netsim::CUReport>(ns, "CUReport")
      .def_readonly("compute_seconds", &netsim::CUReport::compute_seconds)
      .def_readonly("comm_seconds", &netsim::CUReport::comm_seconds)
      .def_readonly("stall_seconds", &netsim::CUReport::stall_seconds)
      .def_readonly("wall_seconds", &netsim::CUReport::wall_seconds)
      .def_readonly("utilization", &netsim::CUReport::utilization);
  ns.def("simulate", &netsim::simulate, py::arg("model"), py::arg("strategy"),
         py::arg("replicas"), py::arg("bandwidth_gbps"), py::arg("total_steps"));
  ns.def("min_bandwidth_for_cu", &netsim::min_bandwidth_for_cu, py::arg("model"),
         py::arg("strategy"), py::arg("replicas"), py::arg("target_cu"),
         py::arg("total_steps") = 0);

  // harness
  m.def("preset_names", [] {
    std::vector<std::string> out;
    for (auto n : harness::preset_names()) out.emplace_back(n);
    return out;
  });
  m.def("run_preset",
        [](const std::string& name, const std::string& out_dir, std::size_t jobs,
           std::optional<std::uint64_t> seed) {
          harness::ExperimentReport r;
          {
            py::gil_scoped_release release;
            r = harness::run_experiment(harness::load_preset(name), options(out_dir, jobs, seed));
          }
          return report_dict(r);
        },
        py::arg("name"), py::arg("out_dir"), py::arg("jobs") = 1, py::arg("seed") = py::none());
  m.def("run_config",
        [](const std::string& path, const std::string& out_dir, std::size_t jobs,
           std::optional<std::uint64_t> seed) {
          harness::ExperimentReport r;
          {
            py::gil_scoped_release release;
            r = harness::run_experiment_file(path, options(out_dir, jobs, seed));
          }
          return report_dict(r);
        },
        py::arg("path"), py::arg("out_dir"), py::arg("jobs") = 1, py::arg("seed") = py::none());
  m.def("compare",
        [](const std::string& csv, const std::string& a, const std::string& b) {
          return summary_dict(harness::compare_runs_file(csv, a, b));
        },
        py::arg("runs_csv"), py::arg("baseline"), py::arg("candidate"));
}
