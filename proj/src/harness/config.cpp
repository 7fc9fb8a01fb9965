#include "diloco/harness/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "diloco/error.hpp"
#include "diloco/harness/csv.hpp"

namespace diloco::harness {

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

// Reads keys out of a YAML map, remembering which ones were consumed so that
// leftovers can be reported as unknown.
class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ConfigError("key '" + display() + "': expected a mapping");
    }
  }

  bool has(std::string_view key) const { return node_.IsMap() && node_[std::string(key)]; }

  YAML::Node take(std::string_view key) {
    used_.insert(std::string(key));
    if (!node_.IsMap()) return YAML::Node();
    return node_[std::string(key)];
  }

  template <class T>
  void read(std::string_view key, T& out) {
    const YAML::Node n = take(key);
    if (!n || n.IsNull()) return;
    out = convert<T>(n, join(path_, key));
  }

  template <class T>
  static T convert(const YAML::Node& n, const std::string& where) {
    if (!n.IsScalar()) throw ConfigError("key '" + where + "': expected a scalar");
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      const auto v = as<long long>(n, where, "a non-negative integer");
      if (v < 0) throw ConfigError("key '" + where + "': expected a non-negative integer");
      return static_cast<T>(v);
    } else if constexpr (std::is_same_v<T, std::int64_t>) {
      return static_cast<T>(as<long long>(n, where, "an integer"));
    } else if constexpr (std::is_same_v<T, double>) {
      return as<double>(n, where, "a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      return as<bool>(n, where, "true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return n.Scalar();
    } else if constexpr (std::is_same_v<T, Method>) {
      return wrap([&] { return parse_method(n.Scalar()); }, where);
    } else if constexpr (std::is_same_v<T, QuantFormat>) {
      return wrap([&] { return parse_quant_format(n.Scalar()); }, where);
    } else if constexpr (std::is_same_v<T, ObjectiveKind>) {
      return wrap([&] { return parse_objective_kind(n.Scalar()); }, where);
    } else if constexpr (std::is_same_v<T, netsim::OverlapKind>) {
      return wrap([&] { return netsim::parse_overlap_kind(n.Scalar()); }, where);
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

  template <class T>
  void read_list(std::string_view key, std::vector<T>& out) {
    const YAML::Node n = take(key);
    if (!n || n.IsNull()) return;
    const std::string where = join(path_, key);
    if (!n.IsSequence()) throw ConfigError("key '" + where + "': expected a list");
    if (n.size() == 0) throw ConfigError("key '" + where + "': sweep axis is empty");
    out.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      out.push_back(convert<T>(n[i], where + "[" + std::to_string(i) + "]"));
    }
  }

  void finish() const {
    if (!node_.IsMap()) return;
    std::set<std::string> seen;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen.insert(key).second) throw ConfigError("duplicate key '" + join(path_, key) + "'");
      if (!used_.count(key)) throw ConfigError("unknown key '" + join(path_, key) + "'");
    }
  }

  const std::string& path() const { return path_; }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  template <class T>
  static T as(const YAML::Node& n, const std::string& where, const char* expected) {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("key '" + where + "': expected " + expected + ", got '" + n.Scalar() + "'");
    }
  }

  template <class F>
  static auto wrap(F&& f, const std::string& where) {
    try {
      return f();
    } catch (const ConfigError& e) {
      throw ConfigError("key '" + where + "': " + e.what());
    }
  }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

void read_objective(const YAML::Node& node, const std::string& path, ObjectiveSpec& o) {
  MapReader r(node, path);
  r.read("kind", o.kind);
  r.read("dim", o.dim);
  r.read("heterogeneity", o.heterogeneity);
  r.read("noise", o.noise);
  r.read("batch_size", o.batch_size);
  r.read("probe_size", o.probe_size);
  r.read("input_dim", o.input_dim);
  r.read("condition", o.condition);
  r.read("curvature_spread", o.curvature_spread);
  r.finish();
}

void read_inner(const YAML::Node& node, const std::string& path, AdamConfig& a) {
  MapReader r(node, path);
  r.read("lr", a.lr);
  r.read("beta1", a.beta1);
  r.read("beta2", a.beta2);
  r.read("eps", a.eps);
  r.read("weight_decay", a.weight_decay);
  r.finish();
}

void read_outer(const YAML::Node& node, const std::string& path, NesterovConfig& n) {
  MapReader r(node, path);
  r.read("lr", n.lr);
  r.read("momentum", n.momentum);
  r.finish();
}

// Training keys shared by `base` and each variant entry.
void read_training_keys(MapReader& r, TrainConfig& c) {
  r.read("method", c.method);
  r.read("replicas", c.replicas);
  r.read("H", c.H);
  r.read("steps", c.steps);
  r.read("delay", c.delay);
  r.read("fragments", c.fragments);
  r.read("quant", c.quant);
  r.read("resync_period", c.resync_period);
  r.read("reset_inner_state", c.reset_inner_state);
  if (auto n = r.take("objective")) read_objective(n, join(r.path(), "objective"), c.objective);
  if (auto n = r.take("inner")) read_inner(n, join(r.path(), "inner"), c.inner);
  if (auto n = r.take("outer")) read_outer(n, join(r.path(), "outer"), c.outer);
}

netsim::ModelSpec read_model(const YAML::Node& node, const std::string& path) {
  if (node.IsScalar()) {
    try {
      return netsim::ModelSpec::preset(node.Scalar());
    } catch (const ConfigError& e) {
      throw ConfigError("key '" + path + "': " + e.what());
    }
  }
  netsim::ModelSpec m;
  MapReader r(node, path);
  r.read("name", m.name);
  r.read("params", m.params);
  r.read("layers", m.layers);
  r.read("step_time", m.step_time);
  r.finish();
  if (m.name.empty()) throw ConfigError("key '" + path + ".name': required");
  return m;
}

NetsimStrategy read_strategy(const YAML::Node& node, const std::string& path) {
  NetsimStrategy s;
  MapReader r(node, path);
  if (!r.has("kind")) throw ConfigError("key '" + path + ".kind': required");
  r.read("kind", s.strategy.kind);
  r.read("name", s.name);
  r.read("overlap_steps", s.strategy.overlap_steps);
  r.read("delay_rounds", s.strategy.delay_rounds);
  r.read("layers_per_fragment", s.strategy.layers_per_fragment);
  r.finish();
  if (s.name.empty()) s.name = std::string(netsim::to_string(s.strategy.kind));
  return s;
}

void read_netsim(const YAML::Node& node, NetsimSweep& n) {
  MapReader r(node, "netsim");
  if (auto models = r.take("models")) {
    if (!models.IsSequence()) throw ConfigError("key 'netsim.models': expected a list");
    n.models.clear();
    for (std::size_t i = 0; i < models.size(); ++i) {
      n.models.push_back(read_model(models[i], "netsim.models[" + std::to_string(i) + "]"));
    }
  }
  if (auto strategies = r.take("strategies")) {
    if (!strategies.IsSequence()) throw ConfigError("key 'netsim.strategies': expected a list");
    n.strategies.clear();
    for (std::size_t i = 0; i < strategies.size(); ++i) {
      n.strategies.push_back(
          read_strategy(strategies[i], "netsim.strategies[" + std::to_string(i) + "]"));
    }
  }
  r.read_list("H", n.H);
  r.read_list("formats", n.formats);
  r.read("replicas", n.replicas);
  if (auto bw = r.take("bandwidth")) {
    MapReader b(bw, "netsim.bandwidth");
    b.read("min", n.bandwidth_min);
    b.read("max", n.bandwidth_max);
    b.read("points", n.bandwidth_points);
    b.finish();
  }
  r.read_list("cu_targets", n.cu_targets);
  r.read("total_steps", n.total_steps);
  r.finish();
}

ExperimentConfig read_experiment(const YAML::Node& root) {
  ExperimentConfig cfg;
  MapReader r(root, "");
  r.read("name", cfg.name);
  std::string kind = "training";
  r.read("kind", kind);
  if (kind == "training") {
    cfg.kind = ExperimentKind::Training;
  } else if (kind == "netsim") {
    cfg.kind = ExperimentKind::Netsim;
  } else {
    throw ConfigError("key 'kind': expected training or netsim, got '" + kind + "'");
  }
  r.read("seed", cfg.seed);
  r.read("repetitions", cfg.repetitions);

  if (cfg.kind == ExperimentKind::Training) {
    if (r.has("netsim")) throw ConfigError("key 'netsim' requires kind: netsim");
    TrainConfig base;
    if (auto n = r.take("base")) {
      MapReader b(n, "base");
      read_training_keys(b, base);
      b.finish();
    }
    if (auto list = r.take("variants")) {
      if (!list.IsSequence()) throw ConfigError("key 'variants': expected a list");
      if (list.size() == 0) throw ConfigError("key 'variants': list is empty");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "variants[" + std::to_string(i) + "]";
        Variant v{"", base};
        MapReader vr(list[i], path);
        vr.read("name", v.name);
        read_training_keys(vr, v.config);
        vr.finish();
        if (v.name.empty()) v.name = std::string(to_string(v.config.method));
        cfg.variants.push_back(std::move(v));
      }
    } else {
      cfg.variants.push_back({std::string(to_string(base.method)), base});
    }
    if (auto n = r.take("sweep")) {
      MapReader s(n, "sweep");
      s.read_list("H", cfg.sweep.H);
      s.read_list("delay", cfg.sweep.delay);
      s.read_list("replicas", cfg.sweep.replicas);
      s.read_list("fragments", cfg.sweep.fragments);
      s.read_list("quant", cfg.sweep.quant);
      s.finish();
    }
  } else {
    for (const char* key : {"base", "variants", "sweep"}) {
      if (r.has(key)) throw ConfigError("key '" + std::string(key) + "' requires kind: training");
    }
    if (auto n = r.take("netsim")) {
      read_netsim(n, cfg.netsim);
    } else {
      throw ConfigError("key 'netsim': required for kind: netsim");
    }
  }
  r.finish();
  cfg.validate();
  return cfg;
}

// Emitter helpers: every number goes through format_number so the canonical
// text does not depend on stream precision.
void kv(YAML::Emitter& e, const char* key, double v) {
  e << YAML::Key << key << YAML::Value << format_number(v);
}
void kv_int(YAML::Emitter& e, const char* key, long long v) {
  e << YAML::Key << key << YAML::Value << std::to_string(v);
}
void kv_str(YAML::Emitter& e, const char* key, std::string_view v) {
  e << YAML::Key << key << YAML::Value << std::string(v);
}

template <class T, class F>
void kv_list(YAML::Emitter& e, const char* key, const std::vector<T>& values, F&& fmt) {
  e << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& v : values) e << fmt(v);
  e << YAML::EndSeq;
}

void emit_training(YAML::Emitter& e, const TrainConfig& c) {
  kv_str(e, "method", to_string(c.method));
  kv_int(e, "replicas", static_cast<long long>(c.replicas));
  kv_int(e, "H", c.H);
  kv_int(e, "steps", c.steps);
  kv_int(e, "delay", c.delay);
  kv_int(e, "fragments", static_cast<long long>(c.fragments));
  kv_str(e, "quant", to_string(c.quant));
  kv_int(e, "resync_period", c.resync_period);
  e << YAML::Key << "reset_inner_state" << YAML::Value << c.reset_inner_state;

  const auto& o = c.objective;
  e << YAML::Key << "objective" << YAML::Value << YAML::BeginMap;
  kv_str(e, "kind", to_string(o.kind));
  kv_int(e, "dim", static_cast<long long>(o.dim));
  kv(e, "heterogeneity", o.heterogeneity);
  kv(e, "noise", o.noise);
  kv_int(e, "batch_size", static_cast<long long>(o.batch_size));
  kv_int(e, "probe_size", static_cast<long long>(o.probe_size));
  kv_int(e, "input_dim", static_cast<long long>(o.input_dim));
  kv(e, "condition", o.condition);
  kv(e, "curvature_spread", o.curvature_spread);
  e << YAML::EndMap;

  e << YAML::Key << "inner" << YAML::Value << YAML::BeginMap;
  kv(e, "lr", c.inner.lr);
  kv(e, "beta1", c.inner.beta1);
  kv(e, "beta2", c.inner.beta2);
  kv(e, "eps", c.inner.eps);
  kv(e, "weight_decay", c.inner.weight_decay);
  e << YAML::EndMap;

  e << YAML::Key << "outer" << YAML::Value << YAML::BeginMap;
  kv(e, "lr", c.outer.lr);
  kv(e, "momentum", c.outer.momentum);
  e << YAML::EndMap;
}

const auto kIntText = [](auto v) { return std::to_string(v); };
const auto kFormatText = [](QuantFormat f) { return std::string(to_string(f)); };

void emit_netsim(YAML::Emitter& e, const NetsimSweep& n) {
  e << YAML::Key << "netsim" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "models" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : n.models) {
    e << YAML::Flow << YAML::BeginMap;
    kv_str(e, "name", m.name);
    kv_int(e, "params", static_cast<long long>(m.params));
    kv_int(e, "layers", m.layers);
    kv(e, "step_time", m.step_time);
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "strategies" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : n.strategies) {
    e << YAML::Flow << YAML::BeginMap;
    kv_str(e, "name", s.name);
    kv_str(e, "kind", netsim::to_string(s.strategy.kind));
    kv_int(e, "overlap_steps", s.strategy.overlap_steps);
    kv_int(e, "delay_rounds", s.strategy.delay_rounds);
    kv_int(e, "layers_per_fragment", s.strategy.layers_per_fragment);
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  kv_list(e, "H", n.H, kIntText);
  kv_list(e, "formats", n.formats, kFormatText);
  kv_int(e, "replicas", n.replicas);
  e << YAML::Key << "bandwidth" << YAML::Value << YAML::Flow << YAML::BeginMap;
  kv(e, "min", n.bandwidth_min);
  kv(e, "max", n.bandwidth_max);
  kv_int(e, "points", static_cast<long long>(n.bandwidth_points));
  e << YAML::EndMap;
  if (!n.cu_targets.empty()) kv_list(e, "cu_targets", n.cu_targets, format_number);
  kv_int(e, "total_steps", n.total_steps);
  e << YAML::EndMap;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  return kind == ExperimentKind::Training ? "training" : "netsim";
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw ConfigError("key 'name': must not be empty");
  if (repetitions < 1) throw ConfigError("key 'repetitions': must be >= 1");
  if (kind == ExperimentKind::Training) {
    if (variants.empty()) throw ConfigError("key 'variants': list is empty");
    std::set<std::string> names;
    for (std::size_t i = 0; i < variants.size(); ++i) {
      if (!names.insert(variants[i].name).second) {
        throw ConfigError("key 'variants[" + std::to_string(i) + "].name': duplicate name '" +
                          variants[i].name + "'");
      }
    }
    return;
  }
  const auto& n = netsim;
  if (n.models.empty()) throw ConfigError("key 'netsim.models': sweep axis is empty");
  if (n.strategies.empty()) throw ConfigError("key 'netsim.strategies': sweep axis is empty");
  if (n.H.empty()) throw ConfigError("key 'netsim.H': sweep axis is empty");
  if (n.formats.empty()) throw ConfigError("key 'netsim.formats': sweep axis is empty");
  if (n.replicas < 1) throw ConfigError("key 'netsim.replicas': must be >= 1");
  if (!(n.bandwidth_min > 0.0) || !(n.bandwidth_max >= n.bandwidth_min) ||
      n.bandwidth_points < 1) {
    throw ConfigError("key 'netsim.bandwidth': need 0 < min <= max and points >= 1");
  }
  for (double t : n.cu_targets) {
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("key 'netsim.cu_targets': values must lie in (0, 1]");
  }
  if (n.total_steps < 0) throw ConfigError("key 'netsim.total_steps': must be >= 0");
  for (const auto& m : n.models) m.validate();
  for (const auto& s : n.strategies) {
    auto st = s.strategy;
    for (auto h : n.H) {
      st.H = h;
      st.validate();
    }
  }
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  std::vector<std::uint64_t> out;
  for (std::size_t r = 0; r < repetitions; ++r) out.push_back(seed + r);
  return out;
}

ExperimentConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping at the top level");

  if (root["config_hash"]) {
    MapReader m(root, "");
    std::string expected;
    m.read("config_hash", expected);
    for (const char* key : {"name", "created", "versions", "seeds", "runs", "diverged", "outputs"}) {
      m.take(key);
    }
    const YAML::Node inner = m.take("config");
    m.finish();
    if (!inner) throw ConfigError("key 'config': required in a manifest");
    ExperimentConfig cfg = read_experiment(inner);
    if (config_hash(cfg) != expected) {
      throw ConfigError("key 'config_hash': manifest hash " + expected +
                        " does not match its config (" + config_hash(cfg) + ")");
    }
    return cfg;
  }
  return read_experiment(root);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string emit_config(const ExperimentConfig& cfg) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  kv_str(e, "name", cfg.name);
  kv_str(e, "kind", to_string(cfg.kind));
  kv_int(e, "seed", static_cast<long long>(cfg.seed));
  kv_int(e, "repetitions", static_cast<long long>(cfg.repetitions));
  if (cfg.kind == ExperimentKind::Training) {
    e << YAML::Key << "variants" << YAML::Value << YAML::BeginSeq;
    for (const auto& v : cfg.variants) {
      e << YAML::BeginMap;
      kv_str(e, "name", v.name);
      emit_training(e, v.config);
      e << YAML::EndMap;
    }
    e << YAML::EndSeq;
    const auto& s = cfg.sweep;
    if (!s.H.empty() || !s.delay.empty() || !s.replicas.empty() || !s.fragments.empty() ||
        !s.quant.empty()) {
      e << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
      if (!s.H.empty()) kv_list(e, "H", s.H, kIntText);
      if (!s.delay.empty()) kv_list(e, "delay", s.delay, kIntText);
      if (!s.replicas.empty()) kv_list(e, "replicas", s.replicas, kIntText);
      if (!s.fragments.empty()) kv_list(e, "fragments", s.fragments, kIntText);
      if (!s.quant.empty()) kv_list(e, "quant", s.quant, kFormatText);
      e << YAML::EndMap;
    }
  } else {
    emit_netsim(e, cfg.netsim);
  }
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(emit_config(cfg))));
  return buf;
}

}  // namespace diloco::harness
