#include "pinnebm/harness.hpp"

#include "pinnebm/csv.hpp"
#include "pinnebm/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace pinnebm {

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::Omega: return "omega";
    case SweepParam::NData: return "n_data";
    case SweepParam::NoiseStrength: return "f_n";
  }
  return "?";
}

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "omega") return SweepParam::Omega;
  if (name == "n_data") return SweepParam::NData;
  if (name == "f_n") return SweepParam::NoiseStrength;
  throw ConfigError("sweep", "expected omega, n_data or f_n, got '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Setter {
  const std::string& key;
  const std::string& value;
  long line;

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(key, what, line); }

  double real() const {
    double v = 0.0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size() || !std::isfinite(v)) {
      fail("expected a number, got '" + value + "'");
    }
    return v;
  }

  long integer() const {
    long v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
      fail("expected an integer, got '" + value + "'");
    }
    return v;
  }

  std::uint64_t unsigned_integer() const {
    std::uint64_t v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
      fail("expected a nonnegative integer, got '" + value + "'");
    }
    return v;
  }

  bool boolean() const {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail("expected true or false, got '" + value + "'");
  }

  std::vector<int> widths() const {
    std::vector<int> out;
    for (const auto& item : split_list(value)) {
      Setter s{key, item, line};
      const long w = s.integer();
      if (w <= 0) fail("widths must be positive");
      out.push_back(static_cast<int>(w));
    }
    if (out.empty()) fail("expected a comma-separated list of widths");
    return out;
  }

  std::vector<double> reals() const {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(Setter{key, item, line}.real());
    if (out.empty()) fail("expected a comma-separated list of numbers");
    return out;
  }

  template <class F>
  auto wrap(F&& parse) const {
    try {
      return parse(value);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(e.what());
    }
  }
};

using Apply = std::function<void(ExperimentConfig&, const Setter&)>;

const std::map<std::string, Apply>& setters() {
  static const std::map<std::string, Apply> table = {
      {"problem", [](ExperimentConfig& c, const Setter& s) { c.problem = s.wrap(parse_problem_kind); }},
      {"noise", [](ExperimentConfig& c, const Setter& s) { c.noise = s.wrap(parse_noise_kind); }},
      {"f_n", [](ExperimentConfig& c, const Setter& s) { c.f_n = s.real(); }},
      {"noise_shift", [](ExperimentConfig& c, const Setter& s) { c.noise_shift = s.real(); }},
      {"noise_base_scale", [](ExperimentConfig& c, const Setter& s) { c.noise_base_scale = s.real(); }},
      {"n_data", [](ExperimentConfig& c, const Setter& s) { c.n_data = s.integer(); }},
      {"n_val", [](ExperimentConfig& c, const Setter& s) { c.n_val = s.integer(); }},
      {"n_colloc", [](ExperimentConfig& c, const Setter& s) { c.n_colloc = s.integer(); }},
      {"variants",
       [](ExperimentConfig& c, const Setter& s) {
         c.variants.clear();
         for (const auto& v : split_list(s.value)) c.variants.push_back(s.wrap([&](const std::string&) { return parse_variant(v); }));
         if (c.variants.empty()) s.fail("expected at least one variant");
       }},
      {"iterations", [](ExperimentConfig& c, const Setter& s) { c.train.iterations = s.integer(); }},
      {"i_ebm", [](ExperimentConfig& c, const Setter& s) { c.train.i_ebm = s.integer(); }},
      {"n_ebm", [](ExperimentConfig& c, const Setter& s) { c.train.n_ebm = s.integer(); }},
      {"omega", [](ExperimentConfig& c, const Setter& s) { c.train.omega = s.real(); }},
      {"lr", [](ExperimentConfig& c, const Setter& s) { c.train.lr = s.real(); }},
      {"lr_decay_factor",
       [](ExperimentConfig& c, const Setter& s) {
         if (!c.train.lr_decay) c.train.lr_decay = LrDecay{};
         c.train.lr_decay->factor = s.real();
       }},
      {"lr_decay_at",
       [](ExperimentConfig& c, const Setter& s) {
         if (!c.train.lr_decay) c.train.lr_decay = LrDecay{};
         c.train.lr_decay->at = s.integer();
       }},
      {"lambda_init",
       [](ExperimentConfig& c, const Setter& s) {
         const std::vector<double> v = s.reals();
         c.train.lambda_init = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
       }},
      {"batch_data", [](ExperimentConfig& c, const Setter& s) { c.train.batch_data = s.integer(); }},
      {"batch_colloc", [](ExperimentConfig& c, const Setter& s) { c.train.batch_colloc = s.integer(); }},
      {"curve_stride", [](ExperimentConfig& c, const Setter& s) { c.train.curve_stride = s.integer(); }},
      {"pinn_hidden", [](ExperimentConfig& c, const Setter& s) { c.train.hidden = s.widths(); }},
      {"ebm_hidden", [](ExperimentConfig& c, const Setter& s) { c.train.ebm.hidden = s.widths(); }},
      {"ebm_dropout", [](ExperimentConfig& c, const Setter& s) { c.train.ebm.dropout = s.real(); }},
      {"ebm_grid", [](ExperimentConfig& c, const Setter& s) { c.train.ebm.grid_nodes = s.integer(); }},
      {"ebm_margin", [](ExperimentConfig& c, const Setter& s) { c.train.ebm.margin = s.real(); }},
      {"ebm_tau", [](ExperimentConfig& c, const Setter& s) { c.train.ebm.tau = s.real(); }},
      {"ebm_retries", [](ExperimentConfig& c, const Setter& s) { c.train.ebm.max_retries = static_cast<int>(s.integer()); }},
      {"n_replicas", [](ExperimentConfig& c, const Setter& s) { c.n_replicas = static_cast<int>(s.integer()); }},
      {"seed", [](ExperimentConfig& c, const Setter& s) { c.seed = s.unsigned_integer(); }},
      {"sweep",
       [](ExperimentConfig& c, const Setter& s) {
         if (s.value == "none") {
           c.sweep.reset();
           return;
         }
         const SweepParam p = s.wrap(parse_sweep_param);
         if (!c.sweep) c.sweep = Sweep{};
         c.sweep->param = p;
       }},
      {"sweep_values",
       [](ExperimentConfig& c, const Setter& s) {
         if (!c.sweep) c.sweep = Sweep{};
         c.sweep->values = s.reals();
       }},
      {"outdir", [](ExperimentConfig& c, const Setter& s) { c.outdir = s.value; }},
      {"workers", [](ExperimentConfig& c, const Setter& s) { c.workers = static_cast<int>(s.integer()); }},
      {"dataset", [](ExperimentConfig& c, const Setter& s) { c.dataset = s.value; }},
      {"export_runs", [](ExperimentConfig& c, const Setter& s) { c.export_runs = s.boolean(); }},
  };
  return table;
}

void apply(ExperimentConfig& config, const std::string& key, const std::string& value, long line) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError(key, "unknown key", line);
  if (value.empty()) throw ConfigError(key, "missing value", line);
  it->second(config, Setter{key, value, line});
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void ExperimentConfig::validate() const {
  if (!(f_n >= 0.0)) throw ConfigError("f_n", "must be nonnegative");
  if (noise_base_scale && !(*noise_base_scale >= 0.0)) throw ConfigError("noise_base_scale", "must be nonnegative");
  if (n_data <= 0) throw ConfigError("n_data", "must be positive");
  if (n_val <= 0) throw ConfigError("n_val", "must be positive");
  if (n_colloc <= 0) throw ConfigError("n_colloc", "must be positive");
  if (variants.empty()) throw ConfigError("variants", "at least one variant is required");
  if (n_replicas < 1) throw ConfigError("n_replicas", "must be at least 1");
  if (workers < 1) throw ConfigError("workers", "must be at least 1");
  if (train.iterations < 0) throw ConfigError("iterations", "must be nonnegative");
  if (train.i_ebm <= 0) throw ConfigError("i_ebm", "must be positive");
  if (train.n_ebm < 0) throw ConfigError("n_ebm", "must be nonnegative");
  if (!(train.omega >= 0.0)) throw ConfigError("omega", "must be nonnegative");
  if (!(train.lr > 0.0)) throw ConfigError("lr", "must be positive");
  if (train.lr_decay && !(train.lr_decay->factor > 0.0)) throw ConfigError("lr_decay_factor", "must be positive");
  if (train.lr_decay && train.lr_decay->at < 0) throw ConfigError("lr_decay_at", "must be nonnegative");
  if (train.batch_data <= 0) throw ConfigError("batch_data", "must be positive");
  if (train.batch_colloc <= 0) throw ConfigError("batch_colloc", "must be positive");
  if (train.batch_colloc > n_colloc) throw ConfigError("batch_colloc", "exceeds n_colloc");
  if (train.curve_stride <= 0) throw ConfigError("curve_stride", "must be positive");
  if (!(train.ebm.dropout >= 0.0 && train.ebm.dropout < 1.0)) throw ConfigError("ebm_dropout", "must lie in [0, 1)");
  if (train.ebm.grid_nodes < 2) throw ConfigError("ebm_grid", "needs at least two nodes");
  if (!(train.ebm.margin >= 0.0)) throw ConfigError("ebm_margin", "must be nonnegative");
  if (!(train.ebm.tau > 0.0)) throw ConfigError("ebm_tau", "must be positive");
  if (train.ebm.max_retries < 0) throw ConfigError("ebm_retries", "must be nonnegative");
  if (train.lambda_init && train.lambda_init->size() != (problem == ProblemKind::NavierStokes ? 2 : 1)) {
    throw ConfigError("lambda_init", "needs one value per PDE parameter");
  }
  if (problem == ProblemKind::NavierStokes && dataset.empty()) {
    throw ConfigError("dataset", "the ns problem needs an external dataset path");
  }
  if (sweep) {
    if (sweep->values.empty()) throw ConfigError("sweep_values", "a sweep needs at least one value");
    for (double v : sweep->values) {
      if (!(v > 0.0)) throw ConfigError("sweep_values", "sweep values must be positive");
      if (sweep->param == SweepParam::NData && v != std::floor(v)) {
        throw ConfigError("sweep_values", "n_data sweep values must be integers");
      }
    }
  }
}

ExperimentConfig parse_config_text(const std::string& text, const std::vector<Override>& overrides) {
  ExperimentConfig config;
  bool has_problem = false;
  std::istringstream in(text);
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value', got '" + line + "'", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError("missing key before '='", line_no);
    apply(config, key, value, line_no);
    has_problem = has_problem || key == "problem";
  }
  for (const auto& [key, value] : overrides) {
    apply(config, trim(key), trim(value), 0);
    has_problem = has_problem || trim(key) == "problem";
  }
  if (!has_problem) throw ConfigError("problem", "missing required key", line_no);
  config.validate();
  return config;
}

ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), overrides);
}

// ---------------------------------------------------------------------------
// Running

std::uint64_t training_seed(std::uint64_t replica_seed) {
  // splitmix64 finalizer
  std::uint64_t z = replica_seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

Domain domain_of(const Matrix& a, const Matrix& b) {
  Domain d;
  d.lower = a.rowwise().minCoeff().cwiseMin(b.rowwise().minCoeff());
  d.upper = a.rowwise().maxCoeff().cwiseMax(b.rowwise().maxCoeff());
  return d;
}

ExperimentConfig at_sweep_point(const ExperimentConfig& base, std::optional<double> value) {
  ExperimentConfig c = base;
  if (!value) return c;
  switch (base.sweep->param) {
    case SweepParam::Omega: c.train.omega = *value; break;
    case SweepParam::NData:
      c.n_data = static_cast<Index>(*value);
      c.train.batch_data = std::min(c.train.batch_data, c.n_data);
      break;
    case SweepParam::NoiseStrength: c.f_n = *value; break;
  }
  return c;
}

std::string sanitize(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  }
  return s;
}

}  // namespace

std::pair<std::unique_ptr<Problem>, Dataset> replica_data(const ExperimentConfig& config, std::uint64_t replica_seed) {
  Rng rng(replica_seed);
  if (config.problem == ProblemKind::NavierStokes) {
    const double base = config.noise_base_scale.value_or(0.05);
    NoiseSpec noise = make_noise(config.noise, base, config.f_n);
    noise.shift = config.noise_shift;
    Dataset data = load_external_dataset(config.dataset, config.n_data, config.n_val, config.n_colloc, rng, noise);
    auto problem = make_navier_stokes(domain_of(data.train.inputs, data.collocation));
    return {std::move(problem), std::move(data)};
  }
  auto problem = make_problem(config.problem);
  NoiseSpec noise = make_noise(config.noise, config.noise_base_scale.value_or(problem->noise_base_scale()), config.f_n);
  noise.shift = config.noise_shift;
  Dataset data = synth_dataset(*problem, noise, config.n_data, config.n_val, config.n_colloc, rng);
  return {std::move(problem), std::move(data)};
}

std::string run_tag(const ExperimentConfig& config, std::optional<double> sweep_value, Variant variant, int replica) {
  std::string tag;
  if (sweep_value) tag = std::string(to_string(config.sweep->param)) + "_" + format_double(*sweep_value) + "_";
  char rep[16];
  std::snprintf(rep, sizeof rep, "r%03d", replica);
  return tag + std::string(to_string(variant)) + "_" + rep;
}

void export_artifacts(const Problem& problem, const TrainResult& result, const Dataset& data,
                      const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const Index k = result.lambda.size();

  {
    std::vector<std::string> header{"iteration", "data_loss", "pde_loss", "total", "omega", "lr"};
    for (Index c = 0; c < k; ++c) header.push_back("lambda_" + std::to_string(c + 1));
    for (const auto& h : {"theta0", "data_loss_kind", "trainable", "clamped"}) header.emplace_back(h);
    CsvWriter w(dir / "curves.csv", header);
    for (const auto& p : result.curve) {
      w << p.iteration << p.data_loss << p.pde_loss << p.total << p.omega << p.lr;
      for (Index c = 0; c < k; ++c) w << p.lambda(c);
      w << p.theta0 << to_string(p.kind) << static_cast<long>(p.trainable) << static_cast<long>(p.clamped);
      w.end_row();
    }
    w.close();
  }

  {
    std::vector<std::string> header{"set"};
    for (const auto& n : problem.input_names()) header.push_back(n);
    for (const auto& n : problem.measured_names()) {
      header.push_back(n + "_pred");
      header.push_back(n + "_true");
      header.push_back(n + "_measured");
    }
    CsvWriter w(dir / "prediction.csv", header);
    auto emit = [&](std::string_view set, const Matrix& inputs, const Matrix& truth, const Matrix* measured) {
      ad::Tape tape;
      const BoundMLP net = bind_frozen(tape, result.pinn);
      const Matrix pred = problem.predict(net, inputs).value();
      for (Index j = 0; j < inputs.cols(); ++j) {
        w << set;
        for (Index d = 0; d < inputs.rows(); ++d) w << inputs(d, j);
        for (Index c = 0; c < pred.rows(); ++c) {
          w << pred(c, j) << truth(c, j) << (measured ? (*measured)(c, j) : std::numeric_limits<double>::quiet_NaN());
        }
        w.end_row();
      }
    };
    emit("train", data.train.inputs, data.train.truth, &data.train.targets);
    emit("validation", data.validation.inputs, data.validation.truth, &data.validation.targets);
    if (problem.has_analytic_solution() && problem.input_dim() == 1) {
      const Domain dom = problem.domain();
      const Matrix grid = linspace(dom.lower(0), dom.upper(0), 500).transpose();
      emit("grid", grid, problem.solution(grid), nullptr);
    }
    w.close();
  }

  if (result.ebm) {
    const auto [eps, density] = pdf_table(*result.ebm);
    CsvWriter w(dir / "pdf.csv", {"eps", "density"});
    for (Index i = 0; i < eps.size(); ++i) {
      w << eps(i) << density(i);
      w.end_row();
    }
    w.close();
  }

  save_params(result.pinn, dir / "params.bin");
}

namespace {

struct Task {
  std::optional<double> sweep_value;
  Variant variant;
  int replica;
};

RunRecord run_task(const ExperimentConfig& base, const Task& task) {
  const ExperimentConfig config = at_sweep_point(base, task.sweep_value);
  RunRecord rec;
  rec.sweep_value = task.sweep_value;
  rec.variant = task.variant;
  rec.replica = task.replica;
  rec.seed = config.seed + static_cast<std::uint64_t>(task.replica);
  try {
    auto [problem, data] = replica_data(config, rec.seed);
    TrainConfig tc = config.train;
    tc.seed = training_seed(rec.seed);
    const TrainResult result = train(*problem, data, task.variant, tc);
    rec.lambda = result.lambda;
    rec.theta0 = result.theta0;
    rec.ebm_attempts = result.ebm ? result.ebm->diagnostics.attempts : 0;
    rec.metrics = compute_metrics(*problem, result, data, problem->true_lambda());
    if (config.export_runs && !config.outdir.empty()) {
      export_artifacts(*problem, result, data,
                       config.outdir / "runs" / run_tag(base, task.sweep_value, task.variant, task.replica));
    }
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = sanitize(e.what());
  }
  return rec;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<std::optional<double>> points;
  if (config.sweep) {
    for (double v : config.sweep->values) points.emplace_back(v);
  } else {
    points.emplace_back(std::nullopt);
  }
  std::vector<Task> tasks;
  for (const auto& p : points) {
    for (Variant v : config.variants) {
      for (int r = 0; r < config.n_replicas; ++r) tasks.push_back({p, v, r});
    }
  }

  ExperimentResult out;
  out.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) out.runs[i] = run_task(config, tasks[i]);
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), tasks.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  out.lambda_count = config.problem == ProblemKind::NavierStokes ? 2 : 1;
  for (const auto& p : points) {
    for (Variant v : config.variants) {
      AggregateRow row;
      row.sweep_value = p;
      row.variant = v;
      std::vector<RunMetrics> ok;
      for (const auto& r : out.runs) {
        if (r.sweep_value != p || r.variant != v) continue;
        if (r.ok) {
          ok.push_back(r.metrics);
        } else {
          ++row.failed;
        }
      }
      row.ok = ok.size();
      if (!ok.empty()) row.metrics = aggregate(ok);
      out.aggregates.push_back(std::move(row));
    }
  }

  if (!config.outdir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config.outdir, ec);
    if (ec) throw IoError("cannot create " + config.outdir.string() + ": " + ec.message());
    write_results_csv(config, out, config.outdir / "results.csv");
    write_aggregate_csv(config, out, config.outdir / "aggregate.csv");
  }
  return out;
}

void write_results_csv(const ExperimentConfig& config, const ExperimentResult& result,
                       const std::filesystem::path& path) {
  const auto k = static_cast<Index>(result.lambda_count);
  std::vector<std::string> header{"sweep_param", "sweep_value", "variant", "replica", "seed", "status"};
  for (Index c = 0; c < k; ++c) header.push_back("lambda_" + std::to_string(c + 1));
  for (Index c = 0; c < k; ++c) header.push_back("dlambda_" + std::to_string(c + 1));
  for (const auto& h : {"theta0", "rmse", "nll", "f2", "ebm_attempts", "error"}) header.emplace_back(h);
  CsvWriter w(path, header);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::string param = config.sweep ? std::string(to_string(config.sweep->param)) : "none";
  for (const auto& r : result.runs) {
    w << param << (r.sweep_value ? format_double(*r.sweep_value) : std::string("")) << to_string(r.variant)
      << r.replica << std::to_string(r.seed) << (r.ok ? "ok" : "failed");
    for (Index c = 0; c < k; ++c) w << (r.ok ? r.lambda(c) : nan);
    for (Index c = 0; c < k; ++c) w << (r.ok ? r.metrics.delta_lambda(c) : nan);
    w << (r.theta0 ? *r.theta0 : nan);
    if (r.ok) {
      w << r.metrics.rmse << r.metrics.nll << r.metrics.f2;
    } else {
      w << nan << nan << nan;
    }
    w << r.ebm_attempts << r.error;
    w.end_row();
  }
  w.close();
}

void write_aggregate_csv(const ExperimentConfig& config, const ExperimentResult& result,
                         const std::filesystem::path& path) {
  const auto k = static_cast<Index>(result.lambda_count);
  std::vector<std::string> header{"sweep_param", "sweep_value", "variant", "runs_ok", "runs_failed"};
  for (Index c = 0; c < k; ++c) {
    header.push_back("dlambda_" + std::to_string(c + 1) + "_mean");
    header.push_back("dlambda_" + std::to_string(c + 1) + "_std");
  }
  for (const auto& h : {"rmse_mean", "rmse_std", "nll_mean", "nll_std", "f2_mean", "f2_std"}) header.emplace_back(h);
  CsvWriter w(path, header);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::string param = config.sweep ? std::string(to_string(config.sweep->param)) : "none";
  for (const auto& a : result.aggregates) {
    w << param << (a.sweep_value ? format_double(*a.sweep_value) : std::string("")) << to_string(a.variant) << a.ok
      << a.failed;
    auto put = [&](const Summary& s) { w << s.mean << s.stddev; };
    if (a.metrics) {
      for (const auto& s : a.metrics->delta_lambda) put(s);
      put(a.metrics->rmse);
      put(a.metrics->nll);
      put(a.metrics->f2);
    } else {
      for (Index c = 0; c < 2 * k + 6; ++c) w << nan;
    }
    w.end_row();
  }
  w.close();
}

}  // namespace pinnebm
