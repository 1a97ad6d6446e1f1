// pinnebm run --config <file> [--override key=value ...] [--workers N] [--outdir DIR] [--<key> value ...]

#include "pinnebm/csv.hpp"
#include "pinnebm/errors.hpp"
#include "pinnebm/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

namespace {

using pinnebm::Override;

Override split_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw pinnebm::ConfigError(text, "override must look like key=value");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

// Leftover "--some-key value" or "--some-key=value" pairs become overrides.
std::vector<Override> extras_to_overrides(const std::vector<std::string>& extras) {
  std::vector<Override> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw pinnebm::ConfigError(arg, "unexpected argument");
    std::string key = arg.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= extras.size()) throw pinnebm::ConfigError(key, "flag needs a value");
      value = extras[++i];
    }
    std::replace(key.begin(), key.end(), '-', '_');
    out.emplace_back(key, value);
  }
  return out;
}

void print_summary(const pinnebm::ExperimentConfig& config, const pinnebm::ExperimentResult& result) {
  for (const auto& a : result.aggregates) {
    std::cout << pinnebm::to_string(a.variant);
    if (a.sweep_value) std::cout << "  " << pinnebm::to_string(config.sweep->param) << "=" << *a.sweep_value;
    std::cout << "  runs " << a.ok << " ok, " << a.failed << " failed";
    if (a.metrics) {
      for (std::size_t c = 0; c < a.metrics->delta_lambda.size(); ++c) {
        std::cout << "  100|dl" << c + 1 << "| " << 100.0 * a.metrics->delta_lambda[c].mean << " +- "
                  << 100.0 * a.metrics->delta_lambda[c].stddev;
      }
      std::cout << "  RMSE " << a.metrics->rmse.mean << "  NLL " << a.metrics->nll.mean << "  100f2 "
                << 100.0 * a.metrics->f2.mean;
    }
    std::cout << '\n';
  }
  for (const auto& r : result.runs) {
    if (!r.ok) std::cerr << "failed: " << pinnebm::to_string(r.variant) << " replica " << r.replica << ": " << r.error << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed networks with learned noise densities"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Run an experiment from a config file");
  std::string config_path;
  std::vector<std::string> overrides;
  int workers = 0;
  std::string outdir;
  run->add_option("--config", config_path, "Config file (key = value lines)")->required()->check(CLI::ExistingFile);
  run->add_option("--override", overrides, "key=value, applied after the file")->take_all();
  run->add_option("--workers", workers, "Parallel replicas")->check(CLI::PositiveNumber);
  run->add_option("--outdir", outdir, "Output directory");
  run->allow_extras();

  CLI::App* keys = app.add_subcommand("keys", "List accepted config keys");

  CLI11_PARSE(app, argc, argv);

  if (keys->parsed()) {
    for (const auto& k : pinnebm::config_keys()) std::cout << k << '\n';
    return 0;
  }

  try {
    std::vector<Override> all;
    for (const auto& o : overrides) all.push_back(split_override(o));
    for (auto& o : extras_to_overrides(run->remaining())) all.push_back(std::move(o));
    if (workers > 0) all.emplace_back("workers", std::to_string(workers));
    if (!outdir.empty()) all.emplace_back("outdir", outdir);

    const pinnebm::ExperimentConfig config = pinnebm::parse_config(config_path, all);
    const pinnebm::ExperimentResult result = pinnebm::run_experiment(config);
    print_summary(config, result);
    std::cout << "wrote " << (config.outdir / "results.csv").string() << " and "
              << (config.outdir / "aggregate.csv").string() << '\n';
    const bool any_failed = std::any_of(result.runs.begin(), result.runs.end(), [](const auto& r) { return !r.ok; });
    return any_failed ? 2 : 0;
  } catch (const pinnebm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
