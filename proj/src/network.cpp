#include "pinnebm/network.hpp"

#include "pinnebm/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace pinnebm {

using ad::Jet;
using ad::Var;

void MLPConfig::validate() const {
  if (widths.size() < 3) {
    throw StructuralError("MLP needs input, at least one hidden layer and output widths");
  }
  for (int w : widths) {
    if (w <= 0) throw StructuralError("MLP layer width must be positive, got " + std::to_string(w));
  }
  if (!(dropout_before_last >= 0.0 && dropout_before_last < 1.0)) {
    throw StructuralError("dropout probability must lie in [0, 1)");
  }
}

Normalizer Normalizer::identity(int input_dim, int output_dim) {
  return {Vector::Zero(input_dim), Vector::Ones(input_dim), Vector::Zero(output_dim),
          Vector::Ones(output_dim)};
}

Matrix Normalizer::normalize_input(const Matrix& x) const {
  return (x.colwise() - input_shift).array().colwise() / input_scale.array();
}

Matrix Normalizer::denormalize_input(const Matrix& z) const {
  return ((z.array().colwise() * input_scale.array()).matrix().colwise() + input_shift);
}

Matrix Normalizer::normalize_output(const Matrix& y) const {
  return (y.colwise() - output_shift).array().colwise() / output_scale.array();
}

Matrix Normalizer::denormalize_output(const Matrix& z) const {
  return ((z.array().colwise() * output_scale.array()).matrix().colwise() + output_shift);
}

namespace {

void fit_range(const Matrix& samples, Vector& shift, Vector& scale, const char* what) {
  if (samples.cols() == 0 || samples.rows() == 0) {
    throw DegenerateDataError(std::string("no ") + what + " samples to fit a normalizer");
  }
  const Vector lo = samples.rowwise().minCoeff();
  const Vector hi = samples.rowwise().maxCoeff();
  shift = 0.5 * (lo + hi);
  scale = 0.5 * (hi - lo);
  for (Index i = 0; i < scale.size(); ++i) {
    if (!(scale(i) > 0.0)) {
      throw DegenerateDataError(std::string("zero range in ") + what + " dimension " +
                                std::to_string(i));
    }
  }
}

}  // namespace

Normalizer fit_normalizer(const Matrix& inputs, const Matrix& outputs) {
  Normalizer n;
  fit_range(inputs, n.input_shift, n.input_scale, "input");
  fit_range(outputs, n.output_shift, n.output_scale, "output");
  return n;
}

ad::ParamLayout mlp_layout(const MLPConfig& config) {
  config.validate();
  ad::ParamLayout layout;
  for (int l = 0; l < config.linear_layers(); ++l) {
    const auto fan_in = config.widths[static_cast<std::size_t>(l)];
    const auto fan_out = config.widths[static_cast<std::size_t>(l) + 1];
    layout.add("W" + std::to_string(l), fan_out, fan_in);
    layout.add("b" + std::to_string(l), fan_out, 1);
  }
  return layout;
}

MLP init_mlp(const MLPConfig& config, Rng& rng) {
  MLP mlp{config, ad::ParamVector(mlp_layout(config)),
          Normalizer::identity(config.input_dim(), config.output_dim())};
  for (int l = 0; l < config.linear_layers(); ++l) {
    auto w = mlp.params.block(static_cast<std::size_t>(2 * l));
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index j = 0; j < w.cols(); ++j) {
      for (Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
  }
  return mlp;
}

BoundMLP bind(ad::Tape& tape, const MLP& mlp, Index offset) {
  BoundMLP net{&mlp, {}, {}};
  const auto& blocks = mlp.params.layout.blocks();
  for (std::size_t i = 0; i < blocks.size(); i += 2) {
    net.weights.push_back(tape.parameter(mlp.params.block(i), offset + blocks[i].offset));
    net.biases.push_back(tape.parameter(mlp.params.block(i + 1), offset + blocks[i + 1].offset));
  }
  return net;
}

BoundMLP bind_frozen(ad::Tape& tape, const MLP& mlp) {
  BoundMLP net{&mlp, {}, {}};
  for (std::size_t i = 0; i < mlp.params.layout.blocks().size(); i += 2) {
    net.weights.push_back(tape.constant(mlp.params.block(i)));
    net.biases.push_back(tape.constant(mlp.params.block(i + 1)));
  }
  return net;
}

std::optional<Matrix> sample_dropout_mask(const MLPConfig& config, Index columns, Rng& rng) {
  const double p = config.dropout_before_last;
  if (p <= 0.0) return std::nullopt;
  const auto units = config.widths[config.widths.size() - 2];
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(units, columns);
  for (Index j = 0; j < columns; ++j) {
    for (Index i = 0; i < units; ++i) mask(i, j) = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  }
  return mask;
}

namespace {

Jet<Var> linear(Var w, Var b, const Jet<Var>& a) {
  Jet<Var> out = Jet<Var>::constant(matmul(w, a.value()) + b, a.order());
  for (int k = 1; k <= a.order(); ++k) {
    if (auto ak = a.slot(k)) out.set_slot(k, matmul(w, *ak));
  }
  return out;
}

}  // namespace

Jet<Var> forward(const BoundMLP& net, const Jet<Var>& input, const std::optional<Matrix>& mask) {
  const MLP& mlp = *net.mlp;
  const MLPConfig& cfg = mlp.config;
  if (input.value().rows() != cfg.input_dim()) {
    throw StructuralError("network expects " + std::to_string(cfg.input_dim()) +
                          " input rows, got " + std::to_string(input.value().rows()));
  }
  ad::Tape& tape = *input.value().tape();
  const Normalizer& nrm = mlp.normalizer;

  Var inv_in_scale = tape.constant(nrm.input_scale.cwiseInverse());
  Var neg_in_shift = tape.constant(-nrm.input_shift);
  Jet<Var> a = inv_in_scale * (input + neg_in_shift);

  const int layers = cfg.linear_layers();
  for (int l = 0; l < layers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    if (l == layers - 1 && mask) {
      if (mask->rows() != a.value().rows() || mask->cols() != a.value().cols()) {
        throw StructuralError("dropout mask shape mismatch");
      }
      a = tape.constant(*mask) * a;
    }
    a = linear(net.weights[li], net.biases[li], a);
    if (l < layers - 1) a = tanh(a);
  }
  return tape.constant(nrm.output_scale) * a + tape.constant(nrm.output_shift);
}

Var forward(const BoundMLP& net, Var input, const std::optional<Matrix>& mask) {
  return forward(net, Jet<Var>::constant(input, 0), mask).value();
}

Var forward(const BoundMLP& net, Var input, Mode mode, Rng& rng) {
  if (mode == Mode::Train) return forward(net, input, sample_dropout_mask(net.mlp->config, input.cols(), rng));
  return forward(net, input, std::nullopt);
}

Jet<Var> directional(const BoundMLP& net, const Matrix& inputs, const Vector& direction, int order,
                     const std::optional<Matrix>& mask) {
  if (direction.size() != inputs.rows()) throw StructuralError("direction dimension mismatch");
  if (net.weights.empty()) throw StructuralError("unbound network");
  ad::Tape& tape = *net.weights.front().tape();
  return forward(net, Jet<Var>::seed(tape.constant(inputs), tape.constant(direction), order), mask);
}

Matrix evaluate(const MLP& mlp, const Matrix& inputs) {
  ad::Tape tape;
  BoundMLP net = bind_frozen(tape, mlp);
  return forward(net, tape.constant(inputs)).value();
}

namespace {

nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

void save_params(const MLP& mlp, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "pinnebm-params";
  header["widths"] = mlp.config.widths;
  header["dropout_before_last"] = mlp.config.dropout_before_last;
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& b : mlp.params.layout.blocks()) {
    layout.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
  }
  header["layout"] = layout;
  header["count"] = mlp.params.values.size();
  header["normalizer"] = {{"input_shift", vec_json(mlp.normalizer.input_shift)},
                          {"input_scale", vec_json(mlp.normalizer.input_scale)},
                          {"output_shift", vec_json(mlp.normalizer.output_shift)},
                          {"output_scale", vec_json(mlp.normalizer.output_scale)}};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << header.dump() << '\n';
  for (Index i = 0; i < mlp.params.values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(mlp.params.values(i));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

MLP load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad parameter header: ") + e.what(), 1);
  }
  if (header.value("format", "") != "pinnebm-params") throw ParseError("not a parameter file", 1);

  MLP mlp;
  mlp.config.widths = header.at("widths").get<std::vector<int>>();
  mlp.config.dropout_before_last = header.at("dropout_before_last").get<double>();
  mlp.params = ad::ParamVector(mlp_layout(mlp.config));
  const auto& layout = header.at("layout");
  if (layout.size() != mlp.params.layout.blocks().size()) {
    throw StructuralError("layout header does not match widths");
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& b = mlp.params.layout.block(i);
    if (layout[i].at("name").get<std::string>() != b.name || layout[i].at("rows").get<Index>() != b.rows ||
        layout[i].at("cols").get<Index>() != b.cols) {
      throw StructuralError("layout block " + std::to_string(i) + " does not match widths");
    }
  }
  if (header.at("count").get<Index>() != mlp.params.values.size()) {
    throw StructuralError("parameter count does not match layout");
  }
  const auto& n = header.at("normalizer");
  mlp.normalizer = {json_vec(n.at("input_shift")), json_vec(n.at("input_scale")),
                    json_vec(n.at("output_shift")), json_vec(n.at("output_scale"))};
  for (Index i = 0; i < mlp.params.values.size(); ++i) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw IoError("truncated parameter file " + path.string());
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    mlp.params.values(i) = std::bit_cast<double>(bits);
  }
  return mlp;
}

}  // namespace pinnebm
