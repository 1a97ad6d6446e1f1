#include "pinnebm/problems.hpp"

#include "pinnebm/autodiff/forward.hpp"
#include "pinnebm/bessel.hpp"
#include "pinnebm/errors.hpp"

#include <charconv>
#include <fstream>
#include <numeric>

namespace pinnebm {

using ad::Jet;
using ad::Var;

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Exponential: return "exp";
    case ProblemKind::Bessel: return "bessel";
    case ProblemKind::NavierStokes: return "ns";
  }
  return "?";
}

ProblemKind parse_problem_kind(std::string_view name) {
  if (name == "exp") return ProblemKind::Exponential;
  if (name == "bessel") return ProblemKind::Bessel;
  if (name == "ns") return ProblemKind::NavierStokes;
  throw StructuralError("unknown problem '" + std::string(name) + "' (expected exp, bessel or ns)");
}

Vector linspace(double lo, double hi, Index n) {
  if (n <= 0) throw CountError("linspace needs at least one point");
  if (n == 1) return Vector::Constant(1, lo);
  return Vector::LinSpaced(n, lo, hi);
}

namespace {

Vector unit(Index dim, std::initializer_list<double> entries) {
  Vector d(dim);
  Index i = 0;
  for (double e : entries) d(i++) = e;
  return d;
}

ad::Tape& tape_of(const BoundMLP& net) {
  if (net.weights.empty()) throw StructuralError("network is not bound to a tape");
  return *net.weights.front().tape();
}

class ScalarOdeProblem : public Problem {
 public:
  int input_dim() const override { return 1; }
  int network_output_dim() const override { return 1; }
  int measured_dim() const override { return 1; }
  std::vector<std::string> input_names() const override { return {"t"}; }
  std::vector<std::string> measured_names() const override { return {"x"}; }
  bool has_analytic_solution() const override { return true; }

  Var predict(const BoundMLP& net, const Matrix& inputs,
              const std::optional<Matrix>& mask) const override {
    return forward(net, tape_of(net).constant(inputs), mask);
  }
};

class ExponentialProblem final : public ScalarOdeProblem {
 public:
  ProblemKind kind() const override { return ProblemKind::Exponential; }
  Vector true_lambda() const override { return Vector::Constant(1, 0.3); }
  Domain domain() const override { return {Vector::Constant(1, 0.0), Vector::Constant(1, 10.0)}; }
  double noise_base_scale() const override { return 1.0; }

  Matrix solution(const Matrix& inputs) const override {
    const double lambda = true_lambda()(0);
    return inputs.unaryExpr([lambda](double t) { return true_solution_exp(t, lambda); });
  }

  std::vector<Var> residuals(const BoundMLP& net, const Matrix& collocation,
                             Var lambda) const override {
    const Jet<Var> x = directional(net, collocation, unit(1, {1.0}), 1);
    return {residual_exp(x, lambda)};
  }
};

class BesselProblem final : public ScalarOdeProblem {
 public:
  static constexpr double kNu = 1.0;

  ProblemKind kind() const override { return ProblemKind::Bessel; }
  Vector true_lambda() const override { return Vector::Constant(1, 0.7); }
  /// lambda enters the residual only through lambda^2, so zero is a stationary point.
  Vector initial_lambda() const override { return Vector::Ones(1); }
  Domain domain() const override { return {Vector::Constant(1, 0.0), Vector::Constant(1, 10.0)}; }
  double noise_base_scale() const override { return 0.03; }

  Matrix solution(const Matrix& inputs) const override {
    const double lambda = true_lambda()(0);
    return inputs.unaryExpr([lambda](double t) { return bessel_j1(lambda * t); });
  }

  std::vector<Var> residuals(const BoundMLP& net, const Matrix& collocation,
                             Var lambda) const override {
    const Jet<Var> x = directional(net, collocation, unit(1, {1.0}), 2);
    const Var t = tape_of(net).constant(collocation);
    return {residual_bessel(x, lambda, t, kNu)};
  }
};

class NavierStokesProblem final : public Problem {
 public:
  explicit NavierStokesProblem(Domain domain) : domain_(std::move(domain)) {}

  ProblemKind kind() const override { return ProblemKind::NavierStokes; }
  Vector true_lambda() const override {
    Vector l(2);
    l << 1.0, 0.01;
    return l;
  }
  int input_dim() const override { return 3; }
  int network_output_dim() const override { return 2; }
  int measured_dim() const override { return 2; }
  Domain domain() const override { return domain_; }
  double noise_base_scale() const override { return 0.05; }
  std::vector<std::string> input_names() const override { return {"t", "x", "y"}; }
  std::vector<std::string> measured_names() const override { return {"u", "v"}; }
  bool has_analytic_solution() const override { return false; }

  Matrix solution(const Matrix&) const override {
    throw UnsupportedError("the flow problem has no analytic solution; truth comes from the dataset");
  }

  Var predict(const BoundMLP& net, const Matrix& inputs,
              const std::optional<Matrix>& mask) const override {
    const Jet<Var> jx = directional(net, inputs, unit(3, {0.0, 1.0, 0.0}), 1, mask);
    const Jet<Var> jy = directional(net, inputs, unit(3, {0.0, 0.0, 1.0}), 1, mask);
    const Var u = ad::row(jy.d(1), 0);
    const Var v = -ad::row(jx.d(1), 0);
    return ad::vstack(u, v);
  }

  std::vector<Var> residuals(const BoundMLP& net, const Matrix& collocation,
                             Var lambda) const override {
    const StreamBundle<Var> b = stream_bundle(net, collocation);
    auto [r_u, r_v] = residual_ns(b, ad::row(lambda, 0), ad::row(lambda, 1));
    return {r_u, r_v};
  }

 private:
  Domain domain_;
};

}  // namespace

StreamBundle<Var> stream_bundle(const BoundMLP& net, const Matrix& inputs,
                                const std::optional<Matrix>& mask) {
  if (inputs.rows() != 3) throw StructuralError("stream bundle needs (t, x, y) inputs");
  auto along = [&](double t, double x, double y, int order) {
    return directional(net, inputs, unit(3, {t, x, y}), order, mask);
  };
  auto psi = [](const Jet<Var>& j, int k) { return ad::row(j.d(k), 0); };
  auto pressure = [](const Jet<Var>& j, int k) { return ad::row(j.d(k), 1); };

  const Jet<Var> jx = along(0, 1, 0, 3);
  const Jet<Var> jy = along(0, 0, 1, 3);
  const Jet<Var> jxpy = along(0, 1, 1, 3);
  const Jet<Var> jxmy = along(0, 1, -1, 3);
  const Jet<Var> jtpx = along(1, 1, 0, 2);
  const Jet<Var> jtmx = along(1, -1, 0, 2);
  const Jet<Var> jtpy = along(1, 0, 1, 2);
  const Jet<Var> jtmy = along(1, 0, -1, 2);

  StreamBundle<Var> b;
  b.psi_x = psi(jx, 1);
  b.psi_xx = psi(jx, 2);
  b.psi_xxx = psi(jx, 3);
  b.p_x = pressure(jx, 1);
  b.psi_y = psi(jy, 1);
  b.psi_yy = psi(jy, 2);
  b.psi_yyy = psi(jy, 3);
  b.p_y = pressure(jy, 1);
  const Var sum3 = psi(jxpy, 3);
  const Var diff3 = psi(jxmy, 3);
  b.psi_xy = ad::polarize_second(psi(jxpy, 2), psi(jxmy, 2));
  b.psi_xxy = ad::polarize_third_aab(sum3, diff3, *b.psi_yyy);
  b.psi_xyy = ad::polarize_third_abb(sum3, diff3, *b.psi_xxx);
  b.psi_tx = ad::polarize_second(psi(jtpx, 2), psi(jtmx, 2));
  b.psi_ty = ad::polarize_second(psi(jtpy, 2), psi(jtmy, 2));
  return b;
}

std::unique_ptr<Problem> make_problem(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Exponential: return std::make_unique<ExponentialProblem>();
    case ProblemKind::Bessel: return std::make_unique<BesselProblem>();
    case ProblemKind::NavierStokes:
      throw UnsupportedError("the flow problem is built from a dataset (make_navier_stokes)");
  }
  throw StructuralError("unknown problem kind");
}

std::unique_ptr<Problem> make_navier_stokes(const Domain& domain) {
  if (domain.lower.size() != 3 || domain.upper.size() != 3) {
    throw StructuralError("flow domain must be three-dimensional");
  }
  return std::make_unique<NavierStokesProblem>(domain);
}

Dataset synth_dataset(const Problem& problem, const NoiseSpec& noise, Index n_data, Index n_val,
                      Index n_colloc, Rng& rng) {
  if (!problem.has_analytic_solution()) {
    throw UnsupportedError("synthetic data needs an analytic solution; load an external dataset");
  }
  if (n_data <= 0 || n_val <= 0 || n_colloc <= 0) throw CountError("dataset counts must be positive");
  const Domain dom = problem.domain();
  const Index dim = problem.input_dim();

  auto draw = [&](Index n) {
    Samples s;
    s.inputs.resize(dim, n);
    for (Index j = 0; j < n; ++j) {
      for (Index d = 0; d < dim; ++d) {
        std::uniform_real_distribution<double> u(dom.lower(d), dom.upper(d));
        s.inputs(d, j) = u(rng);
      }
    }
    s.truth = problem.solution(s.inputs);
    s.targets = s.truth;
    for (Index c = 0; c < s.targets.rows(); ++c) {
      s.targets.row(c) += sample(noise, n, rng).transpose();
    }
    return s;
  };

  Dataset ds;
  ds.train = draw(n_data);
  ds.validation = draw(n_val);
  if (dim == 1) {
    ds.collocation = linspace(dom.lower(0), dom.upper(0), n_colloc).transpose();
  } else {
    throw UnsupportedError("collocation grids are implemented for one-dimensional inputs");
  }
  return ds;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Fisher-Yates over [0, n).
std::vector<Index> permutation(Index n, Rng& rng) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(pick(rng))]);
  }
  return p;
}

}  // namespace

FlowTable read_flow_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::array<double, 6>> rows;
  std::string raw;
  long line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "t,x,y,u,v,p") throw ParseError("expected header 't,x,y,u,v,p'", line_no);
      header_seen = true;
      continue;
    }
    std::array<double, 6> row{};
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 6; ++k) {
      const std::size_t end = k < 5 ? line.find(',', pos) : line.size();
      if (end == std::string_view::npos) throw ParseError("expected 6 comma-separated values", line_no);
      const std::string_view field = trim(line.substr(pos, end - pos));
      const auto res = std::from_chars(field.data(), field.data() + field.size(), row[k]);
      if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
        throw ParseError("malformed number '" + std::string(field) + "'", line_no);
      }
      pos = end + 1;
    }
    if (pos <= line.size()) throw ParseError("expected 6 comma-separated values", line_no);
    rows.push_back(row);
  }
  if (!header_seen) throw ParseError("missing header 't,x,y,u,v,p'", line_no);

  FlowTable table;
  const auto n = static_cast<Index>(rows.size());
  table.inputs.resize(3, n);
  table.outputs.resize(3, n);
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < 3; ++k) {
      table.inputs(k, j) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      table.outputs(k, j) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(k + 3)];
    }
  }
  return table;
}

Dataset load_external_dataset(const std::filesystem::path& path, Index n_data, Index n_val,
                              Index n_colloc, Rng& rng, const NoiseSpec& noise) {
  if (n_data <= 0 || n_val <= 0 || n_colloc <= 0) throw CountError("dataset counts must be positive");
  const FlowTable table = read_flow_csv(path);
  const Index rows = table.inputs.cols();
  if (rows < n_data + n_val) {
    throw CountError("dataset has " + std::to_string(rows) + " rows, need " +
                     std::to_string(n_data + n_val) + " for training and validation");
  }
  if (rows < n_colloc) {
    throw CountError("dataset has " + std::to_string(rows) + " rows, need " +
                     std::to_string(n_colloc) + " collocation points");
  }

  const std::vector<Index> perm = permutation(rows, rng);
  auto take = [&](Index begin, Index n) {
    Samples s;
    s.inputs.resize(3, n);
    s.truth.resize(2, n);
    for (Index j = 0; j < n; ++j) {
      const Index r = perm[static_cast<std::size_t>(begin + j)];
      s.inputs.col(j) = table.inputs.col(r);
      s.truth.col(j) = table.outputs.col(r).head(2);
    }
    s.targets = s.truth;
    for (Index c = 0; c < 2; ++c) s.targets.row(c) += sample(noise, n, rng).transpose();
    return s;
  };

  Dataset ds;
  ds.train = take(0, n_data);
  ds.validation = take(n_data, n_val);
  const std::vector<Index> cperm = permutation(rows, rng);
  ds.collocation.resize(3, n_colloc);
  for (Index j = 0; j < n_colloc; ++j) ds.collocation.col(j) = table.inputs.col(cperm[static_cast<std::size_t>(j)]);
  return ds;
}

}  // namespace pinnebm
