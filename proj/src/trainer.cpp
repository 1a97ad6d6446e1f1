#include "pinnebm/trainer.hpp"

#include "pinnebm/autodiff/adam.hpp"
#include "pinnebm/errors.hpp"
#include "pinnebm/losses.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numeric>

namespace pinnebm {

using ad::Var;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Pinn: return "PINN";
    case Variant::PinnOff: return "PINN-off";
    case Variant::PinnEbm: return "PINN-EBM";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  std::string key;
  for (char c : name) key.push_back(c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "pinn") return Variant::Pinn;
  if (key == "pinn-off") return Variant::PinnOff;
  if (key == "pinn-ebm") return Variant::PinnEbm;
  throw StructuralError("unknown variant '" + std::string(name) + "' (expected PINN, PINN-off or PINN-EBM)");
}

std::string_view to_string(DataLossKind kind) {
  switch (kind) {
    case DataLossKind::LeastSquares: return "ls";
    case DataLossKind::LeastSquaresOffset: return "ls_offset";
    case DataLossKind::EbmNll: return "ebm_nll";
  }
  return "?";
}

void TrainConfig::validate(Variant variant, const Dataset& data) const {
  if (iterations < 0) throw CountError("iteration count must be nonnegative");
  if (!(omega >= 0.0)) throw StructuralError("PDE weight must be nonnegative");
  if (!(lr > 0.0)) throw StructuralError("learning rate must be positive");
  if (lr_decay && (!(lr_decay->factor > 0.0) || lr_decay->at < 0)) {
    throw StructuralError("learning-rate decay needs a positive factor and a nonnegative iteration");
  }
  if (curve_stride <= 0) throw CountError("curve stride must be positive");
  if (batch_data <= 0 || batch_colloc <= 0) throw CountError("batch sizes must be positive");
  if (batch_data > data.train.size()) {
    throw CountError("data batch " + std::to_string(batch_data) + " exceeds " +
                     std::to_string(data.train.size()) + " training points");
  }
  if (batch_colloc > data.collocation.cols()) {
    throw CountError("collocation batch " + std::to_string(batch_colloc) + " exceeds " +
                     std::to_string(data.collocation.cols()) + " collocation points");
  }
  if (hidden.empty()) throw StructuralError("PINN needs at least one hidden layer");
  if (variant == Variant::PinnEbm) {
    if (i_ebm <= 0) throw StructuralError("EBM switch iteration must be positive");
    if (n_ebm < 0) throw CountError("EBM initialization iterations must be nonnegative");
  }
}

MinibatchSampler::MinibatchSampler(Index pool, Index batch) : pool_(pool), batch_(batch), pos_(0) {
  if (pool <= 0) throw CountError("empty index pool");
  if (batch <= 0 || batch > pool) {
    throw CountError("batch size " + std::to_string(batch) + " not in 1.." + std::to_string(pool));
  }
  perm_.resize(static_cast<std::size_t>(pool));
  std::iota(perm_.begin(), perm_.end(), Index{0});
  pos_ = perm_.size();
}

std::vector<Index> MinibatchSampler::next(Rng& rng) {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(batch_));
  while (static_cast<Index>(out.size()) < batch_) {
    if (pos_ == perm_.size()) {
      for (std::size_t i = perm_.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(perm_[i], perm_[pick(rng)]);
      }
      pos_ = 0;
    }
    out.push_back(perm_[pos_++]);
  }
  return out;
}

double lr_at(const TrainConfig& config, long iteration) {
  if (config.lr_decay && iteration >= config.lr_decay->at) return config.lr * config.lr_decay->factor;
  return config.lr;
}

MLPConfig pinn_network(const Problem& problem, const TrainConfig& config) {
  MLPConfig cfg;
  cfg.widths.push_back(problem.input_dim());
  cfg.widths.insert(cfg.widths.end(), config.hidden.begin(), config.hidden.end());
  cfg.widths.push_back(problem.network_output_dim());
  return cfg;
}

Vector data_residuals(const Problem& problem, const MLP& pinn, const Samples& samples) {
  ad::Tape tape;
  const BoundMLP net = bind_frozen(tape, pinn);
  const Matrix r = samples.targets - problem.predict(net, samples.inputs).value();
  Vector flat(r.size());
  for (Index c = 0; c < r.rows(); ++c) flat.segment(c * r.cols(), r.cols()) = r.row(c).transpose();
  return flat;
}

namespace {

Matrix gather(const Matrix& m, const std::vector<Index>& idx) {
  Matrix out(m.rows(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Index>(j)) = m.col(idx[j]);
  return out;
}

/// All trainable values, laid out as [pinn | lambda | theta0? | ebm?].
struct Trainables {
  MLP pinn;
  Vector lambda;
  std::optional<double> theta0;
  std::optional<EBMState> ebm;

  Index lambda_offset() const { return pinn.parameter_count(); }
  Index theta0_offset() const { return lambda_offset() + lambda.size(); }
  Index ebm_offset() const { return theta0_offset() + (theta0 ? 1 : 0); }
  Index size() const { return ebm_offset() + (ebm ? ebm->energy.parameter_count() : 0); }

  Vector flatten() const {
    Vector v(size());
    v.head(pinn.parameter_count()) = pinn.params.values;
    v.segment(lambda_offset(), lambda.size()) = lambda;
    if (theta0) v(theta0_offset()) = *theta0;
    if (ebm) v.tail(ebm->energy.parameter_count()) = ebm->energy.params.values;
    return v;
  }

  void assign(const Vector& v) {
    pinn.params.values = v.head(pinn.parameter_count());
    lambda = v.segment(lambda_offset(), lambda.size());
    if (theta0) *theta0 = v(theta0_offset());
    if (ebm) ebm->energy.params.values = v.tail(ebm->energy.parameter_count());
  }
};

struct StepLosses {
  Var data;
  Var pde;
  DataLossKind kind = DataLossKind::LeastSquares;
  Index clamped = 0;
};

/// Records the data and PDE losses for one batch on `tape`.
StepLosses record_losses(ad::Tape& tape, const Problem& problem, const Trainables& t, const Matrix& inputs,
                         const Matrix& targets, const Matrix& colloc, bool trainable,
                         Rng* ebm_dropout) {
  const BoundMLP net = trainable ? bind(tape, t.pinn, 0) : bind_frozen(tape, t.pinn);
  const Var lambda = trainable ? tape.parameter(t.lambda, t.lambda_offset()) : tape.constant(Matrix(t.lambda));
  const Var pred = problem.predict(net, inputs);
  const Var y = tape.constant(targets);

  StepLosses out;
  if (t.ebm) {
    const BoundMLP energy = trainable ? bind(tape, t.ebm->energy, t.ebm_offset()) : bind_frozen(tape, t.ebm->energy);
    const Var resid = y - pred;
    Var acc;
    for (Index c = 0; c < resid.rows(); ++c) {
      Index clamped = 0;
      const Var l = ebm_data_loss(ad::row(resid, c), energy, *t.ebm, ebm_dropout, &clamped);
      out.clamped += clamped;
      acc = acc.valid() ? acc + l : l;
    }
    out.data = acc * (1.0 / static_cast<double>(resid.rows()));
    out.kind = DataLossKind::EbmNll;
  } else if (t.theta0) {
    const Var theta0 = trainable ? tape.parameter(Matrix::Constant(1, 1, *t.theta0), t.theta0_offset())
                                 : tape.constant(*t.theta0);
    out.data = data_loss_ls_offset(pred, theta0, y);
    out.kind = DataLossKind::LeastSquaresOffset;
  } else {
    out.data = data_loss_ls(pred, y);
  }
  const std::vector<Var> residuals = problem.residuals(net, colloc, lambda);
  out.pde = pde_loss(residuals);
  return out;
}

}  // namespace

TrainResult train(const Problem& problem, const Dataset& data, Variant variant, const TrainConfig& config) {
  config.validate(variant, data);
  const auto started = std::chrono::steady_clock::now();
  Rng rng(config.seed);

  Trainables t;
  t.pinn = init_mlp(pinn_network(problem, config), rng);
  t.pinn.normalizer = fit_normalizer(data.collocation, data.train.targets);
  if (problem.kind() == ProblemKind::NavierStokes) {
    // The network outputs (psi, p); the targets are (u, v), so no output scaling is inferred.
    const Normalizer id = Normalizer::identity(problem.input_dim(), problem.network_output_dim());
    t.pinn.normalizer.output_shift = id.output_shift;
    t.pinn.normalizer.output_scale = id.output_scale;
  }
  t.lambda = config.lambda_init ? *config.lambda_init : problem.initial_lambda();
  if (t.lambda.size() != problem.true_lambda().size()) {
    throw StructuralError("lambda_init has " + std::to_string(t.lambda.size()) + " entries, the problem has " +
                          std::to_string(problem.true_lambda().size()));
  }
  if (variant == Variant::PinnOff) t.theta0 = 0.0;

  ad::AdamState adam(t.size());
  ad::AdamHyper hyper;
  MinibatchSampler data_batches(data.train.size(), config.batch_data);
  MinibatchSampler colloc_batches(data.collocation.cols(), config.batch_colloc);

  TrainResult result;
  result.variant = variant;
  result.curve.reserve(static_cast<std::size_t>(config.iterations / config.curve_stride + 2));

  ad::Tape tape;
  for (long i = 0; i < config.iterations; ++i) {
    if (variant == Variant::PinnEbm && i == config.i_ebm) {
      t.ebm = init_ebm(data_residuals(problem, t.pinn, data.train), config.n_ebm, rng, config.ebm);
      adam.extend(t.ebm->energy.parameter_count());
      result.ebm_switch = i;
    }
    const bool ebm_active = t.ebm.has_value();
    const double omega = (variant == Variant::PinnEbm && !ebm_active) ? 1.0 : config.omega;

    const std::vector<Index> bd = data_batches.next(rng);
    const std::vector<Index> bc = colloc_batches.next(rng);

    tape.clear();
    const StepLosses l = record_losses(tape, problem, t, gather(data.train.inputs, bd),
                                       gather(data.train.targets, bd), gather(data.collocation, bc), true,
                                       ebm_active ? &rng : nullptr);
    const Var total = total_loss(l.data, l.pde, omega);
    if (!std::isfinite(total.scalar())) {
      throw NumericError("loss is not finite at iteration " + std::to_string(i) + " (data " +
                         std::to_string(l.data.scalar()) + ", pde " + std::to_string(l.pde.scalar()) + ")");
    }
    hyper.lr = lr_at(config, i);
    if (i % config.curve_stride == 0) {
      result.curve.push_back({i, l.data.scalar(), l.pde.scalar(), total.scalar(), omega, hyper.lr, t.lambda,
                              t.theta0.value_or(0.0), l.kind, t.size(), l.clamped});
    }

    Vector theta = t.flatten();
    ad::adam_step(theta, tape.backward(total), adam, hyper);
    t.assign(theta);
  }

  // Final eval-mode point on the full training and collocation sets.
  tape.clear();
  const double omega = (variant == Variant::PinnEbm && !t.ebm) ? 1.0 : config.omega;
  const StepLosses l = record_losses(tape, problem, t, data.train.inputs, data.train.targets, data.collocation,
                                     false, nullptr);
  const double d = l.data.scalar();
  const double p = l.pde.scalar();
  result.curve.push_back({config.iterations, d, p, d + omega * p, omega, lr_at(config, config.iterations),
                          t.lambda, t.theta0.value_or(0.0), l.kind, t.size(), l.clamped});

  result.lambda = t.lambda;
  result.theta0 = t.theta0;
  result.pinn = std::move(t.pinn);
  result.ebm = std::move(t.ebm);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace pinnebm
