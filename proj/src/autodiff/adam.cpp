#include "pinnebm/autodiff/adam.hpp"

#include "pinnebm/errors.hpp"

#include <cmath>
#include <string>

namespace pinnebm::ad {

AdamState::AdamState(Eigen::Index size)
    : m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {
  if (size > 0) segments_.push_back({0, 0});
}

void AdamState::extend(Eigen::Index extra) {
  if (extra <= 0) return;
  const Eigen::Index old = m_.size();
  m_.conservativeResize(old + extra);
  v_.conservativeResize(old + extra);
  m_.tail(extra).setZero();
  v_.tail(extra).setZero();
  segments_.push_back({old, 0});
}

long AdamState::step(Eigen::Index index) const {
  long s = 0;
  for (const auto& seg : segments_) {
    if (seg.begin <= index) s = seg.step;
  }
  return s;
}

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads,
               AdamState& state, const AdamHyper& hyper) {
  if (params.size() != grads.size() || params.size() != state.size()) {
    throw StructuralError("adam_step layout mismatch: params " + std::to_string(params.size()) +
                          ", grads " + std::to_string(grads.size()) + ", state " +
                          std::to_string(state.size()));
  }
  state.m_ = hyper.beta1 * state.m_ + (1.0 - hyper.beta1) * grads;
  state.v_ = hyper.beta2 * state.v_ + (1.0 - hyper.beta2) * grads.cwiseAbs2();
  for (std::size_t s = 0; s < state.segments_.size(); ++s) {
    auto& seg = state.segments_[s];
    const Eigen::Index end =
        s + 1 < state.segments_.size() ? state.segments_[s + 1].begin : params.size();
    const Eigen::Index n = end - seg.begin;
    ++seg.step;
    const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(seg.step));
    const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(seg.step));
    params.segment(seg.begin, n).array() -=
        hyper.lr * (state.m_.segment(seg.begin, n).array() / c1) /
        ((state.v_.segment(seg.begin, n).array() / c2).sqrt() + hyper.eps);
  }
}

}  // namespace pinnebm::ad
