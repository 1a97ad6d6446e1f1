#pragma once

#include <Eigen/Dense>

#include <vector>

namespace pinnebm::ad {

struct AdamHyper {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers. Parameters appended later via extend() form
/// a new segment with its own step counter, so their bias correction starts
/// from step one.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(Eigen::Index size);

  void extend(Eigen::Index extra);

  Eigen::Index size() const { return m_.size(); }
  /// Step count of the segment containing parameter `index`.
  long step(Eigen::Index index = 0) const;

  friend void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads,
                        AdamState& state, const AdamHyper& hyper);

 private:
  struct Segment {
    Eigen::Index begin;
    long step;
  };
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::vector<Segment> segments_;
};

/// Bias-corrected Adam update, in place.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads,
               AdamState& state, const AdamHyper& hyper);

}  // namespace pinnebm::ad
