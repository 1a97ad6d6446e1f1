#include "pinnebm/autodiff/params.hpp"

#include "pinnebm/errors.hpp"

namespace pinnebm::ad {

std::size_t ParamLayout::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (rows <= 0 || cols <= 0) throw StructuralError("empty parameter block '" + name + "'");
  blocks_.push_back({std::move(name), rows, cols, size_});
  size_ += rows * cols;
  return blocks_.size() - 1;
}

Eigen::Map<Eigen::MatrixXd> ParamVector::block(std::size_t i) {
  const ParamBlock& b = layout.block(i);
  if (values.size() != layout.size()) throw StructuralError("parameter vector does not match its layout");
  return {values.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Eigen::MatrixXd> ParamVector::block(std::size_t i) const {
  const ParamBlock& b = layout.block(i);
  if (values.size() != layout.size()) throw StructuralError("parameter vector does not match its layout");
  return {values.data() + b.offset, b.rows, b.cols};
}

ParamVector pack(const std::vector<std::pair<std::string, Eigen::MatrixXd>>& blocks) {
  ParamLayout layout;
  for (const auto& [name, m] : blocks) layout.add(name, m.rows(), m.cols());
  ParamVector pv(std::move(layout));
  for (std::size_t i = 0; i < blocks.size(); ++i) pv.block(i) = blocks[i].second;
  return pv;
}

std::vector<Eigen::MatrixXd> unpack(const ParamVector& params) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(params.layout.blocks().size());
  for (std::size_t i = 0; i < params.layout.blocks().size(); ++i) out.emplace_back(params.block(i));
  return out;
}

}  // namespace pinnebm::ad
