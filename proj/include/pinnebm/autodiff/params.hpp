#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace pinnebm::ad {

/// One named dense block inside a flat parameter vector (column-major).
struct ParamBlock {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index offset = 0;

  Eigen::Index size() const { return rows * cols; }
  bool operator==(const ParamBlock&) const = default;
};

class ParamLayout {
 public:
  /// Appends a block and returns its index.
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols);

  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(std::size_t i) const { return blocks_.at(i); }
  Eigen::Index size() const { return size_; }

  bool operator==(const ParamLayout&) const = default;

 private:
  std::vector<ParamBlock> blocks_;
  Eigen::Index size_ = 0;
};

/// Flat parameter storage plus the layout that gives it structure.
struct ParamVector {
  ParamLayout layout;
  Eigen::VectorXd values;

  ParamVector() = default;
  explicit ParamVector(ParamLayout l) : layout(std::move(l)), values(Eigen::VectorXd::Zero(layout.size())) {}

  Eigen::Map<Eigen::MatrixXd> block(std::size_t i);
  Eigen::Map<const Eigen::MatrixXd> block(std::size_t i) const;
};

/// Concatenates dense blocks into a ParamVector with a matching layout.
ParamVector pack(const std::vector<std::pair<std::string, Eigen::MatrixXd>>& blocks);
/// Splits a ParamVector back into its dense blocks.
std::vector<Eigen::MatrixXd> unpack(const ParamVector& params);

}  // namespace pinnebm::ad
