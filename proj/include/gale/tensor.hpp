#pragma once

#include "gale/common.hpp"

#include <vector>

namespace gale {

// Dense rows x cols x depth tensor; the depth vector of one (row, col) cell is
// contiguous so it can be mapped as an Eigen vector without copying.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int rows, int cols, int depth)
      : rows_(rows), cols_(cols), depth_(depth),
        data_(static_cast<size_t>(rows) * cols * depth, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int depth() const { return depth_; }

  Eigen::Map<Vector> at(int r, int c) {
    return Eigen::Map<Vector>(data_.data() + offset(r, c), depth_);
  }
  Eigen::Map<const Vector> at(int r, int c) const {
    return Eigen::Map<const Vector>(data_.data() + offset(r, c), depth_);
  }

  void set(int r, int c, const Vector& v) { at(r, c) = v; }

  // (rows*cols) x depth view, cell-major; handy for one-shot GEMMs.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  flat() const {
    return {data_.data(), static_cast<Eigen::Index>(rows_) * cols_, depth_};
  }

  // rows x depth view of one leading row (all cells (r, *)).
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  row_slab(int r) const {
    return {data_.data() + offset(r, 0), cols_, depth_};
  }

  const std::vector<double>& data() const { return data_; }

 private:
  size_t offset(int r, int c) const {
    return (static_cast<size_t>(r) * cols_ + c) * depth_;
  }

  int rows_ = 0, cols_ = 0, depth_ = 0;
  std::vector<double> data_;
};

}  // namespace gale
