#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace jdatt {

/// Dense row-major double tensor. Rank is dynamic; rank <= 4 in practice.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double value);

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // CHW accessors for the common image-feature case.
  double& at3(int c, int y, int x) {
    return data_[static_cast<size_t>((static_cast<int64_t>(c) * shape_[1] + y) * shape_[2] + x)];
  }
  double at3(int c, int y, int x) const {
    return data_[static_cast<size_t>((static_cast<int64_t>(c) * shape_[1] + y) * shape_[2] + x)];
  }
  double& at2(int r, int c) { return data_[static_cast<size_t>(static_cast<int64_t>(r) * shape_[1] + c)]; }
  double at2(int r, int c) const { return data_[static_cast<size_t>(static_cast<int64_t>(r) * shape_[1] + c)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(double v);

  Tensor reshaped(std::vector<int> shape) const;

  std::string shape_str() const;

private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

int64_t shape_numel(const std::vector<int>& shape);

}  // namespace jdatt
