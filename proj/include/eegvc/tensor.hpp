#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "eegvc/types.hpp"

namespace eegvc {

// Dense rank-4 array, row-major over (batch, rows, time, features).
struct Tensor4 {
  std::array<std::size_t, 4> dims{0, 0, 0, 0};
  std::vector<double> data;

  Tensor4() = default;
  Tensor4(std::size_t b, std::size_t r, std::size_t t, std::size_t f)
      : dims{b, r, t, f}, data(b * r * t * f, 0.0) {}

  std::size_t batch() const { return dims[0]; }
  std::size_t rows() const { return dims[1]; }
  std::size_t time() const { return dims[2]; }
  std::size_t feats() const { return dims[3]; }
  std::size_t size() const { return data.size(); }

  std::size_t index(std::size_t b, std::size_t r, std::size_t t, std::size_t f) const {
    return ((b * dims[1] + r) * dims[2] + t) * dims[3] + f;
  }
  double& at(std::size_t b, std::size_t r, std::size_t t, std::size_t f) {
    return data[index(b, r, t, f)];
  }
  double at(std::size_t b, std::size_t r, std::size_t t, std::size_t f) const {
    return data[index(b, r, t, f)];
  }
  bool same_dims(const Tensor4& o) const { return dims == o.dims; }
};

std::string dims_str(const std::array<std::size_t, 4>& d);

// Throws ShapeError naming both shapes when they differ.
void require_same_dims(const Tensor4& a, const Tensor4& b, const char* what);

bool all_finite(const Tensor4& t);

}  // namespace eegvc
