#include "eegvc/tensor.hpp"

#include <cmath>
#include <sstream>

namespace eegvc {

std::string dims_str(const std::array<std::size_t, 4>& d) {
  std::ostringstream os;
  os << "(" << d[0] << "," << d[1] << "," << d[2] << "," << d[3] << ")";
  return os.str();
}

void require_same_dims(const Tensor4& a, const Tensor4& b, const char* what) {
  if (!a.same_dims(b)) {
    throw ShapeError(std::string(what) + ": dims " + dims_str(a.dims) + " vs " +
                     dims_str(b.dims));
  }
}

bool all_finite(const Tensor4& t) {
  for (double x : t.data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace eegvc
