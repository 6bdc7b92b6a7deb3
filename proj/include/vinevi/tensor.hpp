#pragma once

#include <cstddef>
#include <vector>

namespace vinevi {

struct Shape3 {
  int c = 0, h = 0, w = 0;
  bool operator==(const Shape3&) const = default;
  long long elems() const { return (long long)c * h * w; }
};

// Dense CHW tensor of 32-bit floats. Kernels accumulate in double and
// store back to float.
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<float> v;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), v(size_t(c_) * h_ * w_, 0.0f) {}

  Shape3 shape() const { return {c, h, w}; }
  size_t size() const { return v.size(); }

  float& at(int ci, int y, int x) { return v[(size_t(ci) * h + y) * w + x]; }
  float at(int ci, int y, int x) const { return v[(size_t(ci) * h + y) * w + x]; }
};

// The normalized 3x224x224 view a packet image becomes before inference.
using ImageTensor = Tensor3;

}  // namespace vinevi
