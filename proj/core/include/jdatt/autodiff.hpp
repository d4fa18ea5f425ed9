#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "jdatt/tensor.hpp"

namespace jdatt::ad {

struct Node;
using Var = std::shared_ptr<Node>;

/// One node of the dynamically built computation graph. The recorded
/// backward closure accumulates this node's grad into its parents.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward;

  explicit Node(Tensor v) : value(std::move(v)) {}
  Tensor& ensure_grad();
  double scalar() const { return value[0]; }
};

/// Gradient recording is on by default; teacher forward passes run inside
/// a NoGradGuard so they cost no graph memory.
bool grad_enabled();

class NoGradGuard {
public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
  bool previous_;
};

Var constant(Tensor value);
Var make_param(Tensor value);
Var detach(const Var& x);

/// Reverse-mode sweep from a scalar root. Grads accumulate; callers zero
/// parameter grads between optimizer steps, not between micro-batches.
void backward(const Var& root);

// Elementwise arithmetic (shapes must match exactly).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var add_scalar(const Var& a, double s);
Var mul_scalar(const Var& a, double s);
Var neg(const Var& a);

// Elementwise functions.
Var exp_(const Var& a);
Var log_(const Var& a);
Var sqrt_(const Var& a);
Var sigmoid(const Var& a);
Var tanh_(const Var& a);
Var relu(const Var& a);
Var gelu(const Var& a);
Var abs_(const Var& a);
Var pow_const(const Var& a, double e);
Var clamp(const Var& a, double lo, double hi);
Var min_el(const Var& a, const Var& b);
Var max_el(const Var& a, const Var& b);

// Reductions.
Var sum_all(const Var& a);
Var mean_all(const Var& a);

// Shape ops.
Var reshape(const Var& a, std::vector<int> shape);
Var flatten(const Var& a);
Var concat_ch(const std::vector<Var>& xs);
Var slice_ch(const Var& a, int c0, int c1);
Var chw_to_rows(const Var& a);  // [C,H,W] -> [H*W, C]

// Row-wise softmax over the last dimension of a [R,C] tensor.
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);

// Spatial ops on [C,H,W] tensors.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var upsample_nearest2(const Var& x);
Var resize_bilinear(const Var& x, int out_h, int out_w);

/// Bilinear warp of img by a per-pixel displacement field.
/// flow[0] holds x displacements, flow[1] y displacements, in pixels.
/// Sampling coordinates are clamped to the image (replicate border).
Var warp_bilinear(const Var& img, const Var& flow);

}  // namespace jdatt::ad
