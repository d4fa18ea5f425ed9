#include "jdatt/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace jdatt::ad {

namespace {
thread_local bool g_grad_enabled = true;

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> bw) {
  auto node = std::make_shared<Node>(std::move(value));
  bool any = false;
  for (const auto& p : parents) any = any || p->requires_grad;
  if (g_grad_enabled && any) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(bw);
  }
  return node;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a->value.same_shape(b->value))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a->value.shape_str() + " vs " +
                                b->value.shape_str());
}
}  // namespace

Tensor& Node::ensure_grad() {
  if (grad.numel() != value.numel()) grad = Tensor(value.shape());
  return grad;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var constant(Tensor value) { return std::make_shared<Node>(std::move(value)); }

Var make_param(Tensor value) {
  auto node = std::make_shared<Node>(std::move(value));
  node->requires_grad = true;
  return node;
}

Var detach(const Var& x) { return constant(x->value); }

void backward(const Var& root) {
  if (root->value.numel() != 1) throw std::invalid_argument("backward: root must be scalar");
  if (!root->requires_grad) return;

  // Iterative post-order DFS; reverse gives a valid topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward) node->backward(*node);
  }
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out(a->value.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] + b->value[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    const int64_t n = self.value.numel();
    for (int k = 0; k < 2; ++k) {
      Node* p = self.parents[static_cast<size_t>(k)].get();
      if (!p->requires_grad) continue;
      Tensor& g = p->ensure_grad();
      for (int64_t i = 0; i < n; ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a->value.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] - b->value[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    const int64_t n = self.value.numel();
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    if (pa->requires_grad) {
      Tensor& g = pa->ensure_grad();
      for (int64_t i = 0; i < n; ++i) g[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      Tensor& g = pb->ensure_grad();
      for (int64_t i = 0; i < n; ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a->value.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] * b->value[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    const int64_t n = self.value.numel();
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    if (pa->requires_grad) {
      Tensor& g = pa->ensure_grad();
      for (int64_t i = 0; i < n; ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      Tensor& g = pb->ensure_grad();
      for (int64_t i = 0; i < n; ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

Var div(const Var& a, const Var& b) {
  check_same_shape(a, b, "div");
  Tensor out(a->value.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] / b->value[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    const int64_t n = self.value.numel();
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    if (pa->requires_grad) {
      Tensor& g = pa->ensure_grad();
      for (int64_t i = 0; i < n; ++i) g[i] += self.grad[i] / pb->value[i];
    }
    if (pb->requires_grad) {
      Tensor& g = pb->ensure_grad();
      for (int64_t i = 0; i < n; ++i) {
        const double bv = pb->value[i];
        g[i] -= self.grad[i] * pa->value[i] / (bv * bv);
      }
    }
  });
}

Var add_scalar(const Var& a, double s) {
  Tensor out(a->value.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] + s;
  return make_node(std::move(out), {a}, [](Node& self) {
    Node* p = self.parents[0].get();
    Tensor& g = p->ensure_grad();
    const int64_t n = self.value.numel();
    for (int64_t i = 0; i < n; ++i) g[i] += self.grad[i];
  });
}

Var mul_scalar(const Var& a, double s) {
  Tensor out(a->value.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] * s;
  return make_node(std::move(out), {a}, [s](Node& self) {
    Node* p = self.parents[0].get();
    Tensor& g = p->ensure_grad();
    const int64_t n = self.value.numel();
    for (int64_t i = 0; i < n; ++i) g[i] += self.grad[i] * s;
  });
}

Var neg(const Var& a) { return mul_scalar(a, -1.0); }

namespace {
template <typename F, typename D>
Var unary_op(const Var& a, F f, D dfdx_from_input) {
  Tensor out(a->value.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = f(a->value[i]);
  return make_node(std::move(out), {a}, [dfdx_from_input](Node& self) {
    Node* p = self.parents[0].get();
    Tensor& g = p->ensure_grad();
    const int64_t n = self.value.numel();
    for (int64_t i = 0; i < n; ++i) g[i] += self.grad[i] * dfdx_from_input(p->value[i], self.value[i]);
  });
}
}  // namespace

Var exp_(const Var& a) {
  return unary_op(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log_(const Var& a) {
  return unary_op(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sqrt_(const Var& a) {
  return unary_op(
      a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var sigmoid(const Var& a) {
  return unary_op(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Var tanh_(const Var& a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(const Var& a) {
  return unary_op(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var gelu(const Var& a) {
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  constexpr double inv_sqrt2pi = 0.3989422804014326779;
  return unary_op(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
      [](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
        return cdf + x * inv_sqrt2pi * std::exp(-0.5 * x * x);
      });
}

Var abs_(const Var& a) {
  return unary_op(
      a, [](double x) { return std::fabs(x); }, [](double x, double) { return x >= 0.0 ? 1.0 : -1.0; });
}

Var pow_const(const Var& a, double e) {
  return unary_op(
      a, [e](double x) { return std::pow(x, e); }, [e](double x, double) { return e * std::pow(x, e - 1.0); });
}

Var clamp(const Var& a, double lo, double hi) {
  return unary_op(
      a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var min_el(const Var& a, const Var& b) {
  check_same_shape(a, b, "min_el");
  Tensor out(a->value.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = std::min(a->value[i], b->value[i]);
  return make_node(std::move(out), {a, b}, [](Node& self) {
    const int64_t n = self.value.numel();
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    for (int64_t i = 0; i < n; ++i) {
      const bool take_a = pa->value[i] <= pb->value[i];
      Node* p = take_a ? pa : pb;
      if (p->requires_grad) p->ensure_grad()[i] += self.grad[i];
    }
  });
}

Var max_el(const Var& a, const Var& b) {
  check_same_shape(a, b, "max_el");
  Tensor out(a->value.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = std::max(a->value[i], b->value[i]);
  return make_node(std::move(out), {a, b}, [](Node& self) {
    const int64_t n = self.value.numel();
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    for (int64_t i = 0; i < n; ++i) {
      const bool take_a = pa->value[i] >= pb->value[i];
      Node* p = take_a ? pa : pb;
      if (p->requires_grad) p->ensure_grad()[i] += self.grad[i];
    }
  });
}

Var sum_all(const Var& a) {
  double s = 0.0;
  const int64_t n = a->value.numel();
  for (int64_t i = 0; i < n; ++i) s += a->value[i];
  Tensor out({1});
  out[0] = s;
  return make_node(std::move(out), {a}, [](Node& self) {
    Node* p = self.parents[0].get();
    Tensor& g = p->ensure_grad();
    const int64_t n = p->value.numel();
    const double gv = self.grad[0];
    for (int64_t i = 0; i < n; ++i) g[i] += gv;
  });
}

Var mean_all(const Var& a) {
  if (a->value.numel() == 0) throw std::invalid_argument("mean_all: empty tensor");
  return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a->value.numel()));
}

Var reshape(const Var& a, std::vector<int> shape) {
  Tensor out = a->value.reshaped(std::move(shape));
  return make_node(std::move(out), {a}, [](Node& self) {
    Node* p = self.parents[0].get();
    Tensor& g = p->ensure_grad();
    const int64_t n = p->value.numel();
    for (int64_t i = 0; i < n; ++i) g[i] += self.grad[i];
  });
}

Var flatten(const Var& a) { return reshape(a, {static_cast<int>(a->value.numel())}); }

Var concat_ch(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_ch: no inputs");
  const int h = xs[0]->value.dim(1), w = xs[0]->value.dim(2);
  int c_total = 0;
  for (const auto& x : xs) {
    if (x->value.rank() != 3 || x->value.dim(1) != h || x->value.dim(2) != w)
      throw std::invalid_argument("concat_ch: incompatible shapes");
    c_total += x->value.dim(0);
  }
  Tensor out({c_total, h, w});
  int64_t off = 0;
  for (const auto& x : xs) {
    std::copy(x->value.data(), x->value.data() + x->value.numel(), out.data() + off);
    off += x->value.numel();
  }
  return make_node(std::move(out), xs, [](Node& self) {
    int64_t off = 0;
    for (auto& parent : self.parents) {
      const int64_t n = parent->value.numel();
      if (parent->requires_grad) {
        Tensor& g = parent->ensure_grad();
        for (int64_t i = 0; i < n; ++i) g[i] += self.grad[off + i];
      }
      off += n;
    }
  });
}

Var slice_ch(const Var& a, int c0, int c1) {
  if (a->value.rank() != 3 || c0 < 0 || c1 > a->value.dim(0) || c0 >= c1)
    throw std::invalid_argument("slice_ch: bad channel range");
  const int h = a->value.dim(1), w = a->value.dim(2);
  const int64_t plane = static_cast<int64_t>(h) * w;
  Tensor out({c1 - c0, h, w});
  std::copy(a->value.data() + c0 * plane, a->value.data() + c1 * plane, out.data());
  return make_node(std::move(out), {a}, [c0, plane](Node& self) {
    Node* p = self.parents[0].get();
    Tensor& g = p->ensure_grad();
    const int64_t n = self.value.numel();
    for (int64_t i = 0; i < n; ++i) g[c0 * plane + i] += self.grad[i];
  });
}

Var chw_to_rows(const Var& a) {
  if (a->value.rank() != 3) throw std::invalid_argument("chw_to_rows: rank-3 input required");
  const int c = a->value.dim(0), h = a->value.dim(1), w = a->value.dim(2);
  const int64_t hw = static_cast<int64_t>(h) * w;
  Tensor out({static_cast<int>(hw), c});
  for (int ch = 0; ch < c; ++ch)
    for (int64_t p = 0; p < hw; ++p) out[p * c + ch] = a->value[ch * hw + p];
  return make_node(std::move(out), {a}, [c, hw](Node& self) {
    Node* pr = self.parents[0].get();
    Tensor& g = pr->ensure_grad();
    for (int ch = 0; ch < c; ++ch)
      for (int64_t p = 0; p < hw; ++p) g[ch * hw + p] += self.grad[p * c + ch];
  });
}

Var softmax_rows(const Var& a) {
  if (a->value.rank() != 2) throw std::invalid_argument("softmax_rows: rank-2 input required");
  const int rows = a->value.dim(0), cols = a->value.dim(1);
  Tensor out(a->value.shape());
  for (int r = 0; r < rows; ++r) {
    const double* x = a->value.data() + static_cast<int64_t>(r) * cols;
    double* y = out.data() + static_cast<int64_t>(r) * cols;
    double mx = x[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double z = 0.0;
    for (int c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      z += y[c];
    }
    for (int c = 0; c < cols; ++c) y[c] /= z;
  }
  return make_node(std::move(out), {a}, [rows, cols](Node& self) {
    Node* p = self.parents[0].get();
    Tensor& g = p->ensure_grad();
    for (int r = 0; r < rows; ++r) {
      const double* y = self.value.data() + static_cast<int64_t>(r) * cols;
      const double* gy = self.grad.data() + static_cast<int64_t>(r) * cols;
      double dot = 0.0;
      for (int c = 0; c < cols; ++c) dot += gy[c] * y[c];
      double* gx = g.data() + static_cast<int64_t>(r) * cols;
      for (int c = 0; c < cols; ++c) gx[c] += y[c] * (gy[c] - dot);
    }
  });
}

Var log_softmax_rows(const Var& a) {
  if (a->value.rank() != 2) throw std::invalid_argument("log_softmax_rows: rank-2 input required");
  const int rows = a->value.dim(0), cols = a->value.dim(1);
  Tensor out(a->value.shape());
  for (int r = 0; r < rows; ++r) {
    const double* x = a->value.data() + static_cast<int64_t>(r) * cols;
    double* y = out.data() + static_cast<int64_t>(r) * cols;
    double mx = x[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    double z = 0.0;
    for (int c = 0; c < cols; ++c) z += std::exp(x[c] - mx);
    const double lse = mx + std::log(z);
    for (int c = 0; c < cols; ++c) y[c] = x[c] - lse;
  }
  return make_node(std::move(out), {a}, [rows, cols](Node& self) {
    Node* p = self.parents[0].get();
    Tensor& g = p->ensure_grad();
    for (int r = 0; r < rows; ++r) {
      const double* y = self.value.data() + static_cast<int64_t>(r) * cols;
      const double* gy = self.grad.data() + static_cast<int64_t>(r) * cols;
      double gsum = 0.0;
      for (int c = 0; c < cols; ++c) gsum += gy[c];
      double* gx = g.data() + static_cast<int64_t>(r) * cols;
      for (int c = 0; c < cols; ++c) gx[c] += gy[c] - std::exp(y[c]) * gsum;
    }
  });
}

namespace {
// Output-column range with in-bounds input columns for a given kernel x.
inline void conv_x_bounds(int kx, int stride, int pad, int in_w, int out_w, int& ox_lo, int& ox_hi) {
  ox_lo = 0;
  while (ox_lo < out_w && ox_lo * stride - pad + kx < 0) ++ox_lo;
  ox_hi = out_w;
  while (ox_hi > ox_lo && (ox_hi - 1) * stride - pad + kx >= in_w) --ox_hi;
}
}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  if (x->value.rank() != 3 || w->value.rank() != 4) throw std::invalid_argument("conv2d: bad ranks");
  const int ic = x->value.dim(0), h = x->value.dim(1), ww = x->value.dim(2);
  const int oc = w->value.dim(0), kic = w->value.dim(1), kh = w->value.dim(2), kw = w->value.dim(3);
  if (kic != ic) throw std::invalid_argument("conv2d: channel mismatch");
  if (b && b->value.numel() != oc) throw std::invalid_argument("conv2d: bias size mismatch");
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (ww + 2 * pad - kw) / stride + 1;
  if (oh <= 0 || ow <= 0) throw std::invalid_argument("conv2d: empty output");

  Tensor out({oc, oh, ow});
  const double* xd = x->value.data();
  const double* wd = w->value.data();
  for (int o = 0; o < oc; ++o) {
    const double bias = b ? b->value[o] : 0.0;
    double* od = out.data() + static_cast<int64_t>(o) * oh * ow;
    for (int64_t i = 0; i < static_cast<int64_t>(oh) * ow; ++i) od[i] = bias;
    for (int i = 0; i < ic; ++i) {
      const double* xplane = xd + static_cast<int64_t>(i) * h * ww;
      const double* wplane = wd + ((static_cast<int64_t>(o) * ic + i) * kh) * kw;
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          const double wv = wplane[static_cast<int64_t>(ky) * kw + kx];
          int ox_lo, ox_hi;
          conv_x_bounds(kx, stride, pad, ww, ow, ox_lo, ox_hi);
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            const double* xrow = xplane + static_cast<int64_t>(iy) * ww - pad + kx;
            double* orow = od + static_cast<int64_t>(oy) * ow;
            if (stride == 1) {
              for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * xrow[ox];
            } else {
              for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * xrow[static_cast<int64_t>(ox) * stride];
            }
          }
        }
      }
    }
  }

  std::vector<Var> parents = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
  return make_node(std::move(out), std::move(parents), [stride, pad](Node& self) {
    Node* px = self.parents[0].get();
    Node* pw = self.parents[1].get();
    Node* pb = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
    const int ic = px->value.dim(0), h = px->value.dim(1), ww = px->value.dim(2);
    const int oc = pw->value.dim(0), kh = pw->value.dim(2), kw = pw->value.dim(3);
    const int oh = self.value.dim(1), ow = self.value.dim(2);
    const double* gy = self.grad.data();

    if (pb && pb->requires_grad) {
      Tensor& gb = pb->ensure_grad();
      for (int o = 0; o < oc; ++o) {
        const double* gplane = gy + static_cast<int64_t>(o) * oh * ow;
        double s = 0.0;
        for (int64_t i = 0; i < static_cast<int64_t>(oh) * ow; ++i) s += gplane[i];
        gb[o] += s;
      }
    }
    if (pw->requires_grad) {
      Tensor& gw = pw->ensure_grad();
      const double* xd = px->value.data();
      for (int o = 0; o < oc; ++o) {
        const double* gplane = gy + static_cast<int64_t>(o) * oh * ow;
        for (int i = 0; i < ic; ++i) {
          const double* xplane = xd + static_cast<int64_t>(i) * h * ww;
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              int ox_lo, ox_hi;
              conv_x_bounds(kx, stride, pad, ww, ow, ox_lo, ox_hi);
              // Four fixed-order accumulators let the reduction pipeline
              // without changing the (deterministic) summation order.
              double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
              for (int oy = 0; oy < oh; ++oy) {
                const int iy = oy * stride - pad + ky;
                if (iy < 0 || iy >= h) continue;
                const double* xrow = xplane + static_cast<int64_t>(iy) * ww - pad + kx;
                const double* grow = gplane + static_cast<int64_t>(oy) * ow;
                if (stride == 1) {
                  int ox = ox_lo;
                  for (; ox + 4 <= ox_hi; ox += 4) {
                    s0 += grow[ox] * xrow[ox];
                    s1 += grow[ox + 1] * xrow[ox + 1];
                    s2 += grow[ox + 2] * xrow[ox + 2];
                    s3 += grow[ox + 3] * xrow[ox + 3];
                  }
                  for (; ox < ox_hi; ++ox) s0 += grow[ox] * xrow[ox];
                } else {
                  for (int ox = ox_lo; ox < ox_hi; ++ox) s0 += grow[ox] * xrow[static_cast<int64_t>(ox) * stride];
                }
              }
              gw[((static_cast<int64_t>(o) * ic + i) * kh + ky) * kw + kx] += ((s0 + s1) + (s2 + s3));
            }
          }
        }
      }
    }
    if (px->requires_grad) {
      Tensor& gx = px->ensure_grad();
      const double* wd = pw->value.data();
      for (int o = 0; o < oc; ++o) {
        const double* gplane = gy + static_cast<int64_t>(o) * oh * ow;
        for (int i = 0; i < ic; ++i) {
          double* gxplane = gx.data() + static_cast<int64_t>(i) * h * ww;
          const double* wplane = wd + ((static_cast<int64_t>(o) * ic + i) * kh) * kw;
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              const double wv = wplane[static_cast<int64_t>(ky) * kw + kx];
              if (wv == 0.0) continue;
              int ox_lo, ox_hi;
              conv_x_bounds(kx, stride, pad, ww, ow, ox_lo, ox_hi);
              for (int oy = 0; oy < oh; ++oy) {
                const int iy = oy * stride - pad + ky;
                if (iy < 0 || iy >= h) continue;
                double* gxrow = gxplane + static_cast<int64_t>(iy) * ww - pad + kx;
                const double* grow = gplane + static_cast<int64_t>(oy) * ow;
                if (stride == 1) {
                  for (int ox = ox_lo; ox < ox_hi; ++ox) gxrow[ox] += wv * grow[ox];
                } else {
                  for (int ox = ox_lo; ox < ox_hi; ++ox) gxrow[static_cast<int64_t>(ox) * stride] += wv * grow[ox];
                }
              }
            }
          }
        }
      }
    }
  });
}

Var upsample_nearest2(const Var& x) {
  if (x->value.rank() != 3) throw std::invalid_argument("upsample_nearest2: rank-3 input required");
  const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
  Tensor out({c, 2 * h, 2 * w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        const double v = x->value.at3(ch, y, xx);
        out.at3(ch, 2 * y, 2 * xx) = v;
        out.at3(ch, 2 * y, 2 * xx + 1) = v;
        out.at3(ch, 2 * y + 1, 2 * xx) = v;
        out.at3(ch, 2 * y + 1, 2 * xx + 1) = v;
      }
  return make_node(std::move(out), {x}, [c, h, w](Node& self) {
    Node* p = self.parents[0].get();
    Tensor& g = p->ensure_grad();
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
          g.at3(ch, y, xx) += self.grad.at3(ch, 2 * y, 2 * xx) + self.grad.at3(ch, 2 * y, 2 * xx + 1) +
                              self.grad.at3(ch, 2 * y + 1, 2 * xx) + self.grad.at3(ch, 2 * y + 1, 2 * xx + 1);
  });
}

namespace {
struct BilinearWeights {
  int x0, x1, y0, y1;
  double wx, wy;
};

inline BilinearWeights bilinear_setup(double gx, double gy, int h, int w) {
  gx = std::min(std::max(gx, 0.0), static_cast<double>(w - 1));
  gy = std::min(std::max(gy, 0.0), static_cast<double>(h - 1));
  BilinearWeights bw;
  bw.x0 = static_cast<int>(std::floor(gx));
  bw.y0 = static_cast<int>(std::floor(gy));
  bw.x1 = std::min(bw.x0 + 1, w - 1);
  bw.y1 = std::min(bw.y0 + 1, h - 1);
  bw.wx = gx - bw.x0;
  bw.wy = gy - bw.y0;
  return bw;
}
}  // namespace

Var resize_bilinear(const Var& x, int out_h, int out_w) {
  if (x->value.rank() != 3) throw std::invalid_argument("resize_bilinear: rank-3 input required");
  const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
  if (h == out_h && w == out_w) return x;
  Tensor out({c, out_h, out_w});
  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const BilinearWeights bw = bilinear_setup((ox + 0.5) * sx - 0.5, (oy + 0.5) * sy - 0.5, h, w);
      for (int ch = 0; ch < c; ++ch) {
        const double top = x->value.at3(ch, bw.y0, bw.x0) * (1 - bw.wx) + x->value.at3(ch, bw.y0, bw.x1) * bw.wx;
        const double bot = x->value.at3(ch, bw.y1, bw.x0) * (1 - bw.wx) + x->value.at3(ch, bw.y1, bw.x1) * bw.wx;
        out.at3(ch, oy, ox) = top * (1 - bw.wy) + bot * bw.wy;
      }
    }
  }
  return make_node(std::move(out), {x}, [c, h, w, out_h, out_w, sy, sx](Node& self) {
    Node* p = self.parents[0].get();
    Tensor& g = p->ensure_grad();
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        const BilinearWeights bw = bilinear_setup((ox + 0.5) * sx - 0.5, (oy + 0.5) * sy - 0.5, h, w);
        for (int ch = 0; ch < c; ++ch) {
          const double gv = self.grad.at3(ch, oy, ox);
          g.at3(ch, bw.y0, bw.x0) += gv * (1 - bw.wx) * (1 - bw.wy);
          g.at3(ch, bw.y0, bw.x1) += gv * bw.wx * (1 - bw.wy);
          g.at3(ch, bw.y1, bw.x0) += gv * (1 - bw.wx) * bw.wy;
          g.at3(ch, bw.y1, bw.x1) += gv * bw.wx * bw.wy;
        }
      }
    }
  });
}

Var warp_bilinear(const Var& img, const Var& flow) {
  if (img->value.rank() != 3 || flow->value.rank() != 3 || flow->value.dim(0) != 2)
    throw std::invalid_argument("warp_bilinear: img must be [C,H,W], flow [2,H,W]");
  const int c = img->value.dim(0), h = img->value.dim(1), w = img->value.dim(2);
  if (flow->value.dim(1) != h || flow->value.dim(2) != w)
    throw std::invalid_argument("warp_bilinear: flow spatial dims must match image");

  Tensor out({c, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = x + flow->value.at3(0, y, x);
      const double gy = y + flow->value.at3(1, y, x);
      const BilinearWeights bw = bilinear_setup(gx, gy, h, w);
      for (int ch = 0; ch < c; ++ch) {
        const double top = img->value.at3(ch, bw.y0, bw.x0) * (1 - bw.wx) + img->value.at3(ch, bw.y0, bw.x1) * bw.wx;
        const double bot = img->value.at3(ch, bw.y1, bw.x0) * (1 - bw.wx) + img->value.at3(ch, bw.y1, bw.x1) * bw.wx;
        out.at3(ch, y, x) = top * (1 - bw.wy) + bot * bw.wy;
      }
    }
  }
  return make_node(std::move(out), {img, flow}, [c, h, w](Node& self) {
    Node* pimg = self.parents[0].get();
    Node* pflow = self.parents[1].get();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double gx_raw = x + pflow->value.at3(0, y, x);
        const double gy_raw = y + pflow->value.at3(1, y, x);
        const BilinearWeights bw = bilinear_setup(gx_raw, gy_raw, h, w);
        const bool x_inside = gx_raw > 0.0 && gx_raw < w - 1;
        const bool y_inside = gy_raw > 0.0 && gy_raw < h - 1;
        double dgx = 0.0, dgy = 0.0;
        for (int ch = 0; ch < c; ++ch) {
          const double gv = self.grad.at3(ch, y, x);
          const double v00 = pimg->value.at3(ch, bw.y0, bw.x0);
          const double v01 = pimg->value.at3(ch, bw.y0, bw.x1);
          const double v10 = pimg->value.at3(ch, bw.y1, bw.x0);
          const double v11 = pimg->value.at3(ch, bw.y1, bw.x1);
          if (pimg->requires_grad) {
            Tensor& gi = pimg->ensure_grad();
            gi.at3(ch, bw.y0, bw.x0) += gv * (1 - bw.wx) * (1 - bw.wy);
            gi.at3(ch, bw.y0, bw.x1) += gv * bw.wx * (1 - bw.wy);
            gi.at3(ch, bw.y1, bw.x0) += gv * (1 - bw.wx) * bw.wy;
            gi.at3(ch, bw.y1, bw.x1) += gv * bw.wx * bw.wy;
          }
          if (pflow->requires_grad) {
            dgx += gv * ((v01 - v00) * (1 - bw.wy) + (v11 - v10) * bw.wy);
            dgy += gv * ((v10 - v00) * (1 - bw.wx) + (v11 - v01) * bw.wx);
          }
        }
        if (pflow->requires_grad) {
          Tensor& gf = pflow->ensure_grad();
          if (x_inside) gf.at3(0, y, x) += dgx;
          if (y_inside) gf.at3(1, y, x) += dgy;
        }
      }
    }
  });
}

}  // namespace jdatt::ad
