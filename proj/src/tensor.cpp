#include "piig/tensor.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace piig {

std::string to_string(const Shape4& s) {
  std::ostringstream oss;
  oss << "(" << s.n << "," << s.c << "," << s.h << "," << s.w << ")";
  return oss.str();
}

namespace {

void check_shape_positive(const Shape4& s, const char* where) {
  if (s.n <= 0 || s.c <= 0 || s.h <= 0 || s.w <= 0) {
    throw std::invalid_argument(std::string(where) +
                                ": shape must be positive, got " + to_string(s));
  }
}

std::shared_ptr<detail::Node> require_node(const Tensor& t, const char* where) {
  auto n = t.node();
  if (!n) throw std::invalid_argument(std::string(where) + ": undefined tensor");
  return n;
}

void check_same_shape(const char* where, const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) {
    throw std::invalid_argument(std::string(where) + ": shape mismatch " +
                                to_string(a.shape()) + " vs " +
                                to_string(b.shape()));
  }
}

}  // namespace

namespace detail {

Tensor make_op(Shape4 shape, std::vector<float> value,
               std::vector<std::shared_ptr<Node>> parents,
               std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value = std::move(value);
  bool needs_grad = false;
  for (const auto& p : parents) {
    if (p && p->requires_grad) needs_grad = true;
  }
  if (needs_grad) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor::wrap(std::move(node));
}

}  // namespace detail

Tensor Tensor::wrap(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

Tensor Tensor::zeros(Shape4 shape, bool requires_grad) {
  return full(shape, 0.0f, requires_grad);
}

Tensor Tensor::full(Shape4 shape, float value, bool requires_grad) {
  check_shape_positive(shape, "Tensor::full");
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value.assign(static_cast<std::size_t>(shape.numel()), value);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), 0.0f);
  return wrap(std::move(node));
}

Tensor Tensor::from_data(Shape4 shape, std::vector<float> data,
                         bool requires_grad) {
  check_shape_positive(shape, "Tensor::from_data");
  if (static_cast<std::int64_t>(data.size()) != shape.numel()) {
    throw std::invalid_argument("Tensor::from_data: got " +
                                std::to_string(data.size()) +
                                " values for shape " + to_string(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), 0.0f);
  return wrap(std::move(node));
}

Tensor Tensor::scalar(float value) {
  return from_data({1, 1, 1, 1}, {value});
}

Shape4 Tensor::shape() const { return require_node(*this, "shape")->shape; }

std::int64_t Tensor::numel() const { return shape().numel(); }

bool Tensor::requires_grad() const {
  return require_node(*this, "requires_grad")->requires_grad;
}

const float* Tensor::data() const {
  return require_node(*this, "data")->value.data();
}

float* Tensor::data() { return require_node(*this, "data")->value.data(); }

std::span<const float> Tensor::values() const {
  auto n = require_node(*this, "values");
  return {n->value.data(), n->value.size()};
}

std::span<const float> Tensor::grad() const {
  auto n = require_node(*this, "grad");
  if (!n->requires_grad) {
    throw std::logic_error("grad: tensor does not require gradients");
  }
  return {n->grad.data(), n->grad.size()};
}

std::span<float> Tensor::grad() {
  auto n = require_node(*this, "grad");
  if (!n->requires_grad) {
    throw std::logic_error("grad: tensor does not require gradients");
  }
  return {n->grad.data(), n->grad.size()};
}

void Tensor::zero_grad() {
  auto n = require_node(*this, "zero_grad");
  if (n->requires_grad) n->grad.assign(n->value.size(), 0.0f);
}

float Tensor::item() const {
  auto n = require_node(*this, "item");
  if (n->shape.numel() != 1) {
    throw std::invalid_argument("item: tensor is not scalar, shape " +
                                to_string(n->shape));
  }
  return n->value[0];
}

Tensor Tensor::detached() const {
  auto n = require_node(*this, "detached");
  return from_data(n->shape, n->value, false);
}

void Tensor::assert_finite(const std::string& what) const {
  auto n = require_node(*this, "assert_finite");
  for (std::size_t i = 0; i < n->value.size(); ++i) {
    if (!std::isfinite(n->value[i])) {
      throw std::runtime_error(what + ": non-finite value at index " +
                               std::to_string(i));
    }
  }
}

void backward(const Tensor& scalar_loss) {
  auto root = require_node(scalar_loss, "backward");
  if (root->shape.numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                to_string(root->shape));
  }
  if (!root->requires_grad) {
    throw std::invalid_argument("backward: loss does not require gradients");
  }
  if (root->consumed) {
    throw std::runtime_error("backward: graph already consumed");
  }
  root->consumed = true;

  // Iterative depth-first post-order over gradient-requiring nodes.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  struct Frame {
    detail::Node* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      detail::Node* p = f.node->parents[f.next_parent++].get();
      if (p && p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  // Interior gradients are scoped to this pass; leaves accumulate.
  for (detail::Node* n : order) {
    if (!n->is_leaf()) {
      n->grad.assign(static_cast<std::size_t>(n->shape.numel()), 0.0f);
    } else if (n->grad.empty()) {
      n->grad.assign(static_cast<std::size_t>(n->shape.numel()), 0.0f);
    }
  }
  root->grad[0] = 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------------
// Elementwise operations

namespace {

using NodePtr = std::shared_ptr<detail::Node>;

template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& a, const char* name, Fwd&& fwd, Bwd&& bwd) {
  auto an = require_node(a, name);
  std::vector<float> out(an->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(an->value[i]);
  return detail::make_op(
      an->shape, std::move(out), {an},
      [an, bwd](detail::Node& self) {
        if (!an->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          an->grad[i] += self.grad[i] * bwd(an->value[i], self.value[i]);
        }
      });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  auto an = require_node(a, "add");
  auto bn = require_node(b, "add");
  std::vector<float> out(an->value.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = an->value[i] + bn->value[i];
  return detail::make_op(an->shape, std::move(out), {an, bn},
                         [an, bn](detail::Node& self) {
                           if (an->requires_grad)
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               an->grad[i] += self.grad[i];
                           if (bn->requires_grad)
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               bn->grad[i] += self.grad[i];
                         });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  auto an = require_node(a, "sub");
  auto bn = require_node(b, "sub");
  std::vector<float> out(an->value.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = an->value[i] - bn->value[i];
  return detail::make_op(an->shape, std::move(out), {an, bn},
                         [an, bn](detail::Node& self) {
                           if (an->requires_grad)
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               an->grad[i] += self.grad[i];
                           if (bn->requires_grad)
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               bn->grad[i] -= self.grad[i];
                         });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  auto an = require_node(a, "mul");
  auto bn = require_node(b, "mul");
  std::vector<float> out(an->value.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = an->value[i] * bn->value[i];
  return detail::make_op(an->shape, std::move(out), {an, bn},
                         [an, bn](detail::Node& self) {
                           if (an->requires_grad)
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               an->grad[i] += self.grad[i] * bn->value[i];
                           if (bn->requires_grad)
                             for (std::size_t i = 0; i < self.grad.size(); ++i)
                               bn->grad[i] += self.grad[i] * an->value[i];
                         });
}

Tensor scale(const Tensor& a, float s) {
  return unary_op(
      a, "scale", [s](float x) { return x * s; },
      [s](float, float) { return s; });
}

Tensor add_scalar(const Tensor& a, float s) {
  return unary_op(
      a, "add_scalar", [s](float x) { return x + s; },
      [](float, float) { return 1.0f; });
}

Tensor exp(const Tensor& a) {
  return unary_op(
      a, "exp", [](float x) { return std::exp(x); },
      [](float, float y) { return y; });
}

Tensor abs(const Tensor& a) {
  return unary_op(
      a, "abs", [](float x) { return std::fabs(x); },
      [](float x, float) { return x > 0.0f ? 1.0f : (x < 0.0f ? -1.0f : 0.0f); });
}

Tensor tanh(const Tensor& a) {
  return unary_op(
      a, "tanh", [](float x) { return std::tanh(x); },
      [](float, float y) { return 1.0f - y * y; });
}

Tensor elu(const Tensor& a) {
  // For x <= 0 the output is exp(x) - 1, so the local slope is value + 1.
  return unary_op(
      a, "elu", [](float x) { return x > 0.0f ? x : std::expm1(x); },
      [](float x, float y) { return x > 0.0f ? 1.0f : y + 1.0f; });
}

Tensor elu_slope(const Tensor& a) {
  return unary_op(
      a, "elu_slope", [](float x) { return x > 0.0f ? 1.0f : std::exp(x); },
      [](float x, float y) { return x > 0.0f ? 0.0f : y; });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& a) {
  auto an = require_node(a, "sum");
  double acc = 0.0;
  for (float v : an->value) acc += v;
  return detail::make_op({1, 1, 1, 1}, {static_cast<float>(acc)}, {an},
                         [an](detail::Node& self) {
                           if (!an->requires_grad) return;
                           const float g = self.grad[0];
                           for (auto& gv : an->grad) gv += g;
                         });
}

Tensor mean(const Tensor& a) {
  auto an = require_node(a, "mean");
  double acc = 0.0;
  for (float v : an->value) acc += v;
  const double inv = 1.0 / static_cast<double>(an->value.size());
  return detail::make_op({1, 1, 1, 1}, {static_cast<float>(acc * inv)}, {an},
                         [an, inv](detail::Node& self) {
                           if (!an->requires_grad) return;
                           const float g =
                               self.grad[0] * static_cast<float>(inv);
                           for (auto& gv : an->grad) gv += g;
                         });
}

Tensor sum_per_sample(const Tensor& a) {
  auto an = require_node(a, "sum_per_sample");
  const Shape4 s = an->shape;
  const std::int64_t per = s.numel() / s.n;
  std::vector<float> out(static_cast<std::size_t>(s.n));
  for (int n = 0; n < s.n; ++n) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < per; ++i) acc += an->value[n * per + i];
    out[n] = static_cast<float>(acc);
  }
  return detail::make_op({s.n, 1, 1, 1}, std::move(out), {an},
                         [an, per](detail::Node& self) {
                           if (!an->requires_grad) return;
                           for (int n = 0; n < self.shape.n; ++n) {
                             const float g = self.grad[n];
                             for (std::int64_t i = 0; i < per; ++i)
                               an->grad[n * per + i] += g;
                           }
                         });
}

// ---------------------------------------------------------------------------
// Shape operations

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty())
    throw std::invalid_argument("concat_channels: no inputs");
  std::vector<NodePtr> nodes;
  nodes.reserve(parts.size());
  for (const auto& p : parts) nodes.push_back(require_node(p, "concat_channels"));
  const Shape4 first = nodes[0]->shape;
  int total_c = 0;
  for (const auto& n : nodes) {
    if (n->shape.n != first.n || n->shape.h != first.h ||
        n->shape.w != first.w) {
      throw std::invalid_argument(
          "concat_channels: incompatible shapes " + to_string(first) + " vs " +
          to_string(n->shape));
    }
    total_c += n->shape.c;
  }
  const Shape4 out_shape{first.n, total_c, first.h, first.w};
  const std::int64_t hw = static_cast<std::int64_t>(first.h) * first.w;
  std::vector<float> out(static_cast<std::size_t>(out_shape.numel()));
  for (int n = 0; n < first.n; ++n) {
    int c_off = 0;
    for (const auto& part : nodes) {
      const int pc = part->shape.c;
      const float* src = part->value.data() + n * pc * hw;
      float* dst = out.data() + (n * total_c + c_off) * hw;
      std::copy(src, src + pc * hw, dst);
      c_off += pc;
    }
  }
  auto parents = nodes;
  return detail::make_op(
      out_shape, std::move(out), std::move(parents),
      [nodes, total_c, hw](detail::Node& self) {
        const int batch = self.shape.n;
        for (int n = 0; n < batch; ++n) {
          int c_off = 0;
          for (const auto& part : nodes) {
            const int pc = part->shape.c;
            if (part->requires_grad) {
              const float* src = self.grad.data() + (n * total_c + c_off) * hw;
              float* dst = part->grad.data() + n * pc * hw;
              for (std::int64_t i = 0; i < pc * hw; ++i) dst[i] += src[i];
            }
            c_off += pc;
          }
        }
      });
}

Tensor slice_channels(const Tensor& a, int c_begin, int c_end) {
  auto an = require_node(a, "slice_channels");
  const Shape4 s = an->shape;
  if (c_begin < 0 || c_end > s.c || c_begin >= c_end) {
    throw std::invalid_argument("slice_channels: bad range [" +
                                std::to_string(c_begin) + "," +
                                std::to_string(c_end) + ") for shape " +
                                to_string(s));
  }
  const int oc = c_end - c_begin;
  const std::int64_t hw = static_cast<std::int64_t>(s.h) * s.w;
  std::vector<float> out(static_cast<std::size_t>(s.n) * oc * hw);
  for (int n = 0; n < s.n; ++n) {
    const float* src = an->value.data() + (n * s.c + c_begin) * hw;
    std::copy(src, src + oc * hw, out.data() + n * oc * hw);
  }
  return detail::make_op(
      {s.n, oc, s.h, s.w}, std::move(out), {an},
      [an, c_begin, oc, hw](detail::Node& self) {
        if (!an->requires_grad) return;
        const Shape4 s = an->shape;
        for (int n = 0; n < s.n; ++n) {
          const float* src = self.grad.data() + n * oc * hw;
          float* dst = an->grad.data() + (n * s.c + c_begin) * hw;
          for (std::int64_t i = 0; i < oc * hw; ++i) dst[i] += src[i];
        }
      });
}

Tensor crop_spatial(const Tensor& a, int y0, int x0, int h, int w) {
  auto an = require_node(a, "crop_spatial");
  const Shape4 s = an->shape;
  if (h <= 0 || w <= 0 || y0 < 0 || x0 < 0 || y0 + h > s.h || x0 + w > s.w) {
    throw std::invalid_argument("crop_spatial: window " + std::to_string(h) +
                                "x" + std::to_string(w) + " at (" +
                                std::to_string(y0) + "," + std::to_string(x0) +
                                ") does not fit " + to_string(s));
  }
  std::vector<float> out(static_cast<std::size_t>(s.n) * s.c * h * w);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < h; ++y) {
        const float* src =
            an->value.data() + ((n * s.c + c) * s.h + y0 + y) * s.w + x0;
        std::copy(src, src + w, out.data() + ((n * s.c + c) * h + y) * w);
      }
  return detail::make_op(
      {s.n, s.c, h, w}, std::move(out), {an},
      [an, y0, x0, h, w](detail::Node& self) {
        if (!an->requires_grad) return;
        const Shape4 s = an->shape;
        for (int n = 0; n < s.n; ++n)
          for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < h; ++y) {
              const float* src = self.grad.data() + ((n * s.c + c) * h + y) * w;
              float* dst =
                  an->grad.data() + ((n * s.c + c) * s.h + y0 + y) * s.w + x0;
              for (int x = 0; x < w; ++x) dst[x] += src[x];
            }
      });
}

Tensor tile_spatial(const Tensor& a, int h, int w) {
  auto an = require_node(a, "tile_spatial");
  const Shape4 s = an->shape;
  if (s.h != 1 || s.w != 1) {
    throw std::invalid_argument("tile_spatial: expected (N,C,1,1), got " +
                                to_string(s));
  }
  if (h <= 0 || w <= 0)
    throw std::invalid_argument("tile_spatial: non-positive target size");
  std::vector<float> out(static_cast<std::size_t>(s.n) * s.c * h * w);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const float v = an->value[n * s.c + c];
      float* dst = out.data() + static_cast<std::int64_t>(n * s.c + c) * h * w;
      std::fill(dst, dst + static_cast<std::int64_t>(h) * w, v);
    }
  return detail::make_op(
      {s.n, s.c, h, w}, std::move(out), {an},
      [an, h, w](detail::Node& self) {
        if (!an->requires_grad) return;
        const Shape4 s = an->shape;
        const std::int64_t hw = static_cast<std::int64_t>(h) * w;
        for (int n = 0; n < s.n; ++n)
          for (int c = 0; c < s.c; ++c) {
            const float* src = self.grad.data() + (n * s.c + c) * hw;
            double acc = 0.0;
            for (std::int64_t i = 0; i < hw; ++i) acc += src[i];
            an->grad[n * s.c + c] += static_cast<float>(acc);
          }
      });
}

Tensor repeat_batch(const Tensor& a, int n) {
  auto an = require_node(a, "repeat_batch");
  const Shape4 s = an->shape;
  if (s.n != 1)
    throw std::invalid_argument("repeat_batch: expected batch 1, got " +
                                to_string(s));
  if (n <= 0) throw std::invalid_argument("repeat_batch: non-positive count");
  const std::int64_t per = s.numel();
  std::vector<float> out(static_cast<std::size_t>(per) * n);
  for (int i = 0; i < n; ++i)
    std::copy(an->value.begin(), an->value.end(), out.begin() + i * per);
  return detail::make_op(
      {n, s.c, s.h, s.w}, std::move(out), {an},
      [an, per](detail::Node& self) {
        if (!an->requires_grad) return;
        const int reps = self.shape.n;
        for (int i = 0; i < reps; ++i)
          for (std::int64_t j = 0; j < per; ++j)
            an->grad[j] += self.grad[i * per + j];
      });
}

Tensor where_mask(const Tensor& mask, const Tensor& on_one,
                  const Tensor& on_zero) {
  check_same_shape("where_mask", on_one, on_zero);
  auto mn = require_node(mask, "where_mask");
  auto an = require_node(on_one, "where_mask");
  auto bn = require_node(on_zero, "where_mask");
  const Shape4 ms = mn->shape;
  const Shape4 s = an->shape;
  if (ms.c != 1 || ms.h != s.h || ms.w != s.w ||
      (ms.n != 1 && ms.n != s.n)) {
    throw std::invalid_argument("where_mask: mask shape " + to_string(ms) +
                                " incompatible with " + to_string(s));
  }
  for (float v : mn->value) {
    if (v != 0.0f && v != 1.0f) {
      throw std::invalid_argument(
          "where_mask: mask entries must be exactly 0 or 1");
    }
  }
  const std::int64_t hw = static_cast<std::int64_t>(s.h) * s.w;
  std::vector<float> out(static_cast<std::size_t>(s.numel()));
  for (int n = 0; n < s.n; ++n) {
    const float* m = mn->value.data() + (ms.n == 1 ? 0 : n * hw);
    for (int c = 0; c < s.c; ++c) {
      const std::int64_t base = (static_cast<std::int64_t>(n) * s.c + c) * hw;
      for (std::int64_t i = 0; i < hw; ++i) {
        out[base + i] = m[i] == 1.0f ? an->value[base + i] : bn->value[base + i];
      }
    }
  }
  return detail::make_op(
      s, std::move(out), {mn, an, bn},
      [mn, an, bn, hw](detail::Node& self) {
        const Shape4 s = self.shape;
        const Shape4 ms = mn->shape;
        for (int n = 0; n < s.n; ++n) {
          const float* m = mn->value.data() + (ms.n == 1 ? 0 : n * hw);
          for (int c = 0; c < s.c; ++c) {
            const std::int64_t base =
                (static_cast<std::int64_t>(n) * s.c + c) * hw;
            for (std::int64_t i = 0; i < hw; ++i) {
              if (m[i] == 1.0f) {
                if (an->requires_grad) an->grad[base + i] += self.grad[base + i];
              } else {
                if (bn->requires_grad) bn->grad[base + i] += self.grad[base + i];
              }
            }
          }
        }
      });
}

}  // namespace piig
