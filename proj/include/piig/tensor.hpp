#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace piig {

struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::int64_t numel() const {
    return static_cast<std::int64_t>(n) * c * h * w;
  }
  bool operator==(const Shape4&) const = default;
};

std::string to_string(const Shape4& s);

class Tensor;

namespace detail {

// One node of the recorded computation graph. Interior nodes are created
// fresh by every operation; leaves (parameters, inputs) persist and keep
// their gradient buffer across backward passes until zero_grad.
struct Node {
  Shape4 shape;
  std::vector<float> value;
  std::vector<float> grad;  // allocated iff requires_grad
  bool requires_grad = false;
  bool consumed = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const { return parents.empty() && !backward_fn; }
};

// Builds an operation result. If no parent requires gradients the graph is
// pruned: parents and the backward closure are dropped.
Tensor make_op(Shape4 shape, std::vector<float> value,
               std::vector<std::shared_ptr<Node>> parents,
               std::function<void(Node&)> backward_fn);

}  // namespace detail

// Dense float32 array in (batch, channel, height, width) order. Copying a
// Tensor aliases the same storage; detached() makes an independent copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape4 shape, bool requires_grad = false);
  static Tensor full(Shape4 shape, float value, bool requires_grad = false);
  static Tensor from_data(Shape4 shape, std::vector<float> data,
                          bool requires_grad = false);
  static Tensor scalar(float value);

  bool defined() const { return node_ != nullptr; }
  Shape4 shape() const;
  std::int64_t numel() const;
  bool requires_grad() const;

  const float* data() const;
  float* data();
  std::span<const float> values() const;

  std::span<const float> grad() const;
  std::span<float> grad();
  void zero_grad();

  // Scalar tensors only.
  float item() const;

  // Deep copy with no graph and no gradient buffer.
  Tensor detached() const;

  void assert_finite(const std::string& what) const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

// Backpropagates from a scalar loss. Leaf gradients accumulate across calls
// until zero_grad; a recorded graph can be walked exactly once.
void backward(const Tensor& scalar_loss);

// Elementwise operations. Shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
Tensor add_scalar(const Tensor& a, float s);
Tensor exp(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor elu(const Tensor& a);
// d ELU / dx as a differentiable value: 1 for x > 0, exp(x) otherwise.
Tensor elu_slope(const Tensor& a);

// Reductions.
Tensor sum(const Tensor& a);             // -> (1,1,1,1)
Tensor mean(const Tensor& a);            // -> (1,1,1,1)
Tensor sum_per_sample(const Tensor& a);  // -> (N,1,1,1)

// Shape operations.
Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor slice_channels(const Tensor& a, int c_begin, int c_end);
Tensor crop_spatial(const Tensor& a, int y0, int x0, int h, int w);
Tensor tile_spatial(const Tensor& a, int h, int w);  // (N,C,1,1) -> (N,C,h,w)
Tensor repeat_batch(const Tensor& a, int n);         // (1,C,H,W) -> (n,C,H,W)

// Per-pixel select: where the mask is 1 the result takes on_one, where it is
// 0 it takes on_zero. The mask has a single channel, batch 1 or N, and must
// contain exact zeros and ones only.
Tensor where_mask(const Tensor& mask, const Tensor& on_one,
                  const Tensor& on_zero);

}  // namespace piig
