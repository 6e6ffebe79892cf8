#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "okra/common.hpp"

namespace okra::ad {

using Shape = std::vector<std::size_t>;

/// Dense row-major float64 tensor with an optional gradient buffer.
///
/// Tensor is a handle: copies share storage. Leaf tensors that require grad
/// (model parameters) accumulate gradients across backward passes until
/// zero_grad() is called.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->value.size(); }
  /// Leading dimension (1 for scalars).
  std::size_t rows() const;
  /// Product of trailing dimensions (1 for rank <= 1).
  std::size_t cols() const;

  std::span<const double> data() const { return impl_->value; }
  std::span<double> data() { return impl_->value; }
  /// Gradient buffer; writable through any handle, since backward
  /// accumulates into tensors captured by value.
  /// Allocated on first use.
  std::span<double> grad() const {
    if (impl_->grad.size() != impl_->value.size()) impl_->grad.assign(impl_->value.size(), 0.0);
    return impl_->grad;
  }

  double item() const;
  double at(std::size_t r, std::size_t c) const { return impl_->value[r * cols() + c]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void zero_grad();

  /// Deep copy of values; the copy is a fresh leaf.
  Tensor clone(bool requires_grad) const;

  bool same(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

/// Contiguous, non-empty row ranges: segment s covers rows
/// [offsets[s], offsets[s+1]).
class Segments {
 public:
  Segments() = default;
  /// Throws EmptySegment if any range is empty or offsets are unsorted.
  explicit Segments(std::vector<std::size_t> offsets);
  /// Builds segments from sorted per-row segment keys (equal keys share a segment).
  static Segments from_sorted_keys(std::span<const std::size_t> keys);

  std::size_t count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t total_rows() const { return offsets_.empty() ? 0 : offsets_.back(); }
  std::size_t begin(std::size_t s) const { return offsets_[s]; }
  std::size_t end(std::size_t s) const { return offsets_[s + 1]; }
  const std::vector<std::size_t>& offsets() const { return offsets_; }

 private:
  std::vector<std::size_t> offsets_;
};

enum class Reduce { Mean, Max, Sum };

/// Records primitive applications and replays them in reverse for backward.
///
/// Only applications with at least one grad-requiring input are recorded, so
/// constant subexpressions cost nothing on the way back. A tape is
/// single-threaded; independent tapes may run concurrently as long as they do
/// not share grad-requiring leaves.
class Tape {
 public:
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
  Tensor leaky_relu(const Tensor& x, double slope = 0.2);
  Tensor tanh(const Tensor& x);
  Tensor exp(const Tensor& x);
  Tensor log(const Tensor& x);
  /// scale * x + shift, elementwise.
  Tensor affine(const Tensor& x, double scale, double shift);
  Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);
  /// Softmax within each segment, independently per column.
  Tensor segment_softmax(const Tensor& x, const Segments& segments);
  /// One output row per segment. Max routes gradient to the first argmax.
  /// With order_free, sums add the values in sorted order so the result does
  /// not depend on row order within a segment (softmax normalisers always do).
  Tensor segment_reduce(const Tensor& x, const Segments& segments, Reduce mode, bool order_free = true);
  /// Sum of all elements as a 1x1 tensor.
  Tensor sum(const Tensor& x);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every grad-requiring tensor.
  void backward(const Tensor& loss);

  std::size_t recorded() const { return records_.size(); }
  void clear() { records_.clear(); }

 private:
  struct Record {
    Tensor output;
    std::function<void(const Tensor& out)> pullback;
  };
  void record(const Tensor& out, std::function<void(const Tensor&)> pullback);
  /// Elementwise op; deriv(x, y) is dy/dx given input x and output y.
  template <typename Fwd, typename Deriv>
  Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv);

  std::vector<Record> records_;
};

}  // namespace okra::ad
