#include "okra/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace okra::ad {

namespace {

double sorted_sum(std::vector<double>& values) {
  if (values.size() <= 2) return values.empty() ? 0.0 : values.size() == 1 ? values[0] : values[0] + values[1];
  std::sort(values.begin(), values.end());
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

std::size_t product(const Shape& s) { return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>()); }

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeMismatch(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(std::string(op) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  std::size_t n = product(shape);
  t.impl_->shape = std::move(shape);
  t.impl_->value.assign(n, 0.0);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (product(shape) != data.size()) {
    throw ShapeMismatch("Tensor::from: shape " + shape_str(shape) + " does not hold " + std::to_string(data.size()) +
                        " values");
  }
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->value = std::move(data);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::filled(Shape shape, double value) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.impl_->value.begin(), t.impl_->value.end(), value);
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1, 1}, {value}, requires_grad); }

std::size_t Tensor::rows() const { return rank() == 0 ? 1 : impl_->shape[0]; }

std::size_t Tensor::cols() const {
  std::size_t c = 1;
  for (std::size_t i = 1; i < rank(); ++i) c *= impl_->shape[i];
  return c;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeMismatch("item() on tensor of shape " + shape_str(shape()));
  return impl_->value[0];
}

void Tensor::zero_grad() { impl_->grad.assign(impl_->value.size(), 0.0); }

Tensor Tensor::clone(bool requires_grad) const { return from(impl_->shape, impl_->value, requires_grad); }

// ---------------------------------------------------------------------------
// Segments

Segments::Segments(std::vector<std::size_t> offsets) : offsets_(std::move(offsets)) {
  if (offsets_.empty()) return;
  if (offsets_.front() != 0) throw EmptySegment("segment offsets must start at 0");
  for (std::size_t s = 0; s + 1 < offsets_.size(); ++s) {
    if (offsets_[s + 1] <= offsets_[s]) {
      throw EmptySegment("segment " + std::to_string(s) + " is empty or unsorted");
    }
  }
}

Segments Segments::from_sorted_keys(std::span<const std::size_t> keys) {
  std::vector<std::size_t> offsets{0};
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (keys[i] < keys[i - 1]) throw EmptySegment("segment keys are not sorted");
    if (keys[i] != keys[i - 1]) offsets.push_back(i);
  }
  if (!keys.empty())
    offsets.push_back(keys.size());
  else
    offsets.clear();
  return Segments(std::move(offsets));
}

// ---------------------------------------------------------------------------
// Tape

void Tape::record(const Tensor& out, std::function<void(const Tensor&)> pullback) {
  records_.push_back(Record{out, std::move(pullback)});
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeMismatch("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const bool track = a.requires_grad() || b.requires_grad();
  Tensor out = Tensor::zeros({n, m}, track);
  auto av = a.data();
  auto bv = b.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = &ov[i * m];
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[p * m];
      for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  if (track) {
    record(out, [a, b, n, k, m](const Tensor& o) mutable {
      auto g = o.grad();
      if (a.requires_grad()) {
        auto ag = a.grad();
        auto bv = b.data();
        std::vector<double> bt(m * k);
        for (std::size_t p = 0; p < k; ++p) {
          for (std::size_t j = 0; j < m; ++j) bt[j * k + p] = bv[p * m + j];
        }
        for (std::size_t i = 0; i < n; ++i) {
          double* arow = &ag[i * k];
          for (std::size_t j = 0; j < m; ++j) {
            const double gij = g[i * m + j];
            if (gij == 0.0) continue;
            const double* btrow = &bt[j * k];
            for (std::size_t p = 0; p < k; ++p) arow[p] += gij * btrow[p];
          }
        }
      }
      if (b.requires_grad()) {
        auto bg = b.grad();
        auto av = a.data();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) bg[p * m + j] += aip * g[i * m + j];
          }
        }
      }
    });
  }
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const bool track = a.requires_grad() || b.requires_grad();
  Tensor out = Tensor::zeros(a.shape(), track);
  auto av = a.data();
  auto bv = b.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (track) {
    record(out, [a, b](const Tensor& o) mutable {
      auto g = o.grad();
      if (a.requires_grad()) {
        auto ag = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i];
      }
      if (b.requires_grad()) {
        auto bg = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) bg[i] += g[i];
      }
    });
  }
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const bool track = a.requires_grad() || b.requires_grad();
  Tensor out = Tensor::zeros(a.shape(), track);
  auto av = a.data();
  auto bv = b.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (track) {
    record(out, [a, b](const Tensor& o) mutable {
      auto g = o.grad();
      auto av = a.data();
      auto bv = b.data();
      if (a.requires_grad()) {
        auto ag = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto bg = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) bg[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

Tensor Tape::concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeMismatch("concat: no inputs");
  if (axis > 1) throw ShapeMismatch("concat: axis must be 0 or 1");
  bool track = false;
  for (const auto& p : parts) {
    require_matrix(p, "concat");
    track = track || p.requires_grad();
  }
  const std::size_t other = axis == 0 ? 1 : 0;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.shape()[other] != parts.front().shape()[other]) {
      throw ShapeMismatch("concat: " + shape_str(p.shape()) + " vs " + shape_str(parts.front().shape()));
    }
    total += p.shape()[axis];
  }
  Shape shape = parts.front().shape();
  shape[axis] = total;
  Tensor out = Tensor::zeros(shape, track);
  const std::size_t out_cols = shape[1];
  auto ov = out.data();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t r = p.shape()[0], c = p.shape()[1];
    auto pv = p.data();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        std::size_t oi = axis == 0 ? i + offset : i;
        std::size_t oj = axis == 0 ? j : j + offset;
        ov[oi * out_cols + oj] = pv[i * c + j];
      }
    }
    offset += p.shape()[axis];
  }
  if (track) {
    record(out, [parts, axis, out_cols](const Tensor& o) mutable {
      auto g = o.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t r = p.shape()[0], c = p.shape()[1];
        if (p.requires_grad()) {
          auto pg = p.grad();
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
              std::size_t oi = axis == 0 ? i + offset : i;
              std::size_t oj = axis == 0 ? j : j + offset;
              pg[i * c + j] += g[oi * out_cols + oj];
            }
          }
        }
        offset += p.shape()[axis];
      }
    });
  }
  return out;
}

template <typename Fwd, typename Deriv>
Tensor Tape::unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
  auto xv = x.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = fwd(xv[i]);
  if (x.requires_grad()) {
    record(out, [x, deriv](const Tensor& o) mutable {
      auto g = o.grad();
      auto xg = x.grad();
      auto xv = x.data();
      auto ov = o.data();
      for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * deriv(xv[i], ov[i]);
    });
  }
  return out;
}

Tensor Tape::leaky_relu(const Tensor& x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor Tape::tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor Tape::exp(const Tensor& x) {
  return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor Tape::log(const Tensor& x) {
  return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor Tape::affine(const Tensor& x, double scale, double shift) {
  return unary(x, [scale, shift](double v) { return scale * v + shift; }, [scale](double, double) { return scale; });
}

Tensor Tape::gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  require_matrix(x, "gather_rows");
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  std::vector<std::size_t> idx(index.begin(), index.end());
  for (std::size_t r : idx) {
    if (r >= rows) {
      throw ShapeMismatch("gather_rows: index " + std::to_string(r) + " out of range for " + shape_str(x.shape()));
    }
  }
  Tensor out = Tensor::zeros({idx.size(), cols}, x.requires_grad());
  auto xv = x.data();
  auto ov = out.data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(&xv[idx[i] * cols], cols, &ov[i * cols]);
  }
  if (x.requires_grad()) {
    record(out, [x, idx = std::move(idx), cols](const Tensor& o) mutable {
      auto g = o.grad();
      auto xg = x.grad();
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) xg[idx[i] * cols + j] += g[i * cols + j];
      }
    });
  }
  return out;
}

Tensor Tape::segment_softmax(const Tensor& x, const Segments& segments) {
  require_matrix(x, "segment_softmax");
  const std::size_t cols = x.shape()[1];
  if (segments.total_rows() != x.shape()[0]) {
    throw ShapeMismatch("segment_softmax: segments cover " + std::to_string(segments.total_rows()) +
                        " rows, tensor has " + std::to_string(x.shape()[0]));
  }
  Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
  auto xv = x.data();
  auto ov = out.data();
  std::vector<double> buf;
  for (std::size_t s = 0; s < segments.count(); ++s) {
    for (std::size_t c = 0; c < cols; ++c) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t r = segments.begin(s); r < segments.end(s); ++r) mx = std::max(mx, xv[r * cols + c]);
      buf.clear();
      for (std::size_t r = segments.begin(s); r < segments.end(s); ++r) {
        ov[r * cols + c] = std::exp(xv[r * cols + c] - mx);
        buf.push_back(ov[r * cols + c]);
      }
      const double z = sorted_sum(buf);
      for (std::size_t r = segments.begin(s); r < segments.end(s); ++r) ov[r * cols + c] /= z;
    }
  }
  if (x.requires_grad()) {
    record(out, [x, segments, cols](const Tensor& o) mutable {
      auto g = o.grad();
      auto y = o.data();
      auto xg = x.grad();
      for (std::size_t s = 0; s < segments.count(); ++s) {
        for (std::size_t c = 0; c < cols; ++c) {
          double dot = 0.0;
          for (std::size_t r = segments.begin(s); r < segments.end(s); ++r) {
            dot += g[r * cols + c] * y[r * cols + c];
          }
          for (std::size_t r = segments.begin(s); r < segments.end(s); ++r) {
            xg[r * cols + c] += y[r * cols + c] * (g[r * cols + c] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor Tape::segment_reduce(const Tensor& x, const Segments& segments, Reduce mode, bool order_free) {
  require_matrix(x, "segment_reduce");
  const std::size_t cols = x.shape()[1];
  if (segments.total_rows() != x.shape()[0]) {
    throw ShapeMismatch("segment_reduce: segments cover " + std::to_string(segments.total_rows()) +
                        " rows, tensor has " + std::to_string(x.shape()[0]));
  }
  const std::size_t n_seg = segments.count();
  Tensor out = Tensor::zeros({n_seg, cols}, x.requires_grad());
  auto xv = x.data();
  auto ov = out.data();
  std::vector<std::size_t> argmax;
  std::vector<double> buf;
  if (mode == Reduce::Max) argmax.assign(n_seg * cols, 0);
  for (std::size_t s = 0; s < n_seg; ++s) {
    const std::size_t b = segments.begin(s), e = segments.end(s);
    for (std::size_t c = 0; c < cols; ++c) {
      if (mode == Reduce::Max) {
        std::size_t best = b;
        for (std::size_t r = b + 1; r < e; ++r) {
          if (xv[r * cols + c] > xv[best * cols + c]) best = r;
        }
        argmax[s * cols + c] = best;
        ov[s * cols + c] = xv[best * cols + c];
      } else {
        double acc = 0.0;
        if (order_free) {
          buf.clear();
          for (std::size_t r = b; r < e; ++r) buf.push_back(xv[r * cols + c]);
          acc = sorted_sum(buf);
        } else {
          for (std::size_t r = b; r < e; ++r) acc += xv[r * cols + c];
        }
        ov[s * cols + c] = mode == Reduce::Mean ? acc / static_cast<double>(e - b) : acc;
      }
    }
  }
  if (x.requires_grad()) {
    record(out, [x, segments, cols, mode, argmax = std::move(argmax)](const Tensor& o) mutable {
      auto g = o.grad();
      auto xg = x.grad();
      for (std::size_t s = 0; s < segments.count(); ++s) {
        const std::size_t b = segments.begin(s), e = segments.end(s);
        for (std::size_t c = 0; c < cols; ++c) {
          const double gs = g[s * cols + c];
          if (mode == Reduce::Max) {
            xg[argmax[s * cols + c] * cols + c] += gs;
          } else {
            const double w = mode == Reduce::Mean ? gs / static_cast<double>(e - b) : gs;
            for (std::size_t r = b; r < e; ++r) xg[r * cols + c] += w;
          }
        }
      }
    });
  }
  return out;
}

Tensor Tape::sum(const Tensor& x) {
  Tensor out = Tensor::zeros({1, 1}, x.requires_grad());
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  out.data()[0] = acc;
  if (x.requires_grad()) {
    record(out, [x](const Tensor& o) mutable {
      const double g = o.grad()[0];
      for (double& xg : x.grad()) xg += g;
    });
  }
  return out;
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw NonScalarLoss("backward: loss has " + std::to_string(loss.size()) + " elements");
  }
  if (!loss.requires_grad()) return;
  const_cast<Tensor&>(loss).grad()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    it->pullback(it->output);
  }
}

}  // namespace okra::ad
