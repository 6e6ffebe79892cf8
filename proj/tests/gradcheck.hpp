#pragma once

// Central finite-difference checks against the tape's analytic gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "okra/autodiff.hpp"

namespace okra::oracle {

struct GradReport {
  double worst = 0.0;  // max |analytic - numeric| / max(1, |analytic|)
  std::size_t checked = 0;
};

// `loss` must build a scalar from the current values of `leaves`.
// At most `per_leaf` entries of each leaf are probed, spread evenly.
inline GradReport check_gradients(const std::function<ad::Tensor(ad::Tape&)>& loss, std::vector<ad::Tensor> leaves,
                                  double h = 1e-6, std::size_t per_leaf = std::numeric_limits<std::size_t>::max()) {
  for (auto& l : leaves) l.zero_grad();
  {
    ad::Tape tape;
    tape.backward(loss(tape));
  }
  GradReport r;
  for (auto& leaf : leaves) {
    const std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
    const std::size_t n = leaf.size();
    const std::size_t stride = std::max<std::size_t>(1, n / std::min(n, per_leaf));
    for (std::size_t i = 0; i < n; i += stride) {
      const double keep = leaf.data()[i];
      leaf.data()[i] = keep + h;
      ad::Tape up;
      const double fp = loss(up).item();
      leaf.data()[i] = keep - h;
      ad::Tape down;
      const double fm = loss(down).item();
      leaf.data()[i] = keep;
      const double numeric = (fp - fm) / (2 * h);
      r.worst = std::max(r.worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
      ++r.checked;
    }
  }
  return r;
}

inline ad::Tensor random_tensor(std::mt19937_64& rng, ad::Shape shape, bool grad = true, double lo = -1.0,
                                double hi = 1.0) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return ad::Tensor::from(std::move(shape), std::move(v), grad);
}

// Scalar projection of any output: sum(out * w) with fixed random weights.
inline ad::Tensor project(ad::Tape& tape, const ad::Tensor& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return tape.sum(tape.mul(out, random_tensor(rng, out.shape(), false)));
}

}  // namespace okra::oracle
