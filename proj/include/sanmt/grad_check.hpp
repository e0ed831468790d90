#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sanmt/numerics.hpp"

namespace sanmt {

struct GradCheckOptions {
  double epsilon = 1e-6;
  double tolerance = 1e-4;
  // 0 checks every entry; otherwise a seeded random subset of this size.
  std::size_t max_samples_per_tensor = 0;
  std::uint64_t seed = 0;
  // Combine central differences at epsilon and 2*epsilon as (4 D(e) - D(2e)) / 3,
  // cancelling the e^2 error term. Lets a larger epsilon keep roundoff small.
  bool richardson = false;
};

// A tensor under test: `value` is perturbed in place and restored afterwards.
struct CheckedTensor {
  std::string name;
  Matrix* value = nullptr;
  const Matrix* analytic = nullptr;
};

struct TensorCheck {
  std::string name;
  std::size_t checked = 0;
  std::size_t failed = 0;
  double max_relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  std::size_t checked = 0;
  std::size_t failed = 0;
  double max_relative_error = 0.0;
  double tolerance = 0.0;

  bool passed() const { return failed == 0; }
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Compares analytic gradients with central differences
// (loss(p+eps) - loss(p-eps)) / 2eps. `loss` must read the current contents
// of the checked tensors. Throws DeterminismError if two evaluations at the
// unperturbed point disagree, DomainError for eps outside (0, 1e-2].
GradCheckReport grad_check(std::span<const CheckedTensor> tensors,
                           const std::function<double()>& loss,
                           const GradCheckOptions& options = {});

}  // namespace sanmt
