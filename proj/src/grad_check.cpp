#include "sanmt/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sanmt/errors.hpp"

namespace sanmt {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(std::span<const CheckedTensor> tensors,
                           const std::function<double()>& loss,
                           const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0 && options.epsilon <= 1e-2)) {
    throw DomainError("grad_check: epsilon must lie in (0, 1e-2]");
  }
  const double base = loss();
  if (loss() != base) throw DeterminismError("grad_check: loss is not deterministic");

  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (const CheckedTensor& t : tensors) {
    if (!t.value->same_shape(*t.analytic)) {
      throw ShapeError("grad_check: gradient for " + t.name + " has shape " +
                       t.analytic->shape_string() + ", parameter " + t.value->shape_string());
    }
    std::vector<std::size_t> indices(t.value->size());
    std::iota(indices.begin(), indices.end(), 0);
    if (options.max_samples_per_tensor != 0 && indices.size() > options.max_samples_per_tensor) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(options.max_samples_per_tensor);
      std::sort(indices.begin(), indices.end());
    }

    TensorCheck check{t.name, 0, 0, 0.0};
    Matrix& p = *t.value;
    for (std::size_t i : indices) {
      const double saved = p[i];
      const auto central = [&](double h) {
        p[i] = saved + h;
        const double up = loss();
        p[i] = saved - h;
        const double down = loss();
        p[i] = saved;
        return (up - down) / (2.0 * h);
      };
      const double near = central(options.epsilon);
      const double numeric = options.richardson ? (4.0 * near - central(2.0 * options.epsilon)) / 3.0 : near;
      const double err = relative_error((*t.analytic)[i], numeric);
      ++check.checked;
      if (!(err <= options.tolerance)) ++check.failed;
      check.max_relative_error = std::max(check.max_relative_error, err);
    }
    report.checked += check.checked;
    report.failed += check.failed;
    report.max_relative_error = std::max(report.max_relative_error, check.max_relative_error);
    report.tensors.push_back(std::move(check));
  }
  return report;
}

}  // namespace sanmt
