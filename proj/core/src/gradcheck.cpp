#include "auvox/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "auvox/loss.hpp"
#include "auvox/rng.hpp"

namespace auvox {
namespace {

// Floor for the relative-error denominator. Below this magnitude the
// comparison degrades to an absolute tolerance of tolerance * floor, well
// above central-difference rounding noise (~1e-10 at h = 1e-5 in double).
constexpr double kMagnitudeFloor = 1e-5;

double loss_of(Network<double>& net, const Tensor<double>& x, const Tensor<double>& bin_targets,
               const Tensor<std::uint8_t>& known, const Tensor<std::uint8_t>& classes) {
  Tensor<double> pred = net.forward(x, false);
  if (net.descriptor().variant == Variant::Binary)
    return binary_cross_entropy(pred, bin_targets, known).value;
  return categorical_cross_entropy(pred, classes).value;
}

}  // namespace

GradCheckReport gradient_check_network(const ArchitectureDescriptor& desc, std::uint64_t seed,
                                       const GradCheckOptions& opts) {
  desc.validate();
  Network<double> net(desc, seed);
  Rng rng = Rng(seed).derive("gradcheck");

  const std::size_t c = desc.input_c;
  Tensor<double> x({opts.batch, c, c, c});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform01();

  Tensor<double> bin_targets({opts.batch, desc.au_count});
  Tensor<std::uint8_t> known({opts.batch, desc.au_count});
  Tensor<std::uint8_t> classes({opts.batch, desc.au_count});
  for (std::size_t i = 0; i < bin_targets.size(); ++i) {
    bin_targets[i] = rng.uniform01() < 0.5 ? 0.0 : 1.0;
    known[i] = rng.uniform01() < 0.85 ? 1 : 0;  // exercise the mask path
    classes[i] = static_cast<std::uint8_t>(rng.uniform_int(3));
  }
  bool any_known = false;
  for (std::size_t i = 0; i < known.size(); ++i) any_known |= known[i] != 0;
  if (!any_known) known[0] = 1;

  // Analytic gradients.
  net.zero_grad();
  Tensor<double> pred = net.forward(x, true);
  Tensor<double> dpred;
  if (desc.variant == Variant::Binary) {
    auto res = binary_cross_entropy(pred, bin_targets, known);
    dpred = std::move(res.dpred);
  } else {
    auto res = categorical_cross_entropy(pred, classes);
    dpred = std::move(res.dpred);
  }
  net.backward(dpred);

  GradCheckReport report;
  auto params = net.params();
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<double>& theta = *params[pi].value;
    const Tensor<double>& grad = *params[pi].grad;

    std::vector<std::size_t> coords;
    if (opts.coords_per_tensor == 0 || theta.size() <= opts.coords_per_tensor) {
      coords.resize(theta.size());
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
      Rng pick = Rng(seed).derive("coords", pi);
      for (std::size_t i = 0; i < opts.coords_per_tensor; ++i)
        coords.push_back(static_cast<std::size_t>(pick.uniform_int(theta.size())));
    }

    for (std::size_t idx : coords) {
      const double saved = theta[idx];
      theta[idx] = saved + opts.step;
      const double lp = loss_of(net, x, bin_targets, known, classes);
      theta[idx] = saved - opts.step;
      const double lm = loss_of(net, x, bin_targets, known, classes);
      theta[idx] = saved;

      const double numeric = (lp - lm) / (2.0 * opts.step);
      const double analytic = grad[idx];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), kMagnitudeFloor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params[pi].name + "[" + std::to_string(idx) + "]";
      }
    }
  }
  return report;
}

}  // namespace auvox
