#include "diffik/grad.hpp"

namespace diffik {

double value_and_gradient(GradientEngine& engine, const ObjectiveSpec& spec, const Skeleton& skel,
                          const DofLayout& layout, std::span<const double> theta,
                          std::span<double> grad) {
  if (theta.size() != layout.size())
    throw DimensionError("value_and_gradient: angle vector does not match layout");
  return engine.run(
      [&](std::span<const ad::Var> x) { return evaluate<ad::Var>(spec, skel, layout, x); }, theta,
      grad);
}

ValueAndGradient value_and_gradient(const ObjectiveSpec& spec, const Skeleton& skel,
                                    const DofLayout& layout, std::span<const double> theta) {
  validate_spec(spec, skel, layout);
  GradientEngine engine;
  ValueAndGradient out;
  out.gradient.assign(theta.size(), 0.0);
  out.value = value_and_gradient(engine, spec, skel, layout, theta, out.gradient);
  return out;
}

}  // namespace diffik
