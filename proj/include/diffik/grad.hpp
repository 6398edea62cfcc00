#pragma once

#include <span>
#include <vector>

#include "diffik/ad.hpp"
#include "diffik/objectives.hpp"

namespace diffik {

struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Owns a tape and evaluates f and df/dx for any callable templated on the
/// scalar type. One engine per thread of work; engines are cheap to create
/// but reusing one avoids reallocating the tape each iteration.
class GradientEngine {
 public:
  /// f must accept std::span<const ad::Var> and return ad::Var.
  template <class F>
  double run(F&& f, std::span<const double> x, std::span<double> grad) {
    if (grad.size() != x.size()) throw DimensionError("gradient: output length mismatch");
    tape_.clear();
    inputs_.clear();
    inputs_.reserve(x.size());
    for (double xi : x) inputs_.push_back(tape_.input(xi));
    const ad::Var out = f(std::span<const ad::Var>(inputs_));
    tape_.gradient(out, grad);
    for (double g : grad)
      if (!std::isfinite(g)) throw NonFiniteError("gradient: non-finite component");
    return out.value();
  }

  [[nodiscard]] std::size_t last_tape_size() const { return tape_.size(); }

 private:
  ad::Tape tape_;
  std::vector<ad::Var> inputs_;
};

/// J(theta) and its exact gradient for a single-pose objective.
ValueAndGradient value_and_gradient(const ObjectiveSpec& spec, const Skeleton& skel,
                                    const DofLayout& layout, std::span<const double> theta);

/// Same, reusing a caller-owned engine and output buffer.
double value_and_gradient(GradientEngine& engine, const ObjectiveSpec& spec, const Skeleton& skel,
                          const DofLayout& layout, std::span<const double> theta,
                          std::span<double> grad);

}  // namespace diffik
