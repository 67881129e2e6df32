#pragma once

#include "gforge/completer.h"
#include "gforge/nn/generator.h"

namespace gforge::nn {

// Eval-mode generator behind the ViewCompleter interface: EMA shadow weights
// and batch-norm running statistics. The generator must outlive this object.
template <typename T>
class GeneratorCompleter final : public ViewCompleter {
 public:
  explicit GeneratorCompleter(Generator<T>& generator) : gen_(generator) {}

  int width() const override { return gen_.config().width; }
  int height() const override { return gen_.config().height; }
  Prediction complete(const GuidanceImage& guidance, const Pose& target_pose) const override;

 private:
  Generator<T>& gen_;
};

}  // namespace gforge::nn
