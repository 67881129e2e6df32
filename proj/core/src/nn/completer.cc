#include "gforge/nn/completer.h"

#include "gforge/error.h"
#include "gforge/nn/trainer.h"

namespace gforge::nn {

template <typename T>
Prediction GeneratorCompleter<T>::complete(const GuidanceImage& guidance, const Pose&) const {
  if (guidance.width() != width() || guidance.height() != height()) {
    fail_invalid("guidance " + std::to_string(guidance.width()) + "x" + std::to_string(guidance.height()) +
                 " does not match the generator input " + std::to_string(width()) + "x" +
                 std::to_string(height()));
  }
  Tensor<T> input;
  Tensor<T> mask;
  guidance_to_tensors(guidance, gen_.config().d_max, input, mask);
  Tape<T> tape;
  const GeneratorOutput<T> out = gen_.forward(tape, tape.constant_ref(input), mask, WeightSource::kShadow, false);
  const Tensor<T>& rgb = tape.value(out.rgb);
  const Tensor<T>& depth = tape.value(out.depth);
  Prediction p{ColorImage(width(), height(), 3), DepthImage(width(), height(), 1)};
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) {
      for (int c = 0; c < 3; ++c) p.rgb.at(x, y, c) = static_cast<double>(rgb.at(0, y, x, c));
      p.depth.at(x, y) = static_cast<double>(depth.at(0, y, x, 0));
    }
  }
  return p;
}

template class GeneratorCompleter<float>;
template class GeneratorCompleter<double>;

}  // namespace gforge::nn
