#pragma once

#include <vector>

#include "vinevi/model.hpp"
#include "vinevi/tensor.hpp"

namespace vinevi::nn {

using ClassScores = std::vector<double>;

// Applies one layer (any kind except softmax). Inner loops are
// OpenMP-parallel over output elements; each element is accumulated
// sequentially by one thread, so results are run-to-run identical.
Tensor3 apply_layer(const Layer& layer, const Tensor3& input);

// Numerically stable softmax (max subtraction), computed in double.
ClassScores softmax(const std::vector<double>& logits);

// Full forward pass on a validated model. Input must be 3x224x224.
ClassScores forward(const Model& model, const Tensor3& input);

struct Prediction {
  std::string label;
  int index = 0;
};

// Index of the maximum score; ties break toward the lower index.
Prediction argmax_class(const ClassScores& scores,
                        const std::vector<std::string>& labels);

}  // namespace vinevi::nn
