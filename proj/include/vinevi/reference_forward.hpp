#pragma once

#include <vector>

#include "vinevi/model.hpp"
#include "vinevi/tensor.hpp"

// Serial brute-force evaluator, kept deliberately independent of the
// production kernels. Tests and the kernel benchmark compare against it;
// nothing on the agent's runtime path calls it.
namespace vinevi::nn::reference {

Tensor3 apply_layer_naive(const Layer& layer, const Tensor3& input);
std::vector<double> forward_naive(const Model& model, const Tensor3& input);

}  // namespace vinevi::nn::reference
