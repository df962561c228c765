#pragma once

#include <string>
#include <vector>

#include "skelact/tensor.hpp"

namespace skelact {

// A learnable tensor with its dotted module path ("block0.agcl.B.1").
struct NamedParam {
    std::string name;
    Tensor tensor;
};

// A non-learnable state vector carried by checkpoints (BN running stats).
struct NamedBuffer {
    std::string name;
    std::vector<double>* values;
};

}  // namespace skelact
