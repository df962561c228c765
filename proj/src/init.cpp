#include "skelact/init.hpp"

#include <cmath>

namespace skelact {

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                      std::mt19937_64& rng) {
    if (fan_in == 0 || fan_out == 0) {
        throw ArgumentError("glorot_uniform: fans must be positive");
    }
    const double bound =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = dist(rng);
    return Tensor::from_data(std::move(shape), std::move(values), true);
}

}  // namespace skelact
