#pragma once

#include <cstddef>
#include <vector>

#include "dualsys/nn.hpp"

namespace dualsys {

/// Raw sensory input: a flat state vector or a row-major grayscale image,
/// every value in [0, 1].
struct Observation {
    Vec values;
    std::vector<std::size_t> shape;

    static Observation vector(Vec values);
    static Observation image(Vec values, std::size_t rows, std::size_t cols);

    std::size_t size() const { return values.size(); }

    /// Throws std::invalid_argument when the shape or value range is violated.
    void validate() const;
};

/// Action components are bounded to [-1, 1].
using Action = Vec;

Action clip_action(Action a);
bool action_in_bounds(const Action& a);

}  // namespace dualsys
