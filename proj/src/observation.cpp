#include "dualsys/observation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace dualsys {

Observation Observation::vector(Vec values) {
    Observation o;
    o.shape = {values.size()};
    o.values = std::move(values);
    o.validate();
    return o;
}

Observation Observation::image(Vec values, std::size_t rows, std::size_t cols) {
    Observation o;
    o.values = std::move(values);
    o.shape = {rows, cols};
    o.validate();
    return o;
}

void Observation::validate() const {
    const std::size_t expected =
        std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    if (shape.empty() || expected != values.size())
        throw std::invalid_argument("Observation: length does not match declared shape");
    for (double v : values)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("Observation: value outside [0, 1]");
}

Action clip_action(Action a) {
    for (auto& x : a) x = std::clamp(x, -1.0, 1.0);
    return a;
}

bool action_in_bounds(const Action& a) {
    return std::all_of(a.begin(), a.end(), [](double x) { return x >= -1.0 && x <= 1.0; });
}

}  // namespace dualsys
