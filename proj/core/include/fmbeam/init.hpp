#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "fmbeam/rng.hpp"
#include "fmbeam/tensor.hpp"

namespace fmbeam {

enum class InitScheme {
  uniform_fan_in,  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)), fan_in = shape[0]
  zeros,
  ones,
};

Tensor init_params(std::vector<std::size_t> shape, Rng& rng, InitScheme scheme);

InitScheme parse_init_scheme(std::string_view name);

}  // namespace fmbeam
