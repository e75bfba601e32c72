#include "fmbeam/init.hpp"

#include <cmath>
#include <string>

#include "fmbeam/errors.hpp"

namespace fmbeam {

Tensor init_params(std::vector<std::size_t> shape, Rng& rng, InitScheme scheme) {
  Tensor out(std::move(shape), 0.0);
  switch (scheme) {
    case InitScheme::zeros:
      break;
    case InitScheme::ones:
      out.fill(1.0);
      break;
    case InitScheme::uniform_fan_in: {
      const std::size_t fan_in = out.shape().empty() ? 1 : out.shape()[0];
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
      for (double& v : out.data()) v = rng.uniform(-bound, bound);
      break;
    }
  }
  return out;
}

InitScheme parse_init_scheme(std::string_view name) {
  if (name == "uniform-fan-in") return InitScheme::uniform_fan_in;
  if (name == "zeros") return InitScheme::zeros;
  if (name == "ones") return InitScheme::ones;
  throw ConfigError("unknown init scheme '" + std::string(name) + "'");
}

}  // namespace fmbeam
