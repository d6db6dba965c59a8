#pragma once

#include <cstdint>
#include <string>

namespace latplan {

/// Model-kind byte stored after the "LPW1" magic of a model file.
enum class ModelKind : std::uint8_t { sae = 1, aae = 2, sd = 3, ad = 4 };

std::string to_string(ModelKind k);

}  // namespace latplan
