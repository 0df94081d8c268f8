#pragma once

#include <string_view>

namespace oncosynth {

inline constexpr std::string_view kGeneratorVersion = "oncosynth 0.1.0";

}  // namespace oncosynth
