#pragma once

#include <string>

namespace etdrk {

/// Shortest round-trippable decimal ("%.17g"), '.' separator regardless of locale.
std::string format_double(double value);

}  // namespace etdrk
