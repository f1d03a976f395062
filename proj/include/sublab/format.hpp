#pragma once

#include <string>

namespace sublab {

/// Decimal with 17 significant digits ("%.17g"); round-trips every double.
std::string format_double(double v);

}  // namespace sublab
