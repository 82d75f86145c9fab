#pragma once

#include <string>

namespace streetnet {

/// Shortest decimal string that reads back to the same double; integral values print
/// without a fraction, non-finite values as "nan"/"inf".
std::string format_number(double value);

}  // namespace streetnet
