#include "didcc/parallel.hpp"

#include <cstdlib>
#include <string>

namespace didcc {

std::size_t default_workers() {
  const char* env = std::getenv("DIDCC_WORKERS");
  if (env == nullptr) return 1;
  try {
    const long v = std::stol(env);
    return v > 0 ? static_cast<std::size_t>(v) : 1;
  } catch (...) {
    return 1;
  }
}

}  // namespace didcc
