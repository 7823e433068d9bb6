#include "etdrk/parallel.hpp"

#include <cstdlib>
#include <string>

namespace etdrk {

unsigned worker_count(unsigned requested) {
  unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("ETDRK_THREADS")) {
    try {
      const long v = std::stol(cap);
      if (v >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(v));
    } catch (const std::exception&) {
      // unparsable cap: ignore
    }
  }
  return std::max(1u, n);
}

}  // namespace etdrk
