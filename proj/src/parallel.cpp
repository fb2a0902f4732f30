#include "agrame/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace agrame {

std::size_t worker_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("AGRAME_THREADS")) {
    try {
      long v = std::stol(env);
      if (v > 0) return std::min<std::size_t>(static_cast<std::size_t>(v), hw);
    } catch (const std::exception&) {
      // unparsable values fall back to the hardware count
    }
  }
  return hw;
}

}  // namespace agrame
