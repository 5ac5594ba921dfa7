#include "berrylab/parallel.hpp"

#include "berrylab/error.hpp"

#include <cstdlib>
#include <string>

namespace berrylab {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (requested < 0) throw ValidationError("worker count must be >= 1");
  if (const char* env = std::getenv("BERRYLAB_WORKERS"); env && *env) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(env, &used);
      if (used == std::string(env).size() && n > 0) return n;
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("BERRYLAB_WORKERS must be a positive integer, got '") + env + "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace berrylab
