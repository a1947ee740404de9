#ifndef DELAYCAST_TEST_UTIL_HPP
#define DELAYCAST_TEST_UTIL_HPP

#include <filesystem>
#include <string>

#include "delaycast/numerics.hpp"

namespace testutil {

inline delaycast::Matrix random_matrix(delaycast::Rng& rng, Eigen::Index r, Eigen::Index c,
                                       double lo = -1.0, double hi = 1.0) {
  delaycast::Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("delaycast_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil

#endif
