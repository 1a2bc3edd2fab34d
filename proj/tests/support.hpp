#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "hybridcp/cp_model.hpp"

namespace hybridcp::testing {

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = nd(rng);
  return m;
}

inline Tensor3 random_tensor(Dims d, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Tensor3 t(d);
  for (double& v : t.values()) v = nd(rng);
  return t;
}

inline CPModel random_model(Dims d, Index R, std::mt19937_64& rng) {
  CPModel m;
  m.A = gaussian(d.I, R, rng);
  m.B = gaussian(d.J, R, rng);
  m.C = gaussian(d.K, R, rng);
  m.alpha = gaussian(R, 1, rng);
  return m;
}

/// sum_r alpha_r a_ir b_jr c_kr by brute force.
inline Tensor3 triple_loop(const CPModel& m) {
  Tensor3 t(m.dims());
  for (Index i = 0; i < m.A.rows(); ++i)
    for (Index j = 0; j < m.B.rows(); ++j)
      for (Index k = 0; k < m.C.rows(); ++k) {
        double s = 0.0;
        for (Index r = 0; r < m.rank(); ++r) s += m.alpha(r) * m.A(i, r) * m.B(j, r) * m.C(k, r);
        t(i, j, k) = s;
      }
  return t;
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hybridcp_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace hybridcp::testing
