#pragma once

#include <algorithm>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "l1pen/design.hpp"

// Penalty formulas evaluated at 50 significant digits, written directly
// from their displayed definitions and sharing no code with the library.
namespace testing {

using mp = boost::multiprecision::cpp_bin_float_50;
using Eigen::MatrixXd;
using Index = Eigen::Index;

inline mp mp_max_mean_square(const MatrixXd& X) {
  mp best = 0;
  for (Index j = 0; j < X.cols(); ++j) {
    mp s = 0;
    for (Index i = 0; i < X.rows(); ++i) s += mp(X(i, j)) * mp(X(i, j));
    best = std::max(best, s / X.rows());
  }
  return best;
}

inline mp mp_am(const MatrixXd& X, mp d, mp alpha, mp c0) {
  const mp n = X.rows(), p = X.cols();
  return c0 * d * sqrt(log(2 * p / alpha) / (2 * n) * mp_max_mean_square(X));
}

inline mp mp_vdg(const MatrixXd& X, mp alpha, mp c0) {
  const mp n = X.rows(), p = X.cols();
  return 8 * c0 * sqrt(2 * log(2 * p / alpha) / n * mp_max_mean_square(X));
}

// max_j E_n ||V_{i.j}||_{q*}^2, q* given as 1, 2 or 0 (for infinity).
inline mp mp_sq_norm(const std::vector<MatrixXd>& V, int q_star) {
  mp best = 0;
  const Index n = V.front().rows();
  for (Index j = 0; j < V.front().cols(); ++j) {
    mp total = 0;
    for (Index i = 0; i < n; ++i) {
      mp norm = 0;
      for (const auto& v : V) {
        const mp a = abs(mp(v(i, j)));
        if (q_star == 0) norm = std::max(norm, a);
        else if (q_star == 1) norm += a;
        else norm += a * a;
      }
      if (q_star == 2) norm = sqrt(norm);
      total += norm * norm;
    }
    best = std::max(best, total / n);
  }
  return best;
}

// Displayed multi-index formula with d = 1 on every common index.
inline mp mp_multi(const l1pen::MultiIndexData& d, mp d_tilde, int q_star, mp alpha, mp c0) {
  const mp n = d.n();
  const mp dim = static_cast<double>(d.dim());
  mp common = d.L1 > 0 ? mp_max_mean_square(d.Z) / 2 : mp(0);
  mp varying = d.V.empty() ? mp(0) : 2 * d_tilde * d_tilde * mp_sq_norm(d.V, q_star);
  return c0 * sqrt(log(2 * dim / alpha) / n * std::max(common, varying));
}

}  // namespace testing
