#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "l1pen/design.hpp"
#include "l1pen/losses.hpp"

namespace testing {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

inline std::string fixture(const std::string& name) { return std::string(L1PEN_FIXTURES) + "/" + name; }

// Test data comes from std::mt19937_64 so it is independent of the library RNG.
inline MatrixXd gaussian(Index n, Index p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  MatrixXd X(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) X(i, j) = z(gen);
  return X;
}

// Draws one outcome row consistent with the family's support, loosely
// centred on the index value t.
using OutcomeDraw = std::function<std::vector<double>(double t, std::mt19937_64&)>;

struct SingleFamily {
  std::string name;
  std::string params;
  OutcomeDraw draw;
};

inline double bernoulli(double prob, std::mt19937_64& g) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(g) < prob ? 1.0 : 0.0;
}

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

inline std::vector<SingleFamily> single_index_families() {
  const auto binary = [](double t, std::mt19937_64& g) { return std::vector<double>{bernoulli(sigmoid(t), g)}; };
  const auto censored_pair = [](double t, std::mt19937_64& g) {
    std::normal_distribution<double> z;
    const double a = std::max(0.0, 1.0 + t + z(g));
    const double b = std::max(0.0, 1.0 + z(g));
    return std::vector<double>{a, b};
  };
  return {
      {"logit", "", binary},
      {"probit", "", binary},
      {"ordered_logit", "cutoffs=-1:1",
       [](double t, std::mt19937_64& g) {
         const double u = std::uniform_real_distribution<double>(1e-12, 1.0 - 1e-12)(g);
         const double s = t + std::log(u / (1.0 - u));
         return std::vector<double>{s < -1.0 ? 0.0 : (s < 1.0 ? 1.0 : 2.0)};
       }},
      {"tdist_binary", "nu=3", binary},
      {"calibration", "", binary},
      {"balancing", "", binary},
      {"expectile", "tau=0.3",
       [](double t, std::mt19937_64& g) { return std::vector<double>{t + std::normal_distribution<double>()(g)}; }},
      {"panel_logit", "",
       [](double t, std::mt19937_64& g) { return std::vector<double>{bernoulli(0.5, g), bernoulli(sigmoid(t), g)}; }},
      {"panel_duration", "",
       [](double t, std::mt19937_64& g) {
         std::exponential_distribution<double> e(1.0);
         return std::vector<double>{e(g), e(g) * std::exp(t)};
       }},
      {"trimmed_lad", "", censored_pair},
      {"trimmed_ls", "", censored_pair},
  };
}

// Outcomes for rows of X under index X * theta.
inline MatrixXd draw_outcomes(const SingleFamily& fam, const MatrixXd& X, const VectorXd& theta,
                              std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const VectorXd t = X * theta;
  MatrixXd Y;
  for (Index i = 0; i < X.rows(); ++i) {
    const auto row = fam.draw(t[i], gen);
    if (i == 0) Y.resize(X.rows(), static_cast<Index>(row.size()));
    for (std::size_t c = 0; c < row.size(); ++c) Y(i, static_cast<Index>(c)) = row[c];
  }
  return Y;
}

inline l1pen::Dataset family_dataset(const SingleFamily& fam, Index n, Index p, std::uint64_t seed) {
  const MatrixXd X = gaussian(n, p, seed);
  VectorXd theta = VectorXd::Zero(p);
  theta[0] = 1.0;
  theta[1] = -0.5;
  const l1pen::LossModel model = l1pen::make_loss(fam.name, fam.params);
  return l1pen::make_dataset(X, draw_outcomes(fam, X, theta, seed + 1), model);
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
