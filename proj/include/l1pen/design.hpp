#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "l1pen/losses.hpp"

namespace l1pen {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

/// Single-index data: row i of X is observation i, Y has outcome_arity columns.
struct Dataset {
  MatrixXd X;
  MatrixXd Y;

  Index n() const noexcept { return X.rows(); }
  Index p() const noexcept { return X.cols(); }
};

/// Builds a dataset and checks n >= 3, p >= 2, finiteness and the outcome
/// support of `model`.
Dataset make_dataset(MatrixXd X, MatrixXd Y, const LossModel& model);
/// Same checks without an outcome-support test.
void validate_dataset(const Dataset& data);

/// Regressors of a multi-index model. The first L1 indices share Z (each
/// with its own p1 coefficients); index L1 + l uses V[l] with the common
/// p2 coefficients.
struct MultiIndexData {
  MatrixXd Z;               // n x p1, may have zero columns
  std::vector<MatrixXd> V;  // L2 matrices, each n x p2
  std::size_t L1 = 0;

  Index n() const;
  Index p1() const noexcept { return Z.cols(); }
  Index p2() const noexcept { return V.empty() ? 0 : V.front().cols(); }
  std::size_t L2() const noexcept { return V.size(); }
  Index dim() const { return static_cast<Index>(L1) * p1() + p2(); }
};

void validate_multi(const MultiIndexData& data);

/// Descending candidate penalty ladder.
struct PenaltyGrid {
  std::vector<double> values;
  std::size_t count = 100;
  double ratio = 1e-4;
};

/// Linear map from a parameter vector to the n x arity matrix of indices.
///
/// Index l reads columns [offset_l, offset_l + cols_l) of the parameter
/// through its own matrix; several indices may share parameters.
class IndexDesign {
 public:
  IndexDesign() = default;
  explicit IndexDesign(const MatrixXd& X);
  /// Layout for mnl (L2 = 0), clogit (L1 = 0) and mixed_logit.
  explicit IndexDesign(const MultiIndexData& data);

  Index n() const noexcept { return n_; }
  Index dim() const noexcept { return dim_; }
  Index arity() const noexcept { return static_cast<Index>(blocks_.size()); }

  /// T (n x arity) = indices of theta.
  void indices(const VectorXd& theta, MatrixXd& T) const;
  /// g = (1/n) sum_l M_l' G.col(l), scattered into parameter offsets.
  void gradient(const MatrixXd& G, VectorXd& g) const;
  /// Per-observation score contributions (n x dim); their column means equal
  /// the gradient produced from the same G.
  MatrixXd scores(const MatrixXd& G) const;

  IndexDesign rows(const std::vector<Index>& idx) const;
  /// Restriction to the sorted parameter subset `active`.
  IndexDesign columns(const std::vector<Index>& active) const;

  /// Largest eigenvalue of (1/n) A'A for the stacked index map A, by power
  /// iteration, inflated slightly to stay an upper bound in practice.
  double spectral_bound() const;

 private:
  struct Block {
    std::size_t matrix;
    Index offset;
  };
  std::vector<MatrixXd> mats_;
  std::vector<Block> blocks_;
  Index n_ = 0;
  Index dim_ = 0;
};

/// A loss together with its design and outcomes, the unit the solver works on.
struct Problem {
  IndexDesign design;
  MatrixXd Y;
  LossModel model;

  Index n() const noexcept { return design.n(); }
  Index dim() const noexcept { return design.dim(); }

  Problem rows(const std::vector<Index>& idx) const;
};

Problem make_problem(const Dataset& data, const LossModel& model);
Problem make_problem(const MultiIndexData& data, const MatrixXd& Y, const LossModel& model);

/// (1/n) sum_i m(T_i, Y_i).
double mean_loss(const LossModel& model, const MatrixXd& T, const MatrixXd& Y);
/// Returns the mean loss and fills G (n x arity) with m'_l(T_i, Y_i).
double loss_and_derivs(const LossModel& model, const MatrixXd& T, const MatrixXd& Y, MatrixXd& G);

}  // namespace l1pen
