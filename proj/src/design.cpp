#include "l1pen/design.hpp"

#include <cmath>
#include <string>

#include "l1pen/errors.hpp"

namespace l1pen {

void validate_dataset(const Dataset& data) {
  if (data.n() < 3) throw InputError("dataset needs n >= 3 observations");
  if (data.p() < 2) throw InputError("dataset needs p >= 2 regressors");
  if (data.Y.rows() != data.n()) throw InputError("X and Y row counts differ");
  if (!data.X.allFinite()) throw InputError("X contains non-finite entries");
  if (!data.Y.allFinite()) throw InputError("Y contains non-finite entries");
}

Dataset make_dataset(MatrixXd X, MatrixXd Y, const LossModel& model) {
  Dataset data{std::move(X), std::move(Y)};
  validate_dataset(data);
  if (static_cast<std::size_t>(data.Y.cols()) != model.outcome_arity()) {
    throw InputError("loss '" + std::string(to_string(model.kind())) + "' expects " +
                     std::to_string(model.outcome_arity()) + " outcome column(s)");
  }
  std::vector<double> row(model.outcome_arity());
  for (Index i = 0; i < data.n(); ++i) {
    for (Index c = 0; c < data.Y.cols(); ++c) row[c] = data.Y(i, c);
    model.validate_outcome(row);
  }
  return data;
}

Index MultiIndexData::n() const {
  if (Z.rows() > 0 || V.empty()) return Z.rows();
  return V.front().rows();
}

void validate_multi(const MultiIndexData& data) {
  if (data.L1 == 0 && data.V.empty()) throw InputError("multi-index data needs L1 > 0 or L2 > 0");
  if (data.dim() < 1) throw InputError("multi-index data has no parameters");
  const Index n = data.n();
  if (data.L1 > 0 && data.Z.rows() != n) throw InputError("Z row count mismatch");
  if (!data.Z.allFinite()) throw InputError("Z contains non-finite entries");
  for (const auto& v : data.V) {
    if (v.rows() != n || v.cols() != data.p2()) throw InputError("V blocks must share shape n x p2");
    if (!v.allFinite()) throw InputError("V contains non-finite entries");
  }
}

IndexDesign::IndexDesign(const MatrixXd& X) : mats_{X}, blocks_{{0, 0}}, n_(X.rows()), dim_(X.cols()) {}

IndexDesign::IndexDesign(const MultiIndexData& data) : n_(data.n()), dim_(data.dim()) {
  validate_multi(data);
  if (data.L1 > 0) {
    mats_.push_back(data.Z);
    for (std::size_t l = 0; l < data.L1; ++l) blocks_.push_back({0, static_cast<Index>(l) * data.p1()});
  }
  const Index v_offset = static_cast<Index>(data.L1) * data.p1();
  for (const auto& v : data.V) {
    mats_.push_back(v);
    blocks_.push_back({mats_.size() - 1, v_offset});
  }
}

void IndexDesign::indices(const VectorXd& theta, MatrixXd& T) const {
  T.resize(n_, arity());
  for (Index l = 0; l < arity(); ++l) {
    const auto& b = blocks_[l];
    const auto& M = mats_[b.matrix];
    if (M.cols() == 0) {
      T.col(l).setZero();
    } else {
      T.col(l).noalias() = M * theta.segment(b.offset, M.cols());
    }
  }
}

void IndexDesign::gradient(const MatrixXd& G, VectorXd& g) const {
  g.setZero(dim_);
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (Index l = 0; l < arity(); ++l) {
    const auto& b = blocks_[l];
    const auto& M = mats_[b.matrix];
    if (M.cols() == 0) continue;
    g.segment(b.offset, M.cols()).noalias() += inv_n * (M.transpose() * G.col(l));
  }
}

MatrixXd IndexDesign::scores(const MatrixXd& G) const {
  MatrixXd S = MatrixXd::Zero(n_, dim_);
  for (Index l = 0; l < arity(); ++l) {
    const auto& b = blocks_[l];
    const auto& M = mats_[b.matrix];
    if (M.cols() == 0) continue;
    S.middleCols(b.offset, M.cols()).array() += M.array().colwise() * G.col(l).array();
  }
  return S;
}

IndexDesign IndexDesign::rows(const std::vector<Index>& idx) const {
  IndexDesign out;
  out.blocks_ = blocks_;
  out.n_ = static_cast<Index>(idx.size());
  out.dim_ = dim_;
  out.mats_.reserve(mats_.size());
  for (const auto& M : mats_) out.mats_.push_back(M(idx, Eigen::all));
  return out;
}

IndexDesign IndexDesign::columns(const std::vector<Index>& active) const {
  IndexDesign out;
  out.n_ = n_;
  out.dim_ = static_cast<Index>(active.size());
  // Blocks cover contiguous parameter ranges, so their active members stay
  // contiguous in the compressed ordering.
  for (const auto& b : blocks_) {
    const auto& M = mats_[b.matrix];
    const Index end = b.offset + M.cols();
    std::vector<Index> local;
    Index first = -1;
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (active[k] >= b.offset && active[k] < end) {
        if (first < 0) first = static_cast<Index>(k);
        local.push_back(active[k] - b.offset);
      }
    }
    out.mats_.push_back(M(Eigen::all, local));
    out.blocks_.push_back({out.mats_.size() - 1, first < 0 ? 0 : first});
  }
  return out;
}

double IndexDesign::spectral_bound() const {
  if (dim_ == 0 || n_ == 0) return 0.0;
  VectorXd v = VectorXd::Ones(dim_) / std::sqrt(static_cast<double>(dim_));
  MatrixXd T;
  VectorXd w;
  double est = 0.0;
  for (int it = 0; it < 100; ++it) {
    indices(v, T);
    gradient(T, w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (it > 5 && std::abs(next - est) <= 1e-6 * next) {
      est = next;
      break;
    }
    est = next;
  }
  return 1.05 * est;
}

Problem Problem::rows(const std::vector<Index>& idx) const {
  return Problem{design.rows(idx), Y(idx, Eigen::all), model};
}

Problem make_problem(const Dataset& data, const LossModel& model) {
  if (model.is_multi_index()) throw InputError("multi-index loss requires multi-index data");
  if (data.Y.cols() != static_cast<Index>(model.outcome_arity())) {
    throw InputError("outcome column count does not match the loss");
  }
  return Problem{IndexDesign(data.X), data.Y, model};
}

Problem make_problem(const MultiIndexData& data, const MatrixXd& Y, const LossModel& model) {
  IndexDesign design(data);
  if (static_cast<std::size_t>(design.arity()) != model.index_arity()) {
    throw InputError("multi-index layout does not match the loss index arity");
  }
  if (Y.rows() != design.n() || Y.cols() != 1) throw InputError("multi-index outcomes must be n x 1");
  for (Index i = 0; i < Y.rows(); ++i) {
    const double y = Y(i, 0);
    model.validate_outcome(std::span<const double>(&y, 1));
  }
  return Problem{std::move(design), Y, model};
}

namespace {

template <class Visit>
void for_each_row(const MatrixXd& T, const MatrixXd& Y, Visit&& visit) {
  const Index a = T.cols();
  const Index b = Y.cols();
  std::vector<double> t(a), y(b);
  for (Index i = 0; i < T.rows(); ++i) {
    for (Index c = 0; c < a; ++c) t[c] = T(i, c);
    for (Index c = 0; c < b; ++c) y[c] = Y(i, c);
    visit(i, std::span<const double>(t), std::span<const double>(y));
  }
}

}  // namespace

double mean_loss(const LossModel& model, const MatrixXd& T, const MatrixXd& Y) {
  double total = 0.0;
  if (T.cols() == 1 && Y.cols() == 1) {
    for (Index i = 0; i < T.rows(); ++i) total += model.value(T(i, 0), Y(i, 0));
  } else {
    for_each_row(T, Y, [&](Index, auto t, auto y) { total += model.value(t, y); });
  }
  return total / static_cast<double>(T.rows());
}

double loss_and_derivs(const LossModel& model, const MatrixXd& T, const MatrixXd& Y, MatrixXd& G) {
  G.resize(T.rows(), T.cols());
  double total = 0.0;
  if (T.cols() == 1 && Y.cols() == 1) {
    for (Index i = 0; i < T.rows(); ++i) {
      total += model.value(T(i, 0), Y(i, 0));
      G(i, 0) = model.deriv(T(i, 0), Y(i, 0));
    }
  } else {
    std::vector<double> out(T.cols());
    for_each_row(T, Y, [&](Index i, auto t, auto y) {
      total += model.value(t, y);
      model.deriv(t, y, out);
      for (Index c = 0; c < T.cols(); ++c) G(i, c) = out[c];
    });
  }
  return total / static_cast<double>(T.rows());
}

}  // namespace l1pen
