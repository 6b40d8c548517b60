#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "osmc/errors.hpp"
#include "osmc/family.hpp"

namespace osmc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Coefficients = Eigen::VectorXd;

// Covariate matrix plus (optionally) responses. A NaN response entry marks a
// row whose response has not been measured; a wholly absent vector marks a
// covariate-only dataset.
struct Dataset {
  Matrix x;                      // n x p, row i holds the covariate vector X_i
  std::optional<Vector> y;

  Index n() const { return x.rows(); }
  Index dim() const { return x.cols(); }

  bool has_response(Index i) const { return y.has_value() && !std::isnan((*y)[i]); }

  bool has_all_responses() const {
    if (!y.has_value()) return false;
    return !y->hasNaN();
  }
};

enum class Intercept { Prepend, None };

// Builds a dataset from raw features, prepending a constant-1 column unless
// told otherwise.
inline Dataset make_dataset(Matrix features, std::optional<Vector> y = std::nullopt,
                            Intercept intercept = Intercept::Prepend) {
  if (y.has_value() && y->size() != features.rows()) {
    throw ShapeMismatch("response length does not match covariate row count");
  }
  Dataset d;
  if (intercept == Intercept::Prepend) {
    d.x.resize(features.rows(), features.cols() + 1);
    d.x.col(0).setOnes();
    d.x.rightCols(features.cols()) = features;
  } else {
    d.x = std::move(features);
  }
  d.y = std::move(y);
  return d;
}

// Gathers rows by index (repeats allowed). Response entries travel with the
// rows; missingness is preserved.
inline Dataset gather_rows(const Dataset& d, std::span<const Index> indices) {
  Dataset out;
  out.x.resize(static_cast<Index>(indices.size()), d.dim());
  if (d.y.has_value()) out.y = Vector(static_cast<Index>(indices.size()));
  for (Index k = 0; k < static_cast<Index>(indices.size()); ++k) {
    const Index i = indices[static_cast<std::size_t>(k)];
    out.x.row(k) = d.x.row(i);
    if (d.y.has_value()) (*out.y)[k] = (*d.y)[i];
  }
  return out;
}

inline Dataset gather_rows(const Dataset& d, const std::vector<Index>& indices) {
  return gather_rows(d, std::span<const Index>(indices));
}

}  // namespace osmc
