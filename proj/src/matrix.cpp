#include "phrasecraft/matrix.hpp"

#include <cmath>

#include "phrasecraft/error.hpp"

namespace phrasecraft {

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = values.size();
  }
  if (values.size() != cols_) {
    throw InvalidArgument("append_row: expected " + std::to_string(cols_) + " values, got " +
                          std::to_string(values.size()));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("dot: dimension mismatch " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("l2_distance: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

bool all_finite(std::span<const double> a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.cols()) throw InvalidArgument("matvec: dimension mismatch");
  std::vector<double> y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) y[r] = dot(m.row(r), x);
  return y;
}

std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.rows()) throw InvalidArgument("matvec_transposed: dimension mismatch");
  std::vector<double> y(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) y[c] += x[r] * row[c];
  }
  return y;
}

}  // namespace phrasecraft
