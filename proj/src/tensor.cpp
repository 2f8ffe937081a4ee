#include "tgcca/tensor.hpp"

#include <numeric>
#include <string>

namespace tgcca {

namespace {

Index product(const std::vector<Index>& dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1},
                         std::multiplies<Index>());
}

}  // namespace

DenseTensor::DenseTensor(std::vector<Index> dims, Vector data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (dims_.empty()) throw ConfigError("tensor must have at least one mode");
  for (Index p : dims_)
    if (p < 1) throw ConfigError("tensor mode dimensions must be positive");
  if (data_.size() != product(dims_))
    throw ConfigError("tensor data length does not match dims");
}

DenseTensor::DenseTensor(std::vector<Index> dims)
    : DenseTensor(dims, Vector::Zero(product(dims))) {}

double DenseTensor::operator()(const std::vector<Index>& idx) const {
  Index lin = 0, stride = 1;
  for (size_t m = 0; m < dims_.size(); ++m) {
    lin += idx[m] * stride;
    stride *= dims_[m];
  }
  return data_[lin];
}

Matrix mode_matricize(const DenseTensor& t, Index m) {
  const Index d = t.order();
  if (m < 1 || m > d)
    throw ConfigError("mode index " + std::to_string(m) + " out of range [1," +
                      std::to_string(d) + "]");
  const auto& dims = t.dims();
  const Index pm = dims[static_cast<size_t>(m - 1)];
  const Index ncols = t.size() / pm;
  Matrix out(pm, ncols);

  // Strides of each mode in the linear (mode-1) order, and in the column
  // order of the unfolding (remaining modes, smallest index fastest).
  std::vector<Index> lin_stride(dims.size());
  Index s = 1;
  for (size_t k = 0; k < dims.size(); ++k) {
    lin_stride[k] = s;
    s *= dims[k];
  }
  const Index row_stride = lin_stride[static_cast<size_t>(m - 1)];

  std::vector<size_t> rest;
  for (size_t k = 0; k < dims.size(); ++k)
    if (k != static_cast<size_t>(m - 1)) rest.push_back(k);

  std::vector<Index> idx(rest.size(), 0);
  const Vector& data = t.data();
  for (Index col = 0; col < ncols; ++col) {
    Index base = 0;
    for (size_t k = 0; k < rest.size(); ++k) base += idx[k] * lin_stride[rest[k]];
    for (Index i = 0; i < pm; ++i) out(i, col) = data[base + i * row_stride];
    // advance the multi-index over the remaining modes
    for (size_t k = 0; k < rest.size(); ++k) {
      if (++idx[k] < dims[rest[k]]) break;
      idx[k] = 0;
    }
  }
  return out;
}

DenseTensor fold_from_mode(const Matrix& unfolded, Index m,
                           const std::vector<Index>& dims) {
  const Index d = static_cast<Index>(dims.size());
  if (m < 1 || m > d) throw ConfigError("mode index out of range");
  DenseTensor out(dims);
  std::vector<Index> lin_stride(dims.size());
  Index s = 1;
  for (size_t k = 0; k < dims.size(); ++k) {
    lin_stride[k] = s;
    s *= dims[k];
  }
  const Index row_stride = lin_stride[static_cast<size_t>(m - 1)];
  const Index pm = dims[static_cast<size_t>(m - 1)];

  std::vector<size_t> rest;
  for (size_t k = 0; k < dims.size(); ++k)
    if (k != static_cast<size_t>(m - 1)) rest.push_back(k);

  std::vector<Index> idx(rest.size(), 0);
  Vector& data = out.data();
  for (Index col = 0; col < unfolded.cols(); ++col) {
    Index base = 0;
    for (size_t k = 0; k < rest.size(); ++k) base += idx[k] * lin_stride[rest[k]];
    for (Index i = 0; i < pm; ++i) data[base + i * row_stride] = unfolded(i, col);
    for (size_t k = 0; k < rest.size(); ++k) {
      if (++idx[k] < dims[rest[k]]) break;
      idx[k] = 0;
    }
  }
  return out;
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ConfigError("khatri_rao: mismatched column counts");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Index r = 0; r < a.cols(); ++r)
    for (Index i = 0; i < a.rows(); ++i)
      out.col(r).segment(i * b.rows(), b.rows()) = a(i, r) * b.col(r);
  return out;
}

DenseTensor mode_product(const DenseTensor& t, Index m, const Matrix& a) {
  if (a.cols() != t.dim(m))
    throw ConfigError("mode_product: matrix column count does not match mode dim");
  Matrix unfolded = a * mode_matricize(t, m);
  std::vector<Index> dims = t.dims();
  dims[static_cast<size_t>(m - 1)] = a.rows();
  return fold_from_mode(unfolded, m, dims);
}

std::vector<Index> CpVector::dims() const {
  std::vector<Index> out;
  out.reserve(factors.size());
  for (const auto& f : factors) out.push_back(f.rows());
  return out;
}

Index CpVector::vec_size() const {
  Index p = 1;
  for (const auto& f : factors) p *= f.rows();
  return p;
}

Vector CpVector::rank1_factor(Index r) const {
  for (const auto& f : factors)
    if (f.cols() != lambda.size())
      throw ConfigError("CpVector: inconsistent factor column counts");
  Vector acc = factors.front().col(r);
  for (size_t m = 1; m < factors.size(); ++m)
    acc = kronecker(factors[m].col(r), acc);
  return acc;
}

Vector CpVector::reconstruct() const {
  Vector out = Vector::Zero(vec_size());
  for (Index r = 0; r < rank(); ++r) out += lambda[r] * rank1_factor(r);
  return out;
}

Matrix CpVector::factor_matrix() const {
  Matrix out(vec_size(), rank());
  for (Index r = 0; r < rank(); ++r) out.col(r) = rank1_factor(r);
  return out;
}

}  // namespace tgcca
