#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmrec {

// Storage scalar. The gradient-check build (MMREC_REAL_DOUBLE) widens it so
// finite differences are not swamped by float round-off.
#ifdef MMREC_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct ContractError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct OrderingError : Error {
  using Error::Error;
};

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

// Dense row-major array of rank 1..3.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> data);

  static Tensor vec(std::initializer_list<Real> v);
  static Tensor mat(int rows, int cols, std::initializer_list<Real> v);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(i); }
  // Rank-1 tensors behave as a single row.
  int rows() const { return rank() >= 2 ? shape_[0] : 1; }
  int cols() const { return shape_.empty() ? 0 : shape_.back(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::vector<Real>& values() { return data_; }
  const std::vector<Real>& values() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }
  Real at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols() + c]; }

  bool all_finite() const;
  void fill(Real v);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<Real> data_;
};

Real max_abs_diff(const Tensor& a, const Tensor& b);

// Paired real/imaginary vectors.
struct ComplexVec {
  std::vector<double> re;
  std::vector<double> im;

  ComplexVec() = default;
  explicit ComplexVec(std::size_t n) : re(n, 0.0), im(n, 0.0) {}
  ComplexVec(std::vector<double> r, std::vector<double> i);

  std::size_t size() const { return re.size(); }
  static ComplexVec from_real(const std::vector<double>& x);
};

}  // namespace mmrec
