#include "mmrec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mmrec {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int e : s) n *= static_cast<std::size_t>(e);
  return n;
}

static void check_shape(const Shape& s) {
  if (s.empty() || s.size() > 3) throw DimensionError("tensor rank must be 1..3, got " + shape_str(s));
  for (int e : s)
    if (e <= 0) throw DimensionError("tensor extents must be positive, got " + shape_str(s));
}

Tensor::Tensor(Shape shape, Real fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_numel(shape_))
    throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_str(shape_));
}

Tensor Tensor::vec(std::initializer_list<Real> v) {
  return Tensor({static_cast<int>(v.size())}, std::vector<Real>(v));
}

Tensor Tensor::mat(int rows, int cols, std::initializer_list<Real> v) {
  return Tensor({rows, cols}, std::vector<Real>(v));
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Real x) { return std::isfinite(x); });
}

void Tensor::fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

Real max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw DimensionError("max_abs_diff: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Real m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ComplexVec::ComplexVec(std::vector<double> r, std::vector<double> i) : re(std::move(r)), im(std::move(i)) {
  if (re.size() != im.size()) throw DimensionError("ComplexVec: re/im length mismatch");
}

ComplexVec ComplexVec::from_real(const std::vector<double>& x) {
  return ComplexVec(x, std::vector<double>(x.size(), 0.0));
}

}  // namespace mmrec
