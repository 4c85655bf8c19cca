#include "dreamplan/net/losses.hpp"

#include "dreamplan/error.hpp"

namespace dreamplan::net {

double mse(const Vec& pred, const Vec& target) {
  if (pred.size() != target.size() || pred.size() == 0) {
    throw ShapeError("mse operands must be nonempty and equal length");
  }
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

Vec mse_grad(const Vec& pred, const Vec& target) {
  if (pred.size() != target.size() || pred.size() == 0) {
    throw ShapeError("mse operands must be nonempty and equal length");
  }
  return 2.0 / static_cast<double>(pred.size()) * (pred - target);
}

double mse(const Mat& pred, const Mat& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
      pred.size() == 0) {
    throw ShapeError("mse operands must be nonempty and equal shape");
  }
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

Mat mse_grad(const Mat& pred, const Mat& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
      pred.size() == 0) {
    throw ShapeError("mse operands must be nonempty and equal shape");
  }
  return 2.0 / static_cast<double>(pred.size()) * (pred - target);
}

}  // namespace dreamplan::net
