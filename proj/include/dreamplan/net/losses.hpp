#ifndef DREAMPLAN_NET_LOSSES_HPP_
#define DREAMPLAN_NET_LOSSES_HPP_

#include "dreamplan/net/mlp.hpp"

namespace dreamplan::net {

// Mean squared error over vector components: mean((pred - target)^2).
double mse(const Vec& pred, const Vec& target);

// d(mse)/d(pred) = 2 (pred - target) / n.
Vec mse_grad(const Vec& pred, const Vec& target);

// Batched variants; columns are samples, the mean runs over every entry.
double mse(const Mat& pred, const Mat& target);
Mat mse_grad(const Mat& pred, const Mat& target);

}  // namespace dreamplan::net

#endif  // DREAMPLAN_NET_LOSSES_HPP_
