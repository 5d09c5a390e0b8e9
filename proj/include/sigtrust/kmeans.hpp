#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "sigtrust/error.hpp"

namespace sigtrust {

template <typename Scalar>
using PointMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct KMeansResult {
  std::vector<std::size_t> assignment;
  PointMatrix<Scalar> centroids;
  Scalar inertia{0};
  std::vector<Scalar> inertia_history;  // after every assignment step
  std::size_t iterations{0};
};

namespace detail {

template <typename Scalar>
Scalar assign_points(const PointMatrix<Scalar>& points, const PointMatrix<Scalar>& centroids,
                     std::vector<std::size_t>& assignment, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& dist) {
  Scalar inertia(0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    Eigen::Index best = 0;
    const Scalar d = (centroids.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
    assignment[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    dist(i) = d;
    inertia += d;
  }
  return inertia;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding. Stops when assignments no
/// longer change or after `max_iterations`. A cluster that empties is
/// re-seeded at the point farthest from its centroid; when every point
/// already sits on a centroid the empty cluster is kept.
template <typename Scalar>
KMeansResult<Scalar> kmeans(const PointMatrix<Scalar>& points, std::size_t k, std::uint64_t seed,
                            std::size_t max_iterations = 100) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0 || n < k) {
    throw Error(Errc::TooFewDevices,
                "k-means needs at least k = " + std::to_string(k) + " points, got " + std::to_string(n));
  }
  const auto kk = static_cast<Eigen::Index>(k);
  std::mt19937_64 rng(seed);
  KMeansResult<Scalar> result;
  result.centroids.resize(kk, points.cols());

  // k-means++ seeding
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dist(points.rows());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  result.centroids.row(0) = points.row(static_cast<Eigen::Index>(first(rng)));
  dist = (points.rowwise() - result.centroids.row(0)).rowwise().squaredNorm();
  for (Eigen::Index c = 1; c < kk; ++c) {
    const Scalar total = dist.sum();
    Eigen::Index chosen = 0;
    if (total > Scalar(0)) {
      std::uniform_real_distribution<double> u(0.0, static_cast<double>(total));
      double target = u(rng);
      for (chosen = 0; chosen < points.rows() - 1; ++chosen) {
        target -= static_cast<double>(dist(chosen));
        if (target < 0.0) break;
      }
      while (dist(chosen) == Scalar(0)) chosen = (chosen + points.rows() - 1) % points.rows();
    } else {
      chosen = static_cast<Eigen::Index>(first(rng));
    }
    result.centroids.row(c) = points.row(chosen);
    dist = dist.cwiseMin((points.rowwise() - result.centroids.row(c)).rowwise().squaredNorm());
  }

  result.assignment.assign(n, 0);
  std::vector<std::size_t> previous;
  std::vector<std::size_t> sizes(k);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    result.inertia = detail::assign_points(points, result.centroids, result.assignment, dist);
    result.inertia_history.push_back(result.inertia);
    result.iterations = it + 1;
    if (result.assignment == previous) break;
    previous = result.assignment;

    PointMatrix<Scalar> sums = PointMatrix<Scalar>::Zero(kk, points.cols());
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(result.assignment[i])) += points.row(static_cast<Eigen::Index>(i));
      ++sizes[result.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      const auto row = static_cast<Eigen::Index>(c);
      if (sizes[c] > 0) {
        result.centroids.row(row) = sums.row(row) / static_cast<Scalar>(sizes[c]);
        continue;
      }
      Eigen::Index far = 0;
      if (dist.maxCoeff(&far) > Scalar(0)) {
        result.centroids.row(row) = points.row(far);
        dist(far) = Scalar(0);
      }
    }
  }
  return result;
}

/// Min-max scales every column into [0, 1]; constant columns become 0.
template <typename Scalar>
PointMatrix<Scalar> normalize_columns(const PointMatrix<Scalar>& features) {
  PointMatrix<Scalar> out(features.rows(), features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const Scalar lo = features.col(c).minCoeff();
    const Scalar span = features.col(c).maxCoeff() - lo;
    if (span > Scalar(0)) {
      out.col(c) = (features.col(c).array() - lo) / span;
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

}  // namespace sigtrust
