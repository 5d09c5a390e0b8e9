#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sigtrust/communities.hpp"
#include "sigtrust/graph.hpp"
#include "sigtrust/hs_tree.hpp"
#include "sigtrust/walk.hpp"

namespace sigtrust {

/// Device embeddings (one row per device) plus the parameter vectors of the
/// internal nodes of the hierarchical-softmax tree.
template <typename Scalar = double>
class EmbeddingMatrix {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  EmbeddingMatrix() = default;

  /// Zero-initialised; requires 1 <= width < device_count.
  EmbeddingMatrix(std::size_t device_count, std::size_t width) {
    if (width == 0 || width >= device_count) {
      throw Error(Errc::InvalidConfig, "embedding width " + std::to_string(width) +
                                           " must satisfy 0 < width < device count " +
                                           std::to_string(device_count));
    }
    const auto rows = static_cast<Eigen::Index>(device_count);
    const auto cols = static_cast<Eigen::Index>(width);
    nodes_ = Matrix::Zero(rows, cols);
    tree_ = Matrix::Zero(rows - 1, cols);
  }

  std::size_t device_count() const noexcept { return static_cast<std::size_t>(nodes_.rows()); }
  std::size_t width() const noexcept { return static_cast<std::size_t>(nodes_.cols()); }

  Matrix& node_vectors() noexcept { return nodes_; }
  const Matrix& node_vectors() const noexcept { return nodes_; }
  Matrix& tree_vectors() noexcept { return tree_; }
  const Matrix& tree_vectors() const noexcept { return tree_; }

  auto node(DeviceId d) { return nodes_.row(static_cast<Eigen::Index>(d.index())); }
  auto node(DeviceId d) const { return nodes_.row(static_cast<Eigen::Index>(d.index())); }

  bool all_finite() const { return nodes_.allFinite() && tree_.allFinite(); }

  bool operator==(const EmbeddingMatrix& other) const {
    return nodes_.rows() == other.nodes_.rows() && nodes_.cols() == other.nodes_.cols() &&
           nodes_ == other.nodes_ && tree_ == other.tree_;
  }

 private:
  Matrix nodes_;
  Matrix tree_;
};

struct TrainConfig {
  std::size_t width{32};            // z
  std::size_t walks_per_device{8};  // lambda
  std::size_t walk_length{30};      // l
  std::size_t window{2};            // omega
  double lr0{0.025};
  double lr_floor{1e-4};
  std::uint64_t seed{1};
  /// One worker per community, updates applied without locking. Only
  /// meaningful when a partition is supplied; not bit-reproducible.
  bool parallel{false};

  void validate() const {
    if (width == 0 || walk_length == 0 || window == 0) {
      throw Error(Errc::InvalidConfig, "embedding width, walk length and window must be positive");
    }
    if (!(lr_floor > 0.0 && lr_floor < lr0 && lr0 < 1.0)) {
      throw Error(Errc::InvalidConfig, "learning rates must satisfy 0 < lr_floor < lr0 < 1");
    }
  }
};

namespace detail {

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

/// -log(sigmoid(x)) without overflow.
template <typename Scalar>
Scalar neg_log_sigmoid(Scalar x) {
  return std::max(-x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

/// -log(sigmoid(x)) and sigmoid(-x) from a single exponential.
template <typename Scalar>
std::pair<Scalar, Scalar> loss_and_slope(Scalar x) {
  const Scalar e = std::exp(-std::abs(x));
  if (x >= Scalar(0)) return {std::log1p(e), e / (Scalar(1) + e)};
  return {-x + std::log1p(e), Scalar(1) / (Scalar(1) + e)};
}

inline void check_pair(std::size_t rows, DeviceId a, DeviceId b) {
  if (a.index() >= rows || b.index() >= rows) {
    throw Error(Errc::UnknownDevice, "device outside the embedding matrix");
  }
}

}  // namespace detail

/// Probability that a walk context around `context` lands on leaf `target`:
/// the product of logistic branch decisions along target's root-to-leaf
/// path, sigma(+<psi, phi>) for a left turn and sigma(-<psi, phi>) for a
/// right turn. `visits`, when given, is incremented once per internal node
/// read.
template <typename Scalar>
Scalar leaf_probability(const EmbeddingMatrix<Scalar>& emb, const HSTree& tree, DeviceId context,
                        DeviceId target, std::size_t* visits = nullptr) {
  detail::check_pair(emb.device_count(), context, target);
  const auto phi = emb.node(context);
  Scalar probability(1);
  for (const auto& step : tree.path(target)) {
    const Scalar f = emb.tree_vectors().row(step.node).dot(phi);
    probability *= detail::sigmoid(step.right ? -f : f);
    if (visits) ++*visits;
  }
  return probability;
}

/// -log leaf_probability, evaluated in log space.
template <typename Scalar>
Scalar pair_loss(const EmbeddingMatrix<Scalar>& emb, const HSTree& tree, DeviceId center,
                 DeviceId context) {
  detail::check_pair(emb.device_count(), center, context);
  const auto phi = emb.node(center);
  Scalar loss(0);
  for (const auto& step : tree.path(context)) {
    const Scalar f = emb.tree_vectors().row(step.node).dot(phi);
    loss += detail::neg_log_sigmoid(step.right ? -f : f);
  }
  return loss;
}

/// Analytic gradient of `pair_loss(center, context)`. Row k of `nodes`
/// holds the gradient for tree row `node_rows[k]`; only the first `length`
/// rows are meaningful. Buffers are reused across calls.
template <typename Scalar>
struct PairGradient {
  Scalar loss{0};
  typename EmbeddingMatrix<Scalar>::Vector input;
  typename EmbeddingMatrix<Scalar>::Matrix nodes;
  std::vector<std::uint32_t> node_rows;
  std::size_t length{0};
};

template <typename Scalar>
Scalar pair_gradient(const EmbeddingMatrix<Scalar>& emb, const HSTree& tree, DeviceId center,
                     DeviceId context, PairGradient<Scalar>& out) {
  detail::check_pair(emb.device_count(), center, context);
  const auto width = static_cast<Eigen::Index>(emb.width());
  const auto depth = static_cast<Eigen::Index>(std::max<std::size_t>(tree.max_depth(), 1));
  if (out.nodes.rows() < depth || out.nodes.cols() != width) out.nodes.resize(depth, width);
  out.input.setZero(width);
  out.node_rows.clear();
  out.loss = Scalar(0);

  const auto phi = emb.node(center);
  Eigen::Index k = 0;
  for (const auto& step : tree.path(context)) {
    const auto psi = emb.tree_vectors().row(step.node);
    const Scalar sign = step.right ? Scalar(-1) : Scalar(1);
    const auto [loss, slope] = detail::loss_and_slope(sign * psi.dot(phi));
    out.loss += loss;
    // d/df of -log sigmoid(s f) is -s * sigmoid(-s f).
    const Scalar g = -sign * slope;
    out.nodes.row(k) = g * phi;
    out.input.noalias() += g * psi.transpose();
    out.node_rows.push_back(step.node);
    ++k;
  }
  out.length = static_cast<std::size_t>(k);
  return out.loss;
}

/// One SGD sweep over a walk: every (center, context) pair within `window`
/// hops updates phi(center) and the context leaf's path vectors. Returns
/// the summed pair losses, each measured just before its own update.
template <typename Scalar>
Scalar skipgram_step(EmbeddingMatrix<Scalar>& emb, const HSTree& tree, const RandomWalk& walk,
                     std::size_t window, Scalar lr, PairGradient<Scalar>& scratch) {
  Scalar total(0);
  const auto n = walk.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = i >= window ? i - window : 0;
    const auto hi = std::min(n - 1, i + window);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j == i) continue;
      total += pair_gradient(emb, tree, walk.steps[i], walk.steps[j], scratch);
      if (lr == Scalar(0)) continue;
      for (std::size_t k = 0; k < scratch.length; ++k) {
        emb.tree_vectors().row(scratch.node_rows[k]) -=
            lr * scratch.nodes.row(static_cast<Eigen::Index>(k));
      }
      emb.node(walk.steps[i]) -= lr * scratch.input.transpose();
    }
  }
  return total;
}

template <typename Scalar>
Scalar skipgram_step(EmbeddingMatrix<Scalar>& emb, const HSTree& tree, const RandomWalk& walk,
                     std::size_t window, Scalar lr) {
  PairGradient<Scalar> scratch;
  return skipgram_step(emb, tree, walk, window, lr, scratch);
}

namespace detail {

template <typename Scalar>
void train_worker(EmbeddingMatrix<Scalar>& emb, const HSTree& tree, const WalkIndex& index,
                  std::vector<DeviceId> devices, const TrainConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  PairGradient<Scalar> scratch;
  const double expected =
      static_cast<double>(cfg.walks_per_device * devices.size() * cfg.walk_length);
  double encountered = 0.0;
  for (std::size_t pass = 0; pass < cfg.walks_per_device; ++pass) {
    std::shuffle(devices.begin(), devices.end(), rng);
    for (auto d : devices) {
      const auto walk = random_walk(index, d, cfg.walk_length, rng);
      const double lr = std::max(cfg.lr_floor, cfg.lr0 * (1.0 - encountered / expected));
      skipgram_step(emb, tree, walk, cfg.window, static_cast<Scalar>(lr), scratch);
      encountered += static_cast<double>(walk.size());
    }
    if (!emb.all_finite()) {
      throw Error(Errc::InvalidConfig, "training diverged: non-finite parameters after pass " +
                                           std::to_string(pass));
    }
  }
}

}  // namespace detail

/// Learns device embeddings from uniform random walks with a skip-gram
/// objective under hierarchical softmax. Every Active device starts
/// `walks_per_device` walks (one per pass, in a freshly shuffled order);
/// the learning rate decays linearly from lr0 to lr_floor over the
/// expected number of walk steps. With `partition`, walks stay inside the
/// start device's community.
template <typename Scalar = double>
EmbeddingMatrix<Scalar> train_embeddings(const SignedTrustGraph& graph, const TrainConfig& cfg,
                                         const CommunityPartition* partition = nullptr) {
  cfg.validate();
  std::vector<DeviceId> active;
  for (const auto& d : graph.devices()) {
    if (d.active()) active.push_back(d.id);
  }
  if (active.size() < 2) {
    throw Error(Errc::GraphTooSmall, "training needs at least two Active devices");
  }

  EmbeddingMatrix<Scalar> emb(graph.device_count(), cfg.width);
  Rng init(cfg.seed);
  const Scalar half = Scalar(0.5) / static_cast<Scalar>(cfg.width);
  std::uniform_real_distribution<Scalar> uniform(-half, half);
  for (auto* m : {&emb.node_vectors(), &emb.tree_vectors()}) {
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = uniform(init);
    }
  }

  const HSTree tree(graph.device_count());
  const WalkIndex index(graph, partition);
  const std::uint64_t walk_seed = init();

  if (!cfg.parallel || partition == nullptr || partition->community_count <= 1) {
    detail::train_worker(emb, tree, index, std::move(active), cfg, walk_seed);
    return emb;
  }

  // Workers share both matrices without synchronisation (Hogwild-style);
  // walks never cross communities, so only tree rows near the root collide.
  auto groups = partition->members();
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> failures(groups.size());
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].empty()) continue;
    workers.emplace_back([&, c] {
      try {
        detail::train_worker(emb, tree, index, std::move(groups[c]), cfg, walk_seed + c);
      } catch (...) {
        failures[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return emb;
}

/// Cosine similarity of two device embeddings.
template <typename Scalar>
Scalar similarity(const EmbeddingMatrix<Scalar>& emb, DeviceId a, DeviceId b) {
  detail::check_pair(emb.device_count(), a, b);
  const Scalar na = emb.node(a).norm();
  const Scalar nb = emb.node(b).norm();
  if (na == Scalar(0) || nb == Scalar(0)) {
    throw Error(Errc::ZeroVector, "cosine similarity of a zero embedding");
  }
  return std::clamp(emb.node(a).dot(emb.node(b)) / (na * nb), Scalar(-1), Scalar(1));
}

/// `device_id,v_1,...,v_z`, one line per device, shortest round-trip decimals.
void write_embeddings(std::ostream& out, const EmbeddingMatrix<double>& emb);

/// Inverse of `write_embeddings`. Tree vectors are not part of the format
/// and come back zeroed.
EmbeddingMatrix<double> read_embeddings(std::istream& in);

}  // namespace sigtrust
