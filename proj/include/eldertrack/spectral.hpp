#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eldertrack/parallel.hpp"
#include "eldertrack/similarity.hpp"

namespace eldertrack {

/// Resident -> cluster label in [0, k).
struct ClusterAssignment {
  std::vector<std::string> resident_ids;
  std::vector<int> labels;
  int k = 0;

  int label_of(const std::string& resident_id) const {
    for (std::size_t i = 0; i < resident_ids.size(); ++i) {
      if (resident_ids[i] == resident_id) return labels[i];
    }
    fail(ErrorKind::Validation, "resident '" + resident_id + "' has no cluster label");
  }

  std::map<std::string, int> as_map() const {
    std::map<std::string, int> m;
    for (std::size_t i = 0; i < resident_ids.size(); ++i) m.emplace(resident_ids[i], labels[i]);
    return m;
  }
};

/// Affinity matrix: pairwise similarity off the diagonal, zero on it.
inline Eigen::MatrixXd similarity_matrix(const std::vector<AggregatedTrajectory>& trajs, const WeightVector& w,
                                         int h_slots, unsigned jobs = 1) {
  const auto n = static_cast<Eigen::Index>(trajs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  parallel_for(trajs.size(), jobs, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < trajs.size(); ++j) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = similarity(trajs[i], trajs[j], w, h_slots);
    }
  });
  a.triangularView<Eigen::StrictlyLower>() = a.transpose();
  return a;
}

/// L = I - D^{-1/2} A D^{-1/2}, D the row sums of A.
inline Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& affinity) {
  Eigen::VectorXd degree = affinity.rowwise().sum();
  Eigen::VectorXd inv_sqrt = degree.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
  Eigen::MatrixXd l = -(inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal());
  l.diagonal().array() += 1.0;
  return l;
}

struct LaplacianSpectrum {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns match eigenvalues
};

inline LaplacianSpectrum laplacian_spectrum(const Eigen::MatrixXd& laplacian) {
  Eigen::MatrixXd sym = 0.5 * (laplacian + laplacian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "symmetric eigensolver did not converge (n=" << sym.rows()
        << ", max|L_ij|=" << sym.cwiseAbs().maxCoeff() << ", info=" << static_cast<int>(solver.info()) << ")";
    fail(ErrorKind::EigenFailure, msg.str());
  }
  return LaplacianSpectrum{solver.eigenvalues(), solver.eigenvectors()};
}

struct KMeansOptions {
  int max_restarts = 100;
  int max_iterations = 300;
  double relative_tolerance = 1e-6;
};

struct KMeansResult {
  std::vector<int> labels;
  double inertia = 0.0;
};

namespace detail {

inline double sq_dist(const Eigen::MatrixXd& pts, Eigen::Index i, const Eigen::MatrixXd& centers, Eigen::Index c) {
  return (pts.row(i) - centers.row(c)).squaredNorm();
}

/// Relabels so that labels appear in order of first occurrence.
inline std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = remap.emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

inline KMeansResult lloyd_from(const Eigen::MatrixXd& pts, int k, Eigen::Index first, const KMeansOptions& opt) {
  const Eigen::Index n = pts.rows();
  Eigen::MatrixXd centers(k, pts.cols());
  centers.row(0) = pts.row(first);
  // Farthest-first seeding; equal distances pick the lowest index.
  Eigen::VectorXd nearest(n);
  for (Eigen::Index i = 0; i < n; ++i) nearest(i) = sq_dist(pts, i, centers, 0);
  for (int c = 1; c < k; ++c) {
    Eigen::Index pick = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (nearest(i) > nearest(pick)) pick = i;
    }
    centers.row(c) = pts.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) nearest(i) = std::min(nearest(i), sq_dist(pts, i, centers, c));
  }

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  double previous = std::numeric_limits<double>::infinity();
  double inertia = 0.0;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    inertia = 0.0;
    std::vector<double> own(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(pts, i, centers, 0);
      for (int c = 1; c < k; ++c) {
        double d = sq_dist(pts, i, centers, c);
        if (d < best_d) {
          best = c;
          best_d = d;
        }
      }
      labels[static_cast<std::size_t>(i)] = best;
      own[static_cast<std::size_t>(i)] = best_d;
    }
    // An empty cluster takes the point lying farthest from its own centre
    // among clusters that can spare one.
    for (int c = 0; c < k; ++c) {
      std::vector<int> sizes(static_cast<std::size_t>(k), 0);
      for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index donor = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        auto u = static_cast<std::size_t>(i);
        if (sizes[static_cast<std::size_t>(labels[u])] < 2) continue;
        if (donor < 0 || own[u] > own[static_cast<std::size_t>(donor)]) donor = i;
      }
      if (donor < 0) break;
      labels[static_cast<std::size_t>(donor)] = c;
      own[static_cast<std::size_t>(donor)] = 0.0;
      centers.row(c) = pts.row(donor);
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, pts.cols());
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int l = labels[static_cast<std::size_t>(i)];
      sums.row(l) += pts.row(i);
      ++sizes[static_cast<std::size_t>(l)];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) centers.row(c) = sums.row(c) / sizes[static_cast<std::size_t>(c)];
    }
    for (Eigen::Index i = 0; i < n; ++i) inertia += sq_dist(pts, i, centers, labels[static_cast<std::size_t>(i)]);
    bool settled = std::abs(previous - inertia) <= opt.relative_tolerance * std::max(previous, 1e-300) ||
                   inertia == 0.0;
    previous = inertia;
    if (settled) break;
  }
  return KMeansResult{labels, inertia};
}

}  // namespace detail

/// Seeded k-means: farthest-first seeding from up to `max_restarts` distinct
/// starting points (drawn by a seeded shuffle), best inertia kept.
inline KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& opt = {}) {
  const auto n = static_cast<int>(points.rows());
  require(k >= 1 && k <= n, "k-means needs 1 <= k <= n");
  std::vector<Eigen::Index> starts(static_cast<std::size_t>(n));
  std::iota(starts.begin(), starts.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(starts.begin(), starts.end(), rng);
  starts.resize(static_cast<std::size_t>(std::min(n, std::max(1, opt.max_restarts))));
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (auto start : starts) {
    auto run = detail::lloyd_from(points, k, start, opt);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  best.labels = detail::canonical_labels(best.labels);
  return best;
}

struct SpectralResult {
  ClusterAssignment assignment;
  Eigen::VectorXd eigenvalues;
  std::vector<std::string> warnings;
};

/// Spectral embedding of the normalized Laplacian shared by every k.
class SpectralModel {
 public:
  SpectralModel(std::vector<AggregatedTrajectory> trajs, const WeightVector& w, int h_slots, unsigned jobs = 1)
      : trajs_(std::move(trajs)) {
    require(trajs_.size() >= 3, "spectral clustering needs at least 3 residents");
    affinity_ = similarity_matrix(trajs_, w, h_slots, jobs);
    laplacian_ = normalized_laplacian(affinity_);
    spectrum_ = laplacian_spectrum(laplacian_);
  }

  const std::vector<AggregatedTrajectory>& trajectories() const { return trajs_; }
  const Eigen::MatrixXd& affinity() const { return affinity_; }
  const Eigen::MatrixXd& laplacian() const { return laplacian_; }
  const LaplacianSpectrum& spectrum() const { return spectrum_; }

  /// Rows of the k smallest-eigenvalue eigenvectors, each scaled to unit length.
  Eigen::MatrixXd embedding(int k) const {
    Eigen::MatrixXd u = spectrum_.eigenvectors.leftCols(k);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      double norm = u.row(i).norm();
      if (norm > 0.0) u.row(i) /= norm;
    }
    return u;
  }

  SpectralResult cluster(int k, std::uint64_t seed, const KMeansOptions& opt = {}) const {
    const auto n = static_cast<int>(trajs_.size());
    require(k >= 2 && k < n, "spectral clustering needs 2 <= k < n");
    SpectralResult result;
    Eigen::MatrixXd u = embedding(k);
    auto km = kmeans(u, k, seed, opt);
    result.assignment.k = k;
    result.assignment.labels = km.labels;
    for (const auto& t : trajs_) result.assignment.resident_ids.push_back(t.resident_id);
    result.eigenvalues = spectrum_.eigenvalues;

    int distinct = 0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      bool seen = false;
      for (Eigen::Index j = 0; j < i && !seen; ++j) seen = (u.row(i) - u.row(j)).norm() < 1e-9;
      distinct += seen ? 0 : 1;
    }
    if (distinct < k) {
      result.warnings.push_back("degenerate embedding: " + std::to_string(distinct) +
                                " distinct residents for k=" + std::to_string(k));
    }
    if (k < n && spectrum_.eigenvalues(k) - spectrum_.eigenvalues(k - 1) < 1e-9) {
      result.warnings.push_back("degenerate spectrum: eigenvalues " + std::to_string(k - 1) + " and " +
                                std::to_string(k) + " coincide");
    }
    return result;
  }

 private:
  std::vector<AggregatedTrajectory> trajs_;
  Eigen::MatrixXd affinity_;
  Eigen::MatrixXd laplacian_;
  LaplacianSpectrum spectrum_;
};

inline SpectralResult spectral_cluster(const std::vector<AggregatedTrajectory>& trajs, int k, const WeightVector& w,
                                       int h_slots, std::uint64_t seed, unsigned jobs = 1) {
  return SpectralModel(trajs, w, h_slots, jobs).cluster(k, seed);
}

/// Sum over clusters of squared intra-cluster WWO distances.
inline double ssd(const std::vector<AggregatedTrajectory>& trajs, const std::vector<int>& labels,
                  int h_slots = kDefaultWindowHalfWidth) {
  require(trajs.size() == labels.size(), "ssd needs one label per trajectory");
  double total = 0.0;
  for (std::size_t a = 0; a < trajs.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      if (labels[a] != labels[b]) continue;
      double d = wwo_distance(trajs[a], trajs[b], h_slots);
      total += d * d;
    }
  }
  return total;
}

struct SsdPoint {
  int k;
  double ssd;
  ClusterAssignment assignment;
};

inline std::vector<SsdPoint> ssd_curve(const SpectralModel& model, int k_min, int k_max, std::uint64_t seed,
                                       int h_slots = kDefaultWindowHalfWidth) {
  const auto n = static_cast<int>(model.trajectories().size());
  require(2 <= k_min && k_min <= k_max && k_max < n, "ssd curve needs 2 <= k_min <= k_max < n");
  std::vector<SsdPoint> curve;
  for (int k = k_min; k <= k_max; ++k) {
    auto r = model.cluster(k, seed);
    double value = ssd(model.trajectories(), r.assignment.labels, h_slots);
    curve.push_back(SsdPoint{k, value, std::move(r.assignment)});
  }
  return curve;
}

/// Lowest SSD; ties resolve to the smaller k.
inline const SsdPoint& best_k(const std::vector<SsdPoint>& curve) {
  require(!curve.empty(), "empty SSD curve");
  const SsdPoint* best = &curve.front();
  for (const auto& p : curve) {
    if (p.ssd < best->ssd) best = &p;
  }
  return *best;
}

}  // namespace eldertrack
