#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace connsig::connectome {

/// One subject-session recording: regions x timepoints.
class RegionTimeSeries {
 public:
  /// Requires R >= 2, T >= 3, finite entries and tr_seconds > 0.
  RegionTimeSeries(std::string subject_id, Eigen::MatrixXd signal, double tr_seconds);

  const std::string& subject_id() const noexcept { return subject_id_; }
  const Eigen::MatrixXd& signal() const noexcept { return signal_; }
  double tr_seconds() const noexcept { return tr_seconds_; }
  Eigen::Index regions() const noexcept { return signal_.rows(); }
  Eigen::Index timepoints() const noexcept { return signal_.cols(); }

 private:
  std::string subject_id_;
  Eigen::MatrixXd signal_;
  double tr_seconds_;
};

struct Region {
  int index = 0;
  int area_number = 0;
  std::string name;
  std::string group_label;
};

class Parcellation {
 public:
  /// Indices must be contiguous 0..R-1 (any input order; stored sorted), names
  /// nonempty. When `label_set` is given every group label must belong to it;
  /// otherwise the label set is the distinct labels present.
  explicit Parcellation(std::vector<Region> regions,
                        std::optional<std::vector<std::string>> label_set = std::nullopt);

  const std::vector<Region>& regions() const noexcept { return regions_; }
  const std::vector<std::string>& label_set() const noexcept { return labels_; }
  std::size_t region_count() const noexcept { return regions_.size(); }
  const Region& at(std::size_t index) const { return regions_.at(index); }

 private:
  std::vector<Region> regions_;
  std::vector<std::string> labels_;
};

/// Reference list of the twelve cortical areas reported to carry the
/// resting-state identity signature, as (area number, name, larger region).
const std::vector<Region>& reference_signature_regions();

class CorrelationMatrix {
 public:
  /// Checks symmetry, unit diagonal and range [-1, 1], each within 1e-12.
  explicit CorrelationMatrix(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index regions() const noexcept { return values_.rows(); }

 private:
  Eigen::MatrixXd values_;
};

class EdgeVector {
 public:
  /// Length must equal R(R-1)/2.
  EdgeVector(Eigen::VectorXd values, Eigen::Index region_count);

  const Eigen::VectorXd& values() const noexcept { return values_; }
  Eigen::Index region_count() const noexcept { return region_count_; }
  Eigen::Index size() const noexcept { return values_.size(); }

 private:
  Eigen::VectorXd values_;
  Eigen::Index region_count_;
};

/// Subjects x edges. Row order is the order subjects were supplied in.
class GroupMatrix {
 public:
  GroupMatrix(std::vector<std::string> subject_ids, Eigen::MatrixXd values,
              Eigen::Index region_count);

  const std::vector<std::string>& subject_ids() const noexcept { return subject_ids_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index region_count() const noexcept { return region_count_; }
  Eigen::Index subjects() const noexcept { return values_.rows(); }
  Eigen::Index features() const noexcept { return values_.cols(); }

  /// Row of `id`; throws if absent.
  Eigen::Index row_of(const std::string& id) const;

  /// New matrix over the given rows, in that order.
  GroupMatrix select_rows(std::span<const Eigen::Index> rows) const;

 private:
  std::vector<std::string> subject_ids_;
  Eigen::MatrixXd values_;
  Eigen::Index region_count_;
};

/// Number of strict-upper-triangle edges, R(R-1)/2.
Eigen::Index edge_count(Eigen::Index regions);

/// Row-major position of (i, j), i < j < R, in the strict upper triangle.
Eigen::Index edge_index(Eigen::Index i, Eigen::Index j, Eigen::Index regions);

/// Inverse of edge_index.
std::pair<Eigen::Index, Eigen::Index> edge_regions(Eigen::Index k, Eigen::Index regions);

/// Each region row shifted to mean 0 and scaled to unit sample (n-1) deviation.
RegionTimeSeries zscore(const RegionTimeSeries& ts);

/// Residual of every region row after least-squares regression on the
/// across-region mean series (with intercept).
RegionTimeSeries global_signal_regression(const RegionTimeSeries& ts);

/// Ideal DFT band-pass: bins whose center frequency lies in [low_hz, high_hz]
/// are kept, all others zeroed.
RegionTimeSeries bandpass(const RegionTimeSeries& ts, double low_hz, double high_hz);

/// Averages z-scored voxel rows into parcels. `parcel_of[v]` is the region of
/// voxel row v; every region in [0, regions) must receive at least one voxel.
RegionTimeSeries average_parcels(const std::string& subject_id, const Eigen::MatrixXd& voxels,
                                 std::span<const int> parcel_of, Eigen::Index regions,
                                 double tr_seconds);

CorrelationMatrix correlation_matrix(const RegionTimeSeries& ts);

EdgeVector vectorize_upper(const CorrelationMatrix& c);

/// Symmetric matrix with unit diagonal rebuilt from an edge vector.
CorrelationMatrix rebuild_matrix(const EdgeVector& e);

GroupMatrix build_group_matrix(const std::vector<std::pair<std::string, EdgeVector>>& edge_vectors);

/// Original edge ids of the q(q-1)/2 edges with both endpoints in `regions`,
/// listed in canonical order over the sorted region set.
std::vector<Eigen::Index> restricted_edge_ids(std::span<const Eigen::Index> regions,
                                              Eigen::Index region_count);

/// Feature space reduced to edges inside `regions` (re-indexed over q regions).
GroupMatrix restrict_to_regions(const GroupMatrix& g, std::span<const Eigen::Index> regions);

}  // namespace connsig::connectome
