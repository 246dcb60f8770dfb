#include "connsig/connectome.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <unordered_map>

#include <unsupported/Eigen/FFT>

#include "connsig/error.hpp"

namespace connsig::connectome {

namespace {

// A row counts as constant when its spread is below this fraction of its scale.
constexpr double kConstantRel = 1e-12;

bool is_constant(const Eigen::Ref<const Eigen::RowVectorXd>& row, double centered_norm) {
  const double scale = std::max(1.0, row.cwiseAbs().maxCoeff()) * std::sqrt(double(row.size()));
  return centered_norm <= kConstantRel * scale;
}

}  // namespace

RegionTimeSeries::RegionTimeSeries(std::string subject_id, Eigen::MatrixXd signal,
                                   double tr_seconds)
    : subject_id_(std::move(subject_id)), signal_(std::move(signal)), tr_seconds_(tr_seconds) {
  if (signal_.rows() < 2) fail_data("time series of '" + subject_id_ + "' needs at least 2 regions");
  if (signal_.cols() < 3)
    fail_data("time series of '" + subject_id_ + "' needs at least 3 timepoints");
  if (!signal_.allFinite()) fail_data("time series of '" + subject_id_ + "' has non-finite values");
  if (!(tr_seconds_ > 0.0) || !std::isfinite(tr_seconds_))
    fail_usage("sampling interval must be positive");
}

Parcellation::Parcellation(std::vector<Region> regions,
                           std::optional<std::vector<std::string>> label_set)
    : regions_(std::move(regions)) {
  std::sort(regions_.begin(), regions_.end(),
            [](const Region& a, const Region& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    if (regions_[i].index != static_cast<int>(i))
      fail_data("parcellation indices must be contiguous from 0; missing or repeated index " +
                std::to_string(i));
    if (regions_[i].name.empty()) fail_data("region " + std::to_string(i) + " has an empty name");
  }
  if (label_set) {
    const std::set<std::string> allowed(label_set->begin(), label_set->end());
    for (const Region& r : regions_)
      if (!allowed.contains(r.group_label))
        fail_data("region " + std::to_string(r.index) + " has undeclared group label '" +
                  r.group_label + "'");
    labels_ = std::move(*label_set);
  } else {
    std::set<std::string> seen;
    for (const Region& r : regions_)
      if (seen.insert(r.group_label).second) labels_.push_back(r.group_label);
  }
}

const std::vector<Region>& reference_signature_regions() {
  static const std::vector<Region> table = {
      {0, 141, "Temporo-Parieto-Occipital Junction 3", "Parietal"},
      {1, 11, "Premotor Eye Field", "Premotor"},
      {2, 95, "Intraparietal dorsal", "Parietal"},
      {3, 85, "Area Anterior 9-46v", "Prefrontal"},
      {4, 86, "Area 9-46v", "Prefrontal"},
      {5, 97, "Inferior 6-8 transitional area", "Prefrontal"},
      {6, 146, "Intra Parietal 0", "Parietal"},
      {7, 48, "Lateral Intra Parietal Ventral", "Parietal"},
      {8, 89, "Area Anterior 10p", "Prefrontal"},
      {9, 87, "Area 9 anterior", "Prefrontal"},
      {10, 137, "PHT", "Lateral Temporal"},
      {11, 79, "IFJa", "Inferior Frontal"},
  };
  return table;
}

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  constexpr double tol = 1e-12;
  if (values_.rows() < 2 || values_.rows() != values_.cols())
    fail_data("correlation matrix must be square with at least 2 regions");
  if (!values_.allFinite()) fail_data("correlation matrix has non-finite entries");
  if ((values_ - values_.transpose()).cwiseAbs().maxCoeff() > tol)
    fail_data("correlation matrix is not symmetric");
  if ((values_.diagonal().array() - 1.0).abs().maxCoeff() > tol)
    fail_data("correlation matrix diagonal is not 1");
  if (values_.cwiseAbs().maxCoeff() > 1.0 + tol)
    fail_data("correlation matrix has entries outside [-1, 1]");
}

EdgeVector::EdgeVector(Eigen::VectorXd values, Eigen::Index region_count)
    : values_(std::move(values)), region_count_(region_count) {
  if (region_count_ < 2) fail_data("edge vector needs at least 2 regions");
  if (values_.size() != edge_count(region_count_))
    fail_data("edge vector length " + std::to_string(values_.size()) + " does not match " +
              std::to_string(region_count_) + " regions");
}

GroupMatrix::GroupMatrix(std::vector<std::string> subject_ids, Eigen::MatrixXd values,
                         Eigen::Index region_count)
    : subject_ids_(std::move(subject_ids)), values_(std::move(values)), region_count_(region_count) {
  if (subject_ids_.empty()) fail_data("group matrix needs at least one subject");
  if (static_cast<Eigen::Index>(subject_ids_.size()) != values_.rows())
    fail_data("group matrix row count does not match subject ids");
  if (region_count_ < 2 || values_.cols() != edge_count(region_count_))
    fail_data("group matrix feature count does not match region count");
  std::set<std::string> seen;
  for (const auto& id : subject_ids_)
    if (!seen.insert(id).second) fail_data("duplicate subject id '" + id + "'");
}

Eigen::Index GroupMatrix::row_of(const std::string& id) const {
  auto it = std::find(subject_ids_.begin(), subject_ids_.end(), id);
  if (it == subject_ids_.end()) fail_data("subject '" + id + "' not present in group matrix");
  return static_cast<Eigen::Index>(it - subject_ids_.begin());
}

GroupMatrix GroupMatrix::select_rows(std::span<const Eigen::Index> rows) const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ids.push_back(subject_ids_.at(static_cast<std::size_t>(rows[r])));
    out.row(static_cast<Eigen::Index>(r)) = values_.row(rows[r]);
  }
  return GroupMatrix(std::move(ids), std::move(out), region_count_);
}

Eigen::Index edge_count(Eigen::Index regions) { return regions * (regions - 1) / 2; }

Eigen::Index edge_index(Eigen::Index i, Eigen::Index j, Eigen::Index regions) {
  if (i < 0 || j >= regions || i >= j)
    fail_usage("edge needs 0 <= i < j < R; got (" + std::to_string(i) + ", " + std::to_string(j) +
               ") with R = " + std::to_string(regions));
  return i * (2 * regions - i - 1) / 2 + (j - i - 1);
}

std::pair<Eigen::Index, Eigen::Index> edge_regions(Eigen::Index k, Eigen::Index regions) {
  if (regions < 2 || k < 0 || k >= edge_count(regions))
    fail_usage("edge id " + std::to_string(k) + " out of range for R = " + std::to_string(regions));
  // Row i starts at i(2R - i - 1)/2; solve the quadratic, then fix rounding.
  const double b = 2.0 * static_cast<double>(regions) - 1.0;
  auto i = static_cast<Eigen::Index>(std::floor((b - std::sqrt(b * b - 8.0 * double(k))) / 2.0));
  i = std::clamp<Eigen::Index>(i, 0, regions - 2);
  auto start = [&](Eigen::Index r) { return r * (2 * regions - r - 1) / 2; };
  while (i > 0 && start(i) > k) --i;
  while (i + 1 < regions - 1 && start(i + 1) <= k) ++i;
  return {i, i + 1 + (k - start(i))};
}

RegionTimeSeries zscore(const RegionTimeSeries& ts) {
  const Eigen::MatrixXd& x = ts.signal();
  const double dof = static_cast<double>(x.cols() - 1);
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Eigen::RowVectorXd centered = x.row(r).array() - x.row(r).mean();
    const double norm = centered.norm();
    if (is_constant(x.row(r), norm))
      fail_numeric("subject '" + ts.subject_id() + "': region " + std::to_string(r) +
                   " has zero variance");
    out.row(r) = centered / (norm / std::sqrt(dof));
  }
  return RegionTimeSeries(ts.subject_id(), std::move(out), ts.tr_seconds());
}

RegionTimeSeries global_signal_regression(const RegionTimeSeries& ts) {
  const Eigen::MatrixXd& x = ts.signal();
  const Eigen::RowVectorXd global = x.colwise().mean();
  const Eigen::RowVectorXd g = global.array() - global.mean();
  const double gg = g.squaredNorm();
  if (is_constant(global, std::sqrt(gg)))
    fail_numeric("subject '" + ts.subject_id() + "': global mean series has zero variance");
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Eigen::RowVectorXd y = x.row(r).array() - x.row(r).mean();
    out.row(r) = y - (y.dot(g) / gg) * g;
  }
  return RegionTimeSeries(ts.subject_id(), std::move(out), ts.tr_seconds());
}

RegionTimeSeries bandpass(const RegionTimeSeries& ts, double low_hz, double high_hz) {
  const double nyquist = 1.0 / (2.0 * ts.tr_seconds());
  if (!(low_hz >= 0.0) || !(low_hz < high_hz) || high_hz > nyquist * (1.0 + 1e-12))
    fail_usage("band [" + std::to_string(low_hz) + ", " + std::to_string(high_hz) +
               "] Hz must satisfy 0 <= low < high <= Nyquist (" + std::to_string(nyquist) + " Hz)");
  const Eigen::Index t = ts.timepoints();
  const double span = static_cast<double>(t) * ts.tr_seconds();
  const double lo = low_hz * (1.0 - 1e-12);
  const double hi = high_hz * (1.0 + 1e-12);

  std::vector<char> keep(static_cast<std::size_t>(t));
  for (Eigen::Index k = 0; k < t; ++k) {
    const double f = static_cast<double>(std::min(k, t - k)) / span;
    keep[static_cast<std::size_t>(k)] = (f >= lo && f <= hi) ? 1 : 0;
  }

  Eigen::FFT<double> fft;
  std::vector<double> row(static_cast<std::size_t>(t));
  std::vector<std::complex<double>> spectrum;
  Eigen::MatrixXd out(ts.regions(), t);
  for (Eigen::Index r = 0; r < ts.regions(); ++r) {
    for (Eigen::Index k = 0; k < t; ++k) row[static_cast<std::size_t>(k)] = ts.signal()(r, k);
    fft.fwd(spectrum, row);
    for (std::size_t k = 0; k < spectrum.size(); ++k)
      if (!keep[k]) spectrum[k] = 0.0;
    fft.inv(row, spectrum);
    for (Eigen::Index k = 0; k < t; ++k) out(r, k) = row[static_cast<std::size_t>(k)];
  }
  return RegionTimeSeries(ts.subject_id(), std::move(out), ts.tr_seconds());
}

RegionTimeSeries average_parcels(const std::string& subject_id, const Eigen::MatrixXd& voxels,
                                 std::span<const int> parcel_of, Eigen::Index regions,
                                 double tr_seconds) {
  if (static_cast<Eigen::Index>(parcel_of.size()) != voxels.rows())
    fail_data("parcel map covers " + std::to_string(parcel_of.size()) + " voxels but '" +
              subject_id + "' has " + std::to_string(voxels.rows()));
  const RegionTimeSeries standardized = zscore(RegionTimeSeries(subject_id, voxels, tr_seconds));
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(regions, voxels.cols());
  std::vector<int> counts(static_cast<std::size_t>(regions), 0);
  for (Eigen::Index v = 0; v < voxels.rows(); ++v) {
    const int p = parcel_of[static_cast<std::size_t>(v)];
    if (p < 0 || p >= regions) fail_data("voxel " + std::to_string(v) + " maps outside the parcellation");
    sums.row(p) += standardized.signal().row(v);
    ++counts[static_cast<std::size_t>(p)];
  }
  for (Eigen::Index p = 0; p < regions; ++p) {
    if (counts[static_cast<std::size_t>(p)] == 0)
      fail_data("region " + std::to_string(p) + " has no voxels in the parcel map");
    sums.row(p) /= counts[static_cast<std::size_t>(p)];
  }
  return RegionTimeSeries(subject_id, std::move(sums), tr_seconds);
}

CorrelationMatrix correlation_matrix(const RegionTimeSeries& ts) {
  const Eigen::MatrixXd& x = ts.signal();
  Eigen::MatrixXd unit(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Eigen::RowVectorXd centered = x.row(r).array() - x.row(r).mean();
    const double norm = centered.norm();
    if (is_constant(x.row(r), norm))
      fail_numeric("subject '" + ts.subject_id() + "': region " + std::to_string(r) +
                   " is constant, correlation undefined");
    unit.row(r) = centered / norm;
  }
  Eigen::MatrixXd c = unit * unit.transpose();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    c(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < c.cols(); ++j) {
      const double v = std::clamp(c(i, j), -1.0, 1.0);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return CorrelationMatrix(std::move(c));
}

EdgeVector vectorize_upper(const CorrelationMatrix& c) {
  const Eigen::Index r = c.regions();
  Eigen::VectorXd v(edge_count(r));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = i + 1; j < r; ++j) v(k++) = c.values()(i, j);
  return EdgeVector(std::move(v), r);
}

CorrelationMatrix rebuild_matrix(const EdgeVector& e) {
  const Eigen::Index r = e.region_count();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(r, r);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = i + 1; j < r; ++j) {
      m(i, j) = e.values()(k);
      m(j, i) = e.values()(k);
      ++k;
    }
  return CorrelationMatrix(std::move(m));
}

GroupMatrix build_group_matrix(const std::vector<std::pair<std::string, EdgeVector>>& edge_vectors) {
  if (edge_vectors.empty()) fail_data("cannot build a group matrix from no subjects");
  const Eigen::Index r = edge_vectors.front().second.region_count();
  std::vector<std::string> ids;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(edge_vectors.size()), edge_count(r));
  for (std::size_t s = 0; s < edge_vectors.size(); ++s) {
    const auto& [id, ev] = edge_vectors[s];
    if (ev.region_count() != r)
      fail_data("subject '" + id + "' has " + std::to_string(ev.region_count()) +
                " regions, expected " + std::to_string(r));
    ids.push_back(id);
    values.row(static_cast<Eigen::Index>(s)) = ev.values().transpose();
  }
  return GroupMatrix(std::move(ids), std::move(values), r);
}

std::vector<Eigen::Index> restricted_edge_ids(std::span<const Eigen::Index> regions,
                                              Eigen::Index region_count) {
  std::vector<Eigen::Index> sorted(regions.begin(), regions.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    fail_usage("region list contains duplicates");
  if (sorted.size() < 2) fail_usage("region restriction needs at least 2 regions");
  if (sorted.front() < 0 || sorted.back() >= region_count)
    fail_usage("region index out of range for R = " + std::to_string(region_count));
  std::vector<Eigen::Index> ids;
  ids.reserve(sorted.size() * (sorted.size() - 1) / 2);
  for (std::size_t a = 0; a < sorted.size(); ++a)
    for (std::size_t b = a + 1; b < sorted.size(); ++b)
      ids.push_back(edge_index(sorted[a], sorted[b], region_count));
  return ids;
}

GroupMatrix restrict_to_regions(const GroupMatrix& g, std::span<const Eigen::Index> regions) {
  const std::vector<Eigen::Index> ids = restricted_edge_ids(regions, g.region_count());
  Eigen::MatrixXd out(g.subjects(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = g.values().col(ids[k]);
  return GroupMatrix(g.subject_ids(), std::move(out), static_cast<Eigen::Index>(regions.size()));
}

}  // namespace connsig::connectome
