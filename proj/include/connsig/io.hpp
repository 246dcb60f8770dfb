#pragma once

// File formats shared by the CLI and downstream tools.
//
//   time series CSV   one row per region: region index, then one value per timepoint
//   parcellation TSV  index, area_number, name, group_label (header optional)
//   parcel map TSV    voxel_index, region_index (header optional)
//   group matrix CSV  header "subject_id,e0,e1,...", one row per subject, plus a
//                     JSON sidecar {region_count, edge_ordering, source_session}
//
// Numbers are written in shortest round-trip form, so re-reading a file
// reproduces every double exactly.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "connsig/connectome.hpp"
#include "connsig/report.hpp"
#include "connsig/stats.hpp"

namespace connsig::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string format_double(double v);

/// Parses a whole field as a finite double; throws a data error naming `where`.
double parse_double(std::string_view field, const std::string& where);
std::int64_t parse_int(std::string_view field, const std::string& where);

std::vector<std::string_view> split(std::string_view line, char sep);

std::string read_text(const fs::path& path);

/// Writes through a temporary file in the same directory, then renames.
void write_text_atomic(const fs::path& path, std::string_view content);

/// 64-bit FNV-1a of the bytes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Rows are keyed by the index column and returned in index order (0..R-1).
Eigen::MatrixXd read_indexed_rows(const fs::path& path);

connectome::RegionTimeSeries read_timeseries_csv(const fs::path& path, const std::string& subject_id,
                                                 double tr_seconds);

connectome::Parcellation read_parcellation_tsv(const fs::path& path);

/// parcel_of[voxel] = region, indexed by voxel.
std::vector<int> read_parcel_map_tsv(const fs::path& path);

/// Sidecar path for a group matrix CSV: same stem, ".json".
fs::path sidecar_path(const fs::path& csv);

std::string group_matrix_csv(const connectome::GroupMatrix& g);

/// Writes `csv` and its sidecar. `extra` fields are appended to the sidecar.
void write_group_matrix(const fs::path& csv, const connectome::GroupMatrix& g,
                        const std::string& source_session, const Json& extra = Json::object());

/// Reads a group matrix; region_count comes from the sidecar when present,
/// otherwise it is inferred from the column count.
connectome::GroupMatrix read_group_matrix(const fs::path& csv);

Json to_json(const TrialReport& r);
Json to_json(const SweepCurve& c);
std::string trial_report_csv(const TrialReport& r);
std::string sweep_curve_csv(const SweepCurve& c);

/// TSV with columns item_id, observed, expected, log10_p, passed.
std::string enrichment_tsv(const std::vector<stats::EnrichmentResult>& rows);

}  // namespace connsig::io
