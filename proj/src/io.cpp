#include "connsig/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "connsig/error.hpp"

namespace connsig::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) fn(line, line_no);
    pos = end + 1;
  }
}

bool looks_numeric(std::string_view field) {
  field = trim(field);
  double v;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  return ec == std::errc() && ptr == field.data() + field.size();
}

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) fail_numeric("cannot format number");
  return std::string(buf, ptr);
}

double parse_double(std::string_view field, const std::string& loc) {
  field = trim(field);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    fail_data(loc + ": malformed number '" + std::string(field) + "'");
  return v;
}

std::int64_t parse_int(std::string_view field, const std::string& loc) {
  field = trim(field);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    fail_data(loc + ": malformed integer '" + std::string(field) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(sep, start);
    if (end == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail_data("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail_data("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Eigen::MatrixXd read_indexed_rows(const fs::path& path) {
  const std::string text = read_text(path);
  std::map<std::int64_t, std::vector<double>> rows;
  std::size_t width = 0;
  bool first = true;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    const auto fields = split(line, ',');
    if (first) {
      first = false;
      if (!looks_numeric(fields.front())) return;  // header row
    }
    if (fields.size() < 2) fail_data(where(path, no) + ": expected an index and values");
    const std::int64_t index = parse_int(fields.front(), where(path, no));
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k)
      values.push_back(parse_double(fields[k], where(path, no)));
    if (width == 0) width = values.size();
    if (values.size() != width)
      fail_data(where(path, no) + ": row has " + std::to_string(values.size()) +
                " values, expected " + std::to_string(width));
    if (!rows.emplace(index, std::move(values)).second)
      fail_data(where(path, no) + ": duplicate index " + std::to_string(index));
  });
  if (rows.empty()) fail_data("'" + path.string() + "' has no data rows");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  std::int64_t expect = 0;
  for (const auto& [index, values] : rows) {
    if (index != expect)
      fail_data("'" + path.string() + "': indices must be contiguous from 0; missing " +
                std::to_string(expect));
    for (std::size_t k = 0; k < width; ++k) out(index, static_cast<Eigen::Index>(k)) = values[k];
    ++expect;
  }
  return out;
}

connectome::RegionTimeSeries read_timeseries_csv(const fs::path& path, const std::string& subject_id,
                                                 double tr_seconds) {
  return connectome::RegionTimeSeries(subject_id, read_indexed_rows(path), tr_seconds);
}

connectome::Parcellation read_parcellation_tsv(const fs::path& path) {
  const std::string text = read_text(path);
  std::vector<connectome::Region> regions;
  bool first = true;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    const auto fields = split(line, '\t');
    if (first) {
      first = false;
      if (!looks_numeric(fields.front())) return;
    }
    if (fields.size() != 4)
      fail_data(where(path, no) + ": expected 4 tab-separated columns, got " +
                std::to_string(fields.size()));
    connectome::Region r;
    r.index = static_cast<int>(parse_int(fields[0], where(path, no)));
    r.area_number = static_cast<int>(parse_int(fields[1], where(path, no)));
    r.name = std::string(trim(fields[2]));
    r.group_label = std::string(trim(fields[3]));
    regions.push_back(std::move(r));
  });
  return connectome::Parcellation(std::move(regions));
}

std::vector<int> read_parcel_map_tsv(const fs::path& path) {
  const std::string text = read_text(path);
  std::map<std::int64_t, int> map;
  bool first = true;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    const auto fields = split(line, '\t');
    if (first) {
      first = false;
      if (!looks_numeric(fields.front())) return;
    }
    if (fields.size() != 2) fail_data(where(path, no) + ": expected voxel_index<TAB>region_index");
    const std::int64_t voxel = parse_int(fields[0], where(path, no));
    if (!map.emplace(voxel, static_cast<int>(parse_int(fields[1], where(path, no)))).second)
      fail_data(where(path, no) + ": voxel listed twice");
  });
  std::vector<int> out;
  std::int64_t expect = 0;
  for (const auto& [voxel, region] : map) {
    if (voxel != expect) fail_data("'" + path.string() + "': voxel indices must be contiguous from 0");
    out.push_back(region);
    ++expect;
  }
  return out;
}

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

std::string group_matrix_csv(const connectome::GroupMatrix& g) {
  std::string out = "subject_id";
  for (Eigen::Index k = 0; k < g.features(); ++k) out += ",e" + std::to_string(k);
  out += '\n';
  for (Eigen::Index r = 0; r < g.subjects(); ++r) {
    out += g.subject_ids()[static_cast<std::size_t>(r)];
    for (Eigen::Index k = 0; k < g.features(); ++k) {
      out += ',';
      out += format_double(g.values()(r, k));
    }
    out += '\n';
  }
  return out;
}

void write_group_matrix(const fs::path& csv, const connectome::GroupMatrix& g,
                        const std::string& source_session, const Json& extra) {
  Json side;
  side["region_count"] = g.region_count();
  side["edge_ordering"] = "row-major-upper";
  side["source_session"] = source_session;
  for (const auto& [key, value] : extra.items()) side[key] = value;
  write_text_atomic(csv, group_matrix_csv(g));
  write_text_atomic(sidecar_path(csv), side.dump(2) + "\n");
}

connectome::GroupMatrix read_group_matrix(const fs::path& csv) {
  const std::string text = read_text(csv);
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  bool header = true;
  for_each_line(text, [&](std::string_view line, std::size_t no) {
    const auto fields = split(line, ',');
    if (header) {
      header = false;
      if (trim(fields.front()) != "subject_id")
        fail_data(where(csv, no) + ": header must start with 'subject_id'");
      width = fields.size() - 1;
      for (std::size_t k = 1; k < fields.size(); ++k)
        if (trim(fields[k]) != "e" + std::to_string(k - 1))
          fail_data(where(csv, no) + ": expected column 'e" + std::to_string(k - 1) + "'");
      return;
    }
    if (fields.size() != width + 1)
      fail_data(where(csv, no) + ": row has " + std::to_string(fields.size() - 1) +
                " values, expected " + std::to_string(width));
    ids.emplace_back(trim(fields.front()));
    std::vector<double> values;
    values.reserve(width);
    for (std::size_t k = 1; k < fields.size(); ++k) values.push_back(parse_double(fields[k], where(csv, no)));
    rows.push_back(std::move(values));
  });
  if (rows.empty()) fail_data("'" + csv.string() + "' has no subjects");

  Eigen::Index regions = 0;
  const fs::path side = sidecar_path(csv);
  if (fs::exists(side)) {
    Json meta;
    try {
      meta = Json::parse(read_text(side));
    } catch (const Json::exception& e) {
      fail_data("'" + side.string() + "': " + e.what());
    }
    if (!meta.contains("region_count") || !meta["region_count"].is_number_integer())
      fail_data("'" + side.string() + "' lacks an integer region_count");
    if (meta.value("edge_ordering", "row-major-upper") != "row-major-upper")
      fail_data("'" + side.string() + "': unsupported edge ordering");
    regions = meta["region_count"].get<Eigen::Index>();
  } else {
    const double r = (1.0 + std::sqrt(1.0 + 8.0 * double(width))) / 2.0;
    regions = static_cast<Eigen::Index>(std::llround(r));
  }
  if (connectome::edge_count(regions) != static_cast<Eigen::Index>(width))
    fail_data("'" + csv.string() + "': " + std::to_string(width) + " columns do not match " +
              std::to_string(regions) + " regions");
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t k = 0; k < width; ++k)
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k];
  return connectome::GroupMatrix(std::move(ids), std::move(values), regions);
}

Json to_json(const TrialReport& r) {
  Json j;
  j["trials"] = r.trials;
  j["mean_accuracy"] = r.mean_accuracy;
  j["std_accuracy"] = r.std_accuracy;
  j["per_trial"] = r.per_trial;
  j["feature_budget"] = r.feature_budget;
  j["seed"] = r.seed;
  return j;
}

Json to_json(const SweepCurve& c) {
  Json j;
  j["budgets"] = c.budgets;
  j["accuracies"] = c.accuracies;
  return j;
}

std::string trial_report_csv(const TrialReport& r) {
  std::string out = "trial,accuracy\n";
  for (std::size_t i = 0; i < r.per_trial.size(); ++i)
    out += std::to_string(i) + "," + format_double(r.per_trial[i]) + "\n";
  return out;
}

std::string sweep_curve_csv(const SweepCurve& c) {
  std::string out = "budget,accuracy\n";
  for (std::size_t i = 0; i < c.budgets.size(); ++i)
    out += std::to_string(c.budgets[i]) + "," + format_double(c.accuracies[i]) + "\n";
  return out;
}

std::string enrichment_tsv(const std::vector<stats::EnrichmentResult>& rows) {
  std::string out = "item_id\tobserved\texpected\tlog10_p\tpassed\n";
  for (const auto& r : rows)
    out += std::to_string(r.item_id) + "\t" + std::to_string(r.observed) + "\t" +
           format_double(r.expected) + "\t" + format_double(r.log10_p) + "\t" +
           (r.passed ? "true" : "false") + "\n";
  return out;
}

}  // namespace connsig::io
