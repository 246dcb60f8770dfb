#include "connsig/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"

#include "connsig/connectome.hpp"
#include "connsig/error.hpp"
#include "connsig/fingerprint.hpp"
#include "connsig/io.hpp"
#include "connsig/rng.hpp"
#include "connsig/stats.hpp"
#include "connsig/synth.hpp"

namespace connsig::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;
using connectome::GroupMatrix;

constexpr const char* kManifest = "manifest.json";

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects inputs and outputs of one command and writes the manifest last.
class Run {
 public:
  Run(std::string command, fs::path out, std::uint64_t seed, bool record_time)
      : command_(std::move(command)), out_(std::move(out)), seed_(seed), record_time_(record_time) {
    if (record_time_) started_ = utc_now();
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) fail_data("cannot create output directory '" + out_.string() + "'");
  }

  Json config = Json::object();

  void input(const fs::path& path) {
    digests_[path.generic_string()] = io::hex64(io::fnv1a64(io::read_text(path)));
  }

  GroupMatrix group(const fs::path& path) {
    input(path);
    if (fs::exists(io::sidecar_path(path))) input(io::sidecar_path(path));
    return io::read_group_matrix(path);
  }

  const fs::path& out() const { return out_; }

  void write(const std::string& name, std::string_view content) {
    const fs::path p = out_ / name;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    io::write_text_atomic(p, content);
    outputs_[name] = io::hex64(io::fnv1a64(content));
  }

  void write_json(const std::string& name, Json body) {
    Json j;
    j["manifest"] = kManifest;
    for (auto& [k, v] : body.items()) j[k] = v;
    write(name, j.dump(2) + "\n");
  }

  /// Tabular reports carry the manifest reference as a leading comment line.
  void write_table(const std::string& name, const std::string& table) {
    write(name, std::string("# manifest: ") + kManifest + "\n" + table);
  }

  void group_out(const std::string& name, const GroupMatrix& g, const std::string& session) {
    const fs::path p = out_ / name;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    io::write_group_matrix(p, g, session, Json{{"manifest", kManifest}});
    outputs_[name] = io::hex64(io::fnv1a64(io::read_text(p)));
    const fs::path side = io::sidecar_path(p);
    outputs_[fs::relative(side, out_).generic_string()] = io::hex64(io::fnv1a64(io::read_text(side)));
  }

  void warn(const std::string& msg) {
    warnings_.push_back(msg);
    std::cerr << Json{{"warning", msg}}.dump() << "\n";
  }

  void finish() {
    Json m;
    m["command"] = command_;
    m["config"] = config;
    m["seed"] = seed_;
    m["tool_version"] = CONNSIG_VERSION;
    m["input_digests"] = Json::object();
    for (const auto& [k, v] : digests_) m["input_digests"][k] = v;
    m["outputs"] = Json::object();
    for (const auto& [k, v] : outputs_) m["outputs"][k] = v;
    m["warnings"] = warnings_;
    m["started"] = record_time_ ? Json(started_) : Json(nullptr);
    m["finished"] = record_time_ ? Json(utc_now()) : Json(nullptr);
    io::write_text_atomic(out_ / kManifest, m.dump(2) + "\n");
  }

 private:
  std::string command_;
  fs::path out_;
  std::uint64_t seed_;
  bool record_time_;
  std::string started_;
  std::map<std::string, std::string> digests_;
  std::map<std::string, std::string> outputs_;
  std::vector<std::string> warnings_;
};

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (auto f : io::split(text, ',')) out.push_back(io::parse_double(f, flag));
  return out;
}

std::vector<std::int64_t> parse_ints(const std::string& text, const std::string& flag) {
  std::vector<std::int64_t> out;
  for (auto f : io::split(text, ',')) out.push_back(io::parse_int(f, flag));
  return out;
}

std::size_t nonneg(std::int64_t v, const std::string& flag) {
  if (v < 0) fail_usage(flag + " must be non-negative");
  return static_cast<std::size_t>(v);
}

Json summary(const TrialReport& r) {
  Json j = io::to_json(r);
  j.erase("per_trial");
  return j;
}

std::string mean_pm_std(const TrialReport& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f +- %.2f", r.mean_accuracy, r.std_accuracy);
  return buf;
}

Json split_json(const fingerprint::SplitReports& s) {
  return Json{{"train", io::to_json(s.train)}, {"test", io::to_json(s.test)}};
}

std::optional<connectome::Parcellation> maybe_parcellation(Run& run, const std::string& path) {
  if (path.empty()) return std::nullopt;
  run.input(path);
  return io::read_parcellation_tsv(path);
}

std::string region_label(const std::optional<connectome::Parcellation>& p, Eigen::Index r) {
  if (!p || static_cast<std::size_t>(r) >= p->region_count()) return "region" + std::to_string(r);
  return p->at(static_cast<std::size_t>(r)).name;
}

// ---------------------------------------------------------------------------

struct Common {
  std::string out = ".";
  std::uint64_t seed = 1;
  bool record_time = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "base seed; trial i uses seed + i")->capture_default_str();
  sub->add_flag("--record-time", c.record_time, "store wall-clock timestamps in the manifest");
}

// ingest ---------------------------------------------------------------------

struct IngestOpts {
  std::string dir, parcellation, parcel_map, kind = "rest", gsr, bandpass;
  double tr = 0.72;
};

void cmd_ingest(const IngestOpts& o, const Common& c) {
  Run run("ingest", c.out, c.seed, c.record_time);
  if (o.kind != "rest" && o.kind != "task") fail_usage("--kind must be rest or task");
  const bool rest = o.kind == "rest";
  bool gsr = rest;
  if (!o.gsr.empty()) {
    if (o.gsr != "on" && o.gsr != "off") fail_usage("--gsr must be on or off");
    gsr = o.gsr == "on";
  }
  std::optional<std::pair<double, double>> band;
  if (rest) band = std::pair{0.008, 0.1};
  if (o.bandpass == "off") {
    band.reset();
  } else if (!o.bandpass.empty()) {
    const auto v = parse_doubles(o.bandpass, "--bandpass");
    if (v.size() != 2) fail_usage("--bandpass takes lo,hi or off");
    band = std::pair{v[0], v[1]};
  }

  run.input(o.parcellation);
  const connectome::Parcellation parc = io::read_parcellation_tsv(o.parcellation);
  const auto regions = static_cast<Eigen::Index>(parc.region_count());
  std::vector<int> parcel_of;
  if (!o.parcel_map.empty()) {
    run.input(o.parcel_map);
    parcel_of = io::read_parcel_map_tsv(o.parcel_map);
  }

  // <subject>_<session>.csv, grouped by session
  std::map<std::string, std::map<std::string, fs::path>> sessions;
  if (!fs::is_directory(o.dir)) fail_data("'" + o.dir + "' is not a directory");
  for (const auto& entry : fs::directory_iterator(o.dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    const std::string stem = entry.path().stem().string();
    const auto cut = stem.rfind('_');
    if (cut == std::string::npos || cut == 0 || cut + 1 == stem.size())
      fail_data("'" + entry.path().string() + "': file name must be <subject>_<session>.csv");
    sessions[stem.substr(cut + 1)][stem.substr(0, cut)] = entry.path();
  }
  if (sessions.empty()) fail_data("no time series files in '" + o.dir + "'");

  for (const auto& [session, files] : sessions) {
    std::vector<std::pair<std::string, connectome::EdgeVector>> edges;
    for (const auto& [subject, path] : files) {
      run.input(path);
      connectome::RegionTimeSeries ts = [&] {
        if (parcel_of.empty()) return io::read_timeseries_csv(path, subject, o.tr);
        return connectome::average_parcels(subject, io::read_indexed_rows(path), parcel_of, regions, o.tr);
      }();
      if (ts.regions() != regions)
        fail_data("'" + path.string() + "': " + std::to_string(ts.regions()) +
                  " regions, parcellation has " + std::to_string(regions));
      if (gsr) ts = connectome::global_signal_regression(ts);
      if (band) ts = connectome::bandpass(ts, band->first, band->second);
      ts = connectome::zscore(ts);
      edges.emplace_back(subject, connectome::vectorize_upper(connectome::correlation_matrix(ts)));
    }
    run.group_out(session + ".csv", connectome::build_group_matrix(edges), session);
  }

  run.config = {{"timeseries_dir", o.dir},
                {"parcellation", o.parcellation},
                {"parcel_map", o.parcel_map},
                {"kind", o.kind},
                {"gsr", gsr},
                {"bandpass", band ? Json{band->first, band->second} : Json(nullptr)},
                {"tr", o.tr}};
  run.finish();
}

// synth ----------------------------------------------------------------------

void cmd_synth(const synth::SynthConfig& cfg_in, const Common& c) {
  synth::SynthConfig cfg = cfg_in;
  cfg.seed = c.seed;
  Run run("synth", c.out, c.seed, c.record_time);
  const synth::SynthCohort cohort =
      cfg.n_tasks >= 2 ? synth::generate_task_cohort(cfg) : synth::generate_cohort(cfg);
  run.group_out("g1.csv", cohort.g1, "1");
  run.group_out("g2.csv", cohort.g2, "2");

  Json key;
  key["signature_edges"] = cohort.signature_edges;
  key["hub_regions"] = cohort.hub_regions;
  key["per_task_edges"] = Json::object();
  for (std::size_t k = 0; k < cohort.task_names.size(); ++k)
    key["per_task_edges"][cohort.task_names[k]] = cohort.task_edges[k];
  run.write_json("answer_key.json", key);

  for (const auto& s : cohort.task_groups) {
    run.group_out("tasks/" + s.subject_id + "_LR.csv", s.lr, "LR");
    run.group_out("tasks/" + s.subject_id + "_RL.csv", s.rl, "RL");
  }

  run.config = {{"n_subjects", cfg.n_subjects},
                {"n_regions", cfg.n_regions},
                {"n_signature_edges", cfg.n_signature_edges},
                {"signature_strength", cfg.signature_strength},
                {"common_strength", cfg.common_strength},
                {"session_noise", cfg.session_noise},
                {"n_tasks", cfg.n_tasks},
                {"task_strength", cfg.task_strength},
                {"n_task_edges", cfg.n_task_edges},
                {"signature_regions", cfg.signature_regions},
                {"common_jitter", cfg.common_jitter}};
  run.finish();
}

// fingerprint ------------------------------------------------------------------

struct PairOpts {
  std::string g1, g2;
  std::int64_t t = 100;
  double split = 0.8;
  std::int64_t trials = 1000;
};

void cmd_fingerprint(const PairOpts& o, std::int64_t null_trials, bool symmetric, const Common& c) {
  Run run("fingerprint", c.out, c.seed, c.record_time);
  const GroupMatrix g1 = run.group(o.g1);
  const GroupMatrix g2 = run.group(o.g2);
  const std::size_t t = nonneg(o.t, "--t");
  const std::size_t trials = nonneg(o.trials, "--trials");
  const std::size_t nulls = nonneg(null_trials, "--null-trials");

  fingerprint::SplitReports lev = fingerprint::split_trial(g1, g2, o.split, t, trials, c.seed);
  fingerprint::SplitReports full = fingerprint::full_matrix_trial(g1, g2, o.split, trials, c.seed);
  TrialReport rnd = fingerprint::random_feature_trial(g1, g2, t, trials, c.seed);
  if (symmetric) {
    // both matching directions, per-trial accuracies averaged
    auto avg = [](const TrialReport& a, const TrialReport& b) {
      std::vector<double> v(a.per_trial.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * (a.per_trial[i] + b.per_trial[i]);
      return make_trial_report(std::move(v), a.feature_budget, a.seed);
    };
    const auto lev2 = fingerprint::split_trial(g2, g1, o.split, t, trials, c.seed);
    const auto full2 = fingerprint::full_matrix_trial(g2, g1, o.split, trials, c.seed);
    const auto rnd2 = fingerprint::random_feature_trial(g2, g1, t, trials, c.seed);
    lev = {avg(lev.train, lev2.train), avg(lev.test, lev2.test)};
    full = {avg(full.train, full2.train), avg(full.test, full2.test)};
    rnd = avg(rnd, rnd2);
  }
  // The null stream is offset so it never reuses the reported random trials' seeds.
  const TrialReport null =
      fingerprint::random_feature_trial(g1, g2, t, nulls, derive_seed(c.seed, 0x6e756c6c));
  const stats::NullAccuracyDistribution p = stats::empirical_pvalue(lev.test.mean_accuracy, null);

  Json body;
  body["leverage"] = split_json(lev);
  body["random"] = io::to_json(rnd);
  body["full_matrix"] = split_json(full);
  body["null"] = summary(null);
  body["empirical_p"] = p.empirical_p;
  body["empirical_p_observed"] = p.observed;
  run.write_json("fingerprint.json", body);

  std::string csv = "trial,leverage_train,leverage_test,random,full_train,full_test\n";
  for (std::size_t i = 0; i < trials; ++i)
    csv += std::to_string(i) + "," + io::format_double(lev.train.per_trial[i]) + "," +
           io::format_double(lev.test.per_trial[i]) + "," + io::format_double(rnd.per_trial[i]) +
           "," + io::format_double(full.train.per_trial[i]) + "," +
           io::format_double(full.test.per_trial[i]) + "\n";
  run.write_table("fingerprint_trials.csv", csv);

  run.config = {{"g1", o.g1}, {"g2", o.g2}, {"t", t}, {"split", o.split}, {"trials", trials},
                {"null_trials", nulls}, {"symmetric", symmetric}};
  run.finish();
}

// sweep ----------------------------------------------------------------------

void cmd_sweep(const PairOpts& o, std::int64_t t_min, std::int64_t t_max, std::int64_t step,
               const Common& c) {
  Run run("sweep", c.out, c.seed, c.record_time);
  const GroupMatrix g1 = run.group(o.g1);
  const GroupMatrix g2 = run.group(o.g2);
  if (step <= 0) fail_usage("--step must be positive");
  if (t_min > t_max) fail_usage("--t-min exceeds --t-max");
  std::vector<std::size_t> budgets;
  for (std::int64_t t = t_min; t <= t_max; t += step) budgets.push_back(nonneg(t, "--t-min"));
  const std::size_t trials = nonneg(o.trials, "--trials");
  const SweepCurve curve = fingerprint::sweep_feature_count(g1, g2, budgets, trials, c.seed, o.split);

  const double best = *std::max_element(curve.accuracies.begin(), curve.accuracies.end());
  std::size_t plateau = curve.budgets.back();
  for (std::size_t i = 0; i < curve.budgets.size(); ++i)
    if (curve.accuracies[i] >= 0.95 * best) {
      plateau = curve.budgets[i];
      break;
    }
  run.write_table("sweep.csv", io::sweep_curve_csv(curve));
  Json body;
  body["curve"] = io::to_json(curve);
  body["max_accuracy"] = best;
  body["plateau_fraction"] = 0.95;
  body["plateau_t"] = plateau;
  run.write_json("sweep.json", body);

  run.config = {{"g1", o.g1}, {"g2", o.g2}, {"t_min", t_min}, {"t_max", t_max}, {"step", step},
                {"split", o.split}, {"trials", trials}};
  run.finish();
}

// enrich ---------------------------------------------------------------------

struct EnrichOpts {
  double feature_p = 1e-20, region_p = 1e-20;
  std::int64_t min_degree = 30;
  std::string parcellation;
};

void cmd_enrich(const PairOpts& o, const EnrichOpts& e, const Common& c) {
  Run run("enrich", c.out, c.seed, c.record_time);
  const GroupMatrix g1 = run.group(o.g1);
  const GroupMatrix g2 = run.group(o.g2);
  if (g1.features() != g2.features()) fail_data("group matrices have different feature counts");
  const auto parc = maybe_parcellation(run, e.parcellation);
  if (parc && static_cast<Eigen::Index>(parc->region_count()) != g1.region_count())
    fail_data("parcellation has " + std::to_string(parc->region_count()) + " regions, matrices have " +
              std::to_string(g1.region_count()));
  const std::size_t t = nonneg(o.t, "--t");
  const std::size_t trials = nonneg(o.trials, "--trials");
  if (trials == 0) fail_usage("trial count must be positive");
  if (e.min_degree < 0) fail_usage("--min-degree must be non-negative");
  const Eigen::Index regions = g1.region_count();

  std::vector<std::vector<std::int64_t>> sets;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto split = fingerprint::draw_split(g1.subject_ids(), o.split, c.seed + trial);
    const auto f = fingerprint::select_features(fingerprint::rows_for(g1, split.train), t);
    sets.emplace_back(f.begin(), f.end());
  }
  const auto features = static_cast<std::size_t>(g1.features());
  const stats::EnrichmentSet edges = stats::recurrent_features(sets, features, e.feature_p);
  const stats::EnrichmentSet regs = stats::region_enrichment(edges.passed, regions, e.region_p);
  const std::vector<std::int64_t> plot = stats::degree_filter(edges.passed, regions, e.min_degree);
  const std::vector<std::int64_t> degree = stats::edge_degrees(edges.passed, regions);

  std::string edge_tsv = "edge_id\tregion_i\tregion_j\tlabel_i\tlabel_j\tobserved\texpected\tlog10_p\n";
  for (const auto& r : edges.results) {
    if (!r.passed) continue;
    const auto [i, j] = connectome::edge_regions(r.item_id, regions);
    edge_tsv += std::to_string(r.item_id) + "\t" + std::to_string(i) + "\t" + std::to_string(j) +
                "\t" + region_label(parc, i) + "\t" + region_label(parc, j) + "\t" +
                std::to_string(r.observed) + "\t" + io::format_double(r.expected) + "\t" +
                io::format_double(r.log10_p) + "\n";
  }
  std::vector<stats::EnrichmentResult> passed_regions;
  for (const auto& r : regs.results)
    if (r.passed) passed_regions.push_back(r);
  std::string region_tsv = "region\tlabel\tgroup\tobserved\texpected\tlog10_p\n";
  for (const auto& r : passed_regions) {
    const std::string group =
        parc && static_cast<std::size_t>(r.item_id) < parc->region_count()
            ? parc->at(static_cast<std::size_t>(r.item_id)).group_label
            : "";
    region_tsv += std::to_string(r.item_id) + "\t" + region_label(parc, r.item_id) + "\t" + group +
                  "\t" + std::to_string(r.observed) + "\t" + io::format_double(r.expected) + "\t" +
                  io::format_double(r.log10_p) + "\n";
  }
  std::string plot_tsv = "edge_id\tregion_i\tregion_j\tlabel_i\tlabel_j\tdegree_i\tdegree_j\n";
  for (std::int64_t k : plot) {
    const auto [i, j] = connectome::edge_regions(k, regions);
    plot_tsv += std::to_string(k) + "\t" + std::to_string(i) + "\t" + std::to_string(j) + "\t" +
                region_label(parc, i) + "\t" + region_label(parc, j) + "\t" +
                std::to_string(degree[static_cast<std::size_t>(i)]) + "\t" +
                std::to_string(degree[static_cast<std::size_t>(j)]) + "\n";
  }
  if (edges.passed.empty()) run.warn("no edge passes the feature threshold; tables are empty");
  else if (passed_regions.empty()) run.warn("no region passes the region threshold");

  run.write_table("edges.tsv", edge_tsv);
  run.write_table("regions.tsv", region_tsv);
  run.write_table("plot_edges.tsv", plot_tsv);
  run.write_table("edge_enrichment.tsv", io::enrichment_tsv(edges.results));
  run.write_table("region_enrichment.tsv", io::enrichment_tsv(regs.results));
  Json body;
  body["edges"] = edges.passed;
  body["regions"] = regs.passed;
  body["plot_edges"] = plot;
  run.write_json("enrich.json", body);

  run.config = {{"g1", o.g1}, {"g2", o.g2}, {"t", t}, {"split", o.split}, {"trials", trials},
                {"feature_pvalue", e.feature_p}, {"region_pvalue", e.region_p},
                {"min_degree", e.min_degree}, {"parcellation", e.parcellation}};
  run.finish();
}

// restrict-eval ----------------------------------------------------------------

void cmd_restrict_eval(const PairOpts& o, const std::string& region_list, std::int64_t random_trials,
                       const Common& c) {
  Run run("restrict-eval", c.out, c.seed, c.record_time);
  const GroupMatrix g1 = run.group(o.g1);
  const GroupMatrix g2 = run.group(o.g2);
  std::vector<Eigen::Index> chosen;
  for (auto v : parse_ints(region_list, "--regions")) chosen.push_back(static_cast<Eigen::Index>(v));
  const Eigen::Index regions = g1.region_count();
  const auto ids = connectome::restricted_edge_ids(chosen, regions);
  const fingerprint::MatchResult m = fingerprint::match_groups(g1, g2, ids);

  const std::size_t trials = nonneg(random_trials, "--random-trials");
  std::vector<double> acc;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(c.seed + trial);
    const auto drawn = rng.sample_without_replacement(static_cast<std::size_t>(regions), chosen.size());
    const std::vector<Eigen::Index> rr(drawn.begin(), drawn.end());
    acc.push_back(fingerprint::match_groups(g1, g2, connectome::restricted_edge_ids(rr, regions))
                      .accuracy_percent);
  }
  Json body;
  body["regions"] = chosen;
  body["edges"] = ids.size();
  body["accuracy"] = m.accuracy_percent;
  body["ties"] = m.ties;
  body["diagnostics"] = m.diagnostics;
  if (trials > 0) {
    const TrialReport random = make_trial_report(std::move(acc), ids.size(), c.seed);
    body["random_regions"] = io::to_json(random);
    body["empirical_p"] = stats::empirical_pvalue(m.accuracy_percent, random).empirical_p;
  }
  run.write_json("restrict_eval.json", body);

  run.config = {{"g1", o.g1}, {"g2", o.g2}, {"regions", chosen}, {"random_trials", trials}};
  run.finish();
}

// baseline -------------------------------------------------------------------

void cmd_baseline(const PairOpts& o, const std::string& drops, std::int64_t keep, const Common& c) {
  Run run("baseline", c.out, c.seed, c.record_time);
  const GroupMatrix g1 = run.group(o.g1);
  const GroupMatrix g2 = run.group(o.g2);
  const std::size_t trials = nonneg(o.trials, "--trials");
  const std::size_t t = nonneg(o.t, "--t");
  std::optional<std::size_t> keep_n;
  if (keep > 0) keep_n = static_cast<std::size_t>(keep);

  struct Row {
    std::string label;
    fingerprint::SplitReports r;
  };
  std::vector<Row> rows;
  rows.push_back({"All", fingerprint::full_matrix_trial(g1, g2, o.split, trials, c.seed)});
  for (auto d : parse_ints(drops, "--drop")) {
    const std::size_t drop = nonneg(d, "--drop");
    const std::string last = keep_n ? std::to_string(*keep_n) : "end";
    rows.push_back({std::to_string(drop + 1) + ":" + last,
                    fingerprint::pca_denoise_trial(g1, g2, drop, keep_n, o.split, trials, c.seed)});
  }
  rows.push_back({"Principal Features Subspace",
                  fingerprint::split_trial(g1, g2, o.split, t, trials, c.seed)});

  std::string tsv = "principal_components\ttraining_accuracy\ttest_accuracy\n";
  Json table = Json::array();
  for (const Row& r : rows) {
    tsv += r.label + "\t" + mean_pm_std(r.r.train) + "\t" + mean_pm_std(r.r.test) + "\n";
    table.push_back(Json{{"principal_components", r.label},
                         {"train", summary(r.r.train)},
                         {"test", summary(r.r.test)}});
  }
  run.write_table("baseline.tsv", tsv);
  run.write_json("baseline.json", Json{{"rows", table}});

  run.config = {{"g1", o.g1}, {"g2", o.g2}, {"drop", drops}, {"keep", keep_n ? Json(*keep_n) : Json("all")},
                {"t", t}, {"split", o.split}, {"trials", trials}};
  run.finish();
}

// tasks ----------------------------------------------------------------------

void cmd_tasks(const std::string& dir, const PairOpts& o, double threshold, double task_threshold,
               const Common& c) {
  Run run("tasks", c.out, c.seed, c.record_time);
  if (!fs::is_directory(dir)) fail_data("'" + dir + "' is not a directory");
  std::map<std::string, std::pair<fs::path, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || name.size() < 8) continue;
    const std::string tail = name.substr(name.size() - 7);
    const std::string sid = name.substr(0, name.size() - 7);
    if (tail == "_LR.csv") found[sid].first = entry.path();
    if (tail == "_RL.csv") found[sid].second = entry.path();
  }
  std::vector<fingerprint::TaskSubject> subjects;
  for (const auto& [sid, paths] : found) {
    if (paths.first.empty() || paths.second.empty())
      fail_data("subject '" + sid + "' needs both _LR.csv and _RL.csv");
    subjects.push_back({sid, run.group(paths.first), run.group(paths.second)});
  }
  if (subjects.empty()) fail_data("no task group matrices in '" + dir + "'");

  const std::size_t t = nonneg(o.t, "--t");
  const std::size_t trials = nonneg(o.trials, "--trials");
  const auto agg = fingerprint::task_identification(subjects, o.split, t, threshold, trials, c.seed);
  const auto full = fingerprint::task_identification_full(subjects, o.split, trials, c.seed);
  if (agg.degenerate) run.warn("fewer than 2 tasks: task identification is vacuous");

  // Per task: leverage over training subjects' LR rows, recurrence across trials.
  const std::vector<std::string>& tasks = subjects.front().lr.subject_ids();
  std::vector<std::string> ids;
  for (const auto& s : subjects) ids.push_back(s.subject_id);
  const Eigen::Index e = subjects.front().lr.features();
  const Eigen::Index regions = subjects.front().lr.region_count();
  std::string tsv = "task\tedge_id\tregion_i\tregion_j\tobserved\texpected\tlog10_p\n";
  Json per_task = Json::object();
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(subjects.size()), e);
    for (std::size_t s = 0; s < subjects.size(); ++s)
      rows.row(static_cast<Eigen::Index>(s)) = subjects[s].lr.values().row(static_cast<Eigen::Index>(k));
    const GroupMatrix g(ids, std::move(rows), regions);
    std::vector<std::vector<std::int64_t>> sets;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const auto split = fingerprint::draw_split(ids, o.split, c.seed + trial);
      const auto f = fingerprint::select_features(fingerprint::rows_for(g, split.train), t);
      sets.emplace_back(f.begin(), f.end());
    }
    const auto enriched = stats::recurrent_features(sets, static_cast<std::size_t>(e), task_threshold);
    per_task[tasks[k]] = enriched.passed;
    for (const auto& r : enriched.results) {
      if (!r.passed) continue;
      const auto [i, j] = connectome::edge_regions(r.item_id, regions);
      tsv += tasks[k] + "\t" + std::to_string(r.item_id) + "\t" + std::to_string(i) + "\t" +
             std::to_string(j) + "\t" + std::to_string(r.observed) + "\t" +
             io::format_double(r.expected) + "\t" + io::format_double(r.log10_p) + "\n";
    }
  }

  Json body;
  body["tasks"] = tasks;
  body["degenerate"] = agg.degenerate;
  body["aggregated"] = io::to_json(agg.report);
  body["aggregated_sizes"] = agg.aggregated_sizes;
  body["last_aggregate"] = agg.last_aggregate;
  body["full_feature"] = io::to_json(full.report);
  body["per_task_edges"] = per_task;
  run.write_json("tasks.json", body);
  run.write_table("task_edges.tsv", tsv);

  run.config = {{"task_dir", dir}, {"t", t}, {"split", o.split}, {"trials", trials},
                {"feature_pvalue", threshold}, {"task_pvalue", task_threshold}};
  run.finish();
}

void print_error(ErrorKind kind, const std::string& msg) {
  static const char* names[] = {"", "usage", "data", "numeric"};
  const int code = static_cast<int>(kind);
  std::cerr << Json{{"error", {{"kind", names[code]}, {"exit_code", code}, {"message", msg}}}}.dump()
            << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"connsig: compact connectome fingerprints via leverage-score feature selection", "connsig"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CONNSIG_VERSION);
  Common common;

  IngestOpts ingest;
  auto* s_ingest = app.add_subcommand("ingest", "time series + parcellation -> group matrices");
  add_common(s_ingest, common);
  s_ingest->add_option("--timeseries-dir", ingest.dir, "directory of <subject>_<session>.csv")->required();
  s_ingest->add_option("--parcellation", ingest.parcellation, "parcellation TSV")->required();
  s_ingest->add_option("--parcel-map", ingest.parcel_map, "voxel -> region TSV; inputs are then voxel rows");
  s_ingest->add_option("--kind", ingest.kind, "rest or task (sets gsr/bandpass defaults)")->capture_default_str();
  s_ingest->add_option("--gsr", ingest.gsr, "on or off");
  s_ingest->add_option("--bandpass", ingest.bandpass, "lo,hi in Hz, or off");
  s_ingest->add_option("--tr", ingest.tr, "sampling interval, seconds")->capture_default_str();

  synth::SynthConfig cfg;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic two-session cohort");
  add_common(s_synth, common);
  s_synth->add_option("--subjects", cfg.n_subjects)->capture_default_str();
  s_synth->add_option("--regions", cfg.n_regions)->capture_default_str();
  s_synth->add_option("--signature-edges", cfg.n_signature_edges)->capture_default_str();
  s_synth->add_option("--signature-strength", cfg.signature_strength)->capture_default_str();
  s_synth->add_option("--common-strength", cfg.common_strength)->capture_default_str();
  s_synth->add_option("--noise", cfg.session_noise, "session noise sigma")->capture_default_str();
  s_synth->add_option("--tasks", cfg.n_tasks, "0 for rest only, else >= 2")->capture_default_str();
  s_synth->add_option("--task-strength", cfg.task_strength)->capture_default_str();
  s_synth->add_option("--task-edges", cfg.n_task_edges)->capture_default_str();
  s_synth->add_option("--signature-regions", cfg.signature_regions, "confine signature to this many hub regions")
      ->capture_default_str();
  s_synth->add_option("--common-jitter", cfg.common_jitter)->capture_default_str();

  auto pair_opts = [&](CLI::App* sub, PairOpts& o) {
    add_common(sub, common);
    sub->add_option("--g1", o.g1, "first-session group matrix CSV")->required();
    sub->add_option("--g2", o.g2, "second-session group matrix CSV")->required();
    sub->add_option("--split", o.split, "training fraction")->capture_default_str();
    sub->add_option("--trials", o.trials)->capture_default_str();
  };

  PairOpts fp;
  std::int64_t null_trials = 10000;
  bool symmetric = false;
  auto* s_fp = app.add_subcommand("fingerprint", "leverage vs random feature identification");
  pair_opts(s_fp, fp);
  s_fp->add_option("--t", fp.t, "feature budget")->capture_default_str();
  s_fp->add_option("--null-trials", null_trials)->capture_default_str();
  s_fp->add_flag("--symmetric", symmetric, "average both matching directions");

  PairOpts sw;
  std::int64_t t_min = 10, t_max = 200, step = 10;
  auto* s_sweep = app.add_subcommand("sweep", "test accuracy against feature budget");
  pair_opts(s_sweep, sw);
  s_sweep->add_option("--t-min", t_min)->capture_default_str();
  s_sweep->add_option("--t-max", t_max)->capture_default_str();
  s_sweep->add_option("--step", step)->capture_default_str();

  PairOpts en;
  EnrichOpts eo;
  auto* s_enrich = app.add_subcommand("enrich", "high-confidence edges and regions");
  pair_opts(s_enrich, en);
  s_enrich->add_option("--t", en.t)->capture_default_str();
  s_enrich->add_option("--feature-pvalue", eo.feature_p)->capture_default_str();
  s_enrich->add_option("--region-pvalue", eo.region_p)->capture_default_str();
  s_enrich->add_option("--min-degree", eo.min_degree)->capture_default_str();
  s_enrich->add_option("--parcellation", eo.parcellation, "region labels for the tables");

  PairOpts re;
  std::string region_list;
  std::int64_t random_trials = 1000;
  auto* s_restrict = app.add_subcommand("restrict-eval", "identification inside a region set");
  add_common(s_restrict, common);
  s_restrict->add_option("--g1", re.g1)->required();
  s_restrict->add_option("--g2", re.g2)->required();
  s_restrict->add_option("--regions", region_list, "comma-separated region indices")->required();
  s_restrict->add_option("--random-trials", random_trials)->capture_default_str();

  PairOpts bl;
  bl.split = 0.5;
  bl.trials = 100;
  std::string drops = "1,2,5,10,20";
  std::int64_t keep = 0;
  auto* s_base = app.add_subcommand("baseline", "principal-component denoising comparison");
  pair_opts(s_base, bl);
  s_base->add_option("--t", bl.t)->capture_default_str();
  s_base->add_option("--drop", drops, "comma-separated leading components to remove")->capture_default_str();
  s_base->add_option("--keep", keep, "last retained component; 0 = all")->capture_default_str();

  PairOpts tk;
  std::string task_dir;
  double task_p = 1e-50, task_edge_p = 1e-10;
  auto* s_tasks = app.add_subcommand("tasks", "task identification");
  add_common(s_tasks, common);
  s_tasks->add_option("--task-dir", task_dir, "directory of <subject>_LR.csv / <subject>_RL.csv")->required();
  s_tasks->add_option("--t", tk.t)->capture_default_str();
  s_tasks->add_option("--split", tk.split)->capture_default_str();
  s_tasks->add_option("--trials", tk.trials)->capture_default_str();
  s_tasks->add_option("--feature-pvalue", task_p, "recurrence threshold for the aggregate")->capture_default_str();
  s_tasks->add_option("--task-pvalue", task_edge_p, "recurrence threshold per task")->capture_default_str();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(std::move(rev));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(ErrorKind::usage, e.what());
    return 1;
  }

  try {
    if (*s_ingest) cmd_ingest(ingest, common);
    else if (*s_synth) cmd_synth(cfg, common);
    else if (*s_fp) cmd_fingerprint(fp, null_trials, symmetric, common);
    else if (*s_sweep) cmd_sweep(sw, t_min, t_max, step, common);
    else if (*s_enrich) cmd_enrich(en, eo, common);
    else if (*s_restrict) cmd_restrict_eval(re, region_list, random_trials, common);
    else if (*s_base) cmd_baseline(bl, drops, keep, common);
    else if (*s_tasks) cmd_tasks(task_dir, tk, task_p, task_edge_p, common);
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return static_cast<int>(e.kind());
  } catch (const Json::exception& e) {
    print_error(ErrorKind::data, e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(ErrorKind::numeric, e.what());
    return 3;
  }
  return 0;
}

}  // namespace connsig::cli
