// lgd: batch driver for the field -> measure -> catalog -> distance pipeline
// and its Monte Carlo experiments.  Every run writes its artifacts plus a
// manifest tying them to the exact configuration and seed; identical
// (subcommand, config, seed) runs produce byte-identical CSV output.
//
// Exit codes: 0 success (all statistical verdicts pass), 2 inconclusive
// verdict, 1 error or a demonstrated verdict failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lgdlab/io.hpp"

namespace fs = std::filesystem;
using namespace lgd;

namespace {

constexpr const char* kUsage = R"(usage: lgd <subcommand> [options]

subcommands:
  sample-field          draw one Gaussian field     -> field.bin field.json
  measure               field + cell masses         -> measure.bin measure.json
  distance              left-right crossing search  -> distance.json chain.csv
  experiment <name>     Monte Carlo experiment      -> samples.csv summary.json
  oracle-check          brute-force equivalences    -> oracle_report.txt

experiment names:
  quantiles delta-scan rsw logvar diameter chi efron-stein holder scaling

options:
  --config PATH         key = value configuration file (defaults otherwise)
  --seed N              override master_seed
  --samples N           override samples
  --scale-ladder LIST   override scales, e.g. 64,128,256
  --threads N           Monte Carlo worker threads (default 1)
  --out DIR             output directory (default $LGD_OUT_DIR, else .)

Every run also writes config.txt (the effective configuration; rerunning with
--config config.txt reproduces it) and manifest.json (version, config hash,
seed, timestamps, parameter echo, output list).

exit codes: 0 success / verdicts pass; 2 inconclusive verdict; 1 error or
verdict failure.
)";

struct Args {
  std::string subcommand;
  std::string experiment;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<int> threads;
  std::optional<std::vector<int>> ladder;
};

[[noreturn]] void usage_error(const std::string& msg) {
  std::fprintf(stderr, "lgd: %s\n%s", msg.c_str(), kUsage);
  std::exit(1);
}

Args parse_args(int argc, char** argv) {
  Args a;
  int i = 1;
  if (i >= argc) usage_error("missing subcommand");
  a.subcommand = argv[i++];
  if (a.subcommand == "-h" || a.subcommand == "--help") {
    std::fputs(kUsage, stdout);
    std::exit(0);
  }
  if (a.subcommand == "experiment") {
    if (i >= argc || argv[i][0] == '-') usage_error("experiment needs a name");
    a.experiment = argv[i++];
  }
  auto need_value = [&](const char* flag) -> std::string {
    if (i >= argc) usage_error(std::string(flag) + " needs a value");
    return argv[i++];
  };
  while (i < argc) {
    std::string flag = argv[i++];
    if (flag == "--config") {
      a.config_path = need_value("--config");
    } else if (flag == "--seed") {
      a.seed = lgd::detail::parse_u64("--seed", need_value("--seed"));
    } else if (flag == "--samples") {
      a.samples = lgd::detail::parse_int("--samples", need_value("--samples"));
    } else if (flag == "--threads") {
      int t = lgd::detail::parse_int("--threads", need_value("--threads"));
      if (t < 1) usage_error("--threads must be at least 1");
      a.threads = t;
    } else if (flag == "--scale-ladder") {
      std::vector<int> ladder;
      for (const std::string& tok : lgd::detail::split_list(need_value("--scale-ladder")))
        ladder.push_back(lgd::detail::parse_int("--scale-ladder", tok));
      a.ladder = std::move(ladder);
    } else if (flag == "--out") {
      a.out_dir = need_value("--out");
    } else {
      usage_error("unknown option '" + flag + "'");
    }
  }
  return a;
}

// Accumulates outputs and finalizes the manifest last, so a manifest always
// describes files that exist.
struct Run {
  fs::path dir;
  RunManifest man;

  Run(const Args& a, const ExperimentConfig& cfg, const std::string& loaded_hash) {
    std::string out = a.out_dir;
    if (out.empty())
      if (const char* env = std::getenv("LGD_OUT_DIR")) out = env;
    if (out.empty()) out = ".";
    dir = out;
    fs::create_directories(dir);
    man.subcommand = a.subcommand + (a.experiment.empty() ? "" : " " + a.experiment);
    man.config_path = a.config_path;
    man.config_hash = loaded_hash;
    man.master_seed = cfg.master_seed;
    man.threads = experiment_threads();
    man.started = iso8601_now();
    man.config = cfg;
    emit("config.txt", emit_config(cfg));
  }

  void emit(const std::string& name, std::string_view bytes) {
    write_file((dir / name).string(), bytes);
    man.outputs.push_back(name);
  }

  void finish() {
    man.finished = iso8601_now();
    man.outputs.push_back("manifest.json");
    write_file((dir / "manifest.json").string(), manifest_json(man));
  }
};

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::kPass: return 0;
    case Verdict::kFail: return 1;
    default: return 2;
  }
}

Verdict worst(Verdict a, Verdict b) {
  if (a == Verdict::kFail || b == Verdict::kFail) return Verdict::kFail;
  if (a == Verdict::kInconclusive || b == Verdict::kInconclusive) return Verdict::kInconclusive;
  return Verdict::kPass;
}

int run_sample_field(const Args& a, const ExperimentConfig& cfg, const std::string& hash) {
  Run run(a, cfg, hash);
  int scale = cfg.scales.front();
  GridSpec spec(scale, scale, cfg.cell_size, cfg.padding_factor);
  FieldSample f = sample_dgff(spec, cfg.master_seed);
  run.emit("field.json", field_sidecar_json(f));
  write_doubles_le((run.dir / "field.bin").string(), f.values);
  run.man.outputs.push_back("field.bin");
  run.finish();
  std::printf("field: %dx%d inner cells, %dx%d padded, seed %llu -> %s\n", scale, scale,
              spec.padded_w, spec.padded_h, (unsigned long long)cfg.master_seed,
              run.dir.string().c_str());
  return 0;
}

int run_measure(const Args& a, const ExperimentConfig& cfg, const std::string& hash) {
  Run run(a, cfg, hash);
  int scale = cfg.scales.front();
  GridSpec spec(scale, scale, cfg.cell_size, cfg.padding_factor);
  FieldSample f = sample_dgff(spec, cfg.master_seed);
  MeasureGrid m = cell_measures(f, cfg.gamma, cfg.epsilon());
  run.emit("measure.json", measure_sidecar_json(m));
  write_doubles_le((run.dir / "measure.bin").string(), m.cell_mass);
  run.man.outputs.push_back("measure.bin");
  run.finish();
  std::printf("measure: %dx%d cells, gamma %g, total mass %.6g -> %s\n", scale, scale, cfg.gamma,
              m.total_mass(), run.dir.string().c_str());
  return 0;
}

int run_distance(const Args& a, const ExperimentConfig& cfg, const std::string& hash) {
  Run run(a, cfg, hash);
  int scale = cfg.scales.front();
  double delta = cfg.deltas.front();
  double r_cap = cfg.r_cap_for(scale);
  int stride = cfg.stride_for(scale);
  GridSpec spec(scale, scale, cfg.cell_size, cfg.padding_factor);
  FieldSample f = sample_dgff(spec, cfg.master_seed);
  MeasureGrid m = cell_measures(f, cfg.gamma, cfg.epsilon());
  BallCatalog cat = build_catalog(m, stride, r_cap);
  DistanceResult r = crossing_distance(cat, delta, r_cap, CrossMode::kLR);

  JsonWriter w;
  w.begin_object();
  distance_result_json(w, r);
  w.key("parameters").begin_object();
  w.key("mode").value("lr-crossing");
  w.key("scale").value(scale);
  w.key("delta").value(delta);
  w.key("r_cap").value(r_cap);
  w.key("stride").value(stride);
  w.key("gamma").value(cfg.gamma);
  w.key("epsilon").value(cfg.epsilon());
  w.key("seed").value(cfg.master_seed);
  w.key("balls").value(cat.nballs());
  w.end_object();
  w.end_object();
  run.emit("distance.json", w.str());
  run.emit("chain.csv", chain_csv(cat, r.chain));
  run.finish();
  if (r.reached)
    std::printf("distance: value %.17g over %d balls -> %s\n", r.value, r.hops,
                run.dir.string().c_str());
  else
    std::printf("distance: unreachable at delta %.17g -> %s\n", delta, run.dir.string().c_str());
  return 0;
}

int run_experiment(const Args& a, const ExperimentConfig& cfg, const std::string& hash) {
  Run run(a, cfg, hash);
  Verdict verdict = Verdict::kPass;
  std::string summary;
  std::vector<SampleRecord> records;

  if (a.experiment == "quantiles") {
    QuantileTable t = estimate_quantiles(cfg);
    summary = summary_json(t);
    records = std::move(t.records);
    bool any_valid = false;
    for (const QuantileCell& c : t.cells) any_valid = any_valid || c.valid;
    verdict = any_valid ? Verdict::kPass : Verdict::kInconclusive;
  } else if (a.experiment == "delta-scan") {
    QDeltaScan s = q_delta_scan(cfg);
    summary = summary_json(s);
    records = std::move(s.records);
    if (!s.fit_ok)
      verdict = Verdict::kInconclusive;
    else if (s.monotone_violations > 0 || s.slope_ci.hi < 0)
      verdict = Verdict::kFail;
    else if (s.slope_ci.lo > 0)
      verdict = Verdict::kPass;
    else
      verdict = Verdict::kInconclusive;
  } else if (a.experiment == "rsw") {
    RswScan s = rsw_ratio(cfg);
    summary = summary_json(s);
    records = std::move(s.records);
    verdict = s.stable;
  } else if (a.experiment == "logvar") {
    LogVarScan s = logvar_scan(cfg);
    summary = summary_json(s);
    records = std::move(s.records);
    verdict = s.bounded_growth;
    for (const LogVarCell& c : s.cells)
      if (c.valid) verdict = worst(verdict, c.gap_within_bound);
  } else if (a.experiment == "diameter") {
    DiameterScan s = diameter_ratio(cfg);
    summary = summary_json(s);
    records = std::move(s.records);
    verdict = s.comparable;
  } else if (a.experiment == "chi") {
    ChiEstimate s = chi_estimate(cfg);
    summary = summary_json(s);
    records = std::move(s.records);
    verdict = s.banded;
  } else if (a.experiment == "efron-stein") {
    EsResult s = efron_stein_decomposition(cfg);
    summary = summary_json(s);
    records = std::move(s.records);
    verdict = s.holds;
  } else if (a.experiment == "holder") {
    HolderScan s = holder_scan(cfg);
    summary = summary_json(s);
    records = std::move(s.records);
    verdict = s.exponents_positive;
  } else if (a.experiment == "scaling") {
    ScalingCovariance s = scaling_covariance_test(cfg);
    summary = summary_json(s);
    records = std::move(s.records);
    verdict = s.matches;
  } else {
    usage_error("unknown experiment '" + a.experiment + "'");
  }

  run.emit("samples.csv", sample_records_csv(records));
  run.emit("summary.json", summary);
  run.man.notes.push_back({"verdict", to_string(verdict)});
  run.finish();
  std::printf("experiment %s: %zu sample rows, verdict %s -> %s\n", a.experiment.c_str(),
              records.size(), to_string(verdict), run.dir.string().c_str());
  return verdict_exit(verdict);
}

int run_oracle_check(const Args& a, const ExperimentConfig& cfg, const std::string& hash) {
  Run run(a, cfg, hash);
  std::string report;
  bool all_ok = true;
  auto line = [&](bool ok, const std::string& text) {
    report += ok ? "ok   " : "FAIL ";
    report += text;
    report += '\n';
    all_ok = all_ok && ok;
  };

  {  // Sampler covariance against the dense Green's function.
    GridSpec spec(4, 3, 1.0, 0.25);
    Eigen::MatrixXd want = exact_covariance(spec);
    Eigen::MatrixXd got = spectral_covariance(spec);
    double dev = (want - got).cwiseAbs().maxCoeff();
    line(dev <= 1e-10, "sampler covariance equals the dense Green oracle (max dev " +
                           fmt_double(dev) + ")");
  }
  {  // Vanishing-gamma measure reduces to cell areas.
    GridSpec spec(8, 8, 0.5, 1.0);
    FieldSample f = sample_dgff(spec, cfg.master_seed);
    MeasureGrid m = cell_measures(f, 1e-12, spec.cell);
    double worst = 0;
    double area = spec.cell * spec.cell;
    for (double v : m.cell_mass) worst = std::max(worst, std::abs(v - area) / area);
    line(worst <= 1e-9,
         "vanishing-gamma cell masses equal cell areas (max rel dev " + fmt_double(worst) + ")");
  }
  {  // Optimized searches against exhaustive label correction.
    int instances = 10, matched = 0, ordered = 0;
    for (int t = 0; t < instances; ++t) {
      std::uint64_t seed = derive_seed(cfg.master_seed, 0x0c1ecULL, t);
      GridSpec spec(8, 8, 1.0, 0.5);
      FieldSample f = sample_dgff(spec, seed);
      MeasureGrid m = cell_measures(f, cfg.gamma, spec.cell);
      BallCatalog cat = build_catalog(m, 1, 4.0 * spec.cell);
      GaussianStream pick(derive_seed(seed, 0xeedULL));
      Point x{(0.5 + (double)pick.index(8)) * spec.cell, (0.5 + (double)pick.index(8)) * spec.cell};
      Point y{(0.5 + (double)pick.index(8)) * spec.cell, (0.5 + (double)pick.index(8)) * spec.cell};
      double delta = m.total_mass() / (double)(1 + pick.index(64));
      DistanceResult fast = modified_distance(cat, delta, cat.r_cap, x, y);
      DistanceResult slow = brute_force_distance(cat, delta, x, y, true);
      DistanceResult cnt = count_distance(cat, delta, x, y);
      DistanceResult cnt_slow = brute_force_distance(cat, delta, x, y, false);
      bool same = fast.value == slow.value && fast.hops == slow.hops &&
                  cnt.value == cnt_slow.value && cnt.hops == cnt_slow.hops;
      matched += same;
      ordered += !(cnt.reached && fast.reached && fast.value > cnt.value + 1e-12);
    }
    line(matched == instances, "count and weighted searches match brute force on " +
                                   std::to_string(matched) + "/" + std::to_string(instances) +
                                   " random instances");
    line(ordered == instances, "weighted distance never exceeds the count distance (" +
                                   std::to_string(ordered) + "/" + std::to_string(instances) + ")");
  }
  {  // Unit-weight identity: delta above the total mass makes values hop counts.
    GridSpec spec(8, 8, 1.0, 0.5);
    FieldSample f = sample_dgff(spec, derive_seed(cfg.master_seed, 0x111ULL));
    MeasureGrid m = cell_measures(f, cfg.gamma, spec.cell);
    BallCatalog cat = build_catalog(m, 1, 4.0 * spec.cell);
    DistanceResult r = crossing_distance(cat, 2.0 * m.total_mass(), cat.r_cap, CrossMode::kLR);
    line(r.reached && r.value == (double)r.hops,
         "unit-weight crossing value equals its chain length (" + fmt_double(r.value) + ")");
  }

  run.emit("oracle_report.txt", report);
  run.finish();
  std::fputs(report.c_str(), stdout);
  std::printf("oracle-check: %s -> %s\n", all_ok ? "all equivalences hold" : "FAILURES above",
              run.dir.string().c_str());
  return all_ok ? 0 : 1;
}

int dispatch(int argc, char** argv) {
  Args a = parse_args(argc, argv);

  ExperimentConfig cfg;
  std::string hash;
  if (!a.config_path.empty()) {
    LoadedConfig lc = load_config_file(a.config_path);
    cfg = lc.config;
    hash = lc.hash;
  }
  if (a.seed) cfg.master_seed = *a.seed;
  if (a.samples) cfg.samples = *a.samples;
  if (a.ladder) cfg.scales = *a.ladder;
  cfg.validate();
  if (hash.empty()) hash = content_hash(emit_config(cfg));
  experiment_threads() = a.threads.value_or(1);

  if (a.subcommand == "sample-field") return run_sample_field(a, cfg, hash);
  if (a.subcommand == "measure") return run_measure(a, cfg, hash);
  if (a.subcommand == "distance") return run_distance(a, cfg, hash);
  if (a.subcommand == "experiment") return run_experiment(a, cfg, hash);
  if (a.subcommand == "oracle-check") return run_oracle_check(a, cfg, hash);
  usage_error("unknown subcommand '" + a.subcommand + "'");
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
