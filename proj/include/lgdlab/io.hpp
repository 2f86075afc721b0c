#pragma once
// Artifact plumbing: the flat "key = value" configuration format with
// byte-stable round trips, CSV and JSON emission, content hashing, and the
// run manifest that ties every output file to the exact inputs that made it.
//
// All floating-point text uses 17 significant digits, so parsing the printed
// form returns the original bits and identical runs produce byte-identical
// files.  JSON never contains inf/nan (they become null; CSV keeps the
// literal "inf"/"nan" spellings, which the loaders here accept back).

#include <bit>
#include <cerrno>
#include <climits>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "experiments.hpp"

namespace lgd {

inline constexpr const char* kToolVersion = "0.1.0";
// Bump when a CSV column set changes; recorded in every manifest.
inline constexpr int kCsvSchemaVersion = 1;

// %.17g: the shortest width guaranteed to round-trip an IEEE double.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// FNV-1a (64-bit): a stable, dependency-free content fingerprint.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string content_hash(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", (unsigned long long)fnv1a64(bytes));
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration files.
//
// Schema: one "key = value" per line; '#' starts a comment; blank lines are
// ignored; list values are comma-separated.  Keys are exactly the
// ExperimentConfig fields.  Unknown keys, duplicate keys, and malformed
// values are errors naming the key; a missing key keeps its default.

namespace detail {

using ConfigRef = std::variant<double ExperimentConfig::*, int ExperimentConfig::*,
                               std::uint64_t ExperimentConfig::*,
                               std::vector<double> ExperimentConfig::*,
                               std::vector<int> ExperimentConfig::*>;

struct ConfigKey {
  const char* name;
  ConfigRef ref;
};

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"gamma", &ExperimentConfig::gamma},
      {"scales", &ExperimentConfig::scales},
      {"cell_size", &ExperimentConfig::cell_size},
      {"padding_factor", &ExperimentConfig::padding_factor},
      {"epsilon_cells", &ExperimentConfig::epsilon_cells},
      {"deltas", &ExperimentConfig::deltas},
      {"r_cap_fraction", &ExperimentConfig::r_cap_fraction},
      {"stride", &ExperimentConfig::stride},
      {"stride_ref", &ExperimentConfig::stride_ref},
      {"samples", &ExperimentConfig::samples},
      {"percentiles", &ExperimentConfig::percentiles},
      {"p_low", &ExperimentConfig::p_low},
      {"p_high", &ExperimentConfig::p_high},
      {"rsw_percentile", &ExperimentConfig::rsw_percentile},
      {"crossing_aspect", &ExperimentConfig::crossing_aspect},
      {"holder_fractions", &ExperimentConfig::holder_fractions},
      {"diameter_points", &ExperimentConfig::diameter_points},
      {"diameter_samples", &ExperimentConfig::diameter_samples},
      {"block_ratio", &ExperimentConfig::block_ratio},
      {"es_padding_factor", &ExperimentConfig::es_padding_factor},
      {"es_margin_blocks", &ExperimentConfig::es_margin_blocks},
      {"bootstrap_reps", &ExperimentConfig::bootstrap_reps},
      {"master_seed", &ExperimentConfig::master_seed},
  };
  return keys;
}

inline std::string trim(std::string_view s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

[[noreturn]] inline void bad_value(const std::string& key, const std::string& tok,
                                   const char* what) {
  throw std::invalid_argument("config: " + key + ": '" + tok + "' is not " + what);
}

inline double parse_double(const std::string& key, const std::string& tok) {
  if (tok.empty()) bad_value(key, tok, "a number");
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || errno == ERANGE) bad_value(key, tok, "a number");
  return v;
}

inline int parse_int(const std::string& key, const std::string& tok) {
  if (tok.empty()) bad_value(key, tok, "an integer");
  errno = 0;
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size() || errno == ERANGE || v < INT_MIN || v > INT_MAX)
    bad_value(key, tok, "an integer");
  return (int)v;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& tok) {
  if (tok.empty() || tok[0] == '-') bad_value(key, tok, "a non-negative integer");
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
  if (end != tok.c_str() + tok.size() || errno == ERANGE)
    bad_value(key, tok, "a non-negative integer");
  return (std::uint64_t)v;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    size_t c = s.find(',', pos);
    out.push_back(trim(s.substr(pos, c - pos)));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  return out;
}

inline void assign_key(ExperimentConfig& cfg, const std::string& key, const std::string& val,
                       const ConfigRef& ref) {
  std::visit(
      [&](auto member) {
        using T = std::remove_cvref_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, double>) {
          cfg.*member = parse_double(key, val);
        } else if constexpr (std::is_same_v<T, int>) {
          cfg.*member = parse_int(key, val);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          cfg.*member = parse_u64(key, val);
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          T list;
          for (const std::string& tok : split_list(val)) list.push_back(parse_double(key, tok));
          cfg.*member = std::move(list);
        } else {
          T list;
          for (const std::string& tok : split_list(val)) list.push_back(parse_int(key, tok));
          cfg.*member = std::move(list);
        }
      },
      ref);
}

}  // namespace detail

// Parse configuration text.  Defaults fill missing keys; the result is
// validated (every validation message names its field).
inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::vector<std::string> seen;
  size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (size_t h = raw.find('#'); h != std::string_view::npos) raw = raw.substr(0, h);
    std::string line = detail::trim(raw);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    std::string key = detail::trim(std::string_view(line).substr(0, eq));
    std::string val = detail::trim(std::string_view(line).substr(eq + 1));
    const detail::ConfigKey* match = nullptr;
    for (const detail::ConfigKey& k : detail::config_keys())
      if (key == k.name) match = &k;
    if (!match) throw std::invalid_argument("config: unknown key '" + key + "'");
    for (const std::string& s : seen)
      if (s == key) throw std::invalid_argument("config: duplicate key '" + key + "'");
    seen.push_back(key);
    detail::assign_key(cfg, key, val, match->ref);
  }
  cfg.validate();
  return cfg;
}

// The canonical emitted form: every key, table order, lists comma-joined.
// Reloading reproduces the config bit for bit, and re-emitting reproduces
// the bytes.
inline std::string emit_config(const ExperimentConfig& cfg) {
  std::string out = "# lgd configuration (key = value; lists comma-separated)\n";
  for (const detail::ConfigKey& k : detail::config_keys()) {
    out += k.name;
    out += " = ";
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, double>) {
            out += fmt_double(cfg.*member);
          } else if constexpr (std::is_same_v<T, int>) {
            out += std::to_string(cfg.*member);
          } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            out += std::to_string(cfg.*member);
          } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            for (size_t i = 0; i < (cfg.*member).size(); ++i) {
              if (i) out += ", ";
              out += fmt_double((cfg.*member)[i]);
            }
          } else {
            for (size_t i = 0; i < (cfg.*member).size(); ++i) {
              if (i) out += ", ";
              out += std::to_string((cfg.*member)[i]);
            }
          }
        },
        k.ref);
    out += '\n';
  }
  return out;
}

struct LoadedConfig {
  ExperimentConfig config;
  std::string bytes;  // file content exactly as read
  std::string hash;   // content_hash(bytes)
  std::string path;
};

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("io: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("io: cannot open '" + path + "' for writing");
  os.write(bytes.data(), (std::streamsize)bytes.size());
  if (!os) throw std::runtime_error("io: short write to '" + path + "'");
}

inline LoadedConfig load_config_file(const std::string& path) {
  LoadedConfig lc;
  lc.path = path;
  lc.bytes = read_file(path);
  lc.hash = content_hash(lc.bytes);
  lc.config = parse_config(lc.bytes);
  return lc;
}

inline ExperimentConfig load_config(const std::string& path) {
  return load_config_file(path).config;
}

// ---------------------------------------------------------------------------
// JSON emission.  A push writer with comma bookkeeping; strings are escaped,
// non-finite numbers become null.

class JsonWriter {
 public:
  JsonWriter& begin_object() {
    elem();
    out_ += '{';
    first_.push_back(true);
    return *this;
  }
  JsonWriter& end_object() {
    out_ += '}';
    first_.pop_back();
    return *this;
  }
  JsonWriter& begin_array() {
    elem();
    out_ += '[';
    first_.push_back(true);
    return *this;
  }
  JsonWriter& end_array() {
    out_ += ']';
    first_.pop_back();
    return *this;
  }
  JsonWriter& key(std::string_view k) {
    elem();
    quote(k);
    out_ += ':';
    pending_ = true;
    return *this;
  }
  JsonWriter& value(double x) {
    elem();
    if (std::isfinite(x))
      out_ += fmt_double(x);
    else
      out_ += "null";
    return *this;
  }
  JsonWriter& value(std::int64_t v) {
    elem();
    out_ += std::to_string(v);
    return *this;
  }
  JsonWriter& value(int v) { return value((std::int64_t)v); }
  JsonWriter& value(std::uint64_t v) {
    elem();
    out_ += std::to_string(v);
    return *this;
  }
  JsonWriter& value(bool b) {
    elem();
    out_ += b ? "true" : "false";
    return *this;
  }
  JsonWriter& value(std::string_view s) {
    elem();
    quote(s);
    return *this;
  }
  JsonWriter& value(const char* s) { return value(std::string_view(s)); }
  JsonWriter& null_value() {
    elem();
    out_ += "null";
    return *this;
  }

  const std::string& str() const { return out_; }

 private:
  void elem() {
    if (pending_) {
      pending_ = false;
      return;
    }
    if (!first_.empty()) {
      if (!first_.back()) out_ += ',';
      first_.back() = false;
    }
  }
  void quote(std::string_view s) {
    out_ += '"';
    for (char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\r': out_ += "\\r"; break;
        case '\t': out_ += "\\t"; break;
        default:
          if ((unsigned char)c < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", c);
            out_ += buf;
          } else {
            out_ += c;
          }
      }
    }
    out_ += '"';
  }
  std::string out_;
  std::vector<bool> first_;
  bool pending_ = false;
};

inline void ci_json(JsonWriter& w, const CI& ci) {
  w.begin_object().key("lo").value(ci.lo).key("hi").value(ci.hi).end_object();
}

inline void config_json(JsonWriter& w, const ExperimentConfig& cfg) {
  w.begin_object();
  for (const detail::ConfigKey& k : detail::config_keys()) {
    w.key(k.name);
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, double>) {
            w.value(cfg.*member);
          } else if constexpr (std::is_same_v<T, int>) {
            w.value(cfg.*member);
          } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            w.value(cfg.*member);
          } else {
            w.begin_array();
            for (const auto& x : cfg.*member) w.value(x);
            w.end_array();
          }
        },
        k.ref);
  }
  w.end_object();
}

inline void grid_spec_json(JsonWriter& w, const GridSpec& s) {
  w.begin_object();
  w.key("inner_w").value(s.inner_w).key("inner_h").value(s.inner_h);
  w.key("cell").value(s.cell).key("padding_factor").value(s.padding_factor);
  w.key("pad_x").value(s.pad_x).key("pad_y").value(s.pad_y);
  w.key("padded_w").value(s.padded_w).key("padded_h").value(s.padded_h);
  w.end_object();
}

// ---------------------------------------------------------------------------
// Flat binary exports: row-major 64-bit floats, little-endian, with a JSON
// sidecar describing exactly what the bytes are.

inline void write_doubles_le(const std::string& path, const std::vector<double>& v) {
  static_assert(std::endian::native == std::endian::little,
                "binary export assumes a little-endian host");
  write_file(path, std::string_view(reinterpret_cast<const char*>(v.data()),
                                    v.size() * sizeof(double)));
}

// Vertex values over the padded grid: (padded_w+1) * (padded_h+1) doubles,
// row-major (x fastest).
inline std::string field_sidecar_json(const FieldSample& f) {
  JsonWriter w;
  w.begin_object();
  w.key("layout").value("vertices row-major, float64 little-endian");
  w.key("vertices_x").value(f.spec.padded_w + 1);
  w.key("vertices_y").value(f.spec.padded_h + 1);
  w.key("grid");
  grid_spec_json(w, f.spec);
  w.key("calibration").value(f.calibration);
  w.key("seed").value(f.seed);
  w.end_object();
  return w.str();
}

// Per-cell masses over the inner grid: inner_w * inner_h doubles, row-major.
inline std::string measure_sidecar_json(const MeasureGrid& m) {
  JsonWriter w;
  w.begin_object();
  w.key("layout").value("inner cells row-major, float64 little-endian");
  w.key("cells_x").value(m.spec.inner_w);
  w.key("cells_y").value(m.spec.inner_h);
  w.key("grid");
  grid_spec_json(w, m.spec);
  w.key("gamma").value(m.gamma);
  w.key("epsilon").value(m.epsilon);
  w.key("field_seed").value(m.field_seed);
  w.key("total_mass").value(m.total);
  w.end_object();
  return w.str();
}

// ---------------------------------------------------------------------------
// CSV emission (schema version kCsvSchemaVersion).

// One row per Monte Carlo value.  "value" is inf for unreachable draws;
// "reached" is 0/1; "aux" is kind-specific (pair separation, block id, ...).
inline std::string sample_records_csv(const std::vector<SampleRecord>& recs) {
  std::string out = "sample,seed,scale,grid_w,grid_h,delta,r_cap,stride,kind,aux,value,hops,reached\n";
  for (const SampleRecord& r : recs) {
    out += std::to_string(r.sample);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += std::to_string(r.scale);
    out += ',';
    out += std::to_string(r.grid_w);
    out += ',';
    out += std::to_string(r.grid_h);
    out += ',';
    out += fmt_double(r.delta);
    out += ',';
    out += fmt_double(r.r_cap);
    out += ',';
    out += std::to_string(r.stride);
    out += ',';
    out += r.kind;
    out += ',';
    out += fmt_double(r.aux);
    out += ',';
    out += fmt_double(r.value);
    out += ',';
    out += std::to_string(r.hops);
    out += ',';
    out += r.reached ? '1' : '0';
    out += '\n';
  }
  return out;
}

// A geodesic chain for plotting, one ball per row.
inline std::string chain_csv(const BallCatalog& cat, const std::vector<int>& chain) {
  std::string out = "center_x,center_y,radius,mass\n";
  for (int b : chain) {
    Ball ball = cat.ball(b);
    out += fmt_double(ball.center.x);
    out += ',';
    out += fmt_double(ball.center.y);
    out += ',';
    out += fmt_double(ball.radius);
    out += ',';
    out += fmt_double(ball.mass);
    out += '\n';
  }
  return out;
}

// Core of the distance-result contract: value, count, chain, reached.  The
// caller opens the object and appends its own "parameters" member.
inline void distance_result_json(JsonWriter& w, const DistanceResult& r) {
  w.key("value").value(r.value);
  w.key("count").value(r.hops);
  w.key("chain").begin_array();
  for (int b : r.chain) w.value(b);
  w.end_array();
  w.key("reached").value(r.reached);
}

// ---------------------------------------------------------------------------
// JSON summaries, one per experiment: the aggregate tables, intervals, and
// verdicts (the raw draws go to CSV).

namespace detail {

inline void ci_list_json(JsonWriter& w, const char* name, const std::vector<double>& v,
                         const std::vector<CI>& cis) {
  w.key(name).begin_array();
  for (double x : v) w.value(x);
  w.end_array();
  w.key(std::string(name) + "_ci").begin_array();
  for (const CI& ci : cis) ci_json(w, ci);
  w.end_array();
}

inline void fit_json(JsonWriter& w, const LinearFit& f) {
  w.begin_object();
  w.key("slope").value(f.slope);
  w.key("intercept").value(f.intercept);
  w.key("slope_se").value(f.slope_se);
  w.key("slope_ci");
  ci_json(w, f.slope_ci);
  w.key("n").value(f.n);
  w.end_object();
}

}  // namespace detail

inline std::string summary_json(const QuantileTable& t) {
  JsonWriter w;
  w.begin_object();
  w.key("experiment").value("quantiles");
  w.key("percentiles").begin_array();
  for (double p : t.percentiles) w.value(p);
  w.end_array();
  w.key("deltas").begin_array();
  for (double d : t.deltas) w.value(d);
  w.end_array();
  w.key("scales").begin_array();
  for (int s : t.scales) w.value(s);
  w.end_array();
  w.key("cells").begin_array();
  for (const QuantileCell& c : t.cells) {
    w.begin_object();
    w.key("scale").value(c.scale).key("delta").value(c.delta);
    w.key("samples_total").value(c.samples_total);
    w.key("lr_used").value(c.lr_used).key("easy_used").value(c.easy_used);
    w.key("hard_used").value(c.hard_used);
    w.key("lr_unreachable").value(c.lr_unreachable);
    w.key("easy_unreachable").value(c.easy_unreachable);
    w.key("hard_unreachable").value(c.hard_unreachable);
    w.key("valid").value(c.valid);
    detail::ci_list_json(w, "theta_lr", c.theta_lr, c.theta_lr_ci);
    detail::ci_list_json(w, "theta_easy", c.theta_easy, c.theta_easy_ci);
    detail::ci_list_json(w, "theta_hard", c.theta_hard, c.theta_hard_ci);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

inline std::string summary_json(const QDeltaScan& s) {
  JsonWriter w;
  w.begin_object();
  w.key("experiment").value("delta-scan");
  w.key("scale").value(s.scale);
  w.key("deltas").begin_array();
  for (double d : s.deltas) w.value(d);
  w.end_array();
  detail::ci_list_json(w, "q_median", s.q_median, s.q_ci);
  w.key("valid").begin_array();
  for (bool v : s.valid) w.value(v);
  w.end_array();
  w.key("monotone_violations").value(s.monotone_violations);
  w.key("fit_ok").value(s.fit_ok);
  w.key("fit");
  detail::fit_json(w, s.fit);
  w.key("slope_ci");
  ci_json(w, s.slope_ci);
  w.end_object();
  return w.str();
}

inline std::string summary_json(const RswScan& s) {
  JsonWriter w;
  w.begin_object();
  w.key("experiment").value("rsw");
  w.key("percentile").value(s.percentile);
  w.key("cells").begin_array();
  for (const RswCell& c : s.cells) {
    w.begin_object();
    w.key("scale").value(c.scale);
    w.key("hard_q").value(c.hard_q).key("easy_q").value(c.easy_q);
    w.key("ratio").value(c.ratio);
    w.key("ratio_ci");
    ci_json(w, c.ratio_ci);
    w.key("violation_rate").value(c.violation_rate);
    w.key("pairs").value(c.pairs);
    w.key("valid").value(c.valid);
    w.end_object();
  }
  w.end_array();
  w.key("stability").value(s.stability);
  w.key("stability_ci");
  ci_json(w, s.stability_ci);
  w.key("stability_ok").value(s.stability_ok);
  w.key("target").value(kRswStabilityTarget);
  w.key("verdict").value(to_string(s.stable));
  w.end_object();
  return w.str();
}

inline std::string summary_json(const LogVarScan& s) {
  JsonWriter w;
  w.begin_object();
  w.key("experiment").value("logvar");
  w.key("p_low").value(s.p_low).key("p_high").value(s.p_high);
  w.key("cells").begin_array();
  for (const LogVarCell& c : s.cells) {
    w.begin_object();
    w.key("scale").value(c.scale);
    w.key("used").value(c.used);
    w.key("unreachable_rate").value(c.unreachable_rate);
    w.key("valid").value(c.valid);
    w.key("var").value(c.var);
    w.key("var_ci");
    ci_json(w, c.var_ci);
    w.key("gap_ratio").value(c.gap_ratio);
    w.key("gap_ci");
    ci_json(w, c.gap_ci);
    w.key("bound_at_var_lo").value(c.bound_at_var_lo);
    w.key("bound_at_var_hi").value(c.bound_at_var_hi);
    w.key("gap_within_bound").value(to_string(c.gap_within_bound));
    w.end_object();
  }
  w.end_array();
  w.key("growth").value(s.growth);
  w.key("growth_ci");
  ci_json(w, s.growth_ci);
  w.key("growth_ok").value(s.growth_ok);
  w.key("target").value(kLogVarGrowthTarget);
  w.key("verdict").value(to_string(s.bounded_growth));
  w.end_object();
  return w.str();
}

inline std::string summary_json(const DiameterScan& s) {
  JsonWriter w;
  w.begin_object();
  w.key("experiment").value("diameter");
  w.key("cells").begin_array();
  for (const DiameterCell& c : s.cells) {
    w.begin_object();
    w.key("scale").value(c.scale);
    w.key("samples").value(c.samples).key("used").value(c.used);
    w.key("unreachable_rate").value(c.unreachable_rate);
    w.key("valid").value(c.valid);
    w.key("median_lr").value(c.median_lr);
    w.key("p90_ratio").value(c.p90_ratio);
    w.key("p90_ci");
    ci_json(w, c.p90_ci);
    w.key("ci_defined").value(c.ci_defined);
    w.end_object();
  }
  w.end_array();
  w.key("spread").value(s.spread);
  w.key("spread_ci");
  ci_json(w, s.spread_ci);
  w.key("spread_ok").value(s.spread_ok);
  w.key("target").value(kDiameterSpreadTarget);
  w.key("verdict").value(to_string(s.comparable));
  w.end_object();
  return w.str();
}

inline std::string summary_json(const ChiEstimate& s) {
  JsonWriter w;
  w.begin_object();
  w.key("experiment").value("chi");
  w.key("p_low").value(s.p_low).key("p_high").value(s.p_high);
  w.key("cells").begin_array();
  for (const ChiCell& c : s.cells) {
    w.begin_object();
    w.key("scale").value(c.scale);
    w.key("theta_star").value(c.theta_star);
    w.key("theta_hard_high").value(c.theta_hard_high);
    w.key("theta_easy_low").value(c.theta_easy_low);
    w.key("chi").value(c.chi);
    w.key("chi_ci");
    ci_json(w, c.chi_ci);
    w.key("chi_bar").value(c.chi_bar);
    w.key("easy_rel").value(c.easy_rel).key("hard_rel").value(c.hard_rel);
    w.key("hard_used").value(c.hard_used).key("easy_used").value(c.easy_used);
    w.key("valid").value(c.valid);
    w.end_object();
  }
  w.end_array();
  w.key("band_width").value(s.band_width);
  w.key("band_ci");
  ci_json(w, s.band_ci);
  w.key("band_ok").value(s.band_ok);
  w.key("target").value(kChiBandTarget);
  w.key("verdict").value(to_string(s.banded));
  w.end_object();
  return w.str();
}

inline std::string summary_json(const EsResult& s) {
  JsonWriter w;
  w.begin_object();
  w.key("experiment").value("efron-stein");
  w.key("samples").value(s.samples);
  w.key("invalid_samples").value(s.invalid_samples);
  w.key("blocks").value(s.blocks);
  w.key("block_side").value(s.block_side);
  w.key("var_f").value(s.var_f);
  w.key("var_ci");
  ci_json(w, s.var_ci);
  w.key("coarse_term").value(s.coarse_term);
  w.key("coarse_ci");
  ci_json(w, s.coarse_ci);
  w.key("block_sum").value(s.block_sum);
  w.key("block_sum_ci");
  ci_json(w, s.block_sum_ci);
  w.key("block_ids").begin_array();
  for (int b : s.block_ids) w.value(b);
  w.end_array();
  w.key("block_terms").begin_array();
  for (double t : s.block_terms) w.value(t);
  w.end_array();
  w.key("bound").value(s.bound);
  w.key("slack").value(s.slack);
  w.key("slack_ci");
  ci_json(w, s.slack_ci);
  w.key("slack_se").value(s.slack_se);
  w.key("coarse_share").value(s.coarse_share);
  w.key("verdict").value(to_string(s.holds));
  w.end_object();
  return w.str();
}

inline std::string summary_json(const HolderScan& s) {
  JsonWriter w;
  w.begin_object();
  w.key("experiment").value("holder");
  w.key("cells").begin_array();
  for (const HolderCell& c : s.cells) {
    w.begin_object();
    w.key("scale").value(c.scale);
    w.key("theta_star").value(c.theta_star);
    w.key("separations").begin_array();
    for (int h : c.separations) w.value(h);
    w.end_array();
    w.key("pairs_used").value(c.pairs_used);
    w.key("unreachable_rate").value(c.unreachable_rate);
    w.key("degenerate").value(c.degenerate);
    w.key("forward");
    detail::fit_json(w, c.forward);
    w.key("inverse");
    detail::fit_json(w, c.inverse);
    w.key("forward_ci");
    ci_json(w, c.forward_ci);
    w.key("inverse_ci");
    ci_json(w, c.inverse_ci);
    w.key("ci_defined").value(c.ci_defined);
    w.end_object();
  }
  w.end_array();
  w.key("verdict").value(to_string(s.exponents_positive));
  w.end_object();
  return w.str();
}

inline std::string summary_json(const ScalingCovariance& s) {
  JsonWriter w;
  w.begin_object();
  w.key("experiment").value("scaling");
  w.key("base_scale").value(s.base_scale);
  w.key("doubled_scale").value(s.doubled_scale);
  w.key("base_delta").value(s.base_delta);
  w.key("doubled_delta").value(s.doubled_delta);
  w.key("delta_factor").value(s.delta_factor);
  w.key("base_used").value(s.base_used);
  w.key("doubled_used").value(s.doubled_used);
  w.key("ks_statistic").value(s.ks.statistic);
  w.key("ks_p_value").value(s.ks.p_value);
  w.key("p_target").value(kScalingPTarget);
  w.key("verdict").value(to_string(s.matches));
  w.end_object();
  return w.str();
}

// ---------------------------------------------------------------------------
// Run manifest: every run writes one, listing its outputs and echoing the
// exact parameters, so no artifact is orphaned from its provenance.

inline std::string iso8601_utc(std::time_t t) {
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string iso8601_now() { return iso8601_utc(std::time(nullptr)); }

struct RunManifest {
  std::string subcommand;        // including the experiment name, if any
  std::string config_path;       // empty when running on built-in defaults
  std::string config_hash;       // hash of the config file bytes as loaded
  std::uint64_t master_seed = 0;
  int threads = 1;
  std::string started, finished;  // ISO-8601 UTC
  ExperimentConfig config;        // effective values, overrides applied
  std::vector<std::pair<std::string, std::string>> notes;  // run-specific extras
  std::vector<std::string> outputs;  // file names within the output directory
};

inline std::string manifest_json(const RunManifest& m) {
  JsonWriter w;
  w.begin_object();
  w.key("tool").value("lgd");
  w.key("version").value(kToolVersion);
  w.key("csv_schema").value(kCsvSchemaVersion);
  w.key("subcommand").value(m.subcommand);
  w.key("config_path");
  if (m.config_path.empty())
    w.null_value();
  else
    w.value(m.config_path);
  w.key("config_hash").value(m.config_hash);
  w.key("master_seed").value(m.master_seed);
  w.key("threads").value(m.threads);
  w.key("started").value(m.started);
  w.key("finished").value(m.finished);
  w.key("parameters");
  config_json(w, m.config);
  if (!m.notes.empty()) {
    w.key("notes").begin_object();
    for (const auto& [k, v] : m.notes) w.key(k).value(v);
    w.end_object();
  }
  w.key("outputs").begin_array();
  for (const std::string& f : m.outputs) w.value(f);
  w.end_array();
  w.end_object();
  return w.str();
}

}  // namespace lgd
