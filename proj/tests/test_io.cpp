#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "lgdlab/catalog.hpp"
#include "lgdlab/experiments.hpp"
#include "lgdlab/field.hpp"
#include "lgdlab/io.hpp"
#include "lgdlab/measure.hpp"

using Catch::Matchers::ContainsSubstring;

namespace {

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

double parse_back(const std::string& s) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  REQUIRE(end == s.c_str() + s.size());
  return v;
}

}  // namespace

TEST_CASE("decimal round trip preserves every double bit for bit") {
  const double cases[] = {0.1,
                          1.0 / 3.0,
                          1e300,
                          1e-300,
                          -0.0,
                          5e-324,  // smallest subnormal
                          std::numeric_limits<double>::max(),
                          std::numeric_limits<double>::min(),
                          3.141592653589793,
                          -12345.678901234567,
                          2.2250738585072011e-308};  // largest subnormal
  for (double x : cases) {
    std::string s = lgd::fmt_double(x);
    INFO("formatted: " << s);
    REQUIRE(bits(parse_back(s)) == bits(x));
  }
  REQUIRE(lgd::fmt_double(-0.0) == "-0");
  REQUIRE(lgd::fmt_double(1.0) == "1");
  // Non-finite values keep C library spellings in CSV columns.
  REQUIRE(lgd::fmt_double(std::numeric_limits<double>::infinity()) == "inf");
  REQUIRE(lgd::fmt_double(-std::numeric_limits<double>::infinity()) == "-inf");
  REQUIRE(lgd::fmt_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("content hash matches the published 64-bit FNV-1a vectors") {
  REQUIRE(lgd::fnv1a64("") == 0xcbf29ce484222325ull);
  REQUIRE(lgd::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  REQUIRE(lgd::fnv1a64("foobar") == 0x85944171f73967e8ull);
  REQUIRE(lgd::content_hash("") == "fnv1a64:cbf29ce484222325");
  REQUIRE(lgd::content_hash("a") == "fnv1a64:af63dc4c8601ec8c");
  // Sensitive to every byte, including trailing whitespace.
  REQUIRE(lgd::content_hash("x = 1\n") != lgd::content_hash("x = 1"));
}

TEST_CASE("empty config text yields the built-in defaults") {
  lgd::ExperimentConfig got = lgd::parse_config("");
  lgd::ExperimentConfig def;
  REQUIRE(got.gamma == def.gamma);
  REQUIRE(got.scales == def.scales);
  REQUIRE(got.cell_size == def.cell_size);
  REQUIRE(got.padding_factor == def.padding_factor);
  REQUIRE(got.epsilon_cells == def.epsilon_cells);
  REQUIRE(got.deltas == def.deltas);
  REQUIRE(got.r_cap_fraction == def.r_cap_fraction);
  REQUIRE(got.stride == def.stride);
  REQUIRE(got.stride_ref == def.stride_ref);
  REQUIRE(got.samples == def.samples);
  REQUIRE(got.percentiles == def.percentiles);
  REQUIRE(got.p_low == def.p_low);
  REQUIRE(got.p_high == def.p_high);
  REQUIRE(got.rsw_percentile == def.rsw_percentile);
  REQUIRE(got.crossing_aspect == def.crossing_aspect);
  REQUIRE(got.holder_fractions == def.holder_fractions);
  REQUIRE(got.diameter_points == def.diameter_points);
  REQUIRE(got.diameter_samples == def.diameter_samples);
  REQUIRE(got.block_ratio == def.block_ratio);
  REQUIRE(got.es_padding_factor == def.es_padding_factor);
  REQUIRE(got.es_margin_blocks == def.es_margin_blocks);
  REQUIRE(got.bootstrap_reps == def.bootstrap_reps);
  REQUIRE(got.master_seed == def.master_seed);
}

TEST_CASE("config parser tolerates comments and stray whitespace") {
  lgd::ExperimentConfig cfg = lgd::parse_config(
      "# leading comment\n"
      "\n"
      "  gamma =  0.5   # trailing comment\n"
      "\t scales = 8 ,16,  32\n"
      "samples=3\r\n"
      "master_seed = 18446744073709551615\n");
  REQUIRE(cfg.gamma == 0.5);
  REQUIRE(cfg.scales == std::vector<int>{8, 16, 32});
  REQUIRE(cfg.samples == 3);
  REQUIRE(cfg.master_seed == 18446744073709551615ull);
}

TEST_CASE("config errors name the offending key") {
  REQUIRE_THROWS_WITH(lgd::parse_config("wibble = 3\n"), ContainsSubstring("wibble"));
  REQUIRE_THROWS_WITH(lgd::parse_config("gamma = 2.5\n"), ContainsSubstring("gamma"));
  REQUIRE_THROWS_WITH(lgd::parse_config("gamma = 1\ngamma = 0.5\n"),
                      ContainsSubstring("duplicate key 'gamma'"));
  REQUIRE_THROWS_WITH(lgd::parse_config("samples = many\n"), ContainsSubstring("samples"));
  REQUIRE_THROWS_WITH(lgd::parse_config("master_seed = -1\n"),
                      ContainsSubstring("master_seed"));
  REQUIRE_THROWS_WITH(lgd::parse_config("gamma\n"), ContainsSubstring("line 1"));
  REQUIRE_THROWS_WITH(lgd::parse_config("samples = 0\n"), ContainsSubstring("samples"));
}

TEST_CASE("emitted config text round-trips byte for byte") {
  lgd::ExperimentConfig cfg;
  cfg.gamma = 0.1;
  cfg.scales = {8, 16};
  cfg.master_seed = 987654321098765ull;
  cfg.holder_fractions = {0.1, 0.3};
  cfg.samples = 17;
  std::string text = lgd::emit_config(cfg);
  std::string again = lgd::emit_config(lgd::parse_config(text));
  REQUIRE(text == again);
  // Every configurable key appears in the emitted document.
  for (const auto& k : lgd::detail::config_keys())
    REQUIRE_THAT(text, ContainsSubstring(std::string(k.name) + " ="));
}

TEST_CASE("json writer escapes strings and nulls out non-finite numbers") {
  lgd::JsonWriter w;
  w.begin_object();
  w.key("text").value(std::string_view("a\"b\\c\nd\te\rf\x01g"));
  w.key("nan").value(std::numeric_limits<double>::quiet_NaN());
  w.key("inf").value(std::numeric_limits<double>::infinity());
  w.key("num").value(0.5);
  w.key("neg").value(std::int64_t{-7});
  w.key("big").value(std::uint64_t{18446744073709551615ull});
  w.key("yes").value(true);
  w.key("list").begin_array().value(1).value(2).end_array();
  w.key("none").null_value();
  w.end_object();
  REQUIRE(w.str() ==
          "{\"text\":\"a\\\"b\\\\c\\nd\\te\\rf\\u0001g\",\"nan\":null,\"inf\":null,"
          "\"num\":0.5,\"neg\":-7,\"big\":18446744073709551615,\"yes\":true,"
          "\"list\":[1,2],\"none\":null}");
}

TEST_CASE("sample records render to the documented csv layout") {
  std::vector<lgd::SampleRecord> recs(2);
  recs[0].sample = 0;
  recs[0].seed = 12345678901234567890ull;
  recs[0].scale = 64;
  recs[0].grid_w = 128;
  recs[0].grid_h = 64;
  recs[0].delta = 0.5;
  recs[0].r_cap = 16;
  recs[0].stride = 2;
  recs[0].kind = "lr";
  recs[0].aux = 0;
  recs[0].value = 3.25;
  recs[0].hops = 7;
  recs[0].reached = true;
  recs[1].sample = 1;
  recs[1].seed = 9;
  recs[1].scale = 64;
  recs[1].grid_w = 128;
  recs[1].grid_h = 64;
  recs[1].delta = 0.5;
  recs[1].r_cap = 16;
  recs[1].stride = 2;
  recs[1].kind = "lr";
  recs[1].value = lgd::kUnreachable;
  recs[1].reached = false;
  REQUIRE(lgd::sample_records_csv(recs) ==
          "sample,seed,scale,grid_w,grid_h,delta,r_cap,stride,kind,aux,value,hops,reached\n"
          "0,12345678901234567890,64,128,64,0.5,16,2,lr,0,3.25,7,1\n"
          "1,9,64,128,64,0.5,16,2,lr,0,inf,0,0\n");
}

TEST_CASE("chain csv lists the balls of a geodesic in order") {
  lgd::GridSpec spec(8, 8, 1.0, 0.5);
  lgd::FieldSample f = lgd::sample_dgff(spec, 11);
  lgd::MeasureGrid m = lgd::cell_measures(f, 1.0, 2.0);
  lgd::BallCatalog cat = lgd::build_catalog(m, 1, 4.0);
  REQUIRE(cat.nballs() >= 2);
  std::vector<int> chain = {1, 0};
  std::string csv = lgd::chain_csv(cat, chain);
  std::string want = "center_x,center_y,radius,mass\n";
  for (int b : chain) {
    lgd::Ball ball = cat.ball(b);
    want += lgd::fmt_double(ball.center.x) + ',' + lgd::fmt_double(ball.center.y) + ',' +
            lgd::fmt_double(ball.radius) + ',' + lgd::fmt_double(ball.mass) + '\n';
  }
  REQUIRE(csv == want);
}

TEST_CASE("field and measure sidecars carry the reload contract") {
  lgd::GridSpec spec(8, 8, 1.0, 0.5);
  lgd::FieldSample f = lgd::sample_dgff(spec, 3);
  std::string fj = lgd::field_sidecar_json(f);
  for (const char* key : {"\"layout\"", "row-major", "little-endian", "\"vertices_x\"",
                          "\"vertices_y\"", "\"grid\"", "\"inner_w\"", "\"padded_w\"",
                          "\"calibration\"", "\"seed\":3"})
    REQUIRE_THAT(fj, ContainsSubstring(key));

  lgd::MeasureGrid m = lgd::cell_measures(f, 1.0, 2.0);
  std::string mj = lgd::measure_sidecar_json(m);
  for (const char* key : {"\"cells_x\"", "\"cells_y\"", "\"gamma\":1", "\"epsilon\":2",
                          "\"field_seed\":3", "\"total_mass\""})
    REQUIRE_THAT(mj, ContainsSubstring(key));
}

TEST_CASE("run manifest records tool, hash, seed, and outputs") {
  lgd::RunManifest m;
  m.subcommand = "experiment rsw";
  m.config_path = "cfg.txt";
  m.config_hash = lgd::content_hash("gamma = 1\n");
  m.master_seed = 42;
  m.threads = 2;
  m.started = lgd::iso8601_utc(0);
  m.finished = lgd::iso8601_utc(60);
  m.notes.emplace_back("verdict", "pass");
  m.outputs = {"config.txt", "samples.csv"};
  std::string j = lgd::manifest_json(m);
  for (const char* key :
       {"\"tool\":\"lgd\"", "\"version\":\"0.1.0\"", "\"csv_schema\":1",
        "\"subcommand\":\"experiment rsw\"", "\"config_path\":\"cfg.txt\"",
        "\"config_hash\":\"fnv1a64:", "\"master_seed\":42", "\"threads\":2",
        "\"started\":\"1970-01-01T00:00:00Z\"", "\"finished\":\"1970-01-01T00:01:00Z\"",
        "\"parameters\":{", "\"gamma\":", "\"verdict\":\"pass\"",
        "\"outputs\":[\"config.txt\",\"samples.csv\"]"})
    REQUIRE_THAT(j, ContainsSubstring(key));
  // Defaults: no config file means a null path, and notes stay out entirely.
  lgd::RunManifest bare;
  bare.subcommand = "measure";
  std::string bj = lgd::manifest_json(bare);
  REQUIRE_THAT(bj, ContainsSubstring("\"config_path\":null"));
  REQUIRE_THAT(bj, !ContainsSubstring("\"notes\""));
}

TEST_CASE("timestamps render as utc iso-8601") {
  REQUIRE(lgd::iso8601_utc(0) == "1970-01-01T00:00:00Z");
  REQUIRE(lgd::iso8601_utc(1000000000) == "2001-09-09T01:46:40Z");
}

TEST_CASE("file io round-trips binary content exactly") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "lgd_io_test";
  fs::create_directories(dir);
  std::string payload = "line\n";
  payload.push_back('\0');
  payload += "\xff\x01 tail";
  std::string path = (dir / "blob.bin").string();
  lgd::write_file(path, payload);
  REQUIRE(lgd::read_file(path) == payload);
  REQUIRE_THROWS_WITH(lgd::read_file((dir / "missing").string()), ContainsSubstring("missing"));

  std::vector<double> v = {0.1, -0.0, 5e-324, 1e300};
  std::string dpath = (dir / "doubles.bin").string();
  lgd::write_doubles_le(dpath, v);
  std::string raw = lgd::read_file(dpath);
  REQUIRE(raw.size() == v.size() * sizeof(double));
  for (size_t i = 0; i < v.size(); ++i) {
    double got;
    std::memcpy(&got, raw.data() + i * sizeof(double), sizeof(double));
    REQUIRE(bits(got) == bits(v[i]));
  }
  fs::remove_all(dir);
}

TEST_CASE("loading a config file keeps the hash of the exact bytes") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "lgd_io_cfg";
  fs::create_directories(dir);
  std::string text = "# trailing spaces matter for the hash  \ngamma = 0.25\n";
  std::string path = (dir / "c.txt").string();
  lgd::write_file(path, text);
  lgd::LoadedConfig lc = lgd::load_config_file(path);
  REQUIRE(lc.config.gamma == 0.25);
  REQUIRE(lc.bytes == text);
  REQUIRE(lc.hash == lgd::content_hash(text));
  REQUIRE(lc.path == path);
  REQUIRE(lgd::load_config(path).gamma == 0.25);
  fs::remove_all(dir);
}

TEST_CASE("distance results serialize value, chain, and reachability") {
  lgd::DistanceResult r;
  r.value = 2.5;
  r.hops = 2;
  r.chain = {4, 9};
  r.reached = true;
  lgd::JsonWriter w;
  w.begin_object();
  lgd::distance_result_json(w, r);
  w.end_object();
  REQUIRE(w.str() == "{\"value\":2.5,\"count\":2,\"chain\":[4,9],\"reached\":true}");

  lgd::DistanceResult miss;  // defaults: unreachable
  lgd::JsonWriter w2;
  w2.begin_object();
  lgd::distance_result_json(w2, miss);
  w2.end_object();
  REQUIRE(w2.str() == "{\"value\":null,\"count\":0,\"chain\":[],\"reached\":false}");
}
