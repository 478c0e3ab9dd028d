#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>

#include "fractalnet/cli/app.hpp"
#include "temp_dir.hpp"

namespace fractalnet::cli {
namespace {

using testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "fractalnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class SeedEnvGuard {
 public:
  SeedEnvGuard() { ::unsetenv(kSeedEnvVar); }
  ~SeedEnvGuard() { ::unsetenv(kSeedEnvVar); }
};

TEST(Format, RealsUseSignificantDigits) {
  EXPECT_EQ(format_real(0.0, 6), "0");
  EXPECT_EQ(format_real(-0.0, 6), "0");
  EXPECT_EQ(format_real(1.0 / 3.0, 6), "0.333333");
  EXPECT_EQ(format_real(1234567.0, 6), "1.23457e+06");
  EXPECT_EQ(format_real(2.5, 3), "2.5");
  EXPECT_DOUBLE_EQ(round_significant(0.899164123, 6), 0.899164);
}

TEST(Format, CsvWriterRow) {
  CsvWriter csv(4);
  csv.header({"a", "b", "c", "d"});
  csv.row(std::size_t{3}, 0.123456, true, std::string("x"));
  EXPECT_EQ(csv.str(), "a,b,c,d\n3,0.1235,1,x\n");
}

TEST(Format, Sha256KnownAnswer) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Format, Levenshtein) {
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("--sed", "--seed"), 1u);
}

TEST(Inputs, MatrixCsvSkipsHeaderAndComments) {
  const auto m = parse_matrix_csv("x,y\n# note\n1,2\n\n3,4.5\n", "z.csv");
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 2);
  EXPECT_EQ(m(1, 1), 4.5);
}

TEST(Inputs, MatrixCsvReportsLine) {
  try {
    parse_matrix_csv("1,2\n3\n", "z.csv");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("z.csv line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_matrix_csv("1,2\na,b\n", "z.csv"), FormatError);
  EXPECT_THROW(parse_matrix_csv("\n# only comments\n", "z.csv"), FormatError);
}

TEST(Inputs, MetaCsvColumnsByName) {
  const auto m = parse_meta_csv("gated,dimension,diam,graph_id,r_squared\n1,1.5,20,7,0.8\n", "m.csv");
  ASSERT_EQ(m.meta.size(), 1u);
  EXPECT_EQ(m.meta[0].graph_id, 7u);
  EXPECT_EQ(m.meta[0].diameter, 20u);
  EXPECT_DOUBLE_EQ(m.meta[0].dimension, 1.5);
  EXPECT_TRUE(m.meta[0].gated);
  EXPECT_FALSE(m.has_renorm_dims);
  EXPECT_THROW(parse_meta_csv("graph_id,r_squared\n0,1\n", "m.csv"), FormatError);
  EXPECT_THROW(parse_meta_csv("diam,dimension\n2.5,1\n", "m.csv"), FormatError);
}

TEST(Inputs, Range) {
  EXPECT_EQ(parse_range("2..6", "--k-range"), (std::pair<std::size_t, std::size_t>{2, 6}));
  EXPECT_THROW(parse_range("6..2", "--k-range"), UsageError);
  EXPECT_THROW(parse_range("2-6", "--k-range"), UsageError);
}

TEST(Cli, GenPathIsCanonicalJson) {
  const auto r = invoke({"gen", "--family", "path", "--n", "5"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "{\"n\":5,\"edges\":[[0,1],[1,2],[2,3],[3,4]]}\n");
}

TEST(Cli, GenWritesFile) {
  TempDir tmp;
  const auto file = (tmp.path() / "g.json").string();
  ASSERT_EQ(invoke({"gen", "--family", "cycle", "--n", "4", "--out", file}).code, 0);
  EXPECT_EQ(read_text_file(file), "{\"n\":4,\"edges\":[[0,1],[0,3],[1,2],[2,3]]}\n");
  EXPECT_FALSE(std::filesystem::exists(tmp.path() / "manifest.json"));
}

TEST(Cli, VersionAndHelp) {
  auto r = invoke({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, std::string(kVersion) + "\n");
  r = invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("validate"), std::string::npos);
  r = invoke({"dim", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--diam-gate"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"dim"}).code, 2);
  EXPECT_EQ(invoke({"dim", "--family", "path", "--n", "10", "--graph", "g.json"}).code, 2);
  EXPECT_EQ(invoke({"dim", "--family", "wheel", "--n", "10"}).code, 2);
  EXPECT_EQ(invoke({"dim", "--family", "path", "--n", "ten"}).code, 2);
  EXPECT_EQ(invoke({"dim", "--family", "path", "--n", "10", "--format", "xml"}).code, 2);
  EXPECT_EQ(invoke({"renorm", "--family", "path", "--n", "10", "--radius", "0"}).code, 2);
  EXPECT_EQ(invoke({"renorm", "--dataset", "/nonexistent", "--index", "0"}).code, 1);
}

TEST(Cli, SuggestsSubcommandAndFlag) {
  auto r = invoke({"valdate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("did you mean 'validate'"), std::string::npos);
  r = invoke({"dim", "--family", "path", "--n", "20", "--diam-gat", "3"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("did you mean '--diam-gate'"), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitOne) {
  TempDir tmp;
  tmp.write("bad.json", "{\"n\": 2, \"edges\": [[0, 5]]}");
  EXPECT_EQ(invoke({"dim", "--graph", (tmp.path() / "bad.json").string()}).code, 1);
  EXPECT_EQ(invoke({"dim", "--graph", (tmp.path() / "missing.json").string()}).code, 1);
}

TEST(Cli, DimPath) {
  const auto r = invoke({"dim", "--family", "path", "--n", "1025"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "graph_id,n,diam,dimension,r_squared,sigma_sq,gated\n"
            "0,1025,1024,0.899164,0.991969,0.00625195,0\n");
  const auto p = invoke({"dim", "--family", "path", "--n", "1025", "--precision", "3", "--format", "json"});
  ASSERT_EQ(p.code, 0);
  const auto j = nlohmann::json::parse(p.out);
  EXPECT_DOUBLE_EQ(j[0]["dimension"].get<double>(), 0.899);
}

TEST(Cli, GatedGraphRow) {
  const auto r = invoke({"dim", "--family", "complete", "--n", "6"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "graph_id,n,diam,dimension,r_squared,sigma_sq,gated\n0,6,1,0,0,0,1\n");
}

TEST(Cli, CoverCounts) {
  const auto r = invoke({"cover", "--family", "path", "--n", "21"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0,2,7\n"), std::string::npos);
  EXPECT_NE(r.out.find("0,3,6\n"), std::string::npos);
}

TEST(Cli, SeedSources) {
  SeedEnvGuard guard;
  TempDir tmp;
  const auto flag_dir = (tmp.path() / "flag").string();
  const auto env_dir = (tmp.path() / "env").string();
  ASSERT_EQ(invoke({"renorm", "--family", "igs", "--k", "3", "--seed", "17", "--out", flag_dir}).code, 0);
  ::setenv(kSeedEnvVar, "17", 1);
  ASSERT_EQ(invoke({"renorm", "--family", "igs", "--k", "3", "--out", env_dir}).code, 0);
  EXPECT_EQ(read_text_file(flag_dir + "/supergraph.json"), read_text_file(env_dir + "/supergraph.json"));
  const auto m_flag = nlohmann::json::parse(read_text_file(flag_dir + "/manifest.json"));
  const auto m_env = nlohmann::json::parse(read_text_file(env_dir + "/manifest.json"));
  EXPECT_EQ(m_flag["seed_source"], "flag");
  EXPECT_EQ(m_env["seed_source"], "env");
  EXPECT_EQ(m_env["seed"], 17);
  ::setenv(kSeedEnvVar, "seventeen", 1);
  EXPECT_EQ(invoke({"renorm", "--family", "igs", "--k", "3"}).code, 2);
  ::unsetenv(kSeedEnvVar);
  const auto m_default = invoke({"renorm", "--family", "igs", "--k", "3", "--out", (tmp.path() / "d").string()});
  ASSERT_EQ(m_default.code, 0);
  EXPECT_EQ(nlohmann::json::parse(read_text_file((tmp.path() / "d/manifest.json").string()))["seed_source"],
            "default");
}

TEST(Cli, ManifestContents) {
  SeedEnvGuard guard;
  TempDir tmp;
  tmp.write("g.json", "{\"n\":3,\"edges\":[[0,1],[1,2]]}\n");
  const auto dir = (tmp.path() / "out").string();
  const auto r = invoke({"augment", "--graph", (tmp.path() / "g.json").string(), "--seed", "5", "--out", dir});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = nlohmann::json::parse(read_text_file(dir + "/manifest.json"));
  EXPECT_EQ(m["tool"], "fractalnet");
  EXPECT_EQ(m["subcommand"], "augment");
  EXPECT_EQ(m["seed"], 5);
  EXPECT_EQ(m["rng"]["renormalisation"], "mt19937_64");
  EXPECT_EQ(m["inputs"][0]["sha256"], sha256_hex("{\"n\":3,\"edges\":[[0,1],[1,2]]}\n"));
  EXPECT_EQ(m["flags"]["--radius"], "1");
  EXPECT_TRUE(m["flags"].contains("--threads"));
  EXPECT_EQ(m["outputs"][0], "augmented.json");
  EXPECT_TRUE(m["timings_ms"].contains("augment"));
  const Graph aug = read_graph_json(dir + "/augmented.json");
  EXPECT_EQ(aug.vertex_count(), 4u);  // path(3) plus one supervertex
}

TEST(Cli, LossModes) {
  TempDir tmp;
  tmp.write("z.csv", "1,0\n0,1\n1,1\n");
  tmp.write("zr.csv", "0.9,0.1\n0.2,1\n1,0.8\n");
  tmp.write("meta.csv", "graph_id,diam,dimension,r_squared,gated\n0,20,1.1,0.99,1\n1,30,1.3,0.5,0\n2,5,0,0,0\n");
  tmp.write("short.csv", "graph_id,diam,dimension,r_squared,gated\n0,20,1.1,0.99,1\n");
  const auto z = (tmp.path() / "z.csv").string();
  const auto zr = (tmp.path() / "zr.csv").string();
  const auto meta = (tmp.path() / "meta.csv").string();
  const auto sur = invoke({"loss", "--embeddings", z, "--renorm-embeddings", zr, "--meta", meta});
  const auto nce = invoke({"loss", "--embeddings", z, "--renorm-embeddings", zr, "--mode", "infonce"});
  ASSERT_EQ(sur.code, 0) << sur.err;
  ASSERT_EQ(nce.code, 0) << nce.err;
  // Every graph is gated, so the surrogate reduces to InfoNCE.
  EXPECT_EQ(nlohmann::json::parse(sur.out)["per_sample_loss"], nlohmann::json::parse(nce.out)["per_sample_loss"]);
  EXPECT_EQ(invoke({"loss", "--embeddings", z, "--renorm-embeddings", zr, "--meta", meta, "--mode", "exact"}).code,
            1);
  EXPECT_EQ(invoke({"loss", "--embeddings", z, "--renorm-embeddings", zr, "--meta",
                    (tmp.path() / "short.csv").string()})
                .code,
            1);
  EXPECT_EQ(invoke({"loss", "--embeddings", z, "--renorm-embeddings", zr}).code, 2);
  EXPECT_EQ(invoke({"loss", "--embeddings", z, "--renorm-embeddings", zr, "--mode", "infonce", "--tau", "0"}).code,
            1);
}

TEST(Cli, ValidateWarnsWhenEverythingIsGated) {
  const auto r = invoke({"validate", "--family", "complete", "--n", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_FALSE(j["warning"].is_null());
  EXPECT_TRUE(j["diagnostics"].is_null());
}

TEST(Cli, ThreadCountDoesNotChangeOutput) {
  const auto a = invoke({"validate", "--family", "igs", "--k-range", "2..4", "--trials", "3", "--threads", "1"});
  const auto b = invoke({"validate", "--family", "igs", "--k-range", "2..4", "--trials", "3", "--threads", "3"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

}  // namespace
}  // namespace fractalnet::cli
