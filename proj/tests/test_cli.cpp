#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

// end-to-end smoke tests through the installed binary

namespace {

const char* kCli = RGL_CLI_PATH;
const char* kData = RGL_DATA_DIR;

int run(const std::string& args, const std::string& stdout_file = "") {
  std::string cmd = std::string(kCli) + " " + args;
  if (!stdout_file.empty()) cmd += " > " + stdout_file;
  cmd += " 2>/dev/null";
  return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("cli: alpha endpoints") {
  std::string out = "/tmp/rgl_cli_alpha.txt";
  REQUIRE(run("alpha --k1 0.8 --k2 auto --steps 1000 --at 0", out) == 0);
  CHECK(slurp(out) == "0.8000\n");
  REQUIRE(run("alpha --k1 0.8 --k2 auto --steps 1000 --at 1000", out) == 0);
  CHECK(slurp(out) == "0.2000\n");
}

TEST_CASE("cli: pearson") {
  std::string out = "/tmp/rgl_cli_pearson.txt";
  REQUIRE(run("pearson --xs 1,2,3 --ys 2,4,6", out) == 0);
  CHECK(slurp(out) == "1.0000\n");
  REQUIRE(run("pearson --xs 1,2,3 --ys 6,4,2", out) == 0);
  CHECK(slurp(out) == "-1.0000\n");
  CHECK(run("pearson --xs 1,1,1 --ys 1,2,3") != 0);
}

TEST_CASE("cli: linearize the bundled fixture") {
  std::string fixture = std::string(kData) + "/g1.amr";
  std::string out = "/tmp/rgl_cli_linearize.tsv";
  REQUIRE(run("linearize --in " + fixture + " --order r2l", out) == 0);
  std::string text = slurp(out);
  CHECK(text.find("( <R0> come-01 :purpose ( <R1> and :op2 ( <R2> learn-01 ) "
                  ":op1 ( <R3> study-01 ) ) )") != std::string::npos);

  REQUIRE(run("linearize --in " + fixture + " --order l2r", out) == 0);
  CHECK(slurp(out).find("( <R0> come-01 :purpose ( <R1> and :op1 ( <R2> "
                        "study-01 ) :op2 ( <R3> learn-01 ) ) )") !=
        std::string::npos);
}

TEST_CASE("cli: smatch of a file against itself is 1.0") {
  std::string fixture = std::string(kData) + "/g1.amr";
  std::string out = "/tmp/rgl_cli_smatch.txt";
  REQUIRE(run("smatch --pred " + fixture + " --gold " + fixture, out) == 0);
  std::string text = slurp(out);
  CHECK(text.find("1.0000\t1.0000\t1.0000") != std::string::npos);
}

TEST_CASE("cli: gen-corpus, linearize, delinearize, smatch round trip") {
  std::string corpus = "/tmp/rgl_cli_corpus.amr";
  std::string tokens = "/tmp/rgl_cli_tokens.tsv";
  std::string restored = "/tmp/rgl_cli_restored.amr";
  std::string report = "/tmp/rgl_cli_report.txt";
  REQUIRE(run("--seed 3 gen-corpus --n 12 --out " + corpus) == 0);
  REQUIRE(run("linearize --in " + corpus + " --order r2l --out " + tokens) == 0);
  REQUIRE(run("delinearize --in " + tokens + " --out " + restored) == 0);
  REQUIRE(run("smatch --pred " + restored + " --gold " + corpus, report) == 0);
  CHECK(slurp(report).find("1.0000\t1.0000\t1.0000") != std::string::npos);
}

TEST_CASE("cli: reverse-tokens is an involution") {
  std::string corpus = "/tmp/rgl_cli_rev_corpus.amr";
  std::string t0 = "/tmp/rgl_cli_rev0.tsv";
  std::string t1 = "/tmp/rgl_cli_rev1.tsv";
  std::string t2 = "/tmp/rgl_cli_rev2.tsv";
  REQUIRE(run("--seed 5 gen-corpus --n 4 --out " + corpus) == 0);
  REQUIRE(run("linearize --in " + corpus + " --order l2r --out " + t0) == 0);
  REQUIRE(run("reverse-tokens --in " + t0 + " --out " + t1) == 0);
  REQUIRE(run("reverse-tokens --in " + t1 + " --out " + t2) == 0);
  std::string orig = slurp(t0), twice = slurp(t2);
  // order tag differs (REVERSED) but the token content must match
  std::istringstream a(orig), b(twice);
  std::string la, lb;
  while (std::getline(a, la) && std::getline(b, lb)) {
    CHECK(la.substr(0, la.find('\t')) == lb.substr(0, lb.find('\t')));
    CHECK(la.substr(la.rfind('\t')) == lb.substr(lb.rfind('\t')));
  }
}

TEST_CASE("cli: grad-check runs clean") {
  REQUIRE(run("grad-check") == 0);
}

TEST_CASE("cli: unknown command fails") {
  CHECK(run("frobnicate") != 0);
  CHECK(run("smatch --pred /nonexistent.amr --gold /nonexistent.amr") != 0);
}
