#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specmatch/cli.hpp"
#include "specmatch/errors.hpp"

using namespace specmatch;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path dir() {
  const auto d = fs::temp_directory_path() / "specmatch_test_cli";
  fs::create_directories(d);
  return d;
}

std::string path(const std::string& name) { return (dir() / name).string(); }

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::string& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

double value_of(const std::string& text, const std::string& key) {
  const auto at = text.find(key + "=");
  REQUIRE(at != std::string::npos);
  return std::stod(text.substr(at + key.size() + 1));
}

}  // namespace

TEST_CASE("synth") {
  const auto a = call({"synth", "--alpha", "2.0", "--size", "128", "--seed", "7", "--out", path("a.spmt")});
  const auto b = call({"synth", "--alpha", "2.0", "--size", "128", "--seed", "7", "--out", path("b.spmt")});
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  CHECK(a.out == b.out);
  CHECK(slurp(path("a.spmt")) == slurp(path("b.spmt")));
  CHECK(slurp(path("a.spmt")).size() == 24 + 4 * 128 * 128);

  for (const char* seed : {"1", "2", "3"}) {
    const auto w = call({"synth", "--alpha", "0", "--size", "128", "--seed", seed, "--out", path("w.spmt")});
    CHECK(std::abs(value_of(w.out, "alpha_fit")) <= 0.15);
  }

  CHECK(call({"synth", "--alpha", "2.0", "--seed", "7"}).code == cli::kExitUsage);
  CHECK(call({"synth", "--out", path("x.spmt")}).code == cli::kExitUsage);
  CHECK(call({"synth", "--size", "48", "--seed", "1", "--out", path("x.spmt")}).code == cli::kExitPrecondition);
  CHECK(call({"synth", "--seed", "1", "--out", path("no/such/dir/x.spmt")}).code == cli::kExitIo);
}

TEST_CASE("usage and help") {
  CHECK(call({}).code == cli::kExitUsage);
  CHECK(call({"frobnicate"}).code == cli::kExitUsage);
  const auto help = call({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("synth") != std::string::npos);
  CHECK(call({"train", "--help"}).code == 0);
}

TEST_CASE("psd, fit, flatten and esm") {
  REQUIRE(call({"synth", "--alpha", "2.0", "--size", "64", "--seed", "3", "--out", path("f.spmt")}).code == 0);
  const auto csv = call({"psd", path("f.spmt")});
  CHECK(csv.code == 0);
  CHECK(csv.out.rfind("radius,power,count\n", 0) == 0);
  CHECK(call({"psd", path("f.spmt"), "--out", path("f.csv")}).code == 0);
  CHECK(slurp(path("f.csv")) == csv.out);

  const auto fit = call({"fit", path("f.csv")});
  CHECK(fit.code == 0);
  CHECK(std::abs(value_of(fit.out, "alpha") - 2.0) < 0.5);

  const auto flat = call({"flatten", path("f.csv"), "--delta", "1.0", "--out", path("g.csv")});
  CHECK(flat.code == 0);
  CHECK(value_of(flat.out, "alpha_after") == doctest::Approx(value_of(fit.out, "alpha") - 1.0).epsilon(1e-6));

  const auto same = call({"esm", "--target", path("f.csv"), "--latent", path("f.spmt")});
  CHECK(same.code == 0);
  CHECK(same.out.find("esm_loss=0.000000000") != std::string::npos);
  const auto other = call({"esm", "--target", path("g.csv"), "--latent", path("f.spmt"), "--grad-out", path("grad.spmt")});
  CHECK(other.code == 0);
  CHECK(value_of(other.out, "esm_loss") > 0.0);
  CHECK(fs::file_size(path("grad.spmt")) == 24 + 4 * 64 * 64);

  spit(path("bad.spmt"), "SPMT garbage");
  CHECK(call({"psd", path("bad.spmt")}).code == cli::kExitIo);
  CHECK(call({"psd", path("missing.spmt")}).code == cli::kExitIo);
  spit(path("bad.csv"), "radius,power\n");
  CHECK(call({"fit", path("bad.csv")}).code == cli::kExitIo);
  CHECK(call({"flatten", path("f.csv"), "--delta", "-1", "--out", path("h.csv")}).code == cli::kExitPrecondition);
}

TEST_CASE("filter and dsm") {
  REQUIRE(call({"synth", "--alpha", "1.0", "--size", "32", "--seed", "4", "--out", path("x.spmt")}).code == 0);
  const auto id = call({"filter", path("x.spmt"), path("x0.spmt"), "--n", "0"});
  CHECK(id.code == 0);
  CHECK(id.out.find("kept=64/64") != std::string::npos);
  CHECK(slurp(path("x0.spmt")) == slurp(path("x.spmt")));

  CHECK(call({"filter", path("x.spmt"), path("x8.spmt"), "--n", "8"}).out.find("kept=28/64") != std::string::npos);
  std::string bits;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) bits += i + j <= 6 ? '1' : '0';
  CHECK(call({"filter", path("x.spmt"), path("xm.spmt"), "--mask", bits}).code == 0);
  CHECK(slurp(path("xm.spmt")) == slurp(path("x8.spmt")));
  CHECK(call({"filter", path("x.spmt"), path("xm.spmt"), "--n", "8", "--mask", bits}).code == cli::kExitUsage);
  CHECK(call({"filter", path("x.spmt"), path("xm.spmt"), "--n", "15"}).code == cli::kExitPrecondition);
  CHECK(call({"filter", path("x.spmt"), path("xm.spmt"), "--mask", "0101"}).code == cli::kExitIo);

  const auto d = call({"dsm", "--x", path("x.spmt"), "--xhat", path("x8.spmt"), "--n", "8"});
  CHECK(d.code == 0);
  CHECK(value_of(d.out, "dsm_loss") < 1e-6);
}

TEST_CASE("gcurve, lmmse, rmsc and dog") {
  REQUIRE(call({"synth", "--alpha", "2.0", "--size", "64", "--seed", "5", "--out", path("s.spmt")}).code == 0);
  REQUIRE(call({"psd", path("s.spmt"), "--out", path("s.csv")}).code == 0);
  const auto g = call({"gcurve", path("s.csv"), "--schedule", "linear-beta", "--timesteps", "1,500,999"});
  CHECK(g.code == 0);
  CHECK(g.out.rfind("t,radius,snr,g\n1,", 0) == 0);
  CHECK(call({"gcurve", path("s.csv"), "--T", "1000", "--count", "0"}).code == cli::kExitPrecondition);

  const auto l = call({"lmmse", "--signal-power", "4", "--alpha-bar", "0.2", "--samples", "100000", "--seed", "2"});
  CHECK(l.code == 0);
  CHECK(value_of(l.out, "closed_form") == 2.0);
  CHECK(std::abs(value_of(l.out, "rel_err")) < 0.01);
  CHECK(call({"lmmse", "--signal-power", "4"}).code == cli::kExitUsage);

  // A (4, 4, 3) token grid.
  std::string tok = "SPMT";
  auto u32 = [&](std::uint32_t v) { tok.append(reinterpret_cast<const char*>(&v), 4); };
  u32(1);
  u32(3);
  u32(4);
  u32(4);
  u32(3);
  for (int i = 0; i < 48; ++i) {
    const float v = static_cast<float>((i * 37 % 11) - 5) + 0.5f;
    tok.append(reinterpret_cast<const char*>(&v), 4);
  }
  spit(path("tok.spmt"), tok);
  const auto r = call({"rmsc", path("tok.spmt")});
  CHECK(r.code == 0);
  CHECK(value_of(r.out, "rmsc") * value_of(r.out, "rmsc") ==
        doctest::Approx(value_of(r.out, "directional_energy")).epsilon(1e-7));

  CHECK(call({"dog", path("tok.spmt"), path("dog.spmt")}).code == 0);
  CHECK(call({"dog", path("tok.spmt"), path("sn.spmt"), "--mode", "spatial-norm"}).code == 0);
  CHECK(call({"dog", path("tok.spmt"), path("dog.spmt"), "--sigma1", "3", "--sigma2", "2"}).code ==
        cli::kExitPrecondition);
  CHECK(call({"dog", path("tok.spmt"), path("dog.spmt"), "--mode", "blur"}).code == cli::kExitUsage);
  spit(path("dog.cfg"), "sigma1 = 0.5\nsigma2 = 1.5\n");
  CHECK(call({"dog", path("tok.spmt"), path("dogc.spmt"), "--config", path("dog.cfg")}).code == 0);
}

TEST_CASE("config files") {
  std::istringstream in("# toy\nobjective = dsm\nbeta=0.5\n\nmask_family = 0,12\nseed = 3\nsteps = 40\n");
  const auto c = cli::parse_config(in);
  CHECK(c.train.objective == Objective::Dsm);
  CHECK(c.train.beta == 0.5);
  CHECK(c.train.family.members() == std::vector<int>{0, 12});
  CHECK(c.train.seed == 3);
  CHECK(c.has_seed);
  CHECK(c.train.depth == TrainConfig{}.depth);

  auto parse = [](const std::string& s) {
    std::istringstream is(s);
    return cli::parse_config(is);
  };
  CHECK_THROWS_AS(parse("colour = red\n"), ParseError);
  CHECK_THROWS_AS(parse("beta = 1\nbeta = 2\n"), ParseError);
  CHECK_THROWS_AS(parse("steps = many\n"), ParseError);
  CHECK_THROWS_AS(parse("steps = 10 extra\n"), ParseError);
  CHECK_THROWS_AS(parse("just a line\n"), ParseError);
  CHECK(!parse("").has_seed);
}

TEST_CASE("train") {
  spit(path("t.cfg"), "image_size = 32\nfactor = 4\nbatch_size = 2\nsteps = 10\nlog_every = 5\nseed = 11\n");
  const auto a = call({"train", "--config", path("t.cfg"), "--trace", path("ta.csv"), "--model", path("ta.spmw")});
  const auto b = call({"train", "--config", path("t.cfg"), "--trace", path("tb.csv"), "--model", path("tb.spmw")});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(slurp(path("ta.csv")) == slurp(path("tb.csv")));
  CHECK(slurp(path("ta.spmw")) == slurp(path("tb.spmw")));
  CHECK(slurp(path("ta.csv")).rfind("step,recon_l1,spec_loss,latent_alpha_fit\n", 0) == 0);
  CHECK(value_of(a.out, "step") == 10);

  spit(path("noseed.cfg"), "image_size = 32\nfactor = 4\nsteps = 2\n");
  CHECK(call({"train", "--config", path("noseed.cfg")}).code == cli::kExitUsage);
  CHECK(call({"train", "--config", path("noseed.cfg"), "--seed", "1"}).code == 0);
  spit(path("unknown.cfg"), "learning_rat = 0.1\n");
  CHECK(call({"train", "--config", path("unknown.cfg"), "--seed", "1"}).code == cli::kExitIo);
  CHECK(call({"train", "--config", path("t.cfg"), "--lr", "1e200", "--objective", "plain"}).code ==
        cli::kExitCheckFailed);
  CHECK(call({"train", "--config", path("t.cfg"), "--objective", "gan"}).code == cli::kExitIo);
}

TEST_CASE("check suite") {
  const auto c = call({"check", "--all"});
  CHECK(c.code == 0);
  std::istringstream lines(c.out);
  std::string line;
  int pass = 0;
  while (std::getline(lines, line)) {
    CHECK(line.rfind("PASS ", 0) == 0);
    ++pass;
  }
  CHECK(pass == 5);
  CHECK(call({"check"}).code == cli::kExitUsage);
}

TEST_CASE("installed binary exit codes") {
  const char* bin = std::getenv("SPECMATCH_BIN");
  if (bin == nullptr) return;
  auto status = [&](const std::string& args) {
    const int raw = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("synth --seed 1 --size 16 --out " + path("bin.spmt")) == 0);
  CHECK(status("synth --seed 1") == 64);
  CHECK(status("psd " + path("missing.spmt")) == 2);
  CHECK(status("synth --seed 1 --size 12 --out " + path("bin.spmt")) == 65);
}
