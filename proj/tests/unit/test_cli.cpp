#include "fixtures.hpp"

#include "tinstitch/cli.hpp"
#include "tinstitch/image.hpp"
#include "tinstitch/models.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace tinstitch;

namespace {

struct Run
{
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args)
{
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s)
{
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

struct Workdir
{
  std::string dir = fixture::scratch_dir("cli");
  std::string content = dir + "/content.png";
  std::string style = dir + "/style.png";

  Workdir()
  {
    save_png(make_natural_image(200, 150, 1), content);
    save_png(make_lit_texture_image(64, 64, 2), style);
    const Run r = run({"make-models", "--dir", dir + "/models", "--width", "4"});
    REQUIRE(r.code == kExitOk);
  }
  std::string model(const std::string& stem, const std::string& ext) const { return dir + "/models/" + stem + ext; }
};

const Workdir& workdir()
{
  static const Workdir w;
  return w;
}

} // namespace

TEST_CASE("stylize with documented defaults")
{
  const Workdir& w = workdir();
  const std::string out = w.dir + "/out.png";
  const Run r = run({"stylize", "--content", w.content, "--style", w.style, "--out", out, "--graph",
                     w.model("toy_tin", ".json"), "--weights", w.model("toy_tin", ".urstw"), "--patch-size", "1064",
                     "--stride", "1000", "--thumb", "1024"});
  INFO(r.err);
  CHECK(r.code == kExitOk);
  const Image img = load_png(out);
  CHECK(img.width == 200);
  CHECK(img.height == 150);
}

TEST_CASE("stylize writes metrics for an adain graph")
{
  const Workdir& w = workdir();
  const std::string metrics = w.dir + "/metrics.json";
  const Run r = run({"stylize", "--content", w.content, "--style", w.style, "--out", w.dir + "/adain.png", "--graph",
                     w.model("reference_adain", ".json"), "--weights", w.model("reference_adain", ".urstw"),
                     "--patch-size", "96", "--stride", "64", "--thumb", "96", "--style-size", "64", "--alpha", "0.7",
                     "--metrics", metrics});
  INFO(r.err);
  REQUIRE(r.code == kExitOk);
  std::ifstream f(metrics);
  const auto j = nlohmann::json::parse(f);
  CHECK(j.contains("l_sp"));
  CHECK(j.contains("gram_consistency"));
}

TEST_CASE("plain instance norm is a hazard")
{
  const Workdir& w = workdir();
  const std::vector<std::string> base = {"stylize", "--content", w.content, "--style", w.style, "--out",
                                         w.dir + "/in.png", "--graph", w.model("toy_in", ".json"), "--weights",
                                         w.model("toy_in", ".urstw"), "--patch-size", "96", "--stride", "64",
                                         "--thumb", "150"};
  const Run refused = run(base);
  CHECK(refused.code == kExitHazard);
  CHECK(refused.err.find("statistics") != std::string::npos);

  auto allowed = base;
  allowed.push_back("--allow-in");
  CHECK(run(allowed).code == kExitOk);
}

TEST_CASE("usage and file errors")
{
  const Workdir& w = workdir();
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"stylize", "--content", w.content}).code == kExitUsage);
  CHECK(run({"stylize", "--content", w.dir + "/missing.png", "--style", w.style, "--out", w.dir + "/x.png",
             "--graph", w.model("toy_tin", ".json"), "--weights", w.model("toy_tin", ".urstw")})
          .code == kExitUsage);
  CHECK(run({"stylize", "--content", w.content, "--style", w.style, "--out", w.dir + "/x.png", "--graph",
             w.model("toy_tin", ".json"), "--weights", w.model("toy_tin", ".urstw"), "--patch-size", "64",
             "--stride", "64"})
          .code == kExitUsage);
  CHECK(run({"seam-check", "--patch-size", "32", "--stride", "48"}).code == kExitUsage);
  CHECK(run({"stats-sweep", "--content", w.content, "--probes", "nope"}).code == kExitUsage);
}

TEST_CASE("seam check")
{
  const Workdir& w = workdir();
  const std::string plan = w.dir + "/plan.json";
  const Run r = run({"seam-check", "--size", "160", "--patch-size", "64", "--stride", "48", "--plan", plan});
  INFO(r.err);
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("seam check passed") != std::string::npos);
  std::ifstream f(plan);
  CHECK(nlohmann::json::parse(f)["windows"].size() == 9);

  const Run in = run({"seam-check", "--size", "160", "--patch-size", "64", "--stride", "48", "--allow-in"});
  CHECK(in.code == kExitOk);
  CHECK(in.out.find("gram ratio in/tin") != std::string::npos);
  CHECK(in.err.find("warning") != std::string::npos);
}

TEST_CASE("stats sweep csv")
{
  const Workdir& w = workdir();
  const std::string csv = w.dir + "/sweep.csv";
  const Run r = run({"stats-sweep", "--content", w.content, "--out", csv, "--scales", "32,64,96,128,150"});
  INFO(r.err);
  REQUIRE(r.code == kExitOk);
  std::ifstream f(csv);
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  CHECK(count_lines(text) == 1 + 5 * 4);
  CHECK(r.out.find("convergence") != std::string::npos);

  const Run d = run({"stats-sweep", "--content", w.content});
  CHECK(d.code == kExitOk);
  CHECK(count_lines(d.out) >= 1 + 5 * 4);
}

TEST_CASE("mem report")
{
  const Run r = run({"mem-report"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("resolution,") == 0);
  CHECK(count_lines(r.out) == 11);

  const Run s = run({"mem-report", "--sizes", "1000,2000", "--batch", "2"});
  CHECK(s.code == kExitOk);
  CHECK(count_lines(s.out) == 3);
}

TEST_CASE("thread override")
{
  const Workdir& w = workdir();
  ::setenv("TINSTITCH_THREADS", "2", 1);
  const Run r = run({"stylize", "--content", w.content, "--style", w.style, "--out", w.dir + "/t.png", "--graph",
                     w.model("toy_tin", ".json"), "--weights", w.model("toy_tin", ".urstw"), "--patch-size", "96",
                     "--stride", "64", "--thumb", "150"});
  ::unsetenv("TINSTITCH_THREADS");
  CHECK(r.code == kExitOk);
  const Run r1 = run({"stylize", "--content", w.content, "--style", w.style, "--out", w.dir + "/t1.png", "--graph",
                      w.model("toy_tin", ".json"), "--weights", w.model("toy_tin", ".urstw"), "--patch-size", "96",
                      "--stride", "64", "--thumb", "150"});
  CHECK(load_png(w.dir + "/t.png").rgb == load_png(w.dir + "/t1.png").rgb);

  ::setenv("TINSTITCH_THREADS", "zero", 1);
  const Run bad = run({"mem-report"});
  ::unsetenv("TINSTITCH_THREADS");
  CHECK(bad.code == kExitOk);
  CHECK(bad.err.find("ignoring TINSTITCH_THREADS") != std::string::npos);
}
