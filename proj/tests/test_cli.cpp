#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(EXPERTUCB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("print-default-config round-trips through run") {
  TempDir dir("expertucb_cli_cfg");
  const auto cfg = dir.path / "default.ini";
  const std::string cmd = std::string(EXPERTUCB_CLI) + " print-default-config > " + cfg.string();
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(slurp(cfg).find("[schedule]") != std::string::npos);
  CHECK(run("analyze --config " + cfg.string()) == 0);
}

TEST_CASE("run writes the four outputs with the documented row counts") {
  TempDir dir("expertucb_cli_run");
  const auto out = dir.path / "out";
  REQUIRE(run("run --rounds 60 --reps 3 --seed 5 --out " + out.string()) == 0);
  for (const char* f : {"analysis.csv", "trace.csv", "aggregate.csv", "summary.txt"})
    CHECK(fs::exists(out / f));
  CHECK(lines(slurp(out / "trace.csv")) == 1 + 3 * 60);
  CHECK(lines(slurp(out / "aggregate.csv")) == 1 + 60);
}

TEST_CASE("identical invocations are byte-identical") {
  TempDir dir("expertucb_cli_det");
  const auto a = dir.path / "a", b = dir.path / "b";
  REQUIRE(run("run --rounds 100 --reps 2 --out " + a.string()) == 0);
  REQUIRE(run("run --rounds 100 --reps 2 --out " + b.string()) == 0);
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "aggregate.csv") == slurp(b / "aggregate.csv"));
  CHECK(slurp(a / "summary.txt") == slurp(b / "summary.txt"));
}

TEST_CASE("sweep and baseline subcommands") {
  TempDir dir("expertucb_cli_sweep");
  REQUIRE(run("sweep --t0 4,8 --rounds 40 --reps 1 --out " + dir.path.string()) == 0);
  CHECK(fs::exists(dir.path / "t0_4" / "trace.csv"));
  CHECK(fs::exists(dir.path / "t0_8" / "aggregate.csv"));
  CHECK(run("baseline --selector uniform --rounds 20 --reps 1") == 0);
  CHECK(run("baseline --selector ucb --rounds 20 --reps 1") == 2);
}

TEST_CASE("error categories map to exit codes") {
  TempDir dir("expertucb_cli_err");
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("run --config /nonexistent.ini") == 2);
  std::ofstream(dir.path / "bad.ini") << "[schedule]\nt0 = 0\n";
  CHECK(run("run --config " + (dir.path / "bad.ini").string()) == 2);
  std::ofstream(dir.path / "blocker") << "file";
  CHECK(run("analyze --out " + (dir.path / "blocker").string()) == 4);
  std::ofstream(dir.path / "periodic.ini") << "[grid]\nrows = SN\n[experts]\npermutations = 0,1,2,3\n[run]\nrounds = 4\n";
  CHECK(run("analyze --config " + (dir.path / "periodic.ini").string()) == 3);
}
