#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "pcpq/io.hpp"

// End-to-end checks of the command-line tool: exit codes and file plumbing.
// PCPQ_CLI_PATH is injected by the build so the test can find the binary.

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(PCPQ_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "pcpq_cli_suite") {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("pipeline runs end to end with exit code 0") {
  TempDir dir;
  CHECK(run("gen --n 420 --d 16 --dist clustered --seed 5 --holdout 20 --out " +
            (dir / "base.fvecs") + " --queries-out " + (dir / "q.fvecs")) == 0);
  CHECK(pcpq::read_fvecs(dir / "base.fvecs").rows == 400);
  CHECK(pcpq::read_fvecs(dir / "q.fvecs").rows == 20);

  CHECK(run("ground-truth --data " + (dir / "base.fvecs") + " --queries " +
            (dir / "q.fvecs") + " --topN 5 --out " + (dir / "gt.ivecs")) == 0);

  CHECK(run("build --data " + (dir / "base.fvecs") +
            " --method apcpq --quantize-scalars --m 4 --k 8 --s 4 --seed 3 --out " +
            (dir / "flat.idx")) == 0);
  CHECK(run("query --index " + (dir / "flat.idx") + " --queries " + (dir / "q.fvecs") +
            " --topN 5 --out " + (dir / "res.ivecs") + " --ground-truth " +
            (dir / "gt.ivecs")) == 0);
  CHECK(run("eval --results " + (dir / "res.ivecs") + " --ground-truth " +
            (dir / "gt.ivecs") + " --data " + (dir / "base.fvecs") + " --queries " +
            (dir / "q.fvecs") + " --recall-at 1,5 --report " + (dir / "rep.json")) == 0);
  CHECK(fs::exists(dir / "rep.json"));
  CHECK(fs::exists(dir / "rep.csv"));

  // The IVF route through the same surface.
  CHECK(run("build --data " + (dir / "base.fvecs") +
            " --method pcpq --quantize-scalars --m 4 --k 8 --s 4 --ivf-kbar 4 --seed 3 "
            "--out " +
            (dir / "ivf.idx")) == 0);
  CHECK(run("query --index " + (dir / "ivf.idx") + " --queries " + (dir / "q.fvecs") +
            " --kprobe 2 --topN 5 --out " + (dir / "res2.ivecs")) == 0);
}

TEST_CASE("usage problems exit 2") {
  TempDir dir;
  CHECK(run("definitely-not-a-subcommand") == 2);
  CHECK(run("build --data x.fvecs --method upside-down --out y.idx") == 2);
  CHECK(run("gen --n 10 --d 4 --dist clustered --seed 1 --holdout 10 --out " +
            (dir / "a.fvecs") + " --queries-out " + (dir / "b.fvecs")) == 2);
  CHECK(run("gen --n 10 --d 4 --dist clustered --seed 1 --holdout 2 --out " +
            (dir / "a.fvecs")) == 2);  // holdout without --queries-out
  CHECK(run("eval --results a --ground-truth b --data c --queries d --recall-at 1,zebra "
            "--report e.json") == 2);
}

TEST_CASE("data problems exit 3") {
  TempDir dir;
  CHECK(run("build --data " + (dir / "missing.fvecs") +
            " --method pcpq --m 2 --k 4 --out " + (dir / "x.idx")) == 3);
  {
    std::ofstream junk(dir / "junk.idx", std::ios::binary);
    junk << "NOTANIDX________________";
  }
  CHECK(run("query --index " + (dir / "junk.idx") + " --queries " + (dir / "junk.idx") +
            " --topN 3 --out " + (dir / "y.ivecs")) == 3);
}

}  // TEST_SUITE
