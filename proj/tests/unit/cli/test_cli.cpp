#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"
#include "fgan/cli/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the installed executable so exit codes and streams are the real process ones.
Outcome run_fgan(const std::string& args) {
  static int counter = 0;
  const fs::path base = fs::temp_directory_path() / ("fgan_cli_io_" + std::to_string(counter++));
  const std::string cmd = std::string(FGAN_CLI_PATH) + " " + args + " >" + base.string() + ".out 2>" + base.string() + ".err";
  const int status = std::system(cmd.c_str());
  Outcome o{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(base.string() + ".out"), slurp(base.string() + ".err")};
  fs::remove(base.string() + ".out");
  fs::remove(base.string() + ".err");
  return o;
}

fs::path fresh(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> v;
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) v.push_back(l);
  return v;
}

std::string dir_bytes(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += fs::relative(f, dir).string() + "\n" + slurp(f);
  return all;
}

}  // namespace

TEST_CASE("usage errors exit 2 and print help; help exits 0") {
  const auto unknown = run_fgan("prepare-data --out /tmp/x --no-such-flag");
  CHECK(unknown.code == fgan::cli::kExitUsage);
  CHECK(unknown.err.find("Usage:") != std::string::npos);

  CHECK(run_fgan("").code == fgan::cli::kExitUsage);
  CHECK(run_fgan("prepare-data").code == fgan::cli::kExitUsage);  // --out is required
  CHECK(run_fgan("evaluate --pred p.jsonl").code == fgan::cli::kExitUsage);

  const auto help = run_fgan("--help");
  CHECK(help.code == fgan::cli::kExitOk);
  CHECK(help.out.find("train-recognizer") != std::string::npos);
}

TEST_CASE("domain errors exit 1") {
  const fs::path dir = fresh("fgan_cli_bad_config");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"recognizer": {"not_a_field": 1}})";
  const auto r = run_fgan("--config " + (dir / "c.json").string() + " train-recognizer --data " + dir.string() + " --out " +
                      (dir / "run").string());
  CHECK(r.code == fgan::cli::kExitDomainError);
  CHECK(r.err.find("not_a_field") != std::string::npos);
  CHECK(run_fgan("--renderer ftp prepare-data --out " + (dir / "d").string()).code == fgan::cli::kExitDomainError);
  fs::remove_all(dir);
}

TEST_CASE("prepare-data writes a manifest, images and a vocabulary, deterministically under --seed") {
  const fs::path a = fresh("fgan_cli_prep_a"), b = fresh("fgan_cli_prep_b"), c = fresh("fgan_cli_prep_c");
  const auto ra = run_fgan("--seed 11 prepare-data --limit 12 --out " + a.string());
  REQUIRE(ra.code == 0);
  CHECK(ra.out.find("wrote 12 images") != std::string::npos);
  const auto manifest = lines(a / "manifest.jsonl");
  CHECK(manifest.size() == 12);
  CHECK(fs::exists(a / "vocab.txt"));
  CHECK(std::distance(fs::directory_iterator(a / "images"), fs::directory_iterator{}) == 12);
  CHECK(manifest[0].find("\"domain\":\"rendered\"") != std::string::npos);

  REQUIRE(run_fgan("--seed 11 --workers 3 prepare-data --limit 12 --out " + b.string()).code == 0);
  CHECK(dir_bytes(a) == dir_bytes(b));
  REQUIRE(run_fgan("--seed 12 prepare-data --limit 12 --out " + c.string()).code == 0);
  CHECK(dir_bytes(a) != dir_bytes(c));

  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("evaluate scores a prediction file against a hand-checked fixture") {
  const fs::path dir = fresh("fgan_cli_eval");
  fs::create_directories(dir / "truth");
  // References: "a + b", "x", "y ^ 2" (7 tokens).  Hypotheses: exact, one insertion, one deletion.
  std::ofstream(dir / "truth" / "manifest.jsonl")
      << R"({"domain":"rendered","height":16,"id":"p","image":"images/p.png","latex":"a+b","token_ids":[4,5,6],"tokens":["a","+","b"],"width":16})"
      << "\n"
      << R"({"domain":"rendered","height":16,"id":"q","image":"images/q.png","latex":"x","token_ids":[7],"tokens":["x"],"width":16})"
      << "\n"
      << R"({"domain":"rendered","height":16,"id":"r","image":"images/r.png","latex":"y^2","token_ids":[8,9,10],"tokens":["y","^","2"],"width":16})"
      << "\n";
  std::ofstream(dir / "pred.jsonl") << R"({"id":"p","tokens":["a","+","b"]})" << "\n"
                                    << R"({"id":"q","tokens":["x","x"]})" << "\n"
                                    << R"({"id":"r","tokens":["y","2"]})" << "\n";
  const auto r = run_fgan("evaluate --pred " + (dir / "pred.jsonl").string() + " --truth " + (dir / "truth").string() +
                      " --out " + (dir / "report").string());
  REQUIRE(r.code == 0);
  const auto csv = lines(dir / "report" / "report.csv");
  REQUIRE(csv.size() == 2);
  CHECK(csv[0] == "name,perplexity,wer,exprate,n_samples");
  CHECK(csv[1].rfind("predictions,,0.2857142857,33.33333333,3", 0) == 0);
  CHECK(fs::exists(dir / "report" / "report.txt"));
  fs::remove_all(dir);
}

TEST_CASE("a short pipeline runs end to end and repeats byte for byte") {
  const fs::path root = fresh("fgan_cli_pipeline");
  fs::create_directories(root);
  std::ofstream(root / "gan.json") << R"({"gan": {"model_preset": "tiny", "task_preset": "compact",
      "input_height": 32, "max_width": 128, "batch_size": 2},
      "recognizer": {"preset": "compact", "normalize_mode": "symbol-height", "symbol_height": 16,
      "batch_size": 2, "steps_per_epoch": 2, "bn_batches": 2}})";
  const std::string cfg = "--config " + (root / "gan.json").string();

  auto pipeline = [&](const fs::path& dir) {
    const std::string d = dir.string();
    REQUIRE(run_fgan("--seed 5 " + cfg + " train-gan --limit 24 --iterations 3 --out " + d + "/gan").code == 0);
    REQUIRE(run_fgan("--seed 5 synthesize --checkpoint " + d + "/gan/gan.ckpt --limit 6 --height 32 --out " + d + "/synth").code ==
            0);
    REQUIRE(run_fgan("--seed 5 sample-grid --checkpoint " + d + "/gan/gan.ckpt --formula 'x+1' --formula 'a^{2}' --height 32 --out " +
                 d + "/grid.png")
                .code == 0);
    REQUIRE(run_fgan("--seed 5 " + cfg + " train-recognizer --data " + d + "/synth --steps 4 --out " + d + "/rec").code == 0);
    const auto ev = run_fgan("evaluate --checkpoint " + d + "/rec/best.ckpt --data " + d + "/synth --beam 2 --normalize symbol-height --symbol-height 16 --out " + d + "/eval");
    REQUIRE(ev.code == 0);
    const auto csv = lines(dir / "eval" / "report.csv");
    REQUIRE(csv.size() == 2);
    CHECK(csv[1].rfind("symbol-height,", 0) == 0);
  };

  pipeline(root / "one");
  pipeline(root / "two");
  for (const char* f : {"gan/gan.ckpt", "synth/manifest.jsonl", "grid.png", "rec/best.ckpt", "eval/report.csv"})
    CHECK_MESSAGE(slurp(root / "one" / f) == slurp(root / "two" / f), f);
  CHECK(lines(root / "one" / "synth" / "manifest.jsonl").size() == 6);
  fs::remove_all(root);
}
