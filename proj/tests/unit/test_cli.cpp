#include <doctest.h>

#include <fstream>
#include <sstream>

#include "hideseek/checkpoint.hpp"
#include "hideseek/error.hpp"
#include "hideseek_cli/commands.hpp"
#include "hideseek_cli/config.hpp"
#include "support/helpers.hpp"

using namespace hideseek;
using namespace hideseek::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ErrorCode parse_error(const json& j, const fs::path& base) {
  try {
    parse_config(j, base);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected the config to be rejected");
  return ErrorCode::kIo;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = file_hash(e.path());
  return out;
}

json synthetic(int count, std::uint64_t seed) {
  return {{"synthetic", {{"count", count}, {"seed", seed}, {"width", 32}, {"height", 32}}}};
}

/// Small 32x32 pipeline shared by the command tests: tiny models trained once.
struct Pipeline {
  testing_support::TempDir dir{"cli"};
  json base;
  fs::path masker, generator, hsn;

  Pipeline() {
    base = {{"dataset", synthetic(4, 3)},
            {"image_size", {32, 32}},
            {"patch_size", 8},
            {"watermark", {{"scheme", "ss"}, {"bits", 16}, {"seed", 5}}},
            {"hsn", {{"epochs", 1}, {"architecture", {{"latent", 8}, {"depth", 1}, {"token_hidden", 8}, {"channel_hidden", 8}}}}},
            {"masker", {{"epochs", 1}, {"hidden", 2}}},
            {"generator", {{"epochs", 1}, {"queries_per_image", 2}, {"hidden", 8}, {"context_radius", 1}}}};
    masker = fs::path(run("train-masker", "masker")).parent_path() / "masker.ckpt.json";
    generator = fs::path(run("train-generator", "generator")).parent_path() / "generator.ckpt.json";
    hsn = fs::path(run("train-hsn", "hsn")).parent_path() / "hsn.ckpt.json";
  }

  fs::path run(const std::string& command, const std::string& out, json overrides = json::object()) {
    json j = base;
    j["output_dir"] = (dir.path() / out).string();
    for (auto& [k, v] : overrides.items()) j[k] = v;
    std::ostringstream sink;
    return run_command(command, parse_config(j, dir.path()), sink);
  }

  json checkpoints() const {
    return {{"masker", masker.string()}, {"generator", generator.string()}, {"hsn", hsn.string()}};
  }
};

Pipeline& pipeline() {
  static Pipeline p;
  return p;
}

}  // namespace

TEST_CASE("config parsing rejects bad input with configuration error codes") {
  testing_support::TempDir dir("cfg");
  const json ok = {{"dataset", synthetic(2, 1)}};
  CHECK_NOTHROW(parse_config(ok, dir.path()));

  json unknown = ok;
  unknown["betta"] = 0.5;
  CHECK(parse_error(unknown, dir.path()) == ErrorCode::kInvalidConfig);

  json beta = ok;
  beta["beta"] = 1.5;
  CHECK(parse_error(beta, dir.path()) == ErrorCode::kInvalidConfig);

  json threshold = ok;
  threshold["threshold"] = 1.0;
  CHECK(parse_error(threshold, dir.path()) == ErrorCode::kInvalidConfig);

  const json missing = {{"dataset", "no/such/dir"}};
  const ErrorCode code = parse_error(missing, dir.path());
  CHECK(exit_code_for(Error(code, "x")) == 2);

  CHECK(exit_code_for(Error(ErrorCode::kInvalidConfig, "x")) == 2);
  CHECK(exit_code_for(Error(ErrorCode::kCorruptData, "x")) == 1);
  const json e = error_json(Error(ErrorCode::kInvalidConfig, "bad", "beta"));
  CHECK(e.at("code") == "invalid_config");
  CHECK(e.at("message") == "bad");
  CHECK(e.at("context") == "beta");
}

TEST_CASE("config snapshots parse back to the same config") {
  testing_support::TempDir dir("cfg");
  const json j = {{"dataset", synthetic(2, 1)}, {"beta", 0.7}, {"lambdas", {1, 2, 3, 4, 5}}, {"seeds", {3, 4}},
                  {"output_dir", (dir.path() / "out").string()}};
  const ExperimentConfig c = parse_config(j, dir.path());
  CHECK(to_json(parse_config(to_json(c), dir.path())) == to_json(c));
}

TEST_CASE("verify-theorem reports every instance holding") {
  testing_support::TempDir dir("thm");
  const json j = {{"dataset", synthetic(1, 1)}, {"output_dir", (dir.path() / "out").string()}};
  std::ostringstream out;
  const fs::path manifest = run_command("verify-theorem", parse_config(j, dir.path()), out);
  CHECK(out.str().find("holds: 1000/1000") != std::string::npos);
  CHECK(lines_of(manifest.parent_path() / "theorem.csv").size() == 1001);
  const json m = read_json_file(manifest);
  CHECK(m.at("command") == "verify-theorem");
  CHECK(m.at("outputs").contains("theorem.csv"));
}

TEST_CASE("an attack with no hidden pixels leaves images byte-identical") {
  Pipeline& p = pipeline();
  const fs::path embed = p.run("embed", "embed").parent_path();
  json o = {{"attack", "hsplus"},
            {"eval_dataset", (embed / "watermarked").string()},
            {"watermark", {{"key", (embed / "key.json").string()}}},
            {"hidden_budget", 0},
            {"checkpoints", p.checkpoints()}};
  const fs::path out = p.run("attack", "noop", o).parent_path();
  for (const auto& e : fs::directory_iterator(embed / "watermarked")) {
    if (e.path().extension() != ".png") continue;
    const fs::path purged = out / "purged" / "hsplus_seed1" / e.path().filename();
    REQUIRE(fs::exists(purged));
    CHECK(slurp(purged) == slurp(e.path()));
  }
  const auto rows = lines_of(out / "summary.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "attack,seed,images,psnr,ssim,lpips,bit_acc,inv_dist,detect_rate");
  CHECK(rows[1].substr(rows[1].rfind(',')) == rows[2].substr(rows[2].rfind(',')));
}

TEST_CASE("ablate-masking covers the default sweep") {
  Pipeline& p = pipeline();
  const fs::path out = p.run("ablate-masking", "ablate", {{"checkpoints", p.checkpoints()}}).parent_path();
  const auto rows = lines_of(out / "ablate_masking.csv");
  REQUIRE(rows.size() == 16);
  for (const char* col : {"psnr", "ssim", "lpips", "bit_acc", "detect"}) CHECK(rows[0].find(col) != std::string::npos);
}

TEST_CASE("replaying a manifest reproduces every CSV") {
  Pipeline& p = pipeline();
  const fs::path manifest =
      p.run("attack", "replayed", {{"attack", "manipulation"}, {"manipulations", {"jpeg:70", "blur:1"}}});
  std::ostringstream out;
  const ReplayOutcome r = replay(manifest, p.dir.path() / "replayed-again", out);
  CHECK(r.compared >= 4);
  CHECK(r.mismatched.empty());
}

TEST_CASE("replay refuses changed inputs") {
  Pipeline& p = pipeline();
  testing_support::TempDir scratch("ckpt");
  const fs::path copy = scratch / "masker.ckpt.json";
  fs::copy_file(p.masker, copy);
  json cps = p.checkpoints();
  cps["masker"] = copy.string();
  const fs::path manifest = p.run("ablate-order", "order",
                                  {{"checkpoints", cps}, {"seeds", {1}}, {"hidden_budget", 4}, {"dataset", synthetic(1, 3)}});
  std::ofstream(copy, std::ios::app) << " ";
  std::ostringstream out;
  try {
    replay(manifest, std::nullopt, out);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kModelMismatch);
  }
}

TEST_CASE("evaluate never touches its inputs") {
  Pipeline& p = pipeline();
  const fs::path embed = p.run("embed", "embed-eval").parent_path();
  const fs::path originals = p.run("synth", "originals").parent_path() / "images";
  const auto before_eval = snapshot(embed);
  const auto before_ref = snapshot(originals);
  const auto before_ckpt = file_hash(p.masker);
  p.run("evaluate", "eval",
        {{"eval_dataset", (embed / "watermarked").string()},
         {"reference_dir", originals.string()},
         {"watermark", {{"key", (embed / "key.json").string()}}}});
  CHECK(snapshot(embed) == before_eval);
  CHECK(snapshot(originals) == before_ref);
  CHECK(file_hash(p.masker) == before_ckpt);
}
