#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "antgan/cli.hpp"
#include "antgan/config.hpp"

using namespace antgan;

namespace {

std::string work_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "antgan_cli_test" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string read_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("usage errors exit 1") {
    CHECK(run_cli({"no-such-command"}) == 1);
    CHECK(run_cli({"gen-data", "--bogus-flag", "1"}) == 1);
    CHECK(run_cli({"gen-data"}) == 1);  // missing --out
    CHECK(run_cli({}) == 1);
}

TEST_CASE("gen-data is deterministic through the CLI") {
    const std::string dir = work_dir("gen");
    CHECK(run_cli({"gen-data", "--seed", "1", "--normal", "5", "--abnormal", "5", "--size", "16",
                   "--out", dir + "/a.antd"}) == 0);
    CHECK(run_cli({"gen-data", "--seed", "1", "--normal", "5", "--abnormal", "5", "--size", "16",
                   "--out", dir + "/b.antd"}) == 0);
    CHECK(read_bytes(dir + "/a.antd") == read_bytes(dir + "/b.antd"));
}

TEST_CASE("missing input files exit 3") {
    const std::string dir = work_dir("io");
    CHECK(run_cli({"evaluate", "--checkpoint", dir + "/none.antw", "--dataset", dir + "/none.antd",
                   "--out-dir", dir}) == 3);
    CHECK(run_cli({"train", "--dataset", dir + "/none.antd", "--out-dir", dir, "--iterations",
                   "1"}) == 3);
}

TEST_CASE("config file merged with flag overrides; manifest written first") {
    const std::string dir = work_dir("cfg");
    REQUIRE(run_cli({"gen-data", "--seed", "1", "--normal", "5", "--abnormal", "5", "--size", "16",
                     "--out", dir + "/d.antd"}) == 0);

    TrainConfig base;
    base.scale = {16, 4, 1};
    base.iterations = 3;
    base.seed = 11;
    base.dataset_path = dir + "/d.antd";
    base.out_dir = dir + "/run";
    write_text_file(dir + "/cfg.json", config_to_json(base));

    CHECK(run_cli({"train", "--config", dir + "/cfg.json", "--iterations", "1"}) == 0);
    const std::string manifest = read_bytes(dir + "/run/manifest.json");
    CHECK(manifest.find("\"iterations\": 1") != std::string::npos);  // flag beat the file
    CHECK(manifest.find("\"seed\": 11") != std::string::npos);
    CHECK(manifest.find("fnv1a64:") != std::string::npos);
    CHECK(std::filesystem::exists(dir + "/run/losses.csv"));
    CHECK(std::filesystem::exists(dir + "/run/model_final.antw"));
}

TEST_CASE("config parser rejects unknown keys and bad values") {
    CHECK_THROWS_AS(config_from_json_text("{\"lr\": 1e-4, \"typo_key\": 3}"), UsageError);
    CHECK_THROWS_AS(config_from_json_text("{\"scale\": {\"imagesize\": 64}}"), UsageError);
    CHECK_THROWS_AS(config_from_json_text("not json"), UsageError);
    CHECK_THROWS_AS(config_from_json_text("{\"weights\": {\"adv_form\": \"huber\"}}"), UsageError);
    TrainConfig cfg = config_from_json_text(
        "{\"weights\": {\"adv_form\": \"log\", \"lambda_cc\": 5.0}, \"enable_am\": false}");
    CHECK(cfg.weights.adv_form == AdvForm::log_form);
    CHECK(cfg.weights.lambda_cc == 5.0);
    CHECK(cfg.enable_am == false);
    CHECK(cfg.weights.lambda_am == 10.0);  // untouched default
}

TEST_CASE("numeric divergence exits 2") {
    const std::string dir = work_dir("div");
    REQUIRE(run_cli({"gen-data", "--seed", "1", "--normal", "5", "--abnormal", "5", "--size", "16",
                     "--out", dir + "/d.antd"}) == 0);
    CHECK(run_cli({"train", "--dataset", dir + "/d.antd", "--out-dir", dir + "/run",
                   "--image-size", "16", "--base-channels", "4", "--res-blocks", "1",
                   "--iterations", "5", "--lr", "1e20"}) == 2);
}

TEST_CASE("grad-check subcommand exits 0") {
    CHECK(run_cli({"grad-check"}) == 0);
}

TEST_SUITE_END();
