#include "antgan/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace antgan {

using ordered_json = nlohmann::ordered_json;

void TrainConfig::validate() const {
    scale.validate();
    if (weights.lambda_cc < 0.0 || weights.lambda_am < 0.0)
        throw UsageError("lambda_cc/lambda_am must be >= 0");
    if (lr <= 0.0) throw UsageError("lr must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw UsageError("beta1/beta2 must be in [0,1)");
    if (eps <= 0.0) throw UsageError("eps must be > 0");
    if (iterations < 0) throw UsageError("iterations must be >= 0");
    if (buffer_capacity < 1) throw UsageError("buffer_capacity must be >= 1");
    if (checkpoint_every < 0) throw UsageError("checkpoint_every must be >= 0");
    if (dataset_path.empty()) throw UsageError("dataset_path is required");
}

namespace {

void check_keys(const ordered_json& j, std::initializer_list<const char*> allowed,
                const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known)
            throw UsageError("unknown config key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void read_into(const ordered_json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

TrainConfig config_from_json_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw UsageError(std::string("config JSON parse error: ") + e.what());
    }
    TrainConfig cfg;
    try {
        check_keys(j,
                   {"scale", "weights", "enable_shortcut", "enable_am", "enable_ac", "enable_nc",
                    "lr", "beta1", "beta2", "eps", "iterations", "buffer_capacity", "seed",
                    "checkpoint_every", "dataset_path", "out_dir"},
                   "config");
        if (j.contains("scale")) {
            const auto& s = j.at("scale");
            check_keys(s, {"image_size", "base_channels", "n_res_blocks"}, "scale");
            read_into(s, "image_size", cfg.scale.image_size);
            read_into(s, "base_channels", cfg.scale.base_channels);
            read_into(s, "n_res_blocks", cfg.scale.n_res_blocks);
        }
        if (j.contains("weights")) {
            const auto& w = j.at("weights");
            check_keys(w, {"lambda_cc", "lambda_am", "adv_form"}, "weights");
            read_into(w, "lambda_cc", cfg.weights.lambda_cc);
            read_into(w, "lambda_am", cfg.weights.lambda_am);
            if (w.contains("adv_form"))
                cfg.weights.adv_form = adv_form_from_string(w.at("adv_form").get<std::string>());
        }
        read_into(j, "enable_shortcut", cfg.enable_shortcut);
        read_into(j, "enable_am", cfg.enable_am);
        read_into(j, "enable_ac", cfg.enable_ac);
        read_into(j, "enable_nc", cfg.enable_nc);
        read_into(j, "lr", cfg.lr);
        read_into(j, "beta1", cfg.beta1);
        read_into(j, "beta2", cfg.beta2);
        read_into(j, "eps", cfg.eps);
        read_into(j, "iterations", cfg.iterations);
        read_into(j, "buffer_capacity", cfg.buffer_capacity);
        read_into(j, "seed", cfg.seed);
        read_into(j, "checkpoint_every", cfg.checkpoint_every);
        read_into(j, "dataset_path", cfg.dataset_path);
        read_into(j, "out_dir", cfg.out_dir);
    } catch (const ordered_json::exception& e) {
        throw UsageError(std::string("config JSON error: ") + e.what());
    }
    return cfg;
}

TrainConfig config_from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return config_from_json_text(ss.str());
}

namespace {
ordered_json config_json(const TrainConfig& cfg) {
    ordered_json j;
    j["scale"] = {{"image_size", cfg.scale.image_size},
                  {"base_channels", cfg.scale.base_channels},
                  {"n_res_blocks", cfg.scale.n_res_blocks}};
    j["weights"] = {{"lambda_cc", cfg.weights.lambda_cc},
                    {"lambda_am", cfg.weights.lambda_am},
                    {"adv_form", to_string(cfg.weights.adv_form)}};
    j["enable_shortcut"] = cfg.enable_shortcut;
    j["enable_am"] = cfg.enable_am;
    j["enable_ac"] = cfg.enable_ac;
    j["enable_nc"] = cfg.enable_nc;
    j["lr"] = cfg.lr;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["eps"] = cfg.eps;
    j["iterations"] = cfg.iterations;
    j["buffer_capacity"] = cfg.buffer_capacity;
    j["seed"] = cfg.seed;
    j["checkpoint_every"] = cfg.checkpoint_every;
    j["dataset_path"] = cfg.dataset_path;
    j["out_dir"] = cfg.out_dir;
    return j;
}
}  // namespace

std::string config_to_json(const TrainConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

std::string RunManifest::to_json() const {
    ordered_json j;
    j["config"] = config_json(config);
    j["seed"] = config.seed;
    j["tool_version"] = tool_version;
    char hex[32];
    std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(dataset_checksum));
    j["dataset_checksum"] = hex;
    j["outputs"] = outputs;
    return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw IoError("write failed for '" + path + "'");
}

void make_directories(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory '" + path + "': " + ec.message());
}

}  // namespace antgan
