#include "run_config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace latplan::cli {

using json = nlohmann::json;

namespace {

template <class T>
void take(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

void read_pu(const json& j, PuConfig& pu) {
    take(j, "lr", pu.lr);
    take(j, "batch_size", pu.batch_size);
    take(j, "epochs", pu.max_epochs);
    take(j, "patience", pu.patience);
    take(j, "train_fraction", pu.train_fraction);
}

json pu_json(const PuConfig& pu) {
    return {{"lr", pu.lr}, {"batch_size", pu.batch_size}, {"epochs", pu.max_epochs}, {"patience", pu.patience},
            {"train_fraction", pu.train_fraction}};
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    const json j = json::parse(text);
    RunConfig c;
    if (j.contains("domain")) c.domain = domain_params_from_json(j.at("domain").dump());
    take(j, "seed", c.seed);
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        take(d, "transitions", c.dataset.transitions);
        take(d, "val_fraction", c.dataset.val_fraction);
    }
    if (j.contains("sae")) {
        json merged = json::parse(to_json(c.sae));
        merged.update(j.at("sae"));
        c.sae = sae_config_from_json(merged.dump());
    }
    if (j.contains("aae")) {
        const json& a = j.at("aae");
        take(a, "labels", c.aae.labels);
        take(a, "hidden", c.aae.hidden);
        take(a, "dropout", c.aae.dropout);
        take(a, "epochs", c.aae.epochs);
        take(a, "batch_size", c.aae.batch_size);
        take(a, "lr", c.aae.lr);
        take(a, "tau0", c.aae.tau0);
        take(a, "tau_min", c.aae.tau_min);
        take(a, "kl_weight", c.aae.kl_weight);
    }
    if (j.contains("sd")) {
        const json& s = j.at("sd");
        read_pu(s, c.sd.pu);
        take(s, "k_iters", c.sd.k_iters);
        take(s, "mixed_factor", c.sd.mixed_factor);
    }
    if (j.contains("ad")) {
        const json& a = j.at("ad");
        read_pu(a, c.ad.pu);
        take(a, "sd_pruning", c.ad.sd_pruning);
        take(a, "xor_features", c.ad.xor_features);
        take(a, "mixed_ratio", c.ad.mixed_ratio);
    }
    if (j.contains("solve")) {
        take(j.at("solve"), "time_limit", c.time_limit);
        take(j.at("solve"), "instances", c.instances);
    }
    c.aae.bits = c.sae.latent_bits;
    return c;
}

RunConfig load_run_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_run_config(os.str());
}

std::string dump_run_config(const RunConfig& c) {
    json j;
    j["domain"] = json::parse(to_json(c.domain));
    j["seed"] = c.seed;
    j["dataset"] = {{"transitions", c.dataset.transitions}, {"val_fraction", c.dataset.val_fraction}};
    j["sae"] = json::parse(to_json(c.sae));
    j["aae"] = {{"labels", c.aae.labels},   {"hidden", c.aae.hidden}, {"dropout", c.aae.dropout},
                {"epochs", c.aae.epochs},   {"batch_size", c.aae.batch_size}, {"lr", c.aae.lr},
                {"tau0", c.aae.tau0},       {"tau_min", c.aae.tau_min}, {"kl_weight", c.aae.kl_weight}};
    j["sd"] = pu_json(c.sd.pu);
    j["sd"]["k_iters"] = c.sd.k_iters;
    j["sd"]["mixed_factor"] = c.sd.mixed_factor;
    j["ad"] = pu_json(c.ad.pu);
    j["ad"]["sd_pruning"] = c.ad.sd_pruning;
    j["ad"]["xor_features"] = c.ad.xor_features;
    j["ad"]["mixed_ratio"] = c.ad.mixed_ratio;
    j["solve"] = {{"time_limit", c.time_limit}, {"instances", c.instances}};
    return j.dump(2) + "\n";
}

}  // namespace latplan::cli
