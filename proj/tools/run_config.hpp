#pragma once

#include <cstdint>
#include <string>

#include "latplan/pipeline.hpp"

namespace latplan::cli {

/// Everything a run needs; any field missing from the JSON keeps its default.
struct RunConfig {
    DomainParams domain;
    std::uint64_t seed = 1;
    DatasetConfig dataset;
    SaeConfig sae;
    AaeConfig aae;
    SdStageConfig sd;
    AdStageConfig ad;
    double time_limit = 180.0;
    std::size_t instances = 100;
};

RunConfig load_run_config(const std::string& path);  // empty path -> defaults
RunConfig parse_run_config(const std::string& text);
std::string dump_run_config(const RunConfig& cfg);

// Stream ids forked from the run seed, one per stage.
enum Stream : std::uint64_t { gen_data = 1, sae = 2, aae = 3, sd = 4, ad = 5, instances = 6, noise = 7, visual = 8 };

}  // namespace latplan::cli
