#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latplan/ama1.hpp"
#include "latplan/ama2.hpp"
#include "latplan/domains.hpp"
#include "latplan/planner.hpp"
#include "latplan/sae.hpp"

namespace latplan {

struct DatasetConfig {
    std::size_t transitions = 0;  // 0 = every ground-truth transition
    double val_fraction = 0.1;
};

/// Distinct states plus transitions between them, split into train and validation.
struct Dataset {
    DomainParams params;
    std::vector<PuzzleState> states;  // ascending domain index
    std::vector<std::pair<std::uint32_t, std::uint32_t>> transitions;
    std::vector<std::uint32_t> train, val;  // indices into transitions

    Tensor images(const Domain& d) const;
    /// States touched by at least one training transition.
    std::vector<std::uint32_t> train_states() const;
};

Dataset generate_dataset(const Domain& d, const DomainParams& params, const DatasetConfig& cfg, nd::RngStream& rng);
/// dataset.json (states, transitions, split) and images.lpt (one rendering per state).
void save_dataset(const Dataset& ds, const Domain& d, const std::string& dir);
Dataset load_dataset(const std::string& dir);

/// Encode plus one Encode(Decode(.)) round.
std::vector<BitVector> encode_images(const SaeModel& sae, const Tensor& images);

SaeModel train_sae_stage(const Dataset& ds, const Domain& d, const SaeConfig& cfg, nd::RngStream& rng,
                         const EpochCallback& on_epoch = {});

/// Compiles every dataset transition under the given state codes.
StripsProblem build_ama1(const Dataset& ds, const std::vector<BitVector>& codes);

std::vector<BitPair> code_transitions(const Dataset& ds, const std::vector<BitVector>& codes,
                                      const std::vector<std::uint32_t>& which);

struct SdStageConfig {
    PuConfig pu;
    DiscArch arch = sd_architecture();
    int k_iters = 2;
    double mixed_factor = 4.0;  // mixed count relative to positives
};

struct AdStageConfig {
    PuConfig pu;
    std::vector<DiscArch> archs = ad_architectures();
    bool sd_pruning = true;
    bool xor_features = true;
    double mixed_ratio = 1.0;  // mixed examples kept per positive; 0 keeps all
};

Discriminator train_sd_stage(const SaeModel& sae, const std::vector<BitVector>& positives, const SdStageConfig& cfg,
                             nd::RngStream& rng, PuReport* report = nullptr);
Discriminator train_ad_stage(const AaeModel& aae, const Discriminator* sd, const std::vector<BitPair>& positives,
                             const AdStageConfig& cfg, nd::RngStream& rng, PuReport* report = nullptr);

enum class Method { ama1, ama2 };
enum class Noise { none, gaussian, saltpepper };
std::string to_string(Method m);
std::string to_string(Noise n);
Method parse_method(const std::string& s);
Noise parse_noise(const std::string& s);

/// Gaussian sigma 0.3 or salt/pepper p 0.06; none returns the input.
Tensor corrupt(const Tensor& image, Noise noise, nd::RngStream& rng);

struct PlannerSetup {
    Method method = Method::ama1;
    const Domain* domain = nullptr;
    const SaeModel* sae = nullptr;
    const StripsProblem* problem = nullptr;  // ama1
    const ActionIndex* index = nullptr;      // ama1
    SuccConfig succ;                         // ama2
    SearchLimits limits;
};

struct InstanceReport {
    std::size_t id = 0;
    PuzzleState init, goal;
    int optimal_length = -1;
    PlanResult plan;
    std::vector<std::optional<PuzzleState>> decoded;
    bool valid = false;  // decoded plan passes the ground-truth validator

    bool solved() const { return plan.status == SearchStatus::solved; }
    bool optimal() const { return valid && static_cast<int>(plan.length()) == optimal_length; }
};

/// Encodes the (corrupted) endpoint images, searches, decodes and validates the plan.
/// optimal_length < 0 leaves the optimality field unset.
InstanceReport solve_instance(const PlannerSetup& setup, const Instance& inst, Noise noise, nd::RngStream& rng,
                              int optimal_length = -1);

struct EvalReport {
    Method method = Method::ama1;
    Noise noise = Noise::none;
    int walk_length = 0;
    std::vector<InstanceReport> instances;
    std::optional<ErrorRates> sd_errors, ad_errors;

    std::size_t solved() const;
    std::size_t valid() const;
    std::size_t optimal() const;
};

/// Instances run on up to `threads` workers; reports stay ordered by instance id.
EvalReport evaluate(const PlannerSetup& setup, const std::vector<Instance>& instances, Noise noise,
                    std::uint64_t seed, unsigned threads = 1);

/// LATENTPLAN_THREADS when set and positive, otherwise the hardware concurrency.
unsigned worker_threads();

/// state_codes are indexed by domain state index. Valid: codes of every state. Invalid: random vectors whose decoding classifies as no state.
ErrorRates sd_error_rates(const Discriminator& sd, const SaeModel& sae, const Domain& d,
                          const std::vector<BitVector>& state_codes, std::size_t invalid_samples, nd::RngStream& rng);
/// Valid: every ground-truth transition. Invalid: sampled pairs of valid states that are not adjacent.
ErrorRates ad_error_rates(const Discriminator& ad, const Domain& d, const std::vector<BitVector>& state_codes,
                          std::size_t invalid_samples, nd::RngStream& rng);

std::string report_json(const EvalReport& r, const DomainParams& params);
std::string plan_json(const InstanceReport& r, const DomainParams& params, const Domain& d);

struct PlanCheck {
    bool valid = false;
    std::string reason;
};
/// Re-checks a plan file: decoded states must form a ground-truth path from init to goal.
PlanCheck validate_plan_json(const std::string& text);

DomainParams domain_params_from_json(const std::string& text);
std::string to_json(const DomainParams& p);

}  // namespace latplan
