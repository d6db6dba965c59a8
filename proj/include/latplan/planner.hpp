#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "latplan/ama1.hpp"
#include "latplan/bitvec.hpp"

namespace latplan {

class AaeModel;
class Discriminator;
class SaeModel;

struct Successor {
    std::size_t action = 0;
    BitVector state;
};

using SuccessorFn = std::function<std::vector<Successor>(const BitVector&)>;
using HeuristicFn = std::function<int(const BitVector&)>;

enum class SearchStatus { solved, timeout, exhausted };
std::string to_string(SearchStatus s);

struct SearchLimits {
    double time_seconds = 180.0;
    std::size_t max_expansions = std::numeric_limits<std::size_t>::max();
};

struct PlanResult {
    SearchStatus status = SearchStatus::exhausted;
    std::vector<BitVector> states;     // init .. goal when solved
    std::vector<std::size_t> actions;  // states.size() - 1 entries
    std::size_t expanded = 0;
    std::size_t generated = 0;
    double wall_seconds = 0.0;

    std::size_t length() const { return actions.size(); }
};

/// Hamming distance; throws std::invalid_argument on length mismatch.
int goal_count(const BitVector& s, const BitVector& g);

/// Best-first search on f = g + h with unit costs. Ties: larger g, then insertion order.
/// Duplicate detection is exact bitvector equality; closed states are never reopened.
PlanResult astar(const BitVector& init, const BitVector& goal, const SuccessorFn& succ, const HeuristicFn& h,
                 const SearchLimits& limits = {});

/// Every applicable action with its successor.
std::vector<Successor> succ_strips(const BitVector& s, const StripsProblem& problem, const ActionIndex& index);

/// Five-filter successor generator over the learned action model.
struct SuccConfig {
    const AaeModel* aae = nullptr;
    const Discriminator* ad = nullptr;
    const Discriminator* sd = nullptr;
    const SaeModel* sae = nullptr;
    double ad_threshold = 0.5;
    double sd_threshold = 0.5;
    bool use_ad = true;
    bool use_sd = true;
    bool use_sae_stability = true;
    bool use_aae_stability = true;
    /// Applies the SAE stability test to the expanded state s instead of the candidate t.
    bool sae_filter_on_source = false;
};

/// Candidates t = apply(a, s) for every used label a, filtered; duplicates keep the
/// smallest label. Throws std::invalid_argument when a required model is missing.
std::vector<Successor> succ_ama2(const BitVector& s, const SuccConfig& cfg);

/// Replays the plan through succ and checks that it ends at the goal.
bool replay_plan(const PlanResult& plan, const BitVector& goal, const SuccessorFn& succ);

}  // namespace latplan
