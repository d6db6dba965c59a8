#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "latplan/bitvec.hpp"

namespace latplan {

/// Ground atom "b{bit}-true" or "b{bit}-false".
struct Proposition {
    std::size_t bit = 0;
    bool polarity = true;

    std::string name() const;
    friend auto operator<=>(const Proposition&, const Proposition&) = default;
    friend bool operator==(const Proposition&, const Proposition&) = default;
};

struct GroundAction {
    std::size_t id = 0;
    std::vector<Proposition> pre;  // sorted by bit
    std::vector<Proposition> add;
    std::vector<Proposition> del;

    /// Recorded transition with s = t; kept but flagged.
    bool self_loop() const { return add.empty() && del.empty(); }
    friend bool operator==(const GroundAction&, const GroundAction&) = default;
};

/// Grounded unit-cost STRIPS problem over 2N propositions.
struct StripsProblem {
    std::size_t bits = 0;
    std::vector<GroundAction> actions;
    std::optional<BitVector> init;
    std::optional<BitVector> goal;

    std::size_t self_loops() const;
    friend bool operator==(const StripsProblem&, const StripsProblem&) = default;
};

using Transition = std::pair<BitVector, BitVector>;

/// One action per distinct (s,t): full-state precondition s, effects on the changed bits only.
/// Actions are numbered in (s,t) order. Throws std::invalid_argument on length mismatch.
StripsProblem compile(std::vector<Transition> transitions);

class InapplicableAction : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// t = (s \ del) U add. Throws InapplicableAction when s does not satisfy pre, and
/// std::invalid_argument for a malformed action or assignment.
BitVector step(const BitVector& s, const GroundAction& a);
bool applicable(const BitVector& s, const GroundAction& a);

/// Applicable-action lookup: hash on the full precondition state, linear scan for the
/// (rare, e.g. hand-written) actions with partial preconditions.
class ActionIndex {
public:
    explicit ActionIndex(const StripsProblem& problem);
    std::vector<std::size_t> applicable(const BitVector& s) const;

private:
    const StripsProblem* problem_;
    std::unordered_map<BitVector, std::vector<std::size_t>, BitVectorHash> full_;
    std::vector<std::size_t> partial_;
};

struct PddlText {
    std::string domain;
    std::string problem;
};

/// Deterministic PDDL; throws std::invalid_argument when init or goal is unset.
PddlText emit_pddl(const StripsProblem& problem, const std::string& domain_name = "latent",
                   const std::string& problem_name = "latent-problem");

class PddlParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads the STRIPS fragment written by emit_pddl back into a problem.
StripsProblem parse_pddl(const std::string& domain, const std::string& problem);

}  // namespace latplan
