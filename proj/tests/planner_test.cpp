#include <doctest.h>

#include "latplan/domains.hpp"
#include "latplan/planner.hpp"
#include "support/symbolic.hpp"

using namespace latplan;

namespace {

struct Symbolic {
    Domain domain;
    StripsProblem problem;
    ActionIndex index;

    explicit Symbolic(Domain d)
        : domain(std::move(d)), problem(compile(testing::identity_transitions(domain))), index(problem) {}

    SuccessorFn succ() const {
        return [this](const BitVector& s) { return succ_strips(s, problem, index); };
    }
    BitVector bits(const PuzzleState& s) const { return domain.identity_bits(s); }
};

int blind(const BitVector&) { return 0; }

}  // namespace

TEST_CASE("goal count") {
    CHECK(goal_count(BitVector::from_string("000"), BitVector::from_string("101")) == 2);
    CHECK(goal_count(BitVector::from_string("101"), BitVector::from_string("101")) == 0);
    CHECK(goal_count(BitVector::from_string("011"), BitVector::from_string("110")) ==
          goal_count(BitVector::from_string("110"), BitVector::from_string("011")));
    CHECK_THROWS_AS(goal_count(BitVector::from_string("01"), BitVector::from_string("011")), std::invalid_argument);
}

TEST_CASE("A* trivial cases") {
    const Symbolic sym(Domain::hanoi(3));
    const BitVector g = sym.bits(sym.domain.goal());
    const PlanResult r = astar(g, g, sym.succ(), blind);
    CHECK(r.status == SearchStatus::solved);
    CHECK(r.length() == 0);
    CHECK(r.expanded == 0);

    // A state outside the compiled graph has no successors.
    const BitVector stray = BitVector::from_string("111111");
    CHECK(succ_strips(stray, sym.problem, sym.index).empty());
    CHECK(astar(stray, g, sym.succ(), blind).status == SearchStatus::exhausted);

    SearchLimits tight;
    tight.max_expansions = 2;
    const BitVector init = sym.bits(PuzzleState{DomainKind::hanoi, {0, 0, 0}});
    CHECK(astar(init, g, sym.succ(), blind, tight).status == SearchStatus::timeout);
}

TEST_CASE("Hanoi(4) canonical instance: 15 steps, replayable and deterministic") {
    const Symbolic sym(Domain::hanoi(4));
    const BitVector init = sym.bits(PuzzleState{DomainKind::hanoi, {0, 0, 0, 0}});
    const BitVector goal = sym.bits(sym.domain.goal());
    const PlanResult r = astar(init, goal, sym.succ(), blind);
    REQUIRE(r.status == SearchStatus::solved);
    CHECK(r.length() == 15);
    CHECK(replay_plan(r, goal, sym.succ()));
    std::vector<PuzzleState> states;
    for (const auto& b : r.states) states.push_back(sym.domain.from_identity_bits(b));
    CHECK(validate_plan(sym.domain, states.front(), sym.domain.goal(), states));

    const PlanResult again = astar(init, goal, sym.succ(), blind);
    CHECK(again.states == r.states);
    CHECK(again.actions == r.actions);

    PlanResult tampered = r;
    std::swap(tampered.states[3], tampered.states[4]);
    CHECK_FALSE(replay_plan(tampered, goal, sym.succ()));
}

TEST_CASE("blind A* matches BFS on every ToH(3) and 2x2 LightsOut pair") {
    for (const Domain& d : {Domain::hanoi(3), Domain::lightsout(2)}) {
        const Symbolic sym(d);
        const auto states = d.all_states();
        for (const auto& a : states) {
            const auto dist = bfs_distances(d, a);
            for (const auto& b : states) {
                const PlanResult r = astar(sym.bits(a), sym.bits(b), sym.succ(), blind);
                REQUIRE(r.status == SearchStatus::solved);
                CHECK(static_cast<int>(r.length()) == dist[d.index(b)]);
            }
        }
    }
}

TEST_CASE("goal-count A* never beats the optimum") {
    const Symbolic sym(Domain::lightsout(3));
    const BitVector goal = sym.bits(sym.domain.goal());
    const auto dist = bfs_distances(sym.domain, sym.domain.goal());
    nd::RngStream rng(3);
    for (const auto& inst : sample_instances(sym.domain, 25, 7, rng)) {
        const PlanResult r = astar(sym.bits(inst.init), goal, sym.succ(),
                                   [&](const BitVector& s) { return goal_count(s, goal); });
        REQUIRE(r.status == SearchStatus::solved);
        CHECK(static_cast<int>(r.length()) >= dist[sym.domain.index(inst.init)]);
        CHECK(replay_plan(r, goal, sym.succ()));
    }
}
