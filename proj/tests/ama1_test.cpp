#include <doctest.h>

#include "latplan/ama1.hpp"
#include "latplan/domains.hpp"
#include "support/symbolic.hpp"

using namespace latplan;

namespace {

BitVector bv(const char* s) { return BitVector::from_string(s); }

StripsProblem with_endpoints(StripsProblem p, const char* init, const char* goal) {
    p.init = bv(init);
    p.goal = bv(goal);
    return p;
}

}  // namespace

TEST_CASE("compile: one bit flip") {
    const StripsProblem p = compile({{bv("101"), bv("001")}});
    REQUIRE(p.actions.size() == 1);
    const GroundAction& a = p.actions[0];
    CHECK(a.pre == std::vector<Proposition>{{0, true}, {1, false}, {2, true}});
    CHECK(a.add == std::vector<Proposition>{{0, false}});
    CHECK(a.del == std::vector<Proposition>{{0, true}});
    CHECK_FALSE(a.self_loop());
    CHECK(step(bv("101"), a) == bv("001"));
    CHECK_THROWS_AS(step(bv("100"), a), InapplicableAction);
    CHECK_THROWS_AS(step(bv("10"), a), std::invalid_argument);
}

TEST_CASE("compile: deduplication, ordering, self loops, length mismatch") {
    const StripsProblem p = compile({{bv("11"), bv("11")}, {bv("01"), bv("00")}, {bv("01"), bv("00")}});
    REQUIRE(p.actions.size() == 2);
    CHECK(p.actions[0].pre.front() == Proposition{0, false});
    CHECK(p.actions[1].self_loop());
    CHECK(p.self_loops() == 1);
    CHECK(step(bv("11"), p.actions[1]) == bv("11"));
    CHECK_THROWS_AS(compile({{bv("11"), bv("1")}}), std::invalid_argument);
    CHECK(compile({}).actions.empty());
}

TEST_CASE("compile: Hanoi(4) gives 240 sound actions") {
    const Domain d = Domain::hanoi(4);
    const auto tr = testing::identity_transitions(d);
    const StripsProblem p = compile(tr);
    CHECK(p.actions.size() == 240);
    CHECK(p.self_loops() == 0);
    const ActionIndex index(p);
    for (const auto& [s, t] : tr) {
        const auto ids = index.applicable(s);
        bool hit = false;
        for (std::size_t id : ids) {
            const BitVector r = step(s, p.actions[id]);
            hit |= r == t;
            // Effects delete the old polarity: every bit keeps exactly one value.
            CHECK(r.size() == s.size());
        }
        CHECK(hit);
        CHECK(ids.size() == d.successors(d.from_identity_bits(s)).size());
    }
}

TEST_CASE("PDDL text") {
    const StripsProblem p = with_endpoints(compile({{bv("10"), bv("00")}, {bv("00"), bv("00")}}), "10", "00");
    const PddlText t = emit_pddl(p);
    CHECK(t.domain.find("(:requirements :strips)") != std::string::npos);
    CHECK(t.domain.find(":effect (and (b0-false) (not (b0-true))))") != std::string::npos);
    CHECK(t.domain.find(":effect (and))") != std::string::npos);
    CHECK(t.domain == emit_pddl(p).domain);
    CHECK(t.problem ==
          "(define (problem latent-problem)\n"
          "  (:domain latent)\n"
          "  (:init (b0-true) (b1-false))\n"
          "  (:goal (and (b0-false) (b1-false))))\n");
    CHECK(t.domain ==
          "(define (domain latent)\n"
          "  (:requirements :strips)\n"
          "  (:predicates\n"
          "    (b0-true)\n"
          "    (b0-false)\n"
          "    (b1-true)\n"
          "    (b1-false))\n"
          "  (:action a0\n"
          "    :parameters ()\n"
          "    :precondition (and (b0-false) (b1-false))\n"
          "    :effect (and))\n"
          "  (:action a1\n"
          "    :parameters ()\n"
          "    :precondition (and (b0-true) (b1-false))\n"
          "    :effect (and (b0-false) (not (b0-true))))\n"
          ")\n");

    StripsProblem unset = p;
    unset.goal.reset();
    CHECK_THROWS_AS(emit_pddl(unset), std::invalid_argument);

    StripsProblem empty;
    empty.bits = 2;
    empty.init = bv("00");
    empty.goal = bv("11");
    const PddlText e = emit_pddl(empty);
    CHECK(parse_pddl(e.domain, e.problem) == empty);
}

TEST_CASE("PDDL round trip through our reader") {
    const Domain d = Domain::hanoi(3);
    StripsProblem p = compile(testing::identity_transitions(d));
    p.init = d.identity_bits(PuzzleState{DomainKind::hanoi, {0, 0, 0}});
    p.goal = d.identity_bits(d.goal());
    const PddlText t = emit_pddl(p);
    CHECK(parse_pddl(t.domain, t.problem) == p);
    CHECK_THROWS_AS(parse_pddl("(define (domain x)", t.problem), PddlParseError);
    CHECK_THROWS_AS(parse_pddl(t.domain, "(define (problem q) (:init (b0-true)) (:goal (b0-true)))"), PddlParseError);
}
