#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "latplan/bitvec.hpp"
#include "latplan/domains.hpp"
#include "latplan/image.hpp"

using namespace latplan;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("latplan_domains_" + name)).string();
}

std::size_t transition_count(const Domain& d) {
    std::size_t n = 0;
    for (std::uint64_t i = 0; i < d.state_count(); ++i) n += d.successors(d.state_at(i)).size();
    return n;
}

PuzzleState lights(std::initializer_list<int> on, int n) {
    PuzzleState s{DomainKind::lightsout, std::vector<std::uint8_t>(static_cast<std::size_t>(n * n), 0)};
    for (int i : on) s.cells[static_cast<std::size_t>(i)] = 1;
    return s;
}

}  // namespace

TEST_CASE("bit vectors parse, compare and survive the packed file format") {
    const auto a = BitVector::from_string("1011001");
    CHECK(a.to_string() == "1011001");
    CHECK(hamming(a, BitVector::from_string("0011000")) == 2);
    CHECK_THROWS(hamming(a, BitVector::from_string("01")));
    CHECK_THROWS(BitVector::from_string("10x"));
    CHECK(a.concat(BitVector::from_string("01")).to_string() == "101100101");

    std::vector<BitVector> vs;
    nd::RngStream rng(4);
    for (int i = 0; i < 17; ++i) {
        BitVector v(37);
        for (std::size_t j = 0; j < 37; ++j) v.set(j, rng.uniform() < 0.5);
        vs.push_back(v);
    }
    const auto path = temp_path("bits.lpb");
    write_bitvectors(path, vs);
    CHECK(read_bitvectors(path) == vs);
    std::filesystem::remove(path);
}

TEST_CASE("PGM and LPT files round trip") {
    Tensor img({3, 5});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i) / 14.0f;
    const auto pgm = temp_path("img.pgm");
    write_pgm(pgm, img);
    const Tensor back = read_pgm(pgm);
    REQUIRE(back.shape() == img.shape());
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(back[i] == doctest::Approx(img[i]).epsilon(0.003));

    const auto lpt = temp_path("data.lpt");
    write_lpt(lpt, img);
    CHECK(read_lpt(lpt) == img);
    {
        std::ofstream os(lpt, std::ios::binary);
        os << "XXXX";
    }
    CHECK_THROWS(read_lpt(lpt));
    std::filesystem::remove(pgm);
    std::filesystem::remove(lpt);
}

TEST_CASE("image corruption and resampling") {
    Tensor img({20, 20}, 0.5f);
    nd::RngStream rng(1);
    const Tensor g = add_gaussian_noise(img, 0.3, rng);
    CHECK(std::all_of(g.data().begin(), g.data().end(), [](float v) { return v >= 0.0f && v <= 1.0f; }));
    CHECK(g != img);

    nd::RngStream rng2(2);
    Tensor big({200, 200}, 0.5f);
    const Tensor sp = add_salt_pepper(big, 0.06, rng2);
    std::size_t zeros = 0, ones = 0;
    for (float v : sp.data()) {
        zeros += v == 0.0f;
        ones += v == 1.0f;
    }
    CHECK(std::abs(static_cast<double>(zeros) / 40000 - 0.03) < 0.006);
    CHECK(std::abs(static_cast<double>(ones) / 40000 - 0.03) < 0.006);

    Tensor checker({28, 28});
    for (std::size_t y = 0; y < 28; ++y)
        for (std::size_t x = 0; x < 28; ++x) checker[y * 28 + x] = ((y / 2 + x / 2) % 2) ? 1.0f : 0.0f;
    const Tensor small = resize_area(checker, 14, 14);
    CHECK(small[0] == 0.0f);
    CHECK(small[1] == 1.0f);
    const Tensor flat = resize_area(checker, 7, 7);
    for (float v : flat.data()) CHECK(v == doctest::Approx(0.5f));
}

TEST_CASE("swirl: identity at zero strength, fixed center, deterministic") {
    const Domain lo = Domain::lightsout(3);
    const Tensor img = lo.render(lights({0, 4, 5}, 3));
    CHECK(swirl(img, 0.0, 20.0) == img);
    CHECK(swirl(img, 3.0, 20.0) == swirl(img, 3.0, 20.0));
    CHECK(swirl(img, 3.0, 20.0) != img);
    Tensor dot({9, 9});
    dot[4 * 9 + 4] = 1.0f;
    CHECK(swirl(dot, 3.0, 6.75)[4 * 9 + 4] == doctest::Approx(1.0f));
    CHECK_THROWS(swirl(img, 3.0, 0.0));
}

TEST_CASE("8-puzzle state space") {
    const Domain d = Domain::puzzle8(TileSet::digits());
    CHECK(d.height() == 42);
    CHECK(d.width() == 42);
    CHECK(d.state_count() == 362880);
    CHECK(transition_count(d) == 967680);
    const auto dist = bfs_distances(d, d.goal());
    CHECK(std::count_if(dist.begin(), dist.end(), [](int x) { return x >= 0; }) == 181440);
    CHECK(*std::max_element(dist.begin(), dist.end()) == 31);
    const PuzzleState hardest{DomainKind::puzzle8, {8, 0, 6, 5, 4, 7, 2, 3, 1}};
    CHECK(dist[d.index(hardest)] == 31);

    for (std::uint64_t i = 0; i < d.state_count(); i += 997) CHECK(d.index(d.state_at(i)) == i);
    CHECK_THROWS_AS(d.successors(PuzzleState{DomainKind::puzzle8, {0, 0, 1, 2, 3, 4, 5, 6, 7}}), InvalidState);

    const PuzzleState s = d.goal();
    // Swapping two tiles not next to the blank is not a move.
    PuzzleState bad = s;
    std::swap(bad.cells[4], bad.cells[8]);
    CHECK_FALSE(validate_plan(d, s, bad, {s, bad}));
    CHECK(validate_plan(d, s, s, {s}));
    CHECK_FALSE(validate_plan(d, s, s, {}));
}

TEST_CASE("8-puzzle rendering and classification") {
    for (const auto& name : {"mnist-8puzzle", "mandrill-8puzzle", "spider-8puzzle"}) {
        DomainParams p;
        p.name = name;
        const Domain d = Domain::from_params(p);
        const PuzzleState s{DomainKind::puzzle8, {3, 1, 2, 0, 4, 5, 6, 7, 8}};
        const Tensor img = d.render(s);
        CHECK(img == d.render(s));
        CHECK(img.shape() == Shape{42, 42});
        CHECK(d.classify(img) == s);
        for (std::uint64_t i = 0; i < d.state_count(); i += 7919) CHECK(d.classify(d.render(d.state_at(i))) == d.state_at(i));

        // Copy the tile of cell 1 onto cell 2: two identical tiles is not a state.
        Tensor dup = img;
        for (std::size_t y = 0; y < 14; ++y)
            for (std::size_t x = 0; x < 14; ++x) dup[y * 42 + 28 + x] = img[y * 42 + 14 + x];
        CHECK_FALSE(d.classify(dup).has_value());
    }
}

TEST_CASE("LightsOut state space and press rule") {
    const Domain d4 = Domain::lightsout(4);
    CHECK(d4.height() == 36);
    CHECK(d4.state_count() == 65536);
    CHECK(transition_count(d4) == 1048576);

    const Domain d = Domain::lightsout(3);
    const PuzzleState off = d.goal();
    const auto succ = d.successors(off);
    REQUIRE(succ.size() == 9);
    auto lit = [](const PuzzleState& s) { return std::count(s.cells.begin(), s.cells.end(), 1); };
    CHECK(lit(succ[0]) == 3);
    CHECK(lit(succ[4]) == 5);
    CHECK(lit(d4.successors(d4.goal())[5]) == 5);

    for (const auto& s : d.all_states()) {
        const auto ss = d.successors(s);
        for (std::size_t press = 0; press < ss.size(); ++press) {
            const auto back = d.successors(ss[press])[press];
            CHECK(back == s);
        }
    }
}

TEST_CASE("LightsOut rendering: per-button locality and classification sweep") {
    for (bool twisted : {false, true}) {
        const Domain d = Domain::lightsout(3, twisted);
        CHECK(d.height() == 27);
        for (const auto& s : d.all_states()) CHECK(d.classify(d.render(s)) == s);
    }
    const Domain d = Domain::lightsout(3);
    const PuzzleState a = lights({0, 2, 7}, 3);
    for (std::size_t cell = 0; cell < 9; ++cell) {
        PuzzleState b = a;
        b.cells[cell] ^= 1;
        const Tensor ia = d.render(a), ib = d.render(b);
        const std::size_t y0 = (cell / 3) * 9, x0 = (cell % 3) * 9;
        bool outside = false, inside = false;
        for (std::size_t y = 0; y < 27; ++y)
            for (std::size_t x = 0; x < 27; ++x) {
                const bool differs = ia[y * 27 + x] != ib[y * 27 + x];
                const bool in_block = y >= y0 && y < y0 + 9 && x >= x0 && x < x0 + 9;
                (in_block ? inside : outside) |= differs;
            }
        CHECK(inside);
        CHECK_FALSE(outside);
    }
    Tensor half = d.render(a);
    for (float& v : half.data()) v *= 0.5f;
    CHECK_FALSE(d.classify(half).has_value());
}

TEST_CASE("Hanoi state space, rendering and the canonical plan") {
    const Domain d = Domain::hanoi(4);
    CHECK(d.height() == 16);
    CHECK(d.width() == 60);
    CHECK(d.state_count() == 81);
    CHECK(transition_count(d) == 240);
    for (const auto& s : d.all_states()) {
        CHECK(d.classify(d.render(s)) == s);
        for (const auto& t : d.successors(s)) CHECK(d.adjacent(t, s));
    }
    const PuzzleState init{DomainKind::hanoi, {0, 0, 0, 0}};
    const auto dist = bfs_distances(d, init);
    CHECK(dist[d.index(d.goal())] == 15);

    // Standard recursive solution.
    std::vector<PuzzleState> plan{init};
    std::function<void(int, int, int, int)> move = [&](int k, int from, int to, int via) {
        if (k < 0) return;
        move(k - 1, from, via, to);
        PuzzleState next = plan.back();
        next.cells[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(to);
        plan.push_back(next);
        move(k - 1, via, to, from);
    };
    move(3, 0, 2, 1);
    CHECK(plan.size() == 16);
    CHECK(validate_plan(d, init, d.goal(), plan));
    std::swap(plan[3], plan[4]);
    CHECK_FALSE(validate_plan(d, init, d.goal(), plan));
}

TEST_CASE("identity encodings are injective") {
    for (const Domain& d : {Domain::lightsout(3), Domain::hanoi(4)}) {
        std::set<BitVector> seen;
        for (const auto& s : d.all_states()) {
            const auto b = d.identity_bits(s);
            CHECK(d.from_identity_bits(b) == s);
            seen.insert(b);
        }
        CHECK(seen.size() == d.state_count());
    }
    const Domain p = Domain::puzzle8(TileSet::digits());
    CHECK(p.identity_bits(p.goal()).size() == 36);
}

TEST_CASE("sampled instances are exact self-avoiding walks") {
    const Domain d = Domain::lightsout(3);
    nd::RngStream rng(11);
    CHECK_THROWS(sample_instances(d, 1, 0, rng));
    const auto dist = bfs_distances(d, d.goal());
    for (int len : {1, 7}) {
        const auto insts = sample_instances(d, 30, len, rng);
        REQUIRE(insts.size() == 30);
        for (const auto& inst : insts) {
            CHECK(inst.goal == d.goal());
            CHECK(inst.walk_length == len);
            CHECK(dist[d.index(inst.init)] <= len);
            CHECK(dist[d.index(inst.init)] >= 1);
            if (len == 1) CHECK(d.adjacent(inst.goal, inst.init));
            CHECK(inst.init_image == d.render(inst.init));
        }
    }
    nd::RngStream r1(5), r2(5);
    const auto a = sample_instances(Domain::hanoi(3), 10, 5, r1);
    const auto b = sample_instances(Domain::hanoi(3), 10, 5, r2);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].init == b[i].init);
}
