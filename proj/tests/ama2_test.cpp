#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "latplan/ama2.hpp"
#include "latplan/checkpoint.hpp"
#include "latplan/domains.hpp"
#include "latplan/planner.hpp"
#include "support/pu_synthetic.hpp"
#include "support/symbolic.hpp"

using namespace latplan;

namespace {

BitVector bv(const char* s) { return BitVector::from_string(s); }

AaeConfig small_aae(std::size_t bits) {
    AaeConfig c;
    c.bits = bits;
    c.labels = 8;
    c.hidden = 100;
    c.epochs = 300;
    c.batch_size = 16;
    c.dropout = 0.1f;
    return c;
}

std::vector<BitPair> pairs(const std::vector<Transition>& tr) { return {tr.begin(), tr.end()}; }

}  // namespace

TEST_CASE("error rates and remove_known") {
    const ErrorRates e = error_rates({0.9, 0.4, 0.5, 0.7}, {0.1, 0.6, 0.2});
    CHECK(e.type1 == doctest::Approx(0.25));
    CHECK(e.type2 == doctest::Approx(1.0 / 3));
    CHECK(e.valid == 4);
    CHECK(e.invalid == 3);
    CHECK(error_rates({}, {}).type1 == 0.0);

    const auto m = remove_known({bv("01"), bv("10"), bv("01"), bv("11")}, {bv("10")});
    CHECK(m == std::vector<BitVector>{bv("01"), bv("11")});
}

TEST_CASE("pu_train rejects empty inputs") {
    nd::RngStream rng(1);
    CHECK_THROWS_AS(pu_train({}, {bv("0")}, ad_architectures(), {}, rng), std::invalid_argument);
    CHECK_THROWS_AS(pu_train({bv("0")}, {}, ad_architectures(), {}, rng), std::invalid_argument);
    CHECK_THROWS_AS(pu_train({bv("0")}, {bv("1")}, {}, {}, rng), std::invalid_argument);
}

TEST_CASE("architectures") {
    const auto a = ad_architectures();
    REQUIRE(a.size() == 4);
    std::set<std::string> names;
    for (const auto& x : a) {
        CHECK(x.width == 300);
        names.insert(x.name());
    }
    CHECK(names.size() == 4);
    CHECK(sd_architecture().width == 50);
    CHECK(sd_architecture().dropout == doctest::Approx(0.8));
}

TEST_CASE("PU learning on planted parity") {
    nd::RngStream data_rng(21);
    const auto task = testing::planted_parity(14, 6144, 1024, data_rng);
    nd::RngStream rng(4);
    PuReport rep;
    const Discriminator d =
        pu_train(task.labelled, task.mixed, testing::parity_candidates(), testing::parity_pu_config(), rng, &rep);
    CHECK(rep.c > 0.0);
    CHECK(rep.c <= 1.0);
    CHECK(d.c() == rep.c);
    CHECK(rep.positives == 6144);
    CHECK(rep.mixed == 2048);

    const auto sp = d.score(task.all_pos), sn = d.score(task.all_neg);
    const ErrorRates e = error_rates(sp, sn);
    const double acc = 1.0 - (e.type1 * e.valid + e.type2 * e.invalid) / static_cast<double>(e.valid + e.invalid);
    CHECK(acc >= 0.95);

    // d2 is a positive rescaling of d1: same order, never larger.
    const auto d1 = d.d1(task.all_pos);
    for (std::size_t i = 0; i + 1 < d1.size(); i += 97) {
        CHECK(sp[i] <= d1[i]);
        CHECK((d1[i] < d1[i + 1]) == (sp[i] < sp[i + 1]));
    }

    // Batching does not change scores.
    CHECK(d.score(task.all_pos[5]) == doctest::Approx(sp[5]).epsilon(1e-6));

    const auto path = std::filesystem::temp_directory_path() / "latplan_sd_test.lpm";
    d.save(path.string(), static_cast<std::uint8_t>(ModelKind::sd));
    const Discriminator back = Discriminator::load(path.string(), static_cast<std::uint8_t>(ModelKind::sd));
    CHECK(back.c() == d.c());
    CHECK(back.score(task.all_neg) == sn);
    CHECK_THROWS(Discriminator::load(path.string(), static_cast<std::uint8_t>(ModelKind::ad)));
    std::filesystem::remove(path);
}

TEST_CASE("AAE on Hanoi(3): labels reproduce every transition") {
    const Domain d = Domain::hanoi(3);
    const auto tr = pairs(testing::identity_transitions(d));
    const AaeConfig cfg = small_aae(tr.front().first.size());
    nd::RngStream rng(8);
    int epochs = 0;
    const AaeModel m = train_aae(tr, cfg, rng, [&](const AaeEpoch&) { ++epochs; });
    CHECK(epochs == cfg.epochs);
    CHECK(m.reconstruction_rate(tr) >= 0.99);
    REQUIRE_FALSE(m.used_labels().empty());
    CHECK(std::is_sorted(m.used_labels().begin(), m.used_labels().end()));
    for (std::size_t l = 0; l < cfg.labels; ++l)
        if (!m.is_used(l)) CHECK_THROWS_AS(m.apply_label(l, tr[0].first), std::invalid_argument);

    const auto all = m.apply_all(tr[0].first);
    CHECK(all.size() == m.used_labels().size());

    nd::RngStream rng2(8);
    const AaeModel again = train_aae(tr, cfg, rng2);
    CHECK(again.used_labels() == m.used_labels());
    CHECK(again.action_labels(tr) == m.action_labels(tr));

    const auto path = std::filesystem::temp_directory_path() / "latplan_aae_test.lpm";
    m.save(path.string());
    const AaeModel back = AaeModel::load(path.string());
    CHECK(back.used_labels() == m.used_labels());
    CHECK(back.action_labels(tr) == m.action_labels(tr));
    std::filesystem::remove(path);

    // Mixed generation never contains a known positive and respects the counting bound.
    const auto mixed = gen_mixed_ad(tr, m);
    const std::set<BitPair> known(tr.begin(), tr.end());
    for (const auto& p : mixed) CHECK(known.count(p) == 0);
    CHECK(mixed.size() <= m.used_labels().size() * d.state_count());

    // Successor generation: without filters, every true successor is reachable; each
    // filter can only remove candidates.
    SuccConfig sc;
    sc.aae = &m;
    sc.use_ad = sc.use_sd = sc.use_sae_stability = sc.use_aae_stability = false;
    CHECK_THROWS_AS(succ_ama2(tr[0].first, SuccConfig{}), std::invalid_argument);
    std::size_t hits = 0;
    for (const auto& [s, t] : tr) {
        const auto loose = succ_ama2(s, sc);
        std::set<BitVector> targets;
        for (const auto& c : loose) CHECK(targets.insert(c.state).second);
        hits += targets.count(t);
        SuccConfig strict = sc;
        strict.use_aae_stability = true;
        const auto tight = succ_ama2(s, strict);
        CHECK(tight.size() <= loose.size());
        for (const auto& c : tight) CHECK(targets.count(c.state) == 1);
    }
    CHECK(static_cast<double>(hits) >= 0.99 * static_cast<double>(tr.size()));
}
