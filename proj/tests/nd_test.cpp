#include <doctest.h>

#include <cmath>
#include <array>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "latplan/nd/adam.hpp"
#include "latplan/nd/network.hpp"
#include "latplan/nd/ops.hpp"
#include "latplan/nd/serialize.hpp"
#include "support/gradcheck.hpp"

using namespace latplan::nd;
using latplan::testing::check_layer_case;
using latplan::testing::check_scalar_gradient;
using latplan::testing::layer_cases;
using latplan::testing::random_tensor;

TEST_CASE("dense identity layer passes input through") {
    Network net({LayerSpec::dense(2)});
    RngStream rng(1);
    net.build({2}, rng);
    net.layers()[0].params[0] = Tensor({2, 2}, {1, 0, 0, 1});
    net.layers()[0].params[1] = Tensor({2}, {0, 0});
    const Tensor y = net.infer(Tensor({1, 2}, {3, 4}));
    CHECK(y[0] == 3.0f);
    CHECK(y[1] == 4.0f);
}

TEST_CASE("inference disables dropout and noise") {
    Network net({LayerSpec::gaussian_noise(0.4f), LayerSpec::dropout(0.4f)});
    RngStream rng(2);
    net.build({5}, rng);
    const Tensor x = random_tensor({3, 5}, rng);
    CHECK(net.infer(x) == x);
    RngStream r2(3);
    CHECK(net.forward(x, Mode::infer, r2).output() == x);
}

TEST_CASE("sigmoid of zero is one half") {
    Network net({LayerSpec::sigmoid()});
    RngStream rng(0);
    net.build({1}, rng);
    CHECK(net.infer(Tensor({1, 1}, {0.0f}))[0] == doctest::Approx(0.5));
}

TEST_CASE("shape mismatch names the layer and both shapes") {
    Network net({LayerSpec::dense(3), LayerSpec::relu()});
    RngStream rng(0);
    net.build({4}, rng);
    try {
        net.infer(Tensor({2, 5}));
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(e.layer() == 0);
        CHECK(e.expected() == Shape{2, 4});
        CHECK(e.actual() == Shape{2, 5});
    }
    CHECK_THROWS_AS(Network({LayerSpec::gumbel_softmax(3, 2)}).build({5}, rng), ShapeError);
}

TEST_CASE("dropout rate outside [0,1) is rejected") {
    CHECK_THROWS(LayerSpec::dropout(1.0f));
    CHECK_THROWS(LayerSpec::dropout(-0.1f));
}

TEST_CASE("gumbel-max sampling") {
    const float ninf = -std::numeric_limits<float>::infinity();
    SUBCASE("degenerate distribution always picks its support") {
        RngStream rng(5);
        const std::vector<float> lp{0.0f, ninf, ninf};
        for (int i = 0; i < 1000; ++i) CHECK(gumbel_max_sample(lp, rng) == 0);
    }
    SUBCASE("empirical law matches pi") {
        RngStream rng(11);
        const std::vector<float> lp{std::log(0.1f), std::log(0.1f), std::log(0.8f)};
        std::array<int, 3> counts{};
        const int draws = 100000;
        for (int i = 0; i < draws; ++i) ++counts[gumbel_max_sample(lp, rng)];
        const double f2 = counts[2] / static_cast<double>(draws);
        CHECK(f2 >= 0.79);
        CHECK(f2 <= 0.81);
        CHECK(std::abs(counts[0] / static_cast<double>(draws) - 0.1) < 0.01);
    }
    SUBCASE("fixed seed repeats") {
        const std::vector<float> lp{0.1f, 0.2f, 0.3f, -0.5f};
        RngStream a(42), b(42);
        for (int i = 0; i < 50; ++i) CHECK(gumbel_max_sample(lp, a) == gumbel_max_sample(lp, b));
    }
    SUBCASE("NaN input is an error") {
        RngStream rng(0);
        const std::vector<float> lp{0.0f, std::numeric_limits<float>::quiet_NaN()};
        CHECK_THROWS(gumbel_max_sample(lp, rng));
    }
}

TEST_CASE("gumbel-softmax") {
    SUBCASE("zero noise and low temperature give the argmax one-hot") {
        const Tensor lp({1, 3}, {std::log(0.1f), std::log(0.1f), std::log(0.8f)});
        const Tensor y = gumbel_softmax(lp, 3, 0.01f, Tensor({1, 3}));
        CHECK(std::abs(y[0]) < 1e-6);
        CHECK(std::abs(y[1]) < 1e-6);
        CHECK(std::abs(y[2] - 1.0f) < 1e-6);
    }
    SUBCASE("zero noise on uniform pi is uniform at any temperature") {
        for (float tau : {0.1f, 1.0f, 5.0f}) {
            const Tensor y = gumbel_softmax(Tensor({2, 4}, std::log(0.25f)), 4, tau, Tensor({2, 4}));
            for (float v : y.data()) CHECK(v == doctest::Approx(0.25));
        }
    }
    SUBCASE("non-positive temperature is an error") {
        RngStream rng(0);
        CHECK_THROWS(gumbel_softmax(Tensor({1, 2}), 2, 0.0f, rng));
        CHECK_THROWS(gumbel_softmax(Tensor({1, 2}), 2, -1.0f, rng));
    }
    SUBCASE("rows sum to one with entries in (0,1)") {
        RngStream rng(9);
        const Tensor lp = random_tensor({8, 36, 2}, rng, 3.0);
        const Tensor y = gumbel_softmax(lp, 2, 0.7f, rng);
        for (std::size_t r = 0; r < y.size() / 2; ++r) {
            CHECK(std::abs(y[2 * r] + y[2 * r + 1] - 1.0f) < 1e-6);
            CHECK(y[2 * r] >= 0.0f);
            CHECK(y[2 * r] <= 1.0f);
        }
    }
    SUBCASE("gradient with frozen noise matches finite differences") {
        RngStream rng(21);
        const Tensor lp = random_tensor({3, 4}, rng);
        const Tensor noise = gumbel_softmax(lp, 4, 1.0f, rng);  // any fixed tensor works as noise
        const Tensor w = random_tensor({3, 4}, rng);
        const float tau = 0.8f;
        auto f = [&](const Tensor& x) {
            const Tensor y = gumbel_softmax(x, 4, tau, noise);
            double s = 0;
            for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y[i]) * w[i];
            return s;
        };
        const Tensor g = gumbel_softmax_backward(gumbel_softmax(lp, 4, tau, noise), w, 4, tau);
        CHECK(check_scalar_gradient(f, lp, g) < 1e-3);
    }
    SUBCASE("annealing sharpens: mean row max is non-decreasing as tau falls") {
        RngStream rng(4);
        const Tensor lp = random_tensor({16, 36, 2}, rng, 2.0);
        Tensor noise(lp.shape());
        for (float& g : noise.data()) g = static_cast<float>(rng.gumbel());
        double prev = 0.0;
        for (int epoch = 0; epoch < 100; epoch += 5) {
            const float tau = std::max(0.7f, 5.0f * std::exp(-0.0197f * static_cast<float>(epoch)));
            const Tensor y = gumbel_softmax(lp, 2, tau, noise);
            double mean_max = 0;
            for (std::size_t r = 0; r < y.size() / 2; ++r) mean_max += std::max(y[2 * r], y[2 * r + 1]);
            mean_max /= static_cast<double>(y.size() / 2);
            CHECK(mean_max >= prev - 1e-7);
            prev = mean_max;
        }
    }
}

TEST_CASE("binary cross-entropy") {
    CHECK(bce_loss(Tensor({1}, {0.5f}), Tensor({1}, {1.0f})).value == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    CHECK(bce_loss(Tensor({1}, {1.0f - 1e-6f}), Tensor({1}, {1.0f})).value < 1e-5);
    CHECK_THROWS_AS(bce_loss(Tensor({2}), Tensor({3})), ShapeError);

    RngStream rng(17);
    Tensor p({4, 6}), t({4, 6});
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = static_cast<float>(0.1 + 0.8 * rng.uniform());
        t[i] = rng.uniform() < 0.5 ? 0.0f : 1.0f;
    }
    const LossValue lv = bce_loss(p, t);
    CHECK(check_scalar_gradient([&](const Tensor& x) { return bce_loss(x, t).value; }, p, lv.grad, 1e-3) < 1e-3);
}

TEST_CASE("gumbel-softmax variational loss") {
    CHECK(gs_variational_loss(Tensor({3, 2}, 0.5f), 2) == doctest::Approx(0.0));
    CHECK(gs_variational_loss(Tensor({1, 2}, {1.0f, 0.0f}), 2) == doctest::Approx(std::log(2.0)));

    RngStream rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 2 + rng.below(5);
        const Tensor q = softmax_rows(random_tensor({5, m}, rng, 4.0), m);
        CHECK(gs_variational_loss(q, m) >= -1e-6);
    }

    const Tensor logits = random_tensor({3, 4}, rng, 2.0);
    const LossValue lv = gs_variational_loss_logits(logits, 4);
    CHECK(lv.value == doctest::Approx(gs_variational_loss(softmax_rows(logits, 4), 4)).epsilon(1e-5));
    const double err = check_scalar_gradient([](const Tensor& x) { return gs_variational_loss_logits(x, 4).value; },
                                             logits, lv.grad, 1e-3);
    CHECK(err < 1e-3);
}

TEST_CASE("every layer kind passes the finite-difference check") {
    for (const auto& c : layer_cases()) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto rep = check_layer_case(c, seed);
            INFO(c.name << " seed " << seed << " at " << rep.where);
            CHECK(rep.worst < 1e-3);
        }
    }
}

TEST_CASE("backward twice on one tape is an error") {
    Network net({LayerSpec::dense(2)});
    RngStream rng(0);
    net.build({3}, rng);
    Tape tape = net.forward_train(Tensor({1, 3}, 1.0f), rng);
    net.backward(tape, Tensor({1, 2}, 1.0f));
    CHECK_THROWS_AS(net.backward(tape, Tensor({1, 2}, 1.0f)), TapeError);
    Tape inf = net.forward(Tensor({1, 3}, 1.0f), Mode::infer, rng);
    CHECK_THROWS_AS(net.backward(inf, Tensor({1, 2}, 1.0f)), TapeError);
}

TEST_CASE("adam") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        Tensor p({3}, {1.0f, -2.0f, 0.5f});
        p.zero_grad();
        const Tensor before = p;
        AdamState st;
        std::vector<Tensor*> ps{&p};
        adam_step(ps, st, 0.001f);
        CHECK(p == before);
    }
    SUBCASE("one bias-corrected step on a scalar") {
        Tensor p({1}, {1.0f});
        p.grad()[0] = 1.0f;
        AdamState st;
        std::vector<Tensor*> ps{&p};
        adam_step(ps, st, 0.001f);
        // m_hat = v_hat = 1, so the step is lr / (1 + eps)
        CHECK(p[0] == doctest::Approx(0.999).epsilon(1e-7));
        CHECK(st.t == 1);
    }
}

namespace {
std::vector<float> train_trajectory(std::uint64_t seed) {
    RngStream rng(seed);
    Network net({LayerSpec::gaussian_noise(0.3f), LayerSpec::dense(6), LayerSpec::relu(), LayerSpec::batchnorm(),
                 LayerSpec::dropout(0.4f), LayerSpec::dense(4), LayerSpec::reshape({2, 2}),
                 LayerSpec::gumbel_softmax(2, 2, 2.0f), LayerSpec::dense(3), LayerSpec::sigmoid()});
    net.build({5}, rng);
    const Tensor x = random_tensor({8, 5}, rng);
    Tensor target({8, 3});
    for (float& v : target.data()) v = rng.uniform() < 0.5 ? 0.0f : 1.0f;
    AdamState st;
    std::vector<float> losses;
    for (int step = 0; step < 20; ++step) {
        net.zero_grad();
        Tape tape = net.forward_train(x, rng);
        const LossValue lv = bce_loss(tape.output(), target);
        net.backward(tape, lv.grad);
        const auto ps = net.parameters();
        adam_step(ps, st, 0.01f);
        losses.push_back(static_cast<float>(lv.value));
    }
    for (Tensor* p : net.parameters()) losses.insert(losses.end(), p->data().begin(), p->data().end());
    return losses;
}
}  // namespace

TEST_CASE("identical seeds give bit-identical training trajectories") {
    const auto a = train_trajectory(77);
    const auto b = train_trajectory(77);
    CHECK(a == b);
    CHECK(a != train_trajectory(78));
}

TEST_CASE("rng streams replay from (seed, counter)") {
    RngStream a(123);
    for (int i = 0; i < 10; ++i) a.next_u64();
    RngStream b(123, 10);
    CHECK(a.next_u64() == b.next_u64());
    RngStream c(5);
    for (int i = 0; i < 10000; ++i) {
        const double u = c.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("network checkpoint round trip") {
    RngStream rng(31);
    Network net({LayerSpec::conv2d(3, 3, 2), LayerSpec::tanh(), LayerSpec::batchnorm(), LayerSpec::dropout(0.4f),
                 LayerSpec::dense(6), LayerSpec::reshape({3, 2}), LayerSpec::gumbel_softmax(3, 2, 0.9f),
                 LayerSpec::concat(), LayerSpec::dense(4), LayerSpec::sigmoid()});
    net.build({4, 4}, rng, 2);
    const Tensor x = random_tensor({3, 4, 4}, rng);
    const Tensor aux = random_tensor({3, 2}, rng);
    net.forward_train(x, rng, &aux);  // move batchnorm running statistics off their defaults

    const auto path = (std::filesystem::temp_directory_path() / "latplan_nd_roundtrip.lpw").string();
    save_network(path, net);
    Network loaded = load_network(path);
    loaded.resolve({4, 4}, 2);
    CHECK(loaded.infer(x, &aux) == net.infer(x, &aux));
    CHECK(loaded.layers()[6].temperature == doctest::Approx(0.9));
    std::filesystem::remove(path);

    std::ofstream bad(path, std::ios::binary);
    bad << "NOPE";
    bad.close();
    CHECK_THROWS_AS(load_network(path), FormatError);
    std::filesystem::remove(path);
}
