#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "latplan/domains.hpp"
#include "latplan/sae.hpp"

using namespace latplan;

namespace {

Tensor render_all(const Domain& d) {
    std::vector<Tensor> imgs;
    for (const auto& s : d.all_states()) imgs.push_back(d.render(s));
    return Tensor::stack(imgs);
}

SaeConfig small_config(const Tensor& images) {
    SaeConfig c;
    c.latent_bits = 12;
    c.height = images.shape()[1];
    c.width = images.shape()[2];
    c.hidden = 200;
    c.conv_channels = 4;
    c.epochs = 400;
    c.batch_size = 4;
    return c;
}

}  // namespace

TEST_CASE("anneal schedule") {
    const AnnealSchedule s = AnnealSchedule::calibrated(5.0, 0.7, 100);
    CHECK(s.at(0) == doctest::Approx(5.0));
    CHECK(s.at(99) == doctest::Approx(0.7));
    CHECK(s.at(500) == doctest::Approx(0.7));
    for (int e = 1; e < 100; ++e) CHECK(s.at(e) <= s.at(e - 1));
}

TEST_CASE("config validation and json") {
    SaeConfig c;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);  // no image size
    c.height = c.width = 9;
    CHECK_NOTHROW(c.validate());
    c.tau_min = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.tau_min = 0.7;
    c.latent_bits = 20;
    c.noise_sigma = 0.25f;
    const SaeConfig back = sae_config_from_json(to_json(c));
    CHECK(back.latent_bits == 20);
    CHECK(back.noise_sigma == doctest::Approx(0.25));
    CHECK(back.height == 9);
}

TEST_CASE("training a small SAE: distinct stable codes, determinism, checkpoint") {
    const Domain d = Domain::lightsout(2);
    const Tensor images = render_all(d);
    const SaeConfig cfg = small_config(images);

    CHECK_THROWS_AS(
        [&] {
            nd::RngStream r(1);
            train_sae(Tensor({0, cfg.height, cfg.width}), cfg, r);
        }(),
        std::invalid_argument);

    nd::RngStream rng(11);
    int calls = 0;
    const SaeModel m = train_sae(images, cfg, rng, [&](const EpochStats& e) {
        CHECK(std::isfinite(e.reconstruction));
        CHECK(e.epoch == calls++);
    });
    CHECK(calls == cfg.epochs);

    const auto codes = m.encode_batch(images);
    REQUIRE(codes.size() == 16);
    CHECK(codes[0].size() == 12);
    CHECK(std::set<BitVector>(codes.begin(), codes.end()).size() == 16);

    const Tensor recon = m.decode_batch(codes);
    CHECK(recon.shape() == images.shape());
    double err = 0;
    for (std::size_t i = 0; i < recon.size(); ++i) err += std::abs(recon[i] - images[i]);
    CHECK(err / static_cast<double>(recon.size()) < 0.05);

    nd::RngStream rng2(11);
    const SaeModel again = train_sae(images, cfg, rng2);
    CHECK(again.encode_batch(images) == codes);

    const auto path = std::filesystem::temp_directory_path() / "latplan_sae_test.lpm";
    m.save(path.string());
    const SaeModel loaded = SaeModel::load(path.string());
    CHECK(loaded.encode_batch(images) == codes);
    CHECK(loaded.config().latent_bits == 12);
    std::filesystem::remove(path);

    nd::RngStream arng(5);
    const std::set<BitVector> unique(codes.begin(), codes.end());
    const auto only = m.augment_states(images, 1, arng);
    CHECK(std::set<BitVector>(only.begin(), only.end()) == unique);
    const auto aug = m.augment_states(images, 3, arng);
    const std::set<BitVector> aug_set(aug.begin(), aug.end());
    CHECK(aug_set.size() == aug.size());
    for (const auto& c : codes) CHECK(aug_set.count(c) == 1);
    CHECK_THROWS_AS(m.augment_states(images, 0, arng), std::invalid_argument);
}
