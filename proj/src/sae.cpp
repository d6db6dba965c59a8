#include "latplan/sae.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "latplan/checkpoint.hpp"
#include "latplan/nd/adam.hpp"
#include "latplan/nd/ops.hpp"
#include "latplan/nd/serialize.hpp"

namespace latplan {

using nd::LayerSpec;
using nd::Network;
using nd::Shape;
using json = nlohmann::json;

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::sae: return "sae";
        case ModelKind::aae: return "aae";
        case ModelKind::sd: return "sd";
        case ModelKind::ad: return "ad";
    }
    return "unknown";
}

AnnealSchedule AnnealSchedule::calibrated(double tau0, double tau_min, int epochs) {
    if (!(tau_min > 0) || tau0 < tau_min) throw std::invalid_argument("anneal needs tau0 >= tau_min > 0");
    AnnealSchedule a{tau0, 0.0, tau_min};
    if (epochs > 1) a.r = std::log(tau0 / tau_min) / (epochs - 1);
    return a;
}

double AnnealSchedule::at(int epoch) const {
    // Guard the last epoch against rounding so that it lands exactly on tau_min.
    const double t = tau0 * std::exp(-r * epoch);
    return t < tau_min * (1 + 1e-9) ? tau_min : t;
}

void SaeConfig::validate() const {
    if (latent_bits == 0 || categories < 2) throw std::invalid_argument("SAE needs N >= 1 and M >= 2");
    if (height == 0 || width == 0) throw std::invalid_argument("SAE input dimensions are unset");
    if (!(tau_min > 0) || tau0 < tau_min) throw std::invalid_argument("SAE anneal needs tau0 >= tau_min > 0");
    if (epochs < 1 || batch_size < 1) throw std::invalid_argument("SAE epochs and batch size must be positive");
    if (dropout < 0 || dropout >= 1) throw std::invalid_argument("SAE dropout must lie in [0,1)");
}

SaeConfig SaeConfig::hanoi_defaults() {
    SaeConfig c;
    c.conv_channels = 12;
    c.dropout = 0.6f;
    c.batch_size = 500;
    return c;
}

std::string to_json(const SaeConfig& c) {
    return json{{"latent_bits", c.latent_bits}, {"categories", c.categories}, {"height", c.height},
                {"width", c.width}, {"noise_sigma", c.noise_sigma}, {"epochs", c.epochs},
                {"batch_size", c.batch_size}, {"lr", c.lr}, {"lr_late", c.lr_late}, {"tau0", c.tau0},
                {"tau_min", c.tau_min}, {"conv_channels", c.conv_channels}, {"dropout", c.dropout},
                {"hidden", c.hidden}, {"kl_weight", c.kl_weight}}
        .dump();
}

SaeConfig sae_config_from_json(const std::string& text) {
    const json j = json::parse(text);
    SaeConfig c;
    c.latent_bits = j.value("latent_bits", c.latent_bits);
    c.categories = j.value("categories", c.categories);
    c.height = j.value("height", c.height);
    c.width = j.value("width", c.width);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.lr_late = j.value("lr_late", c.lr_late);
    c.tau0 = j.value("tau0", c.tau0);
    c.tau_min = j.value("tau_min", c.tau_min);
    c.conv_channels = j.value("conv_channels", c.conv_channels);
    c.dropout = j.value("dropout", c.dropout);
    c.hidden = j.value("hidden", c.hidden);
    c.kl_weight = j.value("kl_weight", c.kl_weight);
    return c;
}

namespace {

std::vector<LayerSpec> encoder_layers(const SaeConfig& c) {
    std::vector<LayerSpec> l{LayerSpec::gaussian_noise(c.noise_sigma)};
    for (int i = 0; i < 2; ++i) {
        l.push_back(LayerSpec::conv2d(3, 3, c.conv_channels));
        l.push_back(LayerSpec::tanh());
        l.push_back(LayerSpec::batchnorm());
        l.push_back(LayerSpec::dropout(c.dropout));
    }
    l.push_back(LayerSpec::dense(c.latent_bits * c.categories));
    return l;
}

std::vector<LayerSpec> decoder_layers(const SaeConfig& c) {
    std::vector<LayerSpec> l;
    for (int i = 0; i < 2; ++i) {
        l.push_back(LayerSpec::dense(c.hidden));
        l.push_back(LayerSpec::relu());
        l.push_back(LayerSpec::batchnorm());
        l.push_back(LayerSpec::dropout(c.dropout));
    }
    l.push_back(LayerSpec::dense(c.height * c.width));
    l.push_back(LayerSpec::sigmoid());
    l.push_back(LayerSpec::reshape({c.height, c.width}));
    return l;
}

void require_finite(double v, int epoch, std::size_t batch, const char* what) {
    if (std::isfinite(v)) return;
    std::ostringstream os;
    os << "SAE training diverged: non-finite " << what << " at epoch " << epoch << ", batch " << batch;
    throw std::runtime_error(os.str());
}

}  // namespace

SaeModel::SaeModel(SaeConfig cfg, Network encoder, Network decoder)
    : cfg_(std::move(cfg)), encoder_(std::move(encoder)), decoder_(std::move(decoder)) {}

Tensor SaeModel::as_batch(const Tensor& images) const {
    const Shape one{cfg_.height, cfg_.width};
    if (images.shape() == one) return images.reshaped({1, cfg_.height, cfg_.width});
    if (images.rank() != 3 || images.dim(1) != cfg_.height || images.dim(2) != cfg_.width)
        throw nd::ShapeError(-1, {0, cfg_.height, cfg_.width}, images.shape(), "SAE input image size");
    return images;
}

Tensor SaeModel::logits(const Tensor& images) const { return encoder_.infer(as_batch(images)); }

std::vector<BitVector> SaeModel::encode_batch(const Tensor& images) const {
    const Tensor l = logits(images);
    const std::size_t n = cfg_.latent_bits, m = cfg_.categories;
    std::vector<BitVector> out;
    out.reserve(l.batch());
    for (std::size_t b = 0; b < l.batch(); ++b) {
        const auto row = l.row(b);
        BitVector v(n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto cat = row.subspan(j * m, m);
            v.set(j, std::max_element(cat.begin(), cat.end()) == cat.begin());
        }
        out.push_back(std::move(v));
    }
    return out;
}

BitVector SaeModel::encode(const Tensor& image) const {
    if (image.shape() != Shape{cfg_.height, cfg_.width})
        throw nd::ShapeError(-1, {cfg_.height, cfg_.width}, image.shape(), "encode expects one image");
    return encode_batch(image).front();
}

Tensor SaeModel::bits_to_input(const std::vector<BitVector>& bs) const {
    const std::size_t n = cfg_.latent_bits, m = cfg_.categories;
    Tensor z({bs.size(), n * m});
    for (std::size_t b = 0; b < bs.size(); ++b) {
        if (bs[b].size() != n)
            throw nd::ShapeError(-1, {n}, {bs[b].size()}, "decode expects " + std::to_string(n) + " bits");
        for (std::size_t j = 0; j < n; ++j) {
            z[b * n * m + j * m] = bs[b][j] ? 1.0f : 0.0f;
            z[b * n * m + j * m + 1] = bs[b][j] ? 0.0f : 1.0f;
        }
    }
    return z;
}

Tensor SaeModel::decode_batch(const std::vector<BitVector>& bs) const { return decoder_.infer(bits_to_input(bs)); }

Tensor SaeModel::decode(const BitVector& b) const {
    return decode_batch({b}).reshaped({cfg_.height, cfg_.width});
}

std::vector<BitVector> SaeModel::autoencode_bits(const std::vector<BitVector>& bs) const {
    if (bs.empty()) return {};
    return encode_batch(decode_batch(bs));
}

std::vector<BitVector> SaeModel::encode_denoised(const Tensor& images, int rounds) const {
    std::vector<BitVector> b = encode_batch(images);
    for (int r = 0; r < rounds; ++r) b = autoencode_bits(b);
    return b;
}

std::vector<BitVector> SaeModel::augment_states(const Tensor& images, int k, nd::RngStream& rng) const {
    if (k < 1) throw std::invalid_argument("augment_states needs k >= 1");
    const Tensor l = logits(images);
    const std::vector<BitVector> base = encode_batch(images);
    const std::size_t n = cfg_.latent_bits, m = cfg_.categories;
    std::set<BitVector> out(base.begin(), base.end());
    std::vector<float> logp(m);
    for (std::size_t b = 0; b < l.batch(); ++b) {
        const auto row = l.row(b);
        for (int s = 1; s < k; ++s) {
            BitVector v(n);
            for (std::size_t j = 0; j < n; ++j) {
                std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(j * m), m, logp.begin());
                v.set(j, nd::gumbel_max_sample(logp, rng) == 0);
            }
            out.insert(std::move(v));
        }
    }
    return {out.begin(), out.end()};
}

void SaeModel::save(const std::string& path) const {
    nd::ModelFile f;
    f.kind = static_cast<std::uint8_t>(ModelKind::sae);
    json meta = json::parse(to_json(cfg_));
    meta["final_reconstruction"] = final_reconstruction;
    f.metadata = meta.dump();
    f.networks = {encoder_.layers(), decoder_.layers()};
    nd::save_model(path, f);
}

SaeModel SaeModel::load(const std::string& path) {
    nd::ModelFile f = nd::load_model(path);
    if (f.kind != static_cast<std::uint8_t>(ModelKind::sae) || f.networks.size() != 2)
        throw nd::FormatError(path + ": not an SAE checkpoint");
    SaeConfig cfg = sae_config_from_json(f.metadata);
    Network enc(std::move(f.networks[0])), dec(std::move(f.networks[1]));
    enc.resolve({cfg.height, cfg.width});
    dec.resolve({cfg.latent_bits * cfg.categories});
    SaeModel m(cfg, std::move(enc), std::move(dec));
    m.final_reconstruction = json::parse(f.metadata).value("final_reconstruction", 0.0);
    return m;
}

SaeModel train_sae(const Tensor& images, const SaeConfig& cfg, nd::RngStream& rng, const EpochCallback& on_epoch) {
    cfg.validate();
    if (images.rank() != 3 || images.batch() == 0) throw std::invalid_argument("train_sae: empty dataset");
    if (images.dim(1) != cfg.height || images.dim(2) != cfg.width)
        throw nd::ShapeError(-1, {0, cfg.height, cfg.width}, images.shape(), "train_sae image size");

    nd::RngStream init_rng = rng.fork(1), noise_rng = rng.fork(2), order_rng = rng.fork(3);
    Network enc(encoder_layers(cfg)), dec(decoder_layers(cfg));
    enc.build({cfg.height, cfg.width}, init_rng);
    dec.build({cfg.latent_bits * cfg.categories}, init_rng);

    std::vector<Tensor*> params = enc.parameters();
    for (Tensor* p : dec.parameters()) params.push_back(p);
    nd::AdamState adam;

    const std::size_t count = images.batch();
    const double pixels = static_cast<double>(cfg.height * cfg.width);
    const AnnealSchedule anneal = AnnealSchedule::calibrated(cfg.tau0, cfg.tau_min, cfg.epochs);
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);

    double last_rec = 0.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto tau = static_cast<float>(anneal.at(epoch));
        const float lr = epoch < cfg.epochs / 2 ? cfg.lr : cfg.lr_late;
        order_rng.shuffle(order.begin(), order.end());
        double rec_sum = 0.0, kl_sum = 0.0;
        for (std::size_t start = 0; start < count; start += cfg.batch_size) {
            const std::size_t end = std::min(count, start + cfg.batch_size);
            const Tensor x = images.gather_rows(std::span(order).subspan(start, end - start));
            const double bsz = static_cast<double>(end - start);

            enc.zero_grad();
            dec.zero_grad();
            nd::Tape et = enc.forward_train(x, noise_rng);
            const Tensor& logits = et.output();
            const Tensor z = nd::gumbel_softmax(logits, cfg.categories, tau, noise_rng);
            nd::Tape dt = dec.forward_train(z, noise_rng);

            nd::LossValue rec = nd::bce_loss(dt.output(), x);
            // Mean BCE -> per-image sum over pixels.
            const double rec_value = rec.value * pixels;
            for (float& g : rec.grad.data()) g = static_cast<float>(g * pixels);
            nd::LossValue kl = nd::gs_variational_loss_logits(logits, cfg.categories);
            const double kl_value = kl.value / bsz;
            require_finite(rec_value, epoch, start / cfg.batch_size, "reconstruction loss");
            require_finite(kl_value, epoch, start / cfg.batch_size, "variational loss");

            const Tensor gz = dec.backward(dt, rec.grad);
            Tensor gl = nd::gumbel_softmax_backward(z, gz, cfg.categories, tau);
            const auto kw = static_cast<float>(cfg.kl_weight / bsz);
            for (std::size_t i = 0; i < gl.size(); ++i) gl[i] += kw * kl.grad[i];
            enc.backward(et, gl);
            nd::adam_step(params, adam, lr);

            rec_sum += rec_value * bsz;
            kl_sum += kl_value * bsz;
        }
        last_rec = rec_sum / static_cast<double>(count);
        if (on_epoch) on_epoch({epoch, tau, lr, last_rec, kl_sum / static_cast<double>(count)});
    }
    for (Tensor* p : params) p->drop_grad();
    SaeModel model(cfg, std::move(enc), std::move(dec));
    model.final_reconstruction = last_rec;
    return model;
}

}  // namespace latplan
