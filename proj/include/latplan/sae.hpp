#pragma once

#include <functional>
#include <string>
#include <vector>

#include "latplan/bitvec.hpp"
#include "latplan/nd/network.hpp"
#include "latplan/nd/rng.hpp"

namespace latplan {

using nd::Tensor;

/// tau(t) = max(tau_min, tau0 * exp(-r t)) over epochs t = 0..epochs-1.
struct AnnealSchedule {
    double tau0 = 5.0;
    double r = 0.0;
    double tau_min = 0.7;

    /// Rate that reaches tau_min exactly at the last epoch.
    static AnnealSchedule calibrated(double tau0, double tau_min, int epochs);
    double at(int epoch) const;
};

struct SaeConfig {
    std::size_t latent_bits = 36;  // N
    std::size_t categories = 2;    // M
    std::size_t height = 0;
    std::size_t width = 0;
    float noise_sigma = 0.4f;
    int epochs = 100;
    std::size_t batch_size = 2000;
    float lr = 0.001f;
    float lr_late = 0.0001f;  // from epoch floor(epochs/2)
    double tau0 = 5.0;
    double tau_min = 0.7;
    std::size_t conv_channels = 16;
    float dropout = 0.4f;
    std::size_t hidden = 1000;
    double kl_weight = 1.0;

    void validate() const;
    static SaeConfig hanoi_defaults();
};

struct EpochStats {
    int epoch = 0;
    double tau = 0.0;
    double lr = 0.0;
    double reconstruction = 0.0;  // per image, summed over pixels
    double variational = 0.0;     // per image, summed over latent rows
};

using EpochCallback = std::function<void(const EpochStats&)>;

class SaeModel {
public:
    SaeModel() = default;
    SaeModel(SaeConfig cfg, nd::Network encoder, nd::Network decoder);

    const SaeConfig& config() const { return cfg_; }
    std::size_t bits() const { return cfg_.latent_bits; }

    /// Encoder logits, (B, N*M); row-major N rows of M categories.
    Tensor logits(const Tensor& images) const;
    /// Bit j is 1 iff category 0 wins the argmax in row j.
    BitVector encode(const Tensor& image) const;
    std::vector<BitVector> encode_batch(const Tensor& images) const;
    /// Feeds the N x 2 matrix whose row j is (b_j, 1 - b_j).
    Tensor decode(const BitVector& b) const;
    Tensor decode_batch(const std::vector<BitVector>& bs) const;
    /// Encode(Decode(b)).
    std::vector<BitVector> autoencode_bits(const std::vector<BitVector>& bs) const;
    /// Encode followed by `rounds` Encode(Decode(.)) steps; settles bits that the decoder ignores.
    std::vector<BitVector> encode_denoised(const Tensor& images, int rounds = 1) const;

    /// Distinct bit vectors per image: the deterministic encoding plus k-1 Gumbel-Max samples.
    std::vector<BitVector> augment_states(const Tensor& images, int k, nd::RngStream& rng) const;

    const nd::Network& encoder() const { return encoder_; }
    const nd::Network& decoder() const { return decoder_; }

    void save(const std::string& path) const;
    static SaeModel load(const std::string& path);

    double final_reconstruction = 0.0;

private:
    Tensor as_batch(const Tensor& images) const;
    Tensor bits_to_input(const std::vector<BitVector>& bs) const;

    SaeConfig cfg_;
    nd::Network encoder_;
    nd::Network decoder_;
};

/// images: (B,H,W) in [0,1]. Throws on an empty dataset or a non-finite loss.
SaeModel train_sae(const Tensor& images, const SaeConfig& cfg, nd::RngStream& rng, const EpochCallback& on_epoch = {});

std::string to_json(const SaeConfig& cfg);
SaeConfig sae_config_from_json(const std::string& text);

}  // namespace latplan
