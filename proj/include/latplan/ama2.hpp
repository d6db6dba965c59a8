#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "latplan/bitvec.hpp"
#include "latplan/nd/network.hpp"
#include "latplan/nd/rng.hpp"

namespace latplan {

class SaeModel;
using nd::Tensor;
using BitPair = std::pair<BitVector, BitVector>;

struct AaeConfig {
    std::size_t bits = 36;
    std::size_t labels = 128;  // K
    std::size_t hidden = 400;
    float dropout = 0.4f;
    int epochs = 1000;
    std::size_t batch_size = 2000;
    float lr = 0.001f;
    double tau0 = 5.0;
    double tau_min = 0.1;
    double kl_weight = 1.0;

    void validate() const;
};

struct AaeEpoch {
    int epoch = 0;
    double tau = 0.0;
    double reconstruction = 0.0;  // per transition, summed over bits
    double variational = 0.0;
};

/// Action autoencoder: Action(t,s) -> label and Apply(label,s) -> t, both conditioned on s.
class AaeModel {
public:
    AaeModel() = default;
    AaeModel(AaeConfig cfg, nd::Network encoder, nd::Network decoder, std::vector<std::size_t> used);

    const AaeConfig& config() const { return cfg_; }
    /// Labels chosen by at least one training transition, ascending.
    const std::vector<std::size_t>& used_labels() const { return used_; }
    bool is_used(std::size_t label) const;

    std::size_t action_label(const BitVector& t, const BitVector& s) const;
    std::vector<std::size_t> action_labels(const std::vector<BitPair>& st) const;  // pairs (s,t)
    /// Throws std::invalid_argument for an unused label.
    BitVector apply_label(std::size_t label, const BitVector& s) const;
    /// Apply(a, s) for every used label, in label order, as one batch.
    std::vector<std::pair<std::size_t, BitVector>> apply_all(const BitVector& s) const;
    std::vector<BitVector> apply_labels(const std::vector<std::size_t>& labels, const std::vector<BitVector>& states) const;

    /// Fraction of (s,t) with Apply(Action(t,s),s) = t.
    double reconstruction_rate(const std::vector<BitPair>& transitions) const;

    void save(const std::string& path) const;
    static AaeModel load(const std::string& path);

    double final_reconstruction = 0.0;

private:
    friend AaeModel train_aae(const std::vector<BitPair>&, const AaeConfig&, nd::RngStream&,
                              const std::function<void(const AaeEpoch&)>&);
    AaeConfig cfg_;
    nd::Network encoder_;
    nd::Network decoder_;
    std::vector<std::size_t> used_;
};

AaeModel train_aae(const std::vector<BitPair>& transitions, const AaeConfig& cfg, nd::RngStream& rng,
                   const std::function<void(const AaeEpoch&)>& on_epoch = {});

/// [bn, fc(width), relu, dropout] x depth, fc(1), sigmoid.
struct DiscArch {
    std::size_t width = 300;
    std::size_t depth = 1;
    float dropout = 0.5f;
    std::string name() const;
};

std::vector<DiscArch> ad_architectures();
DiscArch sd_architecture();

struct PuConfig {
    float lr = 0.001f;
    std::size_t batch_size = 1000;
    int max_epochs = 3000;
    int patience = 50;
    double train_fraction = 0.9;
};

struct PuCandidate {
    DiscArch arch;
    double val_accuracy = 0.0;
    double val_loss = 0.0;
    int epochs = 0;
};

struct PuReport {
    std::vector<PuCandidate> candidates;
    std::size_t chosen = 0;
    double c = 0.0;
    std::size_t positives = 0;
    std::size_t mixed = 0;
};

/// PU-learned validity classifier: d2(x) = c * d1(x).
class Discriminator {
public:
    Discriminator() = default;
    Discriminator(nd::Network net, DiscArch arch, std::size_t input_bits, double c);

    double c() const { return c_; }
    const DiscArch& arch() const { return arch_; }
    std::size_t input_bits() const { return input_bits_; }
    /// Pair discriminators may see [s, t, s xor t] instead of [s, t].
    bool xor_features() const { return xor_features_; }
    void set_xor_features(bool on) { xor_features_ = on; }

    std::vector<double> d1(const std::vector<BitVector>& xs) const;
    std::vector<double> score(const std::vector<BitVector>& xs) const;
    double score(const BitVector& x) const;

    /// kind: ModelKind::sd or ModelKind::ad as its byte value.
    void save(const std::string& path, std::uint8_t kind) const;
    static Discriminator load(const std::string& path, std::uint8_t kind);

private:
    friend Discriminator pu_train(const std::vector<BitVector>&, const std::vector<BitVector>&,
                                  const std::vector<DiscArch>&, const PuConfig&, nd::RngStream&,
                                  PuReport*);
    nd::Network net_;
    DiscArch arch_;
    std::size_t input_bits_ = 0;
    double c_ = 1.0;
    bool xor_features_ = false;
};

/// The AD input for (s, t) under the discriminator's feature layout.
BitVector ad_input(const Discriminator& ad, const BitVector& s, const BitVector& t);

/// Trains each candidate on p1 vs m1 with early stopping on validation loss, keeps the one
/// with the best validation accuracy, then sets c = mean d1(p2). Throws when p or m is
/// empty or when c = 0.
Discriminator pu_train(const std::vector<BitVector>& positives, const std::vector<BitVector>& mixed,
                       const std::vector<DiscArch>& candidates, const PuConfig& cfg, nd::RngStream& rng,
                       PuReport* report = nullptr);

double sd_score(const Discriminator& sd, const BitVector& s);
double ad_score(const Discriminator& ad, const BitVector& s, const BitVector& t);
std::vector<double> ad_scores(const Discriminator& ad, const std::vector<BitPair>& st);

/// (s, Apply(a,s)) for every used label a and every distinct before-state, minus the
/// positives and, when an SD is given, minus successors scoring below sd_threshold.
std::vector<BitPair> gen_mixed_ad(const std::vector<BitPair>& transitions, const AaeModel& aae,
                                  const Discriminator* sd = nullptr, double sd_threshold = 0.5);

/// Uniform random bit vectors pushed through k_iters rounds of Encode(Decode(.)).
std::vector<BitVector> gen_mixed_sd(const SaeModel& sae, std::size_t count, int k_iters, nd::RngStream& rng);

/// Drops every element of `mixed` that occurs in `positives`, and duplicates.
std::vector<BitVector> remove_known(const std::vector<BitVector>& mixed, const std::vector<BitVector>& positives);

/// Type-1: valid examples scored below the threshold. Type-2: invalid examples at or above it.
struct ErrorRates {
    double type1 = 0.0;
    double type2 = 0.0;
    std::size_t valid = 0;
    std::size_t invalid = 0;
};
ErrorRates error_rates(const std::vector<double>& valid_scores, const std::vector<double>& invalid_scores,
                       double threshold = 0.5);

}  // namespace latplan
