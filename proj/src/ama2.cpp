#include "latplan/ama2.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "latplan/checkpoint.hpp"
#include "latplan/nd/adam.hpp"
#include "latplan/nd/ops.hpp"
#include "latplan/nd/serialize.hpp"
#include "latplan/sae.hpp"

namespace latplan {

using nd::LayerSpec;
using nd::Network;
using json = nlohmann::json;

namespace {

Tensor to_tensor(const std::vector<BitVector>& bs, std::size_t width) {
    Tensor t({bs.size(), width});
    for (std::size_t i = 0; i < bs.size(); ++i) {
        if (bs[i].size() != width)
            throw nd::ShapeError(-1, {width}, {bs[i].size()}, "bit vector width");
        for (std::size_t j = 0; j < width; ++j) t[i * width + j] = bs[i][j] ? 1.0f : 0.0f;
    }
    return t;
}

std::vector<std::size_t> argmax_rows(const Tensor& t) {
    std::vector<std::size_t> out(t.batch());
    for (std::size_t b = 0; b < t.batch(); ++b) {
        const auto r = t.row(b);
        out[b] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

std::vector<BitVector> threshold_rows(const Tensor& t) {
    std::vector<BitVector> out;
    out.reserve(t.batch());
    for (std::size_t b = 0; b < t.batch(); ++b) out.push_back(BitVector::from_floats(t.row(b)));
    return out;
}

std::vector<LayerSpec> aae_encoder(const AaeConfig& c) {
    std::vector<LayerSpec> l;
    for (int i = 0; i < 2; ++i) {
        l.push_back(LayerSpec::concat());
        l.push_back(LayerSpec::dense(c.hidden));
        l.push_back(LayerSpec::relu());
        l.push_back(LayerSpec::batchnorm());
        l.push_back(LayerSpec::dropout(c.dropout));
    }
    l.push_back(LayerSpec::concat());
    l.push_back(LayerSpec::dense(c.labels));
    return l;
}

std::vector<LayerSpec> aae_decoder(const AaeConfig& c) {
    std::vector<LayerSpec> l;
    for (int i = 0; i < 2; ++i) {
        l.push_back(LayerSpec::concat());
        l.push_back(LayerSpec::dense(c.hidden));
        l.push_back(LayerSpec::relu());
        l.push_back(LayerSpec::batchnorm());
        l.push_back(LayerSpec::dropout(c.dropout));
    }
    l.push_back(LayerSpec::dense(c.bits));
    l.push_back(LayerSpec::sigmoid());
    return l;
}

json aae_config_json(const AaeConfig& c) {
    return {{"bits", c.bits}, {"labels", c.labels}, {"hidden", c.hidden}, {"dropout", c.dropout},
            {"epochs", c.epochs}, {"batch_size", c.batch_size}, {"lr", c.lr}, {"tau0", c.tau0},
            {"tau_min", c.tau_min}, {"kl_weight", c.kl_weight}};
}

AaeConfig aae_config_from(const json& j) {
    AaeConfig c;
    c.bits = j.value("bits", c.bits);
    c.labels = j.value("labels", c.labels);
    c.hidden = j.value("hidden", c.hidden);
    c.dropout = j.value("dropout", c.dropout);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.tau0 = j.value("tau0", c.tau0);
    c.tau_min = j.value("tau_min", c.tau_min);
    c.kl_weight = j.value("kl_weight", c.kl_weight);
    return c;
}

}  // namespace

void AaeConfig::validate() const {
    if (bits == 0 || labels < 2) throw std::invalid_argument("AAE needs bits >= 1 and labels >= 2");
    if (!(tau_min > 0) || tau0 < tau_min) throw std::invalid_argument("AAE anneal needs tau0 >= tau_min > 0");
    if (epochs < 1 || batch_size < 1) throw std::invalid_argument("AAE epochs and batch size must be positive");
}

AaeModel::AaeModel(AaeConfig cfg, Network encoder, Network decoder, std::vector<std::size_t> used)
    : cfg_(std::move(cfg)), encoder_(std::move(encoder)), decoder_(std::move(decoder)), used_(std::move(used)) {}

bool AaeModel::is_used(std::size_t label) const { return std::binary_search(used_.begin(), used_.end(), label); }

std::vector<std::size_t> AaeModel::action_labels(const std::vector<BitPair>& st) const {
    if (st.empty()) return {};
    std::vector<BitVector> s, t;
    for (const auto& [a, b] : st) {
        s.push_back(a);
        t.push_back(b);
    }
    const Tensor ss = to_tensor(s, cfg_.bits);
    return argmax_rows(encoder_.infer(to_tensor(t, cfg_.bits), &ss));
}

std::size_t AaeModel::action_label(const BitVector& t, const BitVector& s) const {
    return action_labels({{s, t}}).front();
}

std::vector<BitVector> AaeModel::apply_labels(const std::vector<std::size_t>& labels,
                                              const std::vector<BitVector>& states) const {
    if (labels.size() != states.size()) throw std::invalid_argument("apply_labels: size mismatch");
    if (labels.empty()) return {};
    Tensor z({labels.size(), cfg_.labels});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!is_used(labels[i])) throw std::invalid_argument("action label " + std::to_string(labels[i]) + " is unused");
        z[i * cfg_.labels + labels[i]] = 1.0f;
    }
    const Tensor s = to_tensor(states, cfg_.bits);
    return threshold_rows(decoder_.infer(z, &s));
}

BitVector AaeModel::apply_label(std::size_t label, const BitVector& s) const {
    return apply_labels({label}, {s}).front();
}

std::vector<std::pair<std::size_t, BitVector>> AaeModel::apply_all(const BitVector& s) const {
    const std::vector<BitVector> ss(used_.size(), s);
    auto ts = apply_labels(used_, ss);
    std::vector<std::pair<std::size_t, BitVector>> out;
    out.reserve(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) out.emplace_back(used_[i], std::move(ts[i]));
    return out;
}

double AaeModel::reconstruction_rate(const std::vector<BitPair>& transitions) const {
    if (transitions.empty()) return 1.0;
    const auto labels = action_labels(transitions);
    std::vector<BitVector> s;
    for (const auto& tr : transitions) s.push_back(tr.first);
    // Unused labels cannot occur for training data; guard anyway for foreign data.
    std::size_t ok = 0;
    std::vector<std::size_t> idx;
    std::vector<std::size_t> lab;
    std::vector<BitVector> src;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (is_used(labels[i])) {
            idx.push_back(i);
            lab.push_back(labels[i]);
            src.push_back(s[i]);
        }
    const auto out = apply_labels(lab, src);
    for (std::size_t k = 0; k < idx.size(); ++k) ok += out[k] == transitions[idx[k]].second;
    return static_cast<double>(ok) / static_cast<double>(transitions.size());
}

void AaeModel::save(const std::string& path) const {
    nd::ModelFile f;
    f.kind = static_cast<std::uint8_t>(ModelKind::aae);
    json meta = aae_config_json(cfg_);
    meta["used_labels"] = used_;
    meta["final_reconstruction"] = final_reconstruction;
    f.metadata = meta.dump();
    f.networks = {encoder_.layers(), decoder_.layers()};
    nd::save_model(path, f);
}

AaeModel AaeModel::load(const std::string& path) {
    nd::ModelFile f = nd::load_model(path);
    if (f.kind != static_cast<std::uint8_t>(ModelKind::aae) || f.networks.size() != 2)
        throw nd::FormatError(path + ": not an AAE checkpoint");
    const json meta = json::parse(f.metadata);
    const AaeConfig cfg = aae_config_from(meta);
    Network enc(std::move(f.networks[0])), dec(std::move(f.networks[1]));
    enc.resolve({cfg.bits}, cfg.bits);
    dec.resolve({cfg.labels}, cfg.bits);
    AaeModel m(cfg, std::move(enc), std::move(dec), meta.at("used_labels").get<std::vector<std::size_t>>());
    m.final_reconstruction = meta.value("final_reconstruction", 0.0);
    return m;
}

AaeModel train_aae(const std::vector<BitPair>& transitions, const AaeConfig& cfg, nd::RngStream& rng,
                   const std::function<void(const AaeEpoch&)>& on_epoch) {
    cfg.validate();
    if (transitions.empty()) throw std::invalid_argument("train_aae: no transitions");
    std::vector<BitVector> s, t;
    for (const auto& [a, b] : transitions) {
        s.push_back(a);
        t.push_back(b);
    }
    const Tensor S = to_tensor(s, cfg.bits), T = to_tensor(t, cfg.bits);

    nd::RngStream init_rng = rng.fork(1), noise_rng = rng.fork(2), order_rng = rng.fork(3);
    Network enc(aae_encoder(cfg)), dec(aae_decoder(cfg));
    enc.build({cfg.bits}, init_rng, cfg.bits);
    dec.build({cfg.labels}, init_rng, cfg.bits);
    std::vector<Tensor*> params = enc.parameters();
    for (Tensor* p : dec.parameters()) params.push_back(p);
    nd::AdamState adam;

    const double tau0 = cfg.tau0, tau_min = cfg.tau_min;
    const double r = cfg.epochs > 1 ? std::log(tau0 / tau_min) / (cfg.epochs - 1) : 0.0;
    const std::size_t count = transitions.size();
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    double last = 0.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double tau_d = tau0 * std::exp(-r * epoch);
        const auto tau = static_cast<float>(tau_d < tau_min * (1 + 1e-9) ? tau_min : tau_d);
        order_rng.shuffle(order.begin(), order.end());
        double rec_sum = 0.0, kl_sum = 0.0;
        for (std::size_t start = 0; start < count; start += cfg.batch_size) {
            const std::size_t end = std::min(count, start + cfg.batch_size);
            const auto ids = std::span(order).subspan(start, end - start);
            const Tensor xs = S.gather_rows(ids), xt = T.gather_rows(ids);
            const double bsz = static_cast<double>(end - start);
            enc.zero_grad();
            dec.zero_grad();
            nd::Tape et = enc.forward_train(xt, noise_rng, &xs);
            const Tensor& logits = et.output();
            const Tensor z = nd::gumbel_softmax(logits, cfg.labels, tau, noise_rng);
            nd::Tape dt = dec.forward_train(z, noise_rng, &xs);
            nd::LossValue rec = nd::bce_loss(dt.output(), xt);
            const double width = static_cast<double>(cfg.bits);
            for (float& g : rec.grad.data()) g = static_cast<float>(g * width);
            nd::LossValue kl = nd::gs_variational_loss_logits(logits, cfg.labels);
            if (!std::isfinite(rec.value) || !std::isfinite(kl.value))
                throw std::runtime_error("AAE training diverged at epoch " + std::to_string(epoch));
            const Tensor gz = dec.backward(dt, rec.grad);
            Tensor gl = nd::gumbel_softmax_backward(z, gz, cfg.labels, tau);
            const auto kw = static_cast<float>(cfg.kl_weight / bsz);
            for (std::size_t i = 0; i < gl.size(); ++i) gl[i] += kw * kl.grad[i];
            enc.backward(et, gl);
            nd::adam_step(params, adam, cfg.lr);
            rec_sum += rec.value * width * bsz;
            kl_sum += kl.value;
        }
        last = rec_sum / static_cast<double>(count);
        if (on_epoch) on_epoch({epoch, tau, last, kl_sum / static_cast<double>(count)});
    }
    for (Tensor* p : params) p->drop_grad();

    AaeModel probe(cfg, std::move(enc), std::move(dec), {});
    const auto labels = probe.action_labels(transitions);
    std::set<std::size_t> used(labels.begin(), labels.end());
    AaeModel model(cfg, std::move(probe.encoder_), std::move(probe.decoder_), {used.begin(), used.end()});
    model.final_reconstruction = last;
    return model;
}

std::string DiscArch::name() const {
    std::ostringstream os;
    os << "fc" << width << "x" << depth << "-dropout" << dropout;
    return os.str();
}

std::vector<DiscArch> ad_architectures() {
    return {{300, 1, 0.5f}, {300, 2, 0.5f}, {300, 1, 0.8f}, {300, 2, 0.8f}};
}

DiscArch sd_architecture() { return {50, 1, 0.8f}; }

namespace {

std::vector<LayerSpec> disc_layers(const DiscArch& a) {
    std::vector<LayerSpec> l;
    for (std::size_t i = 0; i < a.depth; ++i) {
        l.push_back(LayerSpec::batchnorm());
        l.push_back(LayerSpec::dense(a.width));
        l.push_back(LayerSpec::relu());
        l.push_back(LayerSpec::dropout(a.dropout));
    }
    l.push_back(LayerSpec::dense(1));
    l.push_back(LayerSpec::sigmoid());
    return l;
}

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

Evaluation evaluate(const Network& net, const Tensor& x, const Tensor& y) {
    const Tensor p = net.infer(x);
    const nd::LossValue l = nd::bce_loss(p, y);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < p.size(); ++i) ok += (p[i] >= 0.5f) == (y[i] >= 0.5f);
    return {l.value, static_cast<double>(ok) / static_cast<double>(p.size())};
}

}  // namespace

Discriminator::Discriminator(Network net, DiscArch arch, std::size_t input_bits, double c)
    : net_(std::move(net)), arch_(arch), input_bits_(input_bits), c_(c) {}

std::vector<double> Discriminator::d1(const std::vector<BitVector>& xs) const {
    if (xs.empty()) return {};
    const Tensor p = net_.infer(to_tensor(xs, input_bits_));
    return {p.data().begin(), p.data().end()};
}

std::vector<double> Discriminator::score(const std::vector<BitVector>& xs) const {
    auto v = d1(xs);
    for (double& x : v) x *= c_;
    return v;
}

double Discriminator::score(const BitVector& x) const { return score(std::vector<BitVector>{x}).front(); }

void Discriminator::save(const std::string& path, std::uint8_t kind) const {
    nd::ModelFile f;
    f.kind = kind;
    f.metadata = json{{"c", c_}, {"input_bits", input_bits_}, {"width", arch_.width}, {"depth", arch_.depth},
                      {"dropout", arch_.dropout}, {"xor_features", xor_features_}}
                     .dump();
    f.networks = {net_.layers()};
    nd::save_model(path, f);
}

Discriminator Discriminator::load(const std::string& path, std::uint8_t kind) {
    nd::ModelFile f = nd::load_model(path);
    if (f.kind != kind || f.networks.size() != 1)
        throw nd::FormatError(path + ": expected a " + to_string(static_cast<ModelKind>(kind)) + " checkpoint");
    const json meta = json::parse(f.metadata);
    const DiscArch arch{meta.at("width").get<std::size_t>(), meta.at("depth").get<std::size_t>(),
                        meta.at("dropout").get<float>()};
    const auto bits = meta.at("input_bits").get<std::size_t>();
    Network net(std::move(f.networks[0]));
    net.resolve({bits});
    Discriminator d(std::move(net), arch, bits, meta.at("c").get<double>());
    d.xor_features_ = meta.value("xor_features", false);
    return d;
}

Discriminator pu_train(const std::vector<BitVector>& positives, const std::vector<BitVector>& mixed,
                       const std::vector<DiscArch>& candidates, const PuConfig& cfg, nd::RngStream& rng,
                       PuReport* report) {
    if (positives.empty() || mixed.empty()) throw std::invalid_argument("pu_train needs positive and mixed examples");
    if (candidates.empty()) throw std::invalid_argument("pu_train needs at least one architecture");
    const std::size_t width = positives.front().size();

    nd::RngStream split_rng = rng.fork(100);
    auto split = [&](std::vector<BitVector> v) {
        split_rng.shuffle(v.begin(), v.end());
        auto cut = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(v.size())));
        cut = std::clamp<std::size_t>(cut, 1, v.size() > 1 ? v.size() - 1 : 1);
        return std::pair(std::vector<BitVector>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(cut)),
                         std::vector<BitVector>(v.begin() + static_cast<std::ptrdiff_t>(cut), v.end()));
    };
    auto [p1, p2] = split(positives);
    auto [m1, m2] = split(mixed);
    if (p2.empty()) p2 = p1;
    if (m2.empty()) m2 = m1;

    auto assemble = [&](const std::vector<BitVector>& p, const std::vector<BitVector>& m) {
        std::vector<BitVector> all(p);
        all.insert(all.end(), m.begin(), m.end());
        Tensor y({all.size(), 1});
        for (std::size_t i = 0; i < p.size(); ++i) y[i] = 1.0f;
        return std::pair(to_tensor(all, width), y);
    };
    const auto [xtr, ytr] = assemble(p1, m1);
    const auto [xva, yva] = assemble(p2, m2);

    PuReport rep;
    rep.positives = positives.size();
    rep.mixed = mixed.size();
    Network best_net;
    double best_acc = -1.0;
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        const DiscArch& arch = candidates[ci];
        nd::RngStream r = rng.fork(ci + 1);
        nd::RngStream init_rng = r.fork(1), noise_rng = r.fork(2), order_rng = r.fork(3);
        Network net(disc_layers(arch));
        net.build({width}, init_rng);
        std::vector<Tensor*> params = net.parameters();
        nd::AdamState adam;
        std::vector<std::size_t> order(xtr.batch());
        std::iota(order.begin(), order.end(), 0);

        Evaluation best{1e300, 0.0};
        std::vector<LayerSpec> best_layers = net.layers();
        int since = 0, epochs = 0;
        for (int epoch = 0; epoch < cfg.max_epochs && since < cfg.patience; ++epoch) {
            order_rng.shuffle(order.begin(), order.end());
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(order.size(), start + cfg.batch_size);
                const auto ids = std::span(order).subspan(start, end - start);
                const Tensor xb = xtr.gather_rows(ids), yb = ytr.gather_rows(ids);
                net.zero_grad();
                nd::Tape tape = net.forward_train(xb, noise_rng);
                const nd::LossValue l = nd::bce_loss(tape.output(), yb);
                if (!std::isfinite(l.value)) throw std::runtime_error("discriminator training diverged");
                net.backward(tape, l.grad);
                nd::adam_step(params, adam, cfg.lr);
            }
            epochs = epoch + 1;
            const Evaluation ev = evaluate(net, xva, yva);
            if (ev.loss < best.loss) {
                best = ev;
                best_layers = net.layers();
                since = 0;
            } else {
                ++since;
            }
        }
        rep.candidates.push_back({arch, best.accuracy, best.loss, epochs});
        if (best.accuracy > best_acc) {
            best_acc = best.accuracy;
            rep.chosen = ci;
            best_net = Network(std::move(best_layers));
            best_net.resolve({width});
        }
    }
    for (Tensor* p : best_net.parameters()) p->drop_grad();

    Discriminator d(std::move(best_net), candidates[rep.chosen], width, 1.0);
    const auto s = d.d1(p2);
    const double c = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    if (!(c > 0.0)) throw std::runtime_error("PU calibration failed: the classifier rejects every held-out positive (c = 0)");
    d = Discriminator(std::move(d.net_), d.arch_, width, std::min(1.0, c));
    rep.c = d.c();
    if (report) *report = rep;
    return d;
}

double sd_score(const Discriminator& sd, const BitVector& s) { return sd.score(s); }

BitVector ad_input(const Discriminator& ad, const BitVector& s, const BitVector& t) {
    BitVector x = s.concat(t);
    if (!ad.xor_features()) return x;
    BitVector diff(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) diff.set(i, s[i] != t[i]);
    return x.concat(diff);
}

double ad_score(const Discriminator& ad, const BitVector& s, const BitVector& t) { return ad.score(ad_input(ad, s, t)); }

std::vector<double> ad_scores(const Discriminator& ad, const std::vector<BitPair>& st) {
    std::vector<BitVector> xs;
    xs.reserve(st.size());
    for (const auto& [s, t] : st) xs.push_back(ad_input(ad, s, t));
    return ad.score(xs);
}

std::vector<BitPair> gen_mixed_ad(const std::vector<BitPair>& transitions, const AaeModel& aae,
                                  const Discriminator* sd, double sd_threshold) {
    const std::set<BitPair> known(transitions.begin(), transitions.end());
    std::set<BitVector> sources;
    for (const auto& tr : transitions) sources.insert(tr.first);
    std::set<BitPair> out;
    for (const auto& s : sources) {
        const auto cands = aae.apply_all(s);
        std::vector<BitVector> ts;
        for (const auto& [a, t] : cands) ts.push_back(t);
        std::vector<double> scores;
        if (sd) scores = sd->score(ts);
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (sd && scores[i] < sd_threshold) continue;
            BitPair p{s, ts[i]};
            if (!known.count(p)) out.insert(std::move(p));
        }
    }
    return {out.begin(), out.end()};
}

std::vector<BitVector> gen_mixed_sd(const SaeModel& sae, std::size_t count, int k_iters, nd::RngStream& rng) {
    if (k_iters < 1) throw std::invalid_argument("gen_mixed_sd needs k_iters >= 1");
    std::vector<BitVector> b(count, BitVector(sae.bits()));
    for (auto& v : b)
        for (std::size_t j = 0; j < v.size(); ++j) v.set(j, rng.uniform() < 0.5);
    for (int k = 0; k < k_iters; ++k) b = sae.autoencode_bits(b);
    return b;
}

std::vector<BitVector> remove_known(const std::vector<BitVector>& mixed, const std::vector<BitVector>& positives) {
    const std::unordered_set<BitVector, BitVectorHash> known(positives.begin(), positives.end());
    std::unordered_set<BitVector, BitVectorHash> seen;
    std::vector<BitVector> out;
    for (const auto& m : mixed)
        if (!known.count(m) && seen.insert(m).second) out.push_back(m);
    return out;
}

ErrorRates error_rates(const std::vector<double>& valid_scores, const std::vector<double>& invalid_scores,
                       double threshold) {
    ErrorRates e;
    e.valid = valid_scores.size();
    e.invalid = invalid_scores.size();
    const auto below = std::count_if(valid_scores.begin(), valid_scores.end(), [&](double v) { return v < threshold; });
    const auto above =
        std::count_if(invalid_scores.begin(), invalid_scores.end(), [&](double v) { return v >= threshold; });
    if (e.valid) e.type1 = static_cast<double>(below) / static_cast<double>(e.valid);
    if (e.invalid) e.type2 = static_cast<double>(above) / static_cast<double>(e.invalid);
    return e;
}

}  // namespace latplan
