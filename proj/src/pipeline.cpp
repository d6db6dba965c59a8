#include "latplan/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "latplan/image.hpp"

namespace latplan {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

json params_json(const DomainParams& p) {
    json j{{"name", p.name}, {"size", p.size}};
    if (!p.idx_images.empty()) j["idx_images"] = p.idx_images;
    if (!p.idx_labels.empty()) j["idx_labels"] = p.idx_labels;
    if (!p.photo.empty()) j["photo"] = p.photo;
    return j;
}

DomainParams params_from(const json& j) {
    DomainParams p;
    p.name = j.value("name", p.name);
    p.size = j.value("size", p.size);
    p.idx_images = j.value("idx_images", std::string{});
    p.idx_labels = j.value("idx_labels", std::string{});
    p.photo = j.value("photo", std::string{});
    return p;
}

Tensor single(const Tensor& image) {
    if (image.rank() == 3) return image;
    return image.reshaped({1, image.dim(0), image.dim(1)});
}

}  // namespace

std::string to_json(const DomainParams& p) { return params_json(p).dump(); }
DomainParams domain_params_from_json(const std::string& text) { return params_from(json::parse(text)); }

Tensor Dataset::images(const Domain& d) const {
    std::vector<Tensor> imgs;
    imgs.reserve(states.size());
    for (const auto& s : states) imgs.push_back(d.render(s));
    return Tensor::stack(imgs);
}

std::vector<std::uint32_t> Dataset::train_states() const {
    std::set<std::uint32_t> s;
    for (auto i : train) {
        s.insert(transitions[i].first);
        s.insert(transitions[i].second);
    }
    return {s.begin(), s.end()};
}

Dataset generate_dataset(const Domain& d, const DomainParams& params, const DatasetConfig& cfg, nd::RngStream& rng) {
    if (!(cfg.val_fraction >= 0 && cfg.val_fraction < 1)) throw std::invalid_argument("val_fraction must lie in [0,1)");
    std::set<std::pair<std::uint64_t, std::uint64_t>> pairs;
    if (cfg.transitions == 0) {
        for (const auto& [s, t] : all_transitions(d)) pairs.emplace(d.index(s), d.index(t));
    } else {
        const std::uint64_t n = d.state_count();
        std::size_t attempts = 0;
        while (pairs.size() < cfg.transitions) {
            if (++attempts > 100 * cfg.transitions + 1000)
                throw std::runtime_error("cannot sample that many distinct transitions");
            const PuzzleState s = d.state_at(rng.below(n));
            const auto succ = d.successors(s);
            if (succ.empty()) continue;
            pairs.emplace(d.index(s), d.index(succ[rng.below(succ.size())]));
        }
    }
    std::set<std::uint64_t> ids;
    for (const auto& [a, b] : pairs) {
        ids.insert(a);
        ids.insert(b);
    }
    Dataset ds;
    ds.params = params;
    std::unordered_map<std::uint64_t, std::uint32_t> pos;
    for (auto id : ids) {
        pos[id] = static_cast<std::uint32_t>(ds.states.size());
        ds.states.push_back(d.state_at(id));
    }
    for (const auto& [a, b] : pairs) ds.transitions.emplace_back(pos[a], pos[b]);

    std::vector<std::uint32_t> order(ds.transitions.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    const auto val = static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(order.size()) + 0.5);
    ds.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val));
    ds.train.assign(order.begin() + static_cast<std::ptrdiff_t>(val), order.end());
    std::sort(ds.train.begin(), ds.train.end());
    std::sort(ds.val.begin(), ds.val.end());
    return ds;
}

void save_dataset(const Dataset& ds, const Domain& d, const std::string& dir) {
    fs::create_directories(dir);
    json j;
    j["domain"] = params_json(ds.params);
    std::vector<std::uint64_t> ids;
    for (const auto& s : ds.states) ids.push_back(d.index(s));
    j["states"] = ids;
    json tr = json::array();
    for (const auto& [a, b] : ds.transitions) tr.push_back({a, b});
    j["transitions"] = tr;
    j["train"] = ds.train;
    j["val"] = ds.val;
    write_text((fs::path(dir) / "dataset.json").string(), j.dump() + "\n");
    write_lpt((fs::path(dir) / "images.lpt").string(), ds.images(d));
}

Dataset load_dataset(const std::string& dir) {
    const json j = json::parse(read_text((fs::path(dir) / "dataset.json").string()));
    Dataset ds;
    ds.params = params_from(j.at("domain"));
    const Domain d = Domain::from_params(ds.params);
    for (auto id : j.at("states").get<std::vector<std::uint64_t>>()) ds.states.push_back(d.state_at(id));
    for (const auto& p : j.at("transitions")) ds.transitions.emplace_back(p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>());
    ds.train = j.at("train").get<std::vector<std::uint32_t>>();
    ds.val = j.at("val").get<std::vector<std::uint32_t>>();
    for (const auto& [a, b] : ds.transitions)
        if (a >= ds.states.size() || b >= ds.states.size()) throw std::runtime_error(dir + ": transition index out of range");
    return ds;
}

std::vector<BitVector> encode_images(const SaeModel& sae, const Tensor& images) {
    return sae.encode_denoised(single(images), 1);
}

SaeModel train_sae_stage(const Dataset& ds, const Domain& d, const SaeConfig& cfg, nd::RngStream& rng,
                         const EpochCallback& on_epoch) {
    std::vector<Tensor> imgs;
    for (auto i : ds.train_states()) imgs.push_back(d.render(ds.states[i]));
    if (imgs.empty()) throw std::invalid_argument("dataset has no training states");
    SaeConfig c = cfg;
    c.height = d.height();
    c.width = d.width();
    return train_sae(Tensor::stack(imgs), c, rng, on_epoch);
}

StripsProblem build_ama1(const Dataset& ds, const std::vector<BitVector>& codes) {
    std::vector<Transition> tr;
    tr.reserve(ds.transitions.size());
    for (const auto& [a, b] : ds.transitions) tr.emplace_back(codes.at(a), codes.at(b));
    return compile(tr);
}

std::vector<BitPair> code_transitions(const Dataset& ds, const std::vector<BitVector>& codes,
                                      const std::vector<std::uint32_t>& which) {
    std::set<BitPair> out;
    for (auto i : which) {
        const auto& [a, b] = ds.transitions.at(i);
        out.emplace(codes.at(a), codes.at(b));
    }
    return {out.begin(), out.end()};
}

Discriminator train_sd_stage(const SaeModel& sae, const std::vector<BitVector>& positives, const SdStageConfig& cfg,
                             nd::RngStream& rng, PuReport* report) {
    const std::set<BitVector> uniq(positives.begin(), positives.end());
    const std::vector<BitVector> pos(uniq.begin(), uniq.end());
    nd::RngStream gen = rng.fork(1), fit = rng.fork(2);
    const auto count = static_cast<std::size_t>(cfg.mixed_factor * static_cast<double>(pos.size()));
    const auto mixed = remove_known(gen_mixed_sd(sae, count, cfg.k_iters, gen), pos);
    return pu_train(pos, mixed, {cfg.arch}, cfg.pu, fit, report);
}

Discriminator train_ad_stage(const AaeModel& aae, const Discriminator* sd, const std::vector<BitPair>& positives,
                             const AdStageConfig& cfg, nd::RngStream& rng, PuReport* report) {
    Discriminator layout;
    layout.set_xor_features(cfg.xor_features);
    auto mixed_pairs = gen_mixed_ad(positives, aae, cfg.sd_pruning ? sd : nullptr);
    std::vector<BitVector> pos, mixed;
    for (const auto& [s, t] : positives) pos.push_back(ad_input(layout, s, t));
    for (const auto& [s, t] : mixed_pairs) mixed.push_back(ad_input(layout, s, t));
    mixed = remove_known(mixed, pos);
    if (mixed.empty())
        throw std::runtime_error(cfg.sd_pruning ? "no AD mixed examples survive SD pruning; retrain the SD or disable sd_pruning"
                                                : "the AAE generates no transitions beyond the positives");
    nd::RngStream pick = rng.fork(1), fit = rng.fork(2);
    const auto keep = static_cast<std::size_t>(cfg.mixed_ratio * static_cast<double>(pos.size()));
    if (cfg.mixed_ratio > 0 && mixed.size() > keep) {
        pick.shuffle(mixed.begin(), mixed.end());
        mixed.resize(keep);
    }
    Discriminator ad = pu_train(pos, mixed, cfg.archs, cfg.pu, fit, report);
    ad.set_xor_features(cfg.xor_features);
    return ad;
}

std::string to_string(Method m) { return m == Method::ama1 ? "ama1" : "ama2"; }

std::string to_string(Noise n) {
    switch (n) {
        case Noise::none: return "none";
        case Noise::gaussian: return "gaussian";
        case Noise::saltpepper: return "saltpepper";
    }
    return "none";
}

Method parse_method(const std::string& s) {
    if (s == "ama1") return Method::ama1;
    if (s == "ama2") return Method::ama2;
    throw std::invalid_argument("unknown method '" + s + "'");
}

Noise parse_noise(const std::string& s) {
    if (s == "none" || s == "std") return Noise::none;
    if (s == "gaussian") return Noise::gaussian;
    if (s == "saltpepper") return Noise::saltpepper;
    throw std::invalid_argument("unknown noise '" + s + "'");
}

Tensor corrupt(const Tensor& image, Noise noise, nd::RngStream& rng) {
    switch (noise) {
        case Noise::gaussian: return add_gaussian_noise(image, 0.3, rng);
        case Noise::saltpepper: return add_salt_pepper(image, 0.06, rng);
        case Noise::none: break;
    }
    return image;
}

InstanceReport solve_instance(const PlannerSetup& setup, const Instance& inst, Noise noise, nd::RngStream& rng,
                              int optimal_length) {
    if (!setup.domain || !setup.sae) throw std::invalid_argument("planner setup needs a domain and an SAE");
    InstanceReport r;
    r.init = inst.init;
    r.goal = inst.goal;
    r.optimal_length = optimal_length;
    const BitVector init = encode_images(*setup.sae, corrupt(inst.init_image, noise, rng)).front();
    const BitVector goal = encode_images(*setup.sae, corrupt(inst.goal_image, noise, rng)).front();

    SuccessorFn succ;
    HeuristicFn h;
    if (setup.method == Method::ama1) {
        if (!setup.problem || !setup.index) throw std::invalid_argument("AMA1 planning needs a compiled problem");
        succ = [&](const BitVector& s) { return succ_strips(s, *setup.problem, *setup.index); };
        h = [](const BitVector&) { return 0; };
    } else {
        succ = [&](const BitVector& s) { return succ_ama2(s, setup.succ); };
        h = [&goal](const BitVector& s) { return goal_count(s, goal); };
    }
    r.plan = astar(init, goal, succ, h, setup.limits);
    if (!r.solved()) return r;

    const Tensor imgs = setup.sae->decode_batch(r.plan.states);
    std::vector<PuzzleState> states;
    bool all = true;
    for (std::size_t i = 0; i < imgs.batch(); ++i) {
        const Tensor img = imgs.rows(i, i + 1).reshaped({imgs.dim(1), imgs.dim(2)});
        r.decoded.push_back(setup.domain->classify(img));
        if (r.decoded.back())
            states.push_back(*r.decoded.back());
        else
            all = false;
    }
    r.valid = all && validate_plan(*setup.domain, inst.init, inst.goal, states);
    return r;
}

std::size_t EvalReport::solved() const {
    return static_cast<std::size_t>(std::count_if(instances.begin(), instances.end(), [](const auto& r) { return r.solved(); }));
}
std::size_t EvalReport::valid() const {
    return static_cast<std::size_t>(std::count_if(instances.begin(), instances.end(), [](const auto& r) { return r.valid; }));
}
std::size_t EvalReport::optimal() const {
    return static_cast<std::size_t>(std::count_if(instances.begin(), instances.end(), [](const auto& r) { return r.optimal(); }));
}

unsigned worker_threads() {
    if (const char* env = std::getenv("LATENTPLAN_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

EvalReport evaluate(const PlannerSetup& setup, const std::vector<Instance>& instances, Noise noise, std::uint64_t seed,
                    unsigned threads) {
    EvalReport rep;
    rep.method = setup.method;
    rep.noise = noise;
    rep.walk_length = instances.empty() ? 0 : instances.front().walk_length;
    rep.instances.resize(instances.size());
    const std::vector<int> dist = bfs_distances(*setup.domain, setup.domain->goal());
    const nd::RngStream base(seed);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto work = [&] {
        for (std::size_t i = next++; i < instances.size(); i = next++) {
            try {
                nd::RngStream r = base.fork(i);
                const auto& inst = instances[i];
                const int opt = inst.goal == setup.domain->goal() ? dist[setup.domain->index(inst.init)] : -1;
                rep.instances[i] = solve_instance(setup, inst, noise, r, opt);
                rep.instances[i].id = i;
            } catch (...) {
                const std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(instances.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return rep;
}

ErrorRates sd_error_rates(const Discriminator& sd, const SaeModel& sae, const Domain& d,
                          const std::vector<BitVector>& state_codes, std::size_t invalid_samples, nd::RngStream& rng) {
    std::vector<BitVector> invalid;
    const std::unordered_set<BitVector, BitVectorHash> known(state_codes.begin(), state_codes.end());
    std::size_t attempts = 0;
    while (invalid.size() < invalid_samples && attempts++ < 50 * invalid_samples + 100) {
        BitVector b(sae.bits());
        for (std::size_t j = 0; j < b.size(); ++j) b.set(j, rng.uniform() < 0.5);
        if (known.count(b)) continue;
        if (d.classify(sae.decode(b))) continue;
        invalid.push_back(std::move(b));
    }
    return error_rates(sd.score(state_codes), sd.score(invalid));
}

ErrorRates ad_error_rates(const Discriminator& ad, const Domain& d, const std::vector<BitVector>& state_codes,
                          std::size_t invalid_samples, nd::RngStream& rng) {
    std::vector<BitPair> valid, invalid;
    for (const auto& [s, t] : all_transitions(d)) valid.emplace_back(state_codes.at(d.index(s)), state_codes.at(d.index(t)));
    const std::uint64_t n = d.state_count();
    std::size_t attempts = 0;
    while (invalid.size() < invalid_samples && attempts++ < 50 * invalid_samples + 100) {
        const auto a = rng.below(n), b = rng.below(n);
        if (a == b || d.adjacent(d.state_at(a), d.state_at(b))) continue;
        invalid.emplace_back(state_codes.at(a), state_codes.at(b));
    }
    return error_rates(ad_scores(ad, valid), ad_scores(ad, invalid));
}

namespace {

json instance_json(const InstanceReport& r, const Domain& d) {
    json j{{"id", r.id},
           {"status", to_string(r.plan.status)},
           {"init", d.index(r.init)},
           {"goal", d.index(r.goal)},
           {"optimal_length", r.optimal_length},
           {"expanded", r.plan.expanded},
           {"generated", r.plan.generated},
           {"wall_seconds", r.plan.wall_seconds},
           {"valid", r.valid}};
    if (r.solved()) {
        j["length"] = r.plan.length();
        j["actions"] = r.plan.actions;
        std::vector<std::string> bits;
        for (const auto& b : r.plan.states) bits.push_back(b.to_string());
        j["states"] = bits;
        json dec = json::array();
        for (const auto& s : r.decoded) dec.push_back(s ? json(d.index(*s)) : json(nullptr));
        j["decoded"] = dec;
    }
    return j;
}

}  // namespace

std::string report_json(const EvalReport& r, const DomainParams& params) {
    const Domain d = Domain::from_params(params);
    json j{{"domain", params_json(params)},
           {"method", to_string(r.method)},
           {"noise", to_string(r.noise)},
           {"walk_length", r.walk_length},
           {"instances", r.instances.size()},
           {"solved", r.solved()},
           {"valid", r.valid()},
           {"optimal", r.optimal()}};
    auto err = [](const ErrorRates& e) {
        return json{{"type1", e.type1}, {"type2", e.type2}, {"valid", e.valid}, {"invalid", e.invalid}};
    };
    if (r.sd_errors) j["sd_errors"] = err(*r.sd_errors);
    if (r.ad_errors) j["ad_errors"] = err(*r.ad_errors);
    json rows = json::array();
    for (const auto& i : r.instances) rows.push_back(instance_json(i, d));
    j["results"] = rows;
    return j.dump(2) + "\n";
}

std::string plan_json(const InstanceReport& r, const DomainParams& params, const Domain& d) {
    json j = instance_json(r, d);
    j["domain"] = params_json(params);
    return j.dump(2) + "\n";
}

PlanCheck validate_plan_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        return {false, std::string("unreadable plan: ") + e.what()};
    }
    if (j.value("status", "") != "solved") return {false, "plan status is not solved"};
    const Domain d = Domain::from_params(params_from(j.at("domain")));
    const PuzzleState init = d.state_at(j.at("init").get<std::uint64_t>());
    const PuzzleState goal = d.state_at(j.at("goal").get<std::uint64_t>());
    std::vector<PuzzleState> states;
    for (const auto& s : j.at("decoded")) {
        if (s.is_null()) return {false, "a plan state does not decode to a valid state"};
        const auto id = s.get<std::uint64_t>();
        if (id >= d.state_count()) return {false, "state index out of range"};
        states.push_back(d.state_at(id));
    }
    if (j.contains("length") && j.at("length").get<std::size_t>() + 1 != states.size())
        return {false, "length does not match the state sequence"};
    if (!validate_plan(d, init, goal, states)) return {false, "decoded states do not form a path from init to goal"};
    return {true, "ok"};
}

}  // namespace latplan
