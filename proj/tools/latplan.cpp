#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "latplan/checkpoint.hpp"
#include "latplan/image.hpp"
#include "latplan/pipeline.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace latplan;
using cli::RunConfig;

namespace {

struct Common {
    std::string config;
    std::string out = "run";
    std::string domain;
    int size = -1;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

struct Paths {
    fs::path root;
    fs::path dataset() const { return root / "dataset"; }
    fs::path config() const { return root / "config.json"; }
    fs::path sae() const { return root / "sae.lpm"; }
    fs::path aae() const { return root / "aae.lpm"; }
    fs::path sd() const { return root / "sd.lpm"; }
    fs::path ad() const { return root / "ad.lpm"; }
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "Run configuration (JSON); defaults to OUT/config.json when present");
    app->add_option("--out", c.out, "Run directory")->capture_default_str();
    app->add_option("--domain", c.domain,
                    "mnist-8puzzle, mandrill-8puzzle, spider-8puzzle, lightsout, twisted-lightsout, hanoi");
    app->add_option("--size", c.size, "LightsOut side or Hanoi disks");
    app->add_option("--seed", c.seed, "Seed for every stochastic choice")->each([&c](const std::string&) { c.seed_set = true; });
}

RunConfig resolve(const Common& c, const Paths& p) {
    RunConfig cfg;
    if (!c.config.empty())
        cfg = cli::load_run_config(c.config);
    else if (fs::exists(p.config()))
        cfg = cli::load_run_config(p.config().string());
    if (!c.domain.empty()) cfg.domain.name = c.domain;
    if (c.size >= 0) cfg.domain.size = c.size;
    if (c.seed_set) cfg.seed = c.seed;
    return cfg;
}

void require(const fs::path& file, const std::string& stage, const std::string& producer) {
    if (!fs::exists(file))
        throw std::runtime_error("missing " + stage + " (" + file.string() + "); run '" + producer + "' first");
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

nd::RngStream stream(const RunConfig& cfg, cli::Stream s) { return nd::RngStream(cfg.seed).fork(s); }

Dataset need_dataset(const Paths& p) {
    require(p.dataset() / "dataset.json", "dataset", "gen-data");
    return load_dataset(p.dataset().string());
}

SaeModel need_sae(const Paths& p) {
    require(p.sae(), "SAE checkpoint", "train-sae");
    return SaeModel::load(p.sae().string());
}

std::vector<BitVector> dataset_codes(const SaeModel& sae, const Dataset& ds, const Domain& d) {
    return encode_images(sae, ds.images(d));
}

std::vector<BitVector> train_state_codes(const Dataset& ds, const std::vector<BitVector>& codes) {
    std::vector<BitVector> out;
    for (auto i : ds.train_states()) out.push_back(codes[i]);
    return out;
}

void print_pu(const char* what, const PuReport& r) {
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
        const auto& c = r.candidates[i];
        std::fprintf(stderr, "%s %s: val_acc %.4f val_loss %.4f epochs %d%s\n", what, c.arch.name().c_str(),
                     c.val_accuracy, c.val_loss, c.epochs, i == r.chosen ? " (chosen)" : "");
    }
    std::fprintf(stderr, "%s: positives %zu mixed %zu c %.4f\n", what, r.positives, r.mixed, r.c);
}

int cmd_gen_data(const Common& c) {
    const Paths p{c.out};
    const RunConfig cfg = resolve(c, p);
    const Domain d = Domain::from_params(cfg.domain);
    nd::RngStream rng = stream(cfg, cli::gen_data);
    const Dataset ds = generate_dataset(d, cfg.domain, cfg.dataset, rng);
    save_dataset(ds, d, p.dataset().string());
    write_file(p.config(), cli::dump_run_config(cfg));
    std::printf("%s: %zu states, %zu transitions (%zu train, %zu val) -> %s\n", d.name().c_str(), ds.states.size(),
                ds.transitions.size(), ds.train.size(), ds.val.size(), p.dataset().c_str());
    return 0;
}

int cmd_train_sae(const Common& c) {
    const Paths p{c.out};
    const RunConfig cfg = resolve(c, p);
    const Dataset ds = need_dataset(p);
    const Domain d = Domain::from_params(ds.params);
    nd::RngStream rng = stream(cfg, cli::sae);
    const SaeModel sae = train_sae_stage(ds, d, cfg.sae, rng, [](const EpochStats& e) {
        std::fprintf(stderr, "sae epoch %d tau %.3f lr %.4g rec %.4f kl %.4f\n", e.epoch, e.tau, e.lr,
                     e.reconstruction, e.variational);
    });
    sae.save(p.sae().string());
    const auto codes = dataset_codes(sae, ds, d);
    const std::set<BitVector> uniq(codes.begin(), codes.end());
    std::printf("SAE saved to %s; %zu states map to %zu distinct codes\n", p.sae().c_str(), codes.size(), uniq.size());
    return 0;
}

int cmd_train_aae(const Common& c) {
    const Paths p{c.out};
    const RunConfig cfg = resolve(c, p);
    const Dataset ds = need_dataset(p);
    const SaeModel sae = need_sae(p);
    const Domain d = Domain::from_params(ds.params);
    const auto codes = dataset_codes(sae, ds, d);
    const auto train = code_transitions(ds, codes, ds.train);
    AaeConfig ac = cfg.aae;
    ac.bits = sae.bits();
    nd::RngStream rng = stream(cfg, cli::aae);
    const AaeModel aae = train_aae(train, ac, rng, [](const AaeEpoch& e) {
        std::fprintf(stderr, "aae epoch %d tau %.3f rec %.4f kl %.4f\n", e.epoch, e.tau, e.reconstruction, e.variational);
    });
    aae.save(p.aae().string());
    std::printf("AAE saved to %s; %zu used labels; reconstruction %.4f (train) %.4f (val)\n", p.aae().c_str(),
                aae.used_labels().size(), aae.reconstruction_rate(train),
                aae.reconstruction_rate(code_transitions(ds, codes, ds.val)));
    return 0;
}

int cmd_train_sd(const Common& c) {
    const Paths p{c.out};
    const RunConfig cfg = resolve(c, p);
    const Dataset ds = need_dataset(p);
    const SaeModel sae = need_sae(p);
    const Domain d = Domain::from_params(ds.params);
    const auto codes = dataset_codes(sae, ds, d);
    nd::RngStream rng = stream(cfg, cli::sd);
    PuReport rep;
    const Discriminator sd = train_sd_stage(sae, train_state_codes(ds, codes), cfg.sd, rng, &rep);
    print_pu("sd", rep);
    sd.save(p.sd().string(), static_cast<std::uint8_t>(ModelKind::sd));
    std::printf("SD saved to %s; c = %.4f\n", p.sd().c_str(), sd.c());
    return 0;
}

int cmd_train_ad(const Common& c) {
    const Paths p{c.out};
    const RunConfig cfg = resolve(c, p);
    const Dataset ds = need_dataset(p);
    const SaeModel sae = need_sae(p);
    require(p.aae(), "AAE checkpoint", "train-aae");
    const AaeModel aae = AaeModel::load(p.aae().string());
    std::optional<Discriminator> sd;
    if (cfg.ad.sd_pruning) {
        require(p.sd(), "SD checkpoint", "train-sd");
        sd = Discriminator::load(p.sd().string(), static_cast<std::uint8_t>(ModelKind::sd));
    }
    const Domain d = Domain::from_params(ds.params);
    const auto codes = dataset_codes(sae, ds, d);
    nd::RngStream rng = stream(cfg, cli::ad);
    PuReport rep;
    const Discriminator ad =
        train_ad_stage(aae, sd ? &*sd : nullptr, code_transitions(ds, codes, ds.train), cfg.ad, rng, &rep);
    print_pu("ad", rep);
    ad.save(p.ad().string(), static_cast<std::uint8_t>(ModelKind::ad));
    std::printf("AD saved to %s; %s, c = %.4f\n", p.ad().c_str(), ad.arch().name().c_str(), ad.c());
    return 0;
}

Instance instance_from_images(const Domain& d, const std::string& init_path, const std::string& goal_path) {
    Instance inst;
    inst.init_image = read_pgm(init_path);
    inst.goal_image = goal_path.empty() ? d.render(d.goal()) : read_pgm(goal_path);
    for (const Tensor* t : {&inst.init_image, &inst.goal_image})
        if (t->dim(0) != d.height() || t->dim(1) != d.width())
            throw std::runtime_error("image size " + nd::to_string(t->shape()) + " does not match the domain (" +
                                     std::to_string(d.height()) + "x" + std::to_string(d.width()) + ")");
    const auto init = d.classify(inst.init_image, 0.25), goal = d.classify(inst.goal_image, 0.25);
    if (!init) throw std::runtime_error(init_path + " does not depict a valid state");
    if (!goal) throw std::runtime_error("goal image does not depict a valid state");
    inst.init = *init;
    inst.goal = *goal;
    return inst;
}

struct Models {
    SaeModel sae;
    std::optional<StripsProblem> problem;
    std::optional<ActionIndex> index;
    std::optional<AaeModel> aae;
    std::optional<Discriminator> sd, ad;
};

PlannerSetup make_setup(Method method, const Paths& p, const Domain& d, const RunConfig& cfg, Models& m) {
    m.sae = need_sae(p);
    PlannerSetup s;
    s.method = method;
    s.domain = &d;
    s.sae = &m.sae;
    s.limits.time_seconds = cfg.time_limit;
    if (method == Method::ama1) {
        const Dataset ds = need_dataset(p);
        m.problem = build_ama1(ds, dataset_codes(m.sae, ds, d));
        m.index.emplace(*m.problem);
        s.problem = &*m.problem;
        s.index = &*m.index;
    } else {
        require(p.aae(), "AAE checkpoint", "train-aae");
        require(p.sd(), "SD checkpoint", "train-sd");
        require(p.ad(), "AD checkpoint", "train-ad");
        m.aae = AaeModel::load(p.aae().string());
        m.sd = Discriminator::load(p.sd().string(), static_cast<std::uint8_t>(ModelKind::sd));
        m.ad = Discriminator::load(p.ad().string(), static_cast<std::uint8_t>(ModelKind::ad));
        s.succ.aae = &*m.aae;
        s.succ.sd = &*m.sd;
        s.succ.ad = &*m.ad;
        s.succ.sae = &m.sae;
    }
    return s;
}

void write_strip(const fs::path& path, const SaeModel& sae, const std::vector<BitVector>& states) {
    if (states.empty()) return;
    const Tensor imgs = sae.decode_batch(states);
    std::vector<Tensor> frames;
    for (std::size_t i = 0; i < imgs.batch(); ++i) frames.push_back(imgs.rows(i, i + 1).reshaped({imgs.dim(1), imgs.dim(2)}));
    write_ppm_strip(path.string(), frames);
}

int cmd_compile(const Common& c, const std::string& init_path, const std::string& goal_path) {
    const Paths p{c.out};
    const RunConfig cfg = resolve(c, p);
    const Dataset ds = need_dataset(p);
    const SaeModel sae = need_sae(p);
    const Domain d = Domain::from_params(ds.params);
    StripsProblem prob = build_ama1(ds, dataset_codes(sae, ds, d));
    Instance inst;
    if (!init_path.empty()) {
        inst = instance_from_images(d, init_path, goal_path);
    } else {
        nd::RngStream rng = stream(cfg, cli::instances);
        inst = sample_instances(d, 1, 7, rng).front();
    }
    prob.init = encode_images(sae, inst.init_image).front();
    prob.goal = encode_images(sae, inst.goal_image).front();
    const PddlText text = emit_pddl(prob);
    write_file(p.root / "ama1" / "domain.pddl", text.domain);
    write_file(p.root / "ama1" / "problem.pddl", text.problem);
    std::printf("%zu actions (%zu self loops) over %zu propositions -> %s\n", prob.actions.size(), prob.self_loops(),
                2 * prob.bits, (p.root / "ama1").c_str());
    return 0;
}

int cmd_solve(const Common& c, const std::string& method, const std::string& noise, double time_limit,
              const std::string& init_path, const std::string& goal_path) {
    const Paths p{c.out};
    RunConfig cfg = resolve(c, p);
    if (time_limit > 0) cfg.time_limit = time_limit;
    const Domain d = Domain::from_params(cfg.domain);
    Models m;
    const PlannerSetup setup = make_setup(parse_method(method), p, d, cfg, m);
    const Instance inst = instance_from_images(d, init_path, goal_path);
    nd::RngStream rng = stream(cfg, cli::noise);
    const auto dist = bfs_distances(d, inst.goal);
    const InstanceReport r = solve_instance(setup, inst, parse_noise(noise), rng, dist[d.index(inst.init)]);
    const fs::path plan = p.root / "plan.json";
    write_file(plan, plan_json(r, cfg.domain, d));
    if (r.solved()) write_strip(p.root / "plan.ppm", m.sae, r.plan.states);
    std::printf("%s: length %zu, %zu expanded, %.3f s, %s -> %s\n", to_string(r.plan.status).c_str(),
                r.plan.length(), r.plan.expanded, r.plan.wall_seconds, r.valid ? "valid" : "not valid", plan.c_str());
    return 0;
}

int cmd_eval(const Common& c, const std::string& method_s, const std::string& noise_s, const std::string& bench,
             double time_limit, std::size_t count) {
    const Paths p{c.out};
    RunConfig cfg = resolve(c, p);
    if (time_limit > 0) cfg.time_limit = time_limit;
    if (count > 0) cfg.instances = count;
    if (bench != "A" && bench != "B") throw std::invalid_argument("benchmark must be A or B");
    const int walk = bench == "A" ? 7 : 14;
    const Method method = parse_method(method_s);
    const Noise noise = parse_noise(noise_s);
    const Domain d = Domain::from_params(cfg.domain);
    Models m;
    const PlannerSetup setup = make_setup(method, p, d, cfg, m);
    nd::RngStream irng = stream(cfg, cli::instances);
    const auto instances = sample_instances(d, cfg.instances, walk, irng);
    EvalReport rep = evaluate(setup, instances, noise, nd::RngStream(cfg.seed).fork(cli::noise).next_u64(), worker_threads());

    if (method == Method::ama2 && d.state_count() <= 100000) {
        std::vector<Tensor> imgs;
        for (const auto& s : d.all_states()) imgs.push_back(d.render(s));
        const auto codes = encode_images(m.sae, Tensor::stack(imgs));
        nd::RngStream erng = stream(cfg, cli::visual).fork(1);
        rep.sd_errors = sd_error_rates(*m.sd, m.sae, d, codes, 2000, erng);
        rep.ad_errors = ad_error_rates(*m.ad, d, codes, 5000, erng);
    }

    const std::string tag = method_s + "-" + bench + "-" + to_string(noise);
    const fs::path plans = p.root / ("plans-" + tag);
    for (const auto& r : rep.instances)
        if (r.solved()) write_file(plans / ("plan-" + std::to_string(r.id) + ".json"), plan_json(r, cfg.domain, d));
    const fs::path report = p.root / ("report-" + tag + ".json");
    write_file(report, report_json(rep, cfg.domain));
    std::printf("%s: %zu/%zu solved, %zu valid, %zu optimal -> %s\n", tag.c_str(), rep.solved(), rep.instances.size(),
                rep.valid(), rep.optimal(), report.c_str());
    if (rep.sd_errors)
        std::printf("SD type-1 %.4f type-2 %.4f; AD type-1 %.4f type-2 %.4f\n", rep.sd_errors->type1,
                    rep.sd_errors->type2, rep.ad_errors->type1, rep.ad_errors->type2);
    return 0;
}

int cmd_validate(const std::string& plan) {
    const PlanCheck check = validate_plan_json(read_file(plan));
    std::printf("%s: %s\n", check.valid ? "valid" : "invalid", check.reason.c_str());
    return 0;
}

int cmd_visualize(const Common& c, const std::string& plan, std::size_t samples) {
    const Paths p{c.out};
    const RunConfig cfg = resolve(c, p);
    if (!plan.empty()) {
        const json j = json::parse(read_file(plan));
        const Domain d = Domain::from_params(domain_params_from_json(j.at("domain").dump()));
        std::vector<Tensor> frames;
        for (const auto& s : j.at("decoded"))
            frames.push_back(s.is_null() ? Tensor({d.height(), d.width()}) : d.render(d.state_at(s.get<std::uint64_t>())));
        const fs::path out = fs::path(plan).replace_extension(".truth.ppm");
        write_ppm_strip(out.string(), frames);
        if (fs::exists(p.sae())) {
            std::vector<BitVector> states;
            for (const auto& b : j.at("states")) states.push_back(BitVector::from_string(b.get<std::string>()));
            write_strip(fs::path(plan).replace_extension(".decoded.ppm"), SaeModel::load(p.sae().string()), states);
        }
        std::printf("wrote %s\n", out.c_str());
        return 0;
    }
    // Without a plan: originals next to their SAE reconstructions.
    const Dataset ds = need_dataset(p);
    const SaeModel sae = need_sae(p);
    const Domain d = Domain::from_params(ds.params);
    nd::RngStream rng = stream(cfg, cli::visual);
    std::vector<Tensor> top, bottom;
    for (std::size_t i = 0; i < samples && !ds.states.empty(); ++i) {
        const Tensor img = d.render(ds.states[rng.below(ds.states.size())]);
        top.push_back(img);
        bottom.push_back(sae.decode(encode_images(sae, img).front()));
    }
    write_ppm_strip((p.root / "samples.ppm").string(), top);
    write_ppm_strip((p.root / "reconstructions.ppm").string(), bottom);
    std::printf("wrote %s and %s\n", (p.root / "samples.ppm").c_str(), (p.root / "reconstructions.ppm").c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-space classical planning from images"};
    app.require_subcommand(1);
    Common common;
    std::string method = "ama1", noise = "none", bench = "A", init, goal, plan;
    double time_limit = 0;
    std::size_t count = 0, samples = 8;

    auto* gen = app.add_subcommand("gen-data", "Render states and write the transition dataset");
    auto* tsae = app.add_subcommand("train-sae", "Train the state autoencoder");
    auto* taae = app.add_subcommand("train-aae", "Train the action autoencoder");
    auto* tsd = app.add_subcommand("train-sd", "Train the state discriminator");
    auto* tad = app.add_subcommand("train-ad", "Train the action discriminator");
    auto* comp = app.add_subcommand("compile-ama1", "Emit PDDL for the encoded transitions");
    auto* solve = app.add_subcommand("solve", "Plan between two images");
    auto* eval = app.add_subcommand("eval", "Run a benchmark and validate every plan");
    auto* val = app.add_subcommand("validate", "Check a plan file against the ground truth");
    auto* vis = app.add_subcommand("visualize", "Write image strips");
    for (auto* s : {gen, tsae, taae, tsd, tad, comp, solve, eval, vis}) add_common(s, common);

    for (auto* s : {comp, solve}) {
        s->add_option("--init", init, "Initial state image (PGM)")->check(CLI::ExistingFile);
        s->add_option("--goal", goal, "Goal state image (PGM); defaults to the domain goal")->check(CLI::ExistingFile);
    }
    solve->get_option("--init")->required();
    for (auto* s : {solve, eval}) {
        s->add_option("--method", method, "ama1 or ama2")->check(CLI::IsMember({"ama1", "ama2"}))->capture_default_str();
        s->add_option("--noise", noise, "none, gaussian or saltpepper")
            ->check(CLI::IsMember({"none", "gaussian", "saltpepper"}))
            ->capture_default_str();
        s->add_option("--time-limit", time_limit, "Search limit in seconds (default 180)");
    }
    eval->add_option("--benchmark", bench, "A (7-step) or B (14-step)")->check(CLI::IsMember({"A", "B"}))->capture_default_str();
    eval->add_option("--instances", count, "Instance count (default 100)");
    val->add_option("plan", plan, "Plan JSON")->required()->check(CLI::ExistingFile);
    vis->add_option("--plan", plan, "Plan JSON to render")->check(CLI::ExistingFile);
    vis->add_option("--samples", samples, "Dataset samples without --plan")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) return cmd_gen_data(common);
        if (*tsae) return cmd_train_sae(common);
        if (*taae) return cmd_train_aae(common);
        if (*tsd) return cmd_train_sd(common);
        if (*tad) return cmd_train_ad(common);
        if (*comp) return cmd_compile(common, init, goal);
        if (*solve) return cmd_solve(common, method, noise, time_limit, init, goal);
        if (*eval) return cmd_eval(common, method, noise, bench, time_limit, count);
        if (*val) return cmd_validate(plan);
        if (*vis) return cmd_visualize(common, plan, samples);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
