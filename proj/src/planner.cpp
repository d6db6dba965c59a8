#include "latplan/planner.hpp"

#include <algorithm>
#include <chrono>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "latplan/ama2.hpp"
#include "latplan/sae.hpp"

namespace latplan {

std::string to_string(SearchStatus s) {
    switch (s) {
        case SearchStatus::solved: return "solved";
        case SearchStatus::timeout: return "timeout";
        case SearchStatus::exhausted: return "exhausted";
    }
    return "unknown";
}

int goal_count(const BitVector& s, const BitVector& g) { return static_cast<int>(hamming(s, g)); }

namespace {

struct Node {
    BitVector state;
    int g = 0;
    std::size_t parent = 0;
    std::size_t action = 0;
};

struct OpenEntry {
    int f;
    int g;
    std::size_t seq;
    std::size_t node;
};

// Max-heap comparator: smaller f first, then larger g, then older.
struct Worse {
    bool operator()(const OpenEntry& a, const OpenEntry& b) const {
        if (a.f != b.f) return a.f > b.f;
        if (a.g != b.g) return a.g < b.g;
        return a.seq > b.seq;
    }
};

}  // namespace

PlanResult astar(const BitVector& init, const BitVector& goal, const SuccessorFn& succ, const HeuristicFn& h,
                 const SearchLimits& limits) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

    PlanResult r;
    std::vector<Node> nodes{{init, 0, 0, 0}};
    std::unordered_map<BitVector, int, BitVectorHash> best_g{{init, 0}};
    std::unordered_set<BitVector, BitVectorHash> closed;
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, Worse> open;
    std::size_t seq = 0;
    open.push({h(init), 0, seq++, 0});
    r.generated = 1;

    while (!open.empty()) {
        const OpenEntry e = open.top();
        open.pop();
        const Node& n = nodes[e.node];
        if (closed.count(n.state) || best_g[n.state] < n.g) continue;
        if (n.state == goal) {
            r.status = SearchStatus::solved;
            for (std::size_t i = e.node;; i = nodes[i].parent) {
                r.states.push_back(nodes[i].state);
                if (i == 0) break;
                r.actions.push_back(nodes[i].action);
            }
            std::reverse(r.states.begin(), r.states.end());
            std::reverse(r.actions.begin(), r.actions.end());
            r.wall_seconds = elapsed();
            return r;
        }
        if (r.expanded >= limits.max_expansions || elapsed() > limits.time_seconds) {
            r.status = SearchStatus::timeout;
            r.wall_seconds = elapsed();
            return r;
        }
        closed.insert(n.state);
        ++r.expanded;
        const std::size_t parent = e.node;
        const int g = n.g + 1;
        for (auto& c : succ(nodes[parent].state)) {
            if (closed.count(c.state)) continue;
            auto it = best_g.find(c.state);
            if (it != best_g.end() && it->second <= g) continue;
            best_g[c.state] = g;
            const int f = g + h(c.state);
            nodes.push_back({std::move(c.state), g, parent, c.action});
            open.push({f, g, seq++, nodes.size() - 1});
            ++r.generated;
        }
    }
    r.status = SearchStatus::exhausted;
    r.wall_seconds = elapsed();
    return r;
}

std::vector<Successor> succ_strips(const BitVector& s, const StripsProblem& problem, const ActionIndex& index) {
    std::vector<Successor> out;
    for (std::size_t id : index.applicable(s)) out.push_back({id, step(s, problem.actions[id])});
    return out;
}

std::vector<Successor> succ_ama2(const BitVector& s, const SuccConfig& cfg) {
    if (!cfg.aae) throw std::invalid_argument("succ_ama2 needs an AAE");
    if (cfg.use_ad && !cfg.ad) throw std::invalid_argument("succ_ama2: AD filter enabled without an AD");
    if (cfg.use_sd && !cfg.sd) throw std::invalid_argument("succ_ama2: SD filter enabled without an SD");
    if (cfg.use_sae_stability && !cfg.sae) throw std::invalid_argument("succ_ama2: SAE filter enabled without an SAE");

    if (cfg.use_sae_stability && cfg.sae_filter_on_source && cfg.sae->autoencode_bits({s}).front() != s) return {};

    std::vector<Successor> cands;
    for (auto& [label, t] : cfg.aae->apply_all(s)) cands.push_back({label, std::move(t)});

    auto keep_if = [&](const std::vector<bool>& keep) {
        std::vector<Successor> out;
        for (std::size_t i = 0; i < cands.size(); ++i)
            if (keep[i]) out.push_back(std::move(cands[i]));
        cands = std::move(out);
    };
    auto targets = [&] {
        std::vector<BitVector> ts;
        for (const auto& c : cands) ts.push_back(c.state);
        return ts;
    };

    if (cfg.use_aae_stability && !cands.empty()) {
        std::vector<BitPair> st;
        for (const auto& c : cands) st.emplace_back(s, c.state);
        const auto labels = cfg.aae->action_labels(st);
        std::vector<bool> keep(cands.size());
        for (std::size_t i = 0; i < cands.size(); ++i) keep[i] = labels[i] == cands[i].action;
        keep_if(keep);
    }
    {
        std::unordered_set<BitVector, BitVectorHash> seen;
        std::vector<bool> keep(cands.size());
        for (std::size_t i = 0; i < cands.size(); ++i) keep[i] = seen.insert(cands[i].state).second;
        keep_if(keep);
    }
    if (cfg.use_sae_stability && !cfg.sae_filter_on_source && !cands.empty()) {
        const auto ts = targets();
        const auto back = cfg.sae->autoencode_bits(ts);
        std::vector<bool> keep(cands.size());
        for (std::size_t i = 0; i < cands.size(); ++i) keep[i] = back[i] == ts[i];
        keep_if(keep);
    }
    if (cfg.use_sd && !cands.empty()) {
        const auto sc = cfg.sd->score(targets());
        std::vector<bool> keep(cands.size());
        for (std::size_t i = 0; i < cands.size(); ++i) keep[i] = sc[i] >= cfg.sd_threshold;
        keep_if(keep);
    }
    if (cfg.use_ad && !cands.empty()) {
        std::vector<BitPair> st;
        for (const auto& c : cands) st.emplace_back(s, c.state);
        const auto sc = ad_scores(*cfg.ad, st);
        std::vector<bool> keep(cands.size());
        for (std::size_t i = 0; i < cands.size(); ++i) keep[i] = sc[i] >= cfg.ad_threshold;
        keep_if(keep);
    }
    return cands;
}

bool replay_plan(const PlanResult& plan, const BitVector& goal, const SuccessorFn& succ) {
    if (plan.status != SearchStatus::solved || plan.states.empty() || plan.states.back() != goal) return false;
    if (plan.actions.size() + 1 != plan.states.size()) return false;
    for (std::size_t i = 0; i < plan.actions.size(); ++i) {
        const auto cands = succ(plan.states[i]);
        const bool found = std::any_of(cands.begin(), cands.end(), [&](const Successor& c) {
            return c.action == plan.actions[i] && c.state == plan.states[i + 1];
        });
        if (!found) return false;
    }
    return true;
}

}  // namespace latplan
