#include "latplan/ama1.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <sstream>

namespace latplan {

std::string Proposition::name() const {
    return "b" + std::to_string(bit) + (polarity ? "-true" : "-false");
}

std::size_t StripsProblem::self_loops() const {
    return static_cast<std::size_t>(
        std::count_if(actions.begin(), actions.end(), [](const GroundAction& a) { return a.self_loop(); }));
}

StripsProblem compile(std::vector<Transition> transitions) {
    StripsProblem p;
    if (!transitions.empty()) p.bits = transitions.front().first.size();
    for (const auto& [s, t] : transitions)
        if (s.size() != p.bits || t.size() != p.bits)
            throw std::invalid_argument("compile: transitions have differing bit lengths");
    std::sort(transitions.begin(), transitions.end());
    transitions.erase(std::unique(transitions.begin(), transitions.end()), transitions.end());
    p.actions.reserve(transitions.size());
    for (const auto& [s, t] : transitions) {
        GroundAction a;
        a.id = p.actions.size();
        for (std::size_t j = 0; j < p.bits; ++j) {
            a.pre.push_back({j, s[j]});
            if (s[j] != t[j]) {
                a.add.push_back({j, t[j]});
                a.del.push_back({j, s[j]});
            }
        }
        p.actions.push_back(std::move(a));
    }
    return p;
}

bool applicable(const BitVector& s, const GroundAction& a) {
    return std::all_of(a.pre.begin(), a.pre.end(),
                       [&](const Proposition& q) { return q.bit < s.size() && s[q.bit] == q.polarity; });
}

BitVector step(const BitVector& s, const GroundAction& a) {
    for (const auto& q : a.pre)
        if (q.bit >= s.size()) throw std::invalid_argument("step: precondition names bit beyond the assignment");
    if (!applicable(s, a)) throw InapplicableAction("action a" + std::to_string(a.id) + " is not applicable");
    // A delete without the complementary add would leave the bit with no polarity.
    if (a.add.size() != a.del.size()) throw std::invalid_argument("step: unpaired add/delete effects");
    BitVector t = s;
    for (std::size_t i = 0; i < a.add.size(); ++i) {
        const Proposition& ad = a.add[i];
        const Proposition& de = a.del[i];
        if (ad.bit != de.bit || ad.polarity == de.polarity || ad.bit >= s.size())
            throw std::invalid_argument("step: malformed effect on b" + std::to_string(ad.bit));
        if (s[de.bit] == de.polarity) t.set(ad.bit, ad.polarity);
    }
    return t;
}

ActionIndex::ActionIndex(const StripsProblem& problem) : problem_(&problem) {
    for (const auto& a : problem.actions) {
        if (a.pre.size() != problem.bits) {
            partial_.push_back(a.id);
            continue;
        }
        BitVector key(problem.bits);
        bool ok = true;
        for (std::size_t j = 0; j < a.pre.size(); ++j) {
            if (a.pre[j].bit != j) ok = false;
            else key.set(j, a.pre[j].polarity);
        }
        if (ok) full_[key].push_back(a.id);
        else partial_.push_back(a.id);
    }
}

std::vector<std::size_t> ActionIndex::applicable(const BitVector& s) const {
    std::vector<std::size_t> out;
    if (auto it = full_.find(s); it != full_.end()) out = it->second;
    for (std::size_t id : partial_)
        if (latplan::applicable(s, problem_->actions[id])) out.push_back(id);
    if (!partial_.empty()) std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::string atom(const Proposition& p) { return "(" + p.name() + ")"; }

std::string conj(const std::vector<Proposition>& props) {
    std::string out = "(and";
    for (const auto& p : props) out += " " + atom(p);
    return out + ")";
}

std::string effect(const GroundAction& a) {
    std::string out = "(and";
    for (std::size_t i = 0; i < a.add.size(); ++i) {
        out += " " + atom(a.add[i]);
        if (i < a.del.size()) out += " (not " + atom(a.del[i]) + ")";
    }
    for (std::size_t i = a.add.size(); i < a.del.size(); ++i) out += " (not " + atom(a.del[i]) + ")";
    return out + ")";
}

std::vector<Proposition> state_props(const BitVector& b) {
    std::vector<Proposition> out;
    for (std::size_t j = 0; j < b.size(); ++j) out.push_back({j, b[j]});
    return out;
}

}  // namespace

PddlText emit_pddl(const StripsProblem& p, const std::string& domain_name, const std::string& problem_name) {
    if (!p.init || !p.goal) throw std::invalid_argument("emit_pddl: init and goal must be set");
    if (p.init->size() != p.bits || p.goal->size() != p.bits)
        throw std::invalid_argument("emit_pddl: init/goal must assign all bits");
    std::ostringstream d;
    d << "(define (domain " << domain_name << ")\n";
    d << "  (:requirements :strips)\n";
    d << "  (:predicates";
    for (std::size_t j = 0; j < p.bits; ++j) d << "\n    (b" << j << "-true)\n    (b" << j << "-false)";
    d << ")\n";
    for (const auto& a : p.actions) {
        d << "  (:action a" << a.id << "\n";
        d << "    :parameters ()\n";
        d << "    :precondition " << conj(a.pre) << "\n";
        d << "    :effect " << effect(a) << ")\n";
    }
    d << ")\n";

    std::ostringstream q;
    q << "(define (problem " << problem_name << ")\n";
    q << "  (:domain " << domain_name << ")\n";
    q << "  (:init";
    for (const auto& prop : state_props(*p.init)) q << " " << atom(prop);
    q << ")\n";
    q << "  (:goal " << conj(state_props(*p.goal)) << "))\n";
    return {d.str(), q.str()};
}

namespace {

struct Sexp {
    std::string atom;
    std::vector<Sexp> list;
    bool is_atom() const { return !atom.empty(); }
};

class SexpReader {
public:
    explicit SexpReader(const std::string& text) : s_(text) {}

    Sexp read() {
        skip();
        if (pos_ >= s_.size()) throw PddlParseError("unexpected end of PDDL input");
        if (s_[pos_] == ')') throw PddlParseError("unbalanced ')' in PDDL input");
        if (s_[pos_] == '(') {
            ++pos_;
            Sexp e;
            for (;;) {
                skip();
                if (pos_ >= s_.size()) throw PddlParseError("missing ')' in PDDL input");
                if (s_[pos_] == ')') {
                    ++pos_;
                    return e;
                }
                e.list.push_back(read());
            }
        }
        Sexp e;
        while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
               s_[pos_] != ')' && s_[pos_] != ';')
            e.atom.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s_[pos_++]))));
        return e;
    }

private:
    void skip() {
        while (pos_ < s_.size()) {
            if (std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            else if (s_[pos_] == ';')
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            else break;
        }
    }
    const std::string& s_;
    std::size_t pos_ = 0;
};

bool head_is(const Sexp& e, const std::string& h) {
    return !e.is_atom() && !e.list.empty() && e.list.front().atom == h;
}

Proposition parse_atom(const Sexp& e) {
    if (e.is_atom() || e.list.size() != 1 || !e.list[0].is_atom()) throw PddlParseError("expected a 0-ary atom");
    const std::string& n = e.list[0].atom;
    const bool pos = n.size() > 5 && n.compare(n.size() - 5, 5, "-true") == 0;
    const bool neg = n.size() > 6 && n.compare(n.size() - 6, 6, "-false") == 0;
    if (n.empty() || n[0] != 'b' || (!pos && !neg)) throw PddlParseError("unknown proposition '" + n + "'");
    const std::string digits = n.substr(1, n.size() - 1 - (pos ? 5 : 6));
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit))
        throw PddlParseError("bad proposition index in '" + n + "'");
    return {std::stoul(digits), pos};
}

std::vector<Proposition> parse_conj(const Sexp& e) {
    if (head_is(e, "and")) {
        std::vector<Proposition> out;
        for (std::size_t i = 1; i < e.list.size(); ++i) out.push_back(parse_atom(e.list[i]));
        return out;
    }
    return {parse_atom(e)};
}

BitVector full_state(const std::vector<Proposition>& props, std::size_t bits, const char* what) {
    BitVector b(bits);
    std::vector<int> seen(bits, 0);
    for (const auto& p : props) {
        if (p.bit >= bits) throw PddlParseError(std::string(what) + " names an undeclared bit");
        b.set(p.bit, p.polarity);
        ++seen[p.bit];
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
        throw PddlParseError(std::string(what) + " must assign each bit exactly once");
    return b;
}

}  // namespace

StripsProblem parse_pddl(const std::string& domain, const std::string& problem) {
    const Sexp d = SexpReader(domain).read();
    if (!head_is(d, "define")) throw PddlParseError("domain does not start with (define");
    StripsProblem p;
    for (std::size_t i = 1; i < d.list.size(); ++i) {
        const Sexp& sec = d.list[i];
        if (head_is(sec, ":predicates")) {
            std::size_t bits = 0;
            for (std::size_t k = 1; k < sec.list.size(); ++k) bits = std::max(bits, parse_atom(sec.list[k]).bit + 1);
            p.bits = bits;
        } else if (head_is(sec, ":action")) {
            if (sec.list.size() < 2 || sec.list[1].atom.size() < 2 || sec.list[1].atom[0] != 'a')
                throw PddlParseError("action names must be a{index}");
            GroundAction a;
            a.id = std::stoul(sec.list[1].atom.substr(1));
            for (std::size_t k = 2; k + 1 < sec.list.size(); k += 2) {
                const std::string& key = sec.list[k].atom;
                const Sexp& val = sec.list[k + 1];
                if (key == ":precondition") {
                    a.pre = parse_conj(val);
                } else if (key == ":effect") {
                    if (!head_is(val, "and")) throw PddlParseError("effect must be a conjunction");
                    for (std::size_t m = 1; m < val.list.size(); ++m) {
                        if (head_is(val.list[m], "not")) {
                            if (val.list[m].list.size() != 2) throw PddlParseError("malformed (not ...)");
                            a.del.push_back(parse_atom(val.list[m].list[1]));
                        } else {
                            a.add.push_back(parse_atom(val.list[m]));
                        }
                    }
                } else if (key != ":parameters") {
                    throw PddlParseError("unsupported action field '" + key + "'");
                }
            }
            if (a.id != p.actions.size()) throw PddlParseError("actions must be numbered consecutively from a0");
            p.actions.push_back(std::move(a));
        }
    }
    const Sexp q = SexpReader(problem).read();
    if (!head_is(q, "define")) throw PddlParseError("problem does not start with (define");
    for (std::size_t i = 1; i < q.list.size(); ++i) {
        const Sexp& sec = q.list[i];
        if (head_is(sec, ":init")) {
            std::vector<Proposition> props;
            for (std::size_t k = 1; k < sec.list.size(); ++k) props.push_back(parse_atom(sec.list[k]));
            p.init = full_state(props, p.bits, "init");
        } else if (head_is(sec, ":goal")) {
            if (sec.list.size() != 2) throw PddlParseError("malformed :goal");
            p.goal = full_state(parse_conj(sec.list[1]), p.bits, "goal");
        }
    }
    return p;
}

}  // namespace latplan
