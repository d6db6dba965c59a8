#include "latplan/domains.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <unordered_set>

namespace latplan {

namespace {

constexpr std::size_t kLightBlock = 9;
constexpr std::size_t kPegWidth = 20;
constexpr std::size_t kDiskHeight = 4;
constexpr double kSwirlStrength = 3.0;

const char* kind_name(DomainKind k) {
    switch (k) {
        case DomainKind::puzzle8: return "puzzle8";
        case DomainKind::lightsout: return "lightsout";
        case DomainKind::hanoi: return "hanoi";
    }
    return "?";
}

std::uint64_t factorial(int n) {
    std::uint64_t f = 1;
    for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
    return f;
}

std::uint64_t pow3(int n) {
    std::uint64_t p = 1;
    for (int i = 0; i < n; ++i) p *= 3;
    return p;
}

// Smallest disk on each peg, or -1.
std::array<int, 3> hanoi_tops(const PuzzleState& s) {
    std::array<int, 3> top{-1, -1, -1};
    for (int k = static_cast<int>(s.cells.size()) - 1; k >= 0; --k) top[s.cells[static_cast<std::size_t>(k)]] = k;
    return top;
}

}  // namespace

std::string to_string(const PuzzleState& s) {
    std::string out = kind_name(s.kind);
    out += '[';
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(s.cells[i]);
    }
    return out + ']';
}

Domain Domain::puzzle8(TileSet tiles, std::string name) {
    if (tiles.tiles.size() != 9) throw std::invalid_argument("8-puzzle needs exactly 9 tiles");
    for (const Tensor& t : tiles.tiles)
        if (t.shape() != Shape{TileSet::kTile, TileSet::kTile})
            throw nd::ShapeError(-1, {TileSet::kTile, TileSet::kTile}, t.shape(), "tile");
    Domain d;
    d.name_ = std::move(name);
    d.kind_ = DomainKind::puzzle8;
    d.size_ = 3;
    d.h_ = d.w_ = 3 * TileSet::kTile;
    d.tiles_ = std::move(tiles);
    return d;
}

Domain Domain::lightsout(int n, bool twisted) {
    if (n < 1 || n > 6) throw std::invalid_argument("lightsout size must be in 1..6");
    Domain d;
    d.name_ = twisted ? "twisted-lightsout" : "lightsout";
    d.kind_ = DomainKind::lightsout;
    d.size_ = n;
    d.twisted_ = twisted;
    d.h_ = d.w_ = kLightBlock * static_cast<std::size_t>(n);
    PuzzleState off{DomainKind::lightsout, std::vector<std::uint8_t>(static_cast<std::size_t>(n * n), 0)};
    d.lo_base_ = d.render(off);
    for (std::size_t i = 0; i < off.cells.size(); ++i) {
        PuzzleState one = off;
        one.cells[i] = 1;
        Tensor delta = d.render(one);
        for (std::size_t p = 0; p < delta.size(); ++p) delta[p] -= d.lo_base_[p];
        d.lo_delta_.push_back(std::move(delta));
    }
    return d;
}

Domain Domain::hanoi(int disks) {
    if (disks < 1 || disks > 8) throw std::invalid_argument("hanoi disks must be in 1..8");
    Domain d;
    d.name_ = "hanoi";
    d.kind_ = DomainKind::hanoi;
    d.size_ = disks;
    d.h_ = kDiskHeight * static_cast<std::size_t>(disks);
    d.w_ = 3 * kPegWidth;
    for (std::uint64_t i = 0; i < d.state_count(); ++i) d.hanoi_renders_.push_back(d.render(d.state_at(i)));
    return d;
}

Domain Domain::from_params(const DomainParams& p) {
    const int size = p.size > 0 ? p.size : 4;
    if (p.name == "lightsout") return lightsout(size, false);
    if (p.name == "twisted-lightsout") return lightsout(size, true);
    if (p.name == "hanoi") return hanoi(size);
    if (p.name == "mnist-8puzzle")
        return puzzle8(p.idx_images.empty() ? TileSet::digits() : TileSet::from_idx(p.idx_images, p.idx_labels), p.name);
    if (p.name == "mandrill-8puzzle")
        return puzzle8(p.photo.empty() ? TileSet::mandrill() : TileSet::from_image(read_pgm(p.photo)), p.name);
    if (p.name == "spider-8puzzle")
        return puzzle8(p.photo.empty() ? TileSet::spider() : TileSet::from_image(read_pgm(p.photo)), p.name);
    throw std::invalid_argument("unknown domain '" + p.name + "'");
}

void Domain::check(const PuzzleState& s) const {
    if (s.kind != kind_) throw InvalidState("state " + to_string(s) + " does not belong to domain " + name_);
    const std::size_t n = s.cells.size();
    switch (kind_) {
        case DomainKind::puzzle8: {
            if (n != 9) throw InvalidState("8-puzzle state needs 9 cells: " + to_string(s));
            std::array<bool, 9> seen{};
            for (auto c : s.cells) {
                if (c > 8 || seen[c]) throw InvalidState("8-puzzle state is not a permutation: " + to_string(s));
                seen[c] = true;
            }
            break;
        }
        case DomainKind::lightsout:
            if (n != static_cast<std::size_t>(size_ * size_)) throw InvalidState("wrong grid size: " + to_string(s));
            for (auto c : s.cells)
                if (c > 1) throw InvalidState("light value must be 0/1: " + to_string(s));
            break;
        case DomainKind::hanoi:
            if (n != static_cast<std::size_t>(size_)) throw InvalidState("wrong disk count: " + to_string(s));
            for (auto c : s.cells)
                if (c > 2) throw InvalidState("peg must be 0..2: " + to_string(s));
            break;
    }
}

bool Domain::valid(const PuzzleState& s) const {
    try {
        check(s);
        return true;
    } catch (const InvalidState&) {
        return false;
    }
}

std::vector<PuzzleState> Domain::successors(const PuzzleState& s) const {
    check(s);
    std::vector<PuzzleState> out;
    switch (kind_) {
        case DomainKind::puzzle8: {
            const auto blank = static_cast<int>(std::find(s.cells.begin(), s.cells.end(), 0) - s.cells.begin());
            const int r = blank / 3, c = blank % 3;
            const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                const int nr = r + dr[k], nc = c + dc[k];
                if (nr < 0 || nr > 2 || nc < 0 || nc > 2) continue;
                PuzzleState t = s;
                std::swap(t.cells[static_cast<std::size_t>(blank)], t.cells[static_cast<std::size_t>(nr * 3 + nc)]);
                out.push_back(std::move(t));
            }
            break;
        }
        case DomainKind::lightsout: {
            const int n = size_;
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) {
                    PuzzleState t = s;
                    auto toggle = [&](int rr, int cc) {
                        if (rr >= 0 && rr < n && cc >= 0 && cc < n) t.cells[static_cast<std::size_t>(rr * n + cc)] ^= 1;
                    };
                    toggle(r, c);
                    toggle(r - 1, c);
                    toggle(r + 1, c);
                    toggle(r, c - 1);
                    toggle(r, c + 1);
                    out.push_back(std::move(t));
                }
            break;
        }
        case DomainKind::hanoi: {
            const auto top = hanoi_tops(s);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    if (a == b || top[a] < 0 || (top[b] >= 0 && top[b] < top[a])) continue;
                    PuzzleState t = s;
                    t.cells[static_cast<std::size_t>(top[a])] = static_cast<std::uint8_t>(b);
                    out.push_back(std::move(t));
                }
            break;
        }
    }
    return out;
}

bool Domain::adjacent(const PuzzleState& a, const PuzzleState& b) const {
    if (!valid(a) || !valid(b)) return false;
    const auto succ = successors(a);
    return std::find(succ.begin(), succ.end(), b) != succ.end();
}

PuzzleState Domain::goal() const {
    PuzzleState g{kind_, {}};
    switch (kind_) {
        case DomainKind::puzzle8:
            for (std::uint8_t i = 0; i < 9; ++i) g.cells.push_back(i);
            break;
        case DomainKind::lightsout: g.cells.assign(static_cast<std::size_t>(size_ * size_), 0); break;
        case DomainKind::hanoi: g.cells.assign(static_cast<std::size_t>(size_), 2); break;
    }
    return g;
}

std::uint64_t Domain::state_count() const {
    switch (kind_) {
        case DomainKind::puzzle8: return factorial(9);
        case DomainKind::lightsout: return std::uint64_t{1} << (size_ * size_);
        case DomainKind::hanoi: return pow3(size_);
    }
    return 0;
}

std::uint64_t Domain::index(const PuzzleState& s) const {
    check(s);
    std::uint64_t idx = 0;
    switch (kind_) {
        case DomainKind::puzzle8:
            for (std::size_t i = 0; i < 9; ++i) {
                std::uint64_t smaller = 0;
                for (std::size_t j = i + 1; j < 9; ++j) smaller += s.cells[j] < s.cells[i];
                idx += smaller * factorial(static_cast<int>(8 - i));
            }
            break;
        case DomainKind::lightsout:
            for (std::size_t i = 0; i < s.cells.size(); ++i) idx |= std::uint64_t{s.cells[i]} << i;
            break;
        case DomainKind::hanoi:
            for (std::size_t k = s.cells.size(); k-- > 0;) idx = idx * 3 + s.cells[k];
            break;
    }
    return idx;
}

PuzzleState Domain::state_at(std::uint64_t idx) const {
    if (idx >= state_count()) throw std::out_of_range("state index out of range");
    PuzzleState s{kind_, {}};
    switch (kind_) {
        case DomainKind::puzzle8: {
            std::vector<std::uint8_t> pool{0, 1, 2, 3, 4, 5, 6, 7, 8};
            for (int i = 0; i < 9; ++i) {
                const std::uint64_t f = factorial(8 - i);
                const auto k = static_cast<std::ptrdiff_t>(idx / f);
                idx %= f;
                s.cells.push_back(pool[static_cast<std::size_t>(k)]);
                pool.erase(pool.begin() + k);
            }
            break;
        }
        case DomainKind::lightsout:
            for (int i = 0; i < size_ * size_; ++i) s.cells.push_back(static_cast<std::uint8_t>((idx >> i) & 1));
            break;
        case DomainKind::hanoi:
            for (int k = 0; k < size_; ++k) {
                s.cells.push_back(static_cast<std::uint8_t>(idx % 3));
                idx /= 3;
            }
            break;
    }
    return s;
}

std::vector<PuzzleState> Domain::all_states() const {
    std::vector<PuzzleState> out;
    out.reserve(state_count());
    for (std::uint64_t i = 0; i < state_count(); ++i) out.push_back(state_at(i));
    return out;
}

Tensor Domain::render(const PuzzleState& s) const {
    check(s);
    Tensor img({h_, w_});
    switch (kind_) {
        case DomainKind::puzzle8: {
            constexpr std::size_t t = TileSet::kTile;
            for (std::size_t cell = 0; cell < 9; ++cell) {
                const Tensor& tile = tiles_.tiles[s.cells[cell]];
                const std::size_t y0 = (cell / 3) * t, x0 = (cell % 3) * t;
                for (std::size_t y = 0; y < t; ++y)
                    for (std::size_t x = 0; x < t; ++x) img[(y0 + y) * w_ + x0 + x] = tile[y * t + x];
            }
            break;
        }
        case DomainKind::lightsout: {
            const auto n = static_cast<std::size_t>(size_);
            for (std::size_t cell = 0; cell < n * n; ++cell) {
                if (!s.cells[cell]) continue;
                const std::size_t y0 = (cell / n) * kLightBlock, x0 = (cell % n) * kLightBlock;
                // 3px-thick "+" inside the 9x9 button
                for (std::size_t a = 1; a < 8; ++a)
                    for (std::size_t b = 3; b < 6; ++b) {
                        img[(y0 + a) * w_ + x0 + b] = 1.0f;
                        img[(y0 + b) * w_ + x0 + a] = 1.0f;
                    }
            }
            if (twisted_) img = swirl(img, kSwirlStrength, 0.75 * static_cast<double>(std::min(h_, w_)));
            break;
        }
        case DomainKind::hanoi: {
            std::array<std::size_t, 3> height{};
            for (int k = size_ - 1; k >= 0; --k) {
                const std::size_t peg = s.cells[static_cast<std::size_t>(k)];
                const auto width = static_cast<std::size_t>(
                    std::lround(static_cast<double>(kPegWidth) * (k + 1) / size_));
                const std::size_t x0 = peg * kPegWidth + (kPegWidth - width) / 2;
                const std::size_t y0 = h_ - kDiskHeight * (height[peg] + 1);
                for (std::size_t y = y0; y < y0 + kDiskHeight; ++y)
                    for (std::size_t x = x0; x < x0 + width; ++x) img[y * w_ + x] = 1.0f;
                ++height[peg];
            }
            break;
        }
    }
    return img;
}

std::optional<PuzzleState> Domain::classify(const Tensor& image, double threshold) const {
    if (image.shape() != Shape{h_, w_}) throw nd::ShapeError(-1, {h_, w_}, image.shape(), "classify " + name_);
    switch (kind_) {
        case DomainKind::puzzle8: return classify_puzzle(image, threshold);
        case DomainKind::lightsout: return classify_lightsout(image, threshold);
        case DomainKind::hanoi: return classify_hanoi(image, threshold);
    }
    return std::nullopt;
}

std::optional<PuzzleState> Domain::classify_puzzle(const Tensor& image, double threshold) const {
    constexpr std::size_t t = TileSet::kTile;
    PuzzleState s{kind_, std::vector<std::uint8_t>(9)};
    for (std::size_t cell = 0; cell < 9; ++cell) {
        const std::size_t y0 = (cell / 3) * t, x0 = (cell % 3) * t;
        double best = 1e300;
        for (std::size_t k = 0; k < 9; ++k) {
            double err = 0.0;
            for (std::size_t y = 0; y < t; ++y)
                for (std::size_t x = 0; x < t; ++x)
                    err += std::abs(static_cast<double>(image[(y0 + y) * w_ + x0 + x]) - tiles_.tiles[k][y * t + x]);
            err /= t * t;
            if (err < best) {
                best = err;
                s.cells[cell] = static_cast<std::uint8_t>(k);
            }
        }
        if (best > threshold) return std::nullopt;
    }
    if (!valid(s)) return std::nullopt;
    return s;
}

std::optional<PuzzleState> Domain::classify_lightsout(const Tensor& image, double threshold) const {
    // The rendering is affine in the light vector, so project onto the per-cell difference images.
    const std::size_t cells = lo_delta_.size(), pixels = image.size();
    Eigen::MatrixXd basis(pixels, cells);
    for (std::size_t i = 0; i < cells; ++i)
        for (std::size_t p = 0; p < pixels; ++p) basis(static_cast<long>(p), static_cast<long>(i)) = lo_delta_[i][p];
    Eigen::VectorXd r(pixels);
    for (std::size_t p = 0; p < pixels; ++p) r(static_cast<long>(p)) = image[p] - lo_base_[p];
    const Eigen::VectorXd coef = (basis.transpose() * basis).ldlt().solve(basis.transpose() * r);
    PuzzleState s{kind_, std::vector<std::uint8_t>(cells)};
    for (std::size_t i = 0; i < cells; ++i) {
        const double c = coef(static_cast<long>(i));
        if (std::abs(c - std::round(c)) > 0.35 || c < -0.35 || c > 1.35) return std::nullopt;
        s.cells[i] = c > 0.5 ? 1 : 0;
    }
    if (mean_abs_diff(image, render(s)) > threshold) return std::nullopt;
    return s;
}

std::optional<PuzzleState> Domain::classify_hanoi(const Tensor& image, double threshold) const {
    double best = 1e300;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < hanoi_renders_.size(); ++i) {
        const double err = mean_abs_diff(image, hanoi_renders_[i]);
        if (err < best) {
            best = err;
            arg = i;
        }
    }
    if (best > threshold) return std::nullopt;
    return state_at(arg);
}

BitVector Domain::identity_bits(const PuzzleState& s) const {
    check(s);
    const std::size_t per = kind_ == DomainKind::puzzle8 ? 4 : kind_ == DomainKind::hanoi ? 2 : 1;
    BitVector b(s.cells.size() * per);
    for (std::size_t i = 0; i < s.cells.size(); ++i)
        for (std::size_t k = 0; k < per; ++k) b.set(i * per + k, (s.cells[i] >> k) & 1);
    return b;
}

PuzzleState Domain::from_identity_bits(const BitVector& b) const {
    const std::size_t per = kind_ == DomainKind::puzzle8 ? 4 : kind_ == DomainKind::hanoi ? 2 : 1;
    if (b.size() % per) throw InvalidState("identity bit vector has wrong length");
    PuzzleState s{kind_, std::vector<std::uint8_t>(b.size() / per)};
    for (std::size_t i = 0; i < s.cells.size(); ++i)
        for (std::size_t k = 0; k < per; ++k) s.cells[i] = static_cast<std::uint8_t>(s.cells[i] | (b[i * per + k] << k));
    check(s);
    return s;
}

std::vector<Instance> sample_instances(const Domain& d, std::size_t count, int walk_length, nd::RngStream& rng) {
    if (walk_length < 1) throw std::invalid_argument("walk_length must be at least 1");
    const PuzzleState goal = d.goal();
    const Tensor goal_image = d.render(goal);
    std::vector<Instance> out;
    std::size_t failures = 0;
    while (out.size() < count) {
        std::vector<PuzzleState> walk{goal};
        std::unordered_set<std::uint64_t> seen{d.index(goal)};
        bool dead = false;
        for (int step = 0; step < walk_length && !dead; ++step) {
            std::vector<PuzzleState> fresh;
            for (auto& t : d.successors(walk.back()))
                if (!seen.count(d.index(t))) fresh.push_back(std::move(t));
            if (fresh.empty()) {
                dead = true;
                break;
            }
            walk.push_back(std::move(fresh[rng.below(fresh.size())]));
            seen.insert(d.index(walk.back()));
        }
        if (dead) {
            if (++failures > 10000) throw std::runtime_error("self-avoiding walk keeps hitting dead ends");
            continue;
        }
        Instance inst;
        inst.init = walk.back();
        inst.goal = goal;
        inst.init_image = d.render(inst.init);
        inst.goal_image = goal_image;
        inst.walk_length = walk_length;
        out.push_back(std::move(inst));
    }
    return out;
}

bool validate_plan(const Domain& d, const PuzzleState& init, const PuzzleState& goal,
                   const std::vector<PuzzleState>& states) {
    if (states.empty() || states.front() != init || states.back() != goal) return false;
    for (const auto& s : states)
        if (!d.valid(s)) return false;
    for (std::size_t i = 1; i < states.size(); ++i)
        if (!d.adjacent(states[i - 1], states[i])) return false;
    return true;
}

std::vector<int> bfs_distances(const Domain& d, const PuzzleState& from) {
    std::vector<int> dist(d.state_count(), -1);
    std::deque<PuzzleState> queue{from};
    dist[d.index(from)] = 0;
    while (!queue.empty()) {
        const PuzzleState s = std::move(queue.front());
        queue.pop_front();
        const int ds = dist[d.index(s)];
        for (auto& t : d.successors(s)) {
            int& dt = dist[d.index(t)];
            if (dt >= 0) continue;
            dt = ds + 1;
            queue.push_back(std::move(t));
        }
    }
    return dist;
}

std::vector<std::pair<PuzzleState, PuzzleState>> all_transitions(const Domain& d) {
    std::vector<std::pair<PuzzleState, PuzzleState>> out;
    for (std::uint64_t i = 0; i < d.state_count(); ++i) {
        const PuzzleState s = d.state_at(i);
        for (auto& t : d.successors(s)) out.emplace_back(s, std::move(t));
    }
    return out;
}

}  // namespace latplan
