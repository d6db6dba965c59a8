#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "latplan/bitvec.hpp"
#include "latplan/image.hpp"
#include "latplan/nd/rng.hpp"

namespace latplan {

enum class DomainKind : std::uint8_t { puzzle8 = 1, lightsout = 2, hanoi = 3 };

/// Domain tag plus payload.
///  puzzle8:   cells[i] = tile at cell i (row-major), a permutation of 0..8, 0 = blank
///  lightsout: cells[i] = 0/1 light at cell i of the n x n grid
///  hanoi:     cells[k] = peg (0..2) of disk k, disk 0 the smallest
struct PuzzleState {
    DomainKind kind = DomainKind::puzzle8;
    std::vector<std::uint8_t> cells;

    friend auto operator<=>(const PuzzleState&, const PuzzleState&) = default;
    friend bool operator==(const PuzzleState&, const PuzzleState&) = default;
};

std::string to_string(const PuzzleState& s);

class InvalidState : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Nine 14x14 tiles; tile 0 plays the blank.
struct TileSet {
    static constexpr std::size_t kTile = 14;
    std::vector<Tensor> tiles;

    /// Built-in 5x7 digit glyphs scaled to 14x14; tile 0 is black.
    static TileSet digits();
    /// Cuts a photograph into a 3x3 grid after grayscale preprocessing
    /// (area resize to 42x42, histogram equalization, contrast stretch). Patch 0 is the blank.
    static TileSet from_image(const Tensor& photo);
    /// First image of each digit 1..8 from an MNIST IDX image/label pair, shrunk to 14x14.
    static TileSet from_idx(const std::string& images_path, const std::string& labels_path);
    /// Procedural stand-ins for the photograph puzzles.
    static TileSet mandrill();
    static TileSet spider();
};

std::vector<std::uint8_t> read_idx_labels(const std::string& path);

struct DomainParams {
    std::string name = "lightsout";  // mnist-8puzzle, mandrill-8puzzle, spider-8puzzle, lightsout, twisted-lightsout, hanoi
    int size = 0;                    // lightsout grid side or hanoi disks; 0 = default (4)
    std::string idx_images;          // optional MNIST files for mnist-8puzzle
    std::string idx_labels;
    std::string photo;               // optional PGM for mandrill/spider
};

class Domain {
public:
    static Domain puzzle8(TileSet tiles, std::string name = "mnist-8puzzle");
    static Domain lightsout(int n, bool twisted = false);
    static Domain hanoi(int disks);
    static Domain from_params(const DomainParams& p);

    const std::string& name() const { return name_; }
    DomainKind kind() const { return kind_; }
    int size() const { return size_; }
    std::size_t height() const { return h_; }
    std::size_t width() const { return w_; }

    /// Throws InvalidState.
    void check(const PuzzleState& s) const;
    bool valid(const PuzzleState& s) const;
    std::vector<PuzzleState> successors(const PuzzleState& s) const;
    bool adjacent(const PuzzleState& a, const PuzzleState& b) const;
    PuzzleState goal() const;

    /// Dense index in [0, state_count()) for every valid state.
    std::uint64_t state_count() const;
    std::uint64_t index(const PuzzleState& s) const;
    PuzzleState state_at(std::uint64_t index) const;
    std::vector<PuzzleState> all_states() const;

    Tensor render(const PuzzleState& s) const;
    /// Nearest-template classification; nullopt when the best match is worse than threshold
    /// (mean absolute error per cell, disk image or whole image) or the result is not a valid state.
    std::optional<PuzzleState> classify(const Tensor& image, double threshold = 0.1) const;

    /// Perfect symbolic encoding (4 bits per 8-puzzle cell, 1 bit per light, 2 bits per disk).
    BitVector identity_bits(const PuzzleState& s) const;
    PuzzleState from_identity_bits(const BitVector& b) const;

private:
    Domain() = default;
    std::optional<PuzzleState> classify_puzzle(const Tensor& image, double threshold) const;
    std::optional<PuzzleState> classify_lightsout(const Tensor& image, double threshold) const;
    std::optional<PuzzleState> classify_hanoi(const Tensor& image, double threshold) const;

    std::string name_;
    DomainKind kind_ = DomainKind::puzzle8;
    int size_ = 3;
    bool twisted_ = false;
    std::size_t h_ = 0, w_ = 0;
    TileSet tiles_;
    std::vector<Tensor> hanoi_renders_;  // cached, indexed by state index
    Tensor lo_base_;                     // all lights off
    std::vector<Tensor> lo_delta_;       // render(cell i on) - lo_base_
};

struct Instance {
    PuzzleState init, goal;
    Tensor init_image, goal_image;
    int walk_length = 0;
};

/// Self-avoiding random walks of exactly walk_length steps from the goal; dead ends resample the walk.
std::vector<Instance> sample_instances(const Domain& d, std::size_t count, int walk_length, nd::RngStream& rng);

/// True iff states[0] = init, states.back() = goal and consecutive states are ground-truth neighbours.
bool validate_plan(const Domain& d, const PuzzleState& init, const PuzzleState& goal,
                   const std::vector<PuzzleState>& states);

/// Breadth-first distances from `from` over the whole state space, -1 for unreachable.
std::vector<int> bfs_distances(const Domain& d, const PuzzleState& from);

/// Every directed ground-truth transition (s, t).
std::vector<std::pair<PuzzleState, PuzzleState>> all_transitions(const Domain& d);

}  // namespace latplan
