#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "latplan/domains.hpp"
#include "latplan/nd/serialize.hpp"

namespace latplan {

namespace {

// 5x7 bitmap font, one byte per row, bit 4 = leftmost column.
constexpr std::array<std::array<std::uint8_t, 7>, 10> kFont = {{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
}};

Tensor glyph(int digit) {
    constexpr std::size_t t = TileSet::kTile;
    Tensor out({t, t});
    for (std::size_t r = 0; r < 7; ++r)
        for (std::size_t c = 0; c < 5; ++c) {
            if (!((kFont[static_cast<std::size_t>(digit)][r] >> (4 - c)) & 1)) continue;
            for (std::size_t dy = 0; dy < 2; ++dy)
                for (std::size_t dx = 0; dx < 2; ++dx) out[(2 * r + dy) * t + 2 + 2 * c + dx] = 1.0f;
        }
    return out;
}

// Smooth random field: bilinear interpolation of a coarse lattice of uniform values.
Tensor value_noise(std::size_t size, std::size_t cells, nd::RngStream& rng) {
    std::vector<double> lattice((cells + 1) * (cells + 1));
    for (double& v : lattice) v = rng.uniform();
    Tensor out({size, size});
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const double fy = static_cast<double>(y) * cells / size, fx = static_cast<double>(x) * cells / size;
            const auto iy = static_cast<std::size_t>(fy), ix = static_cast<std::size_t>(fx);
            const double ty = fy - iy, tx = fx - ix;
            auto at = [&](std::size_t a, std::size_t b) { return lattice[a * (cells + 1) + b]; };
            out[y * size + x] = static_cast<float>((1 - ty) * ((1 - tx) * at(iy, ix) + tx * at(iy, ix + 1)) +
                                                   ty * ((1 - tx) * at(iy + 1, ix) + tx * at(iy + 1, ix + 1)));
        }
    return out;
}

}  // namespace

TileSet TileSet::digits() {
    TileSet ts;
    ts.tiles.emplace_back(Shape{kTile, kTile});
    for (int d = 1; d <= 8; ++d) ts.tiles.push_back(glyph(d));
    return ts;
}

TileSet TileSet::from_image(const Tensor& photo) {
    if (photo.rank() != 2) throw nd::ShapeError(-1, {0, 0}, photo.shape(), "photograph must be (H,W)");
    const Tensor img = contrast_stretch(histogram_equalize(resize_area(photo, 3 * kTile, 3 * kTile)));
    TileSet ts;
    for (std::size_t p = 0; p < 9; ++p) {
        Tensor tile({kTile, kTile});
        const std::size_t y0 = (p / 3) * kTile, x0 = (p % 3) * kTile;
        for (std::size_t y = 0; y < kTile; ++y)
            for (std::size_t x = 0; x < kTile; ++x) tile[y * kTile + x] = img[(y0 + y) * 3 * kTile + x0 + x];
        ts.tiles.push_back(std::move(tile));
    }
    return ts;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    unsigned char hdr[8];
    if (!is.read(reinterpret_cast<char*>(hdr), 8)) throw nd::FormatError(path + ": truncated IDX header");
    if (hdr[0] || hdr[1] || hdr[2] != 0x08 || hdr[3] != 0x01)
        throw nd::FormatError(path + ": not an IDX label file (magic 0x00000801)");
    const std::size_t n = (std::size_t{hdr[4]} << 24) | (std::size_t{hdr[5]} << 16) | (std::size_t{hdr[6]} << 8) | hdr[7];
    std::vector<std::uint8_t> labels(n);
    if (!is.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(n)))
        throw nd::FormatError(path + ": truncated IDX labels");
    return labels;
}

TileSet TileSet::from_idx(const std::string& images_path, const std::string& labels_path) {
    const Tensor images = read_idx_images(images_path);
    const auto labels = read_idx_labels(labels_path);
    if (labels.size() != images.dim(0)) throw nd::FormatError("IDX image and label counts differ");
    TileSet ts;
    ts.tiles.assign(9, Tensor());
    ts.tiles[0] = Tensor({kTile, kTile});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int d = labels[i];
        if (d < 1 || d > 8 || !ts.tiles[static_cast<std::size_t>(d)].empty()) continue;
        Tensor im({images.dim(1), images.dim(2)});
        const auto row = images.row(i);
        std::copy(row.begin(), row.end(), im.data().begin());
        ts.tiles[static_cast<std::size_t>(d)] = resize_area(im, kTile, kTile);
    }
    for (const Tensor& t : ts.tiles)
        if (t.empty()) throw nd::FormatError("IDX file lacks an example of some digit 1..8");
    return ts;
}

TileSet TileSet::mandrill() {
    nd::RngStream rng(0x6d616e64ULL);
    constexpr std::size_t n = 126;
    Tensor a = value_noise(n, 3, rng), b = value_noise(n, 9, rng), c = value_noise(n, 31, rng);
    Tensor img({n, n});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = 0.55f * a[i] + 0.3f * b[i] + 0.15f * c[i];
    return from_image(img);
}

TileSet TileSet::spider() {
    nd::RngStream rng(0x73706964ULL);
    constexpr std::size_t n = 126;
    const Tensor bg = value_noise(n, 4, rng);
    const double cx = 0.42 * n, cy = 0.47 * n;
    Tensor img({n, n});
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double rho = std::hypot(dx, dy), theta = std::atan2(dy, dx);
            const double spoke = std::pow(std::abs(std::cos(6.0 * theta)), 40.0);
            const double ring = std::pow(std::abs(std::cos(rho / 5.0)), 30.0);
            const double body = std::exp(-rho * rho / 60.0);
            img[y * n + x] = static_cast<float>(0.5 * bg[y * n + x] + 0.4 * std::max(spoke, ring) + body);
        }
    return from_image(img);
}

}  // namespace latplan
