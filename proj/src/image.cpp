#include "latplan/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "latplan/nd/serialize.hpp"

namespace latplan {

namespace {

void require_2d(const Tensor& image, const char* what) {
    if (image.rank() != 2) throw nd::ShapeError(-1, {0, 0}, image.shape(), what);
}

// Reads the next whitespace-separated token of a PNM header, skipping comments.
std::string pnm_token(std::istream& is) {
    std::string tok;
    int c;
    while ((c = is.get()) != EOF) {
        if (c == '#') {
            while ((c = is.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

unsigned char to_byte(float v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

Tensor read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    if (pnm_token(is) != "P5") throw nd::FormatError(path + ": not a binary PGM (P5)");
    const std::size_t w = std::stoul(pnm_token(is));
    const std::size_t h = std::stoul(pnm_token(is));
    const unsigned long maxval = std::stoul(pnm_token(is));
    if (maxval == 0 || maxval > 65535) throw nd::FormatError(path + ": bad maxval");
    Tensor img({h, w});
    for (std::size_t i = 0; i < h * w; ++i) {
        unsigned long v = static_cast<unsigned char>(is.get());
        if (maxval > 255) v = (v << 8) | static_cast<unsigned char>(is.get());
        if (!is) throw nd::FormatError(path + ": truncated pixel data");
        img[i] = static_cast<float>(v) / static_cast<float>(maxval);
    }
    return img;
}

void write_pgm(const std::string& path, const Tensor& image) {
    require_2d(image, "write_pgm expects (H,W)");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "P5\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
    for (float v : image.data()) os.put(static_cast<char>(to_byte(v)));
    if (!os) throw std::runtime_error("write failed: " + path);
}

void write_ppm_strip(const std::string& path, std::span<const Tensor> images) {
    if (images.empty()) throw std::invalid_argument("write_ppm_strip: no images");
    std::size_t h = 0, w = 0;
    for (const Tensor& im : images) {
        require_2d(im, "write_ppm_strip expects (H,W)");
        h = std::max(h, im.dim(0));
        w += im.dim(1);
    }
    w += images.size() - 1;
    std::vector<unsigned char> rgb(h * w * 3, 128);
    std::size_t x0 = 0;
    for (const Tensor& im : images) {
        for (std::size_t y = 0; y < im.dim(0); ++y)
            for (std::size_t x = 0; x < im.dim(1); ++x) {
                const unsigned char v = to_byte(im[y * im.dim(1) + x]);
                for (int ch = 0; ch < 3; ++ch) rgb[(y * w + x0 + x) * 3 + static_cast<std::size_t>(ch)] = v;
            }
        x0 += im.dim(1) + 1;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "P6\n" << w << ' ' << h << "\n255\n";
    os.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
}

Tensor read_idx_images(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    auto be32 = [&] {
        unsigned char b[4];
        if (!is.read(reinterpret_cast<char*>(b), 4)) throw nd::FormatError(path + ": truncated IDX header");
        return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
    };
    if (be32() != 0x00000803u) throw nd::FormatError(path + ": not an IDX image file (magic 0x00000803)");
    const std::size_t n = be32(), h = be32(), w = be32();
    Tensor out({n, h, w});
    std::vector<unsigned char> buf(n * h * w);
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
        throw nd::FormatError(path + ": truncated IDX payload");
    for (std::size_t i = 0; i < buf.size(); ++i) out[i] = static_cast<float>(buf[i]) / 255.0f;
    return out;
}

void write_lpt(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    nd::bin::write_magic(os, "LPT1");
    nd::write_tensor(os, t);
    if (!os) throw std::runtime_error("write failed: " + path);
}

Tensor read_lpt(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    nd::bin::expect_magic(is, "LPT1", path);
    return nd::read_tensor(is);
}

Tensor resize_area(const Tensor& image, std::size_t h, std::size_t w) {
    require_2d(image, "resize_area expects (H,W)");
    const std::size_t sh = image.dim(0), sw = image.dim(1);
    Tensor out({h, w});
    const double fy = static_cast<double>(sh) / h, fx = static_cast<double>(sw) / w;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double y0 = y * fy, y1 = (y + 1) * fy, x0 = x * fx, x1 = (x + 1) * fx;
            double acc = 0.0, area = 0.0;
            for (auto sy = static_cast<std::size_t>(y0); sy < sh && static_cast<double>(sy) < y1; ++sy) {
                const double oy = std::min<double>(sy + 1, y1) - std::max<double>(sy, y0);
                for (auto sx = static_cast<std::size_t>(x0); sx < sw && static_cast<double>(sx) < x1; ++sx) {
                    const double ox = std::min<double>(sx + 1, x1) - std::max<double>(sx, x0);
                    acc += oy * ox * image[sy * sw + sx];
                    area += oy * ox;
                }
            }
            out[y * w + x] = static_cast<float>(area > 0 ? acc / area : 0.0);
        }
    return out;
}

Tensor histogram_equalize(const Tensor& image, int levels) {
    std::vector<std::size_t> hist(static_cast<std::size_t>(levels), 0);
    auto bin_of = [&](float v) {
        return static_cast<std::size_t>(std::clamp(static_cast<int>(v * (levels - 1) + 0.5f), 0, levels - 1));
    };
    for (float v : image.data()) ++hist[bin_of(v)];
    std::vector<double> cdf(hist.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < hist.size(); ++i) cdf[i] = (acc += static_cast<double>(hist[i]));
    const double first = *std::find_if(cdf.begin(), cdf.end(), [](double c) { return c > 0; });
    const double total = static_cast<double>(image.size());
    Tensor out(image.shape());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double c = cdf[bin_of(image[i])];
        out[i] = total > first ? static_cast<float>((c - first) / (total - first)) : 0.0f;
    }
    return out;
}

Tensor contrast_stretch(const Tensor& image) {
    const auto [lo, hi] = std::minmax_element(image.data().begin(), image.data().end());
    Tensor out(image.shape());
    const float range = *hi - *lo;
    for (std::size_t i = 0; i < image.size(); ++i) out[i] = range > 0 ? (image[i] - *lo) / range : 0.0f;
    return out;
}

Tensor add_gaussian_noise(const Tensor& image, double sigma, nd::RngStream& rng) {
    Tensor out = image;
    for (float& v : out.data()) v = std::clamp(static_cast<float>(v + sigma * rng.normal()), 0.0f, 1.0f);
    return out;
}

Tensor add_salt_pepper(const Tensor& image, double p, nd::RngStream& rng) {
    Tensor out = image;
    for (float& v : out.data()) {
        const double u = rng.uniform();
        if (u < p / 2) v = 0.0f;
        else if (u < p) v = 1.0f;
    }
    return out;
}

Tensor swirl(const Tensor& image, double strength, double radius) {
    require_2d(image, "swirl expects (H,W)");
    if (!(radius > 0)) throw std::invalid_argument("swirl radius must be positive");
    const std::size_t h = image.dim(0), w = image.dim(1);
    const double cy = (static_cast<double>(h) - 1) / 2, cx = (static_cast<double>(w) - 1) / 2;
    const double decay = radius / 5.0;
    auto at = [&](long y, long x) {
        y = std::clamp<long>(y, 0, static_cast<long>(h) - 1);
        x = std::clamp<long>(x, 0, static_cast<long>(w) - 1);
        return static_cast<double>(image[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)]);
    };
    Tensor out({h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double dy = y - cy, dx = x - cx;
            const double phi = strength * std::exp(-std::hypot(dx, dy) / decay);
            const double c = std::cos(phi), s = std::sin(phi);
            const double sy = cy + dx * s + dy * c, sx = cx + dx * c - dy * s;
            const double fy = std::floor(sy), fx = std::floor(sx);
            const double ty = sy - fy, tx = sx - fx;
            const auto iy = static_cast<long>(fy), ix = static_cast<long>(fx);
            const double v = (1 - ty) * ((1 - tx) * at(iy, ix) + tx * at(iy, ix + 1)) +
                             ty * ((1 - tx) * at(iy + 1, ix) + tx * at(iy + 1, ix + 1));
            out[y * w + x] = static_cast<float>(v);
        }
    return out;
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size()) throw nd::ShapeError(-1, a.shape(), b.shape(), "mean_abs_diff");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a[i]) - b[i]);
    return a.size() ? s / static_cast<double>(a.size()) : 0.0;
}

}  // namespace latplan
