#include "latplan/nd/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace latplan::nd {

namespace bin {

namespace {
template <class T>
void put_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("unexpected end of file");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}
}  // namespace

void write_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }
void write_u32(std::ostream& os, std::uint32_t v) { put_le(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put_le(os, v); }
void write_f32(std::ostream& os, float v) { put_le(os, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }

void write_f32s(std::ostream& os, const float* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(float)));
    } else {
        for (std::size_t i = 0; i < n; ++i) write_f32(os, p[i]);
    }
}

void write_magic(std::ostream& os, std::string_view magic) {
    os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

std::uint8_t read_u8(std::istream& is) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw FormatError("unexpected end of file");
    return static_cast<std::uint8_t>(c);
}
std::uint32_t read_u32(std::istream& is) { return get_le<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return get_le<std::uint64_t>(is); }
float read_f32(std::istream& is) { return std::bit_cast<float>(get_le<std::uint32_t>(is)); }
double read_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

void read_f32s(std::istream& is, float* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        if (!is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(float))))
            throw FormatError("unexpected end of file in float payload");
    } else {
        for (std::size_t i = 0; i < n; ++i) p[i] = read_f32(is);
    }
}

void expect_magic(std::istream& is, std::string_view magic, std::string_view what) {
    std::string got(magic.size(), '\0');
    if (!is.read(got.data(), static_cast<std::streamsize>(got.size())) || got != magic)
        throw FormatError(std::string(what) + ": bad magic, expected \"" + std::string(magic) + "\"");
}

}  // namespace bin

namespace {
constexpr std::uint64_t kMaxRank = 16;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;
}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
    bin::write_u64(os, t.rank());
    for (std::size_t e : t.shape()) bin::write_u64(os, e);
    bin::write_f32s(os, t.ptr(), t.size());
}

Tensor read_tensor(std::istream& is) {
    const std::uint64_t rank = bin::read_u64(is);
    if (rank > kMaxRank) throw FormatError("tensor rank out of range");
    Shape shape(rank);
    std::uint64_t total = 1;
    for (auto& e : shape) {
        e = bin::read_u64(is);
        total *= e;
        if (total > kMaxElements) throw FormatError("tensor too large");
    }
    Tensor t(shape);
    bin::read_f32s(is, t.ptr(), t.size());
    return t;
}

namespace {

std::vector<double> attributes(const LayerSpec& l) {
    switch (l.kind) {
        case LayerKind::dense: return {static_cast<double>(l.units)};
        case LayerKind::conv2d:
            return {static_cast<double>(l.kernel_h), static_cast<double>(l.kernel_w), static_cast<double>(l.channels)};
        case LayerKind::batchnorm: return {l.momentum, l.epsilon};
        case LayerKind::dropout: return {l.rate};
        case LayerKind::gaussian_noise: return {l.sigma};
        case LayerKind::activation: return {static_cast<double>(l.activation)};
        case LayerKind::gumbel_softmax:
            return {static_cast<double>(l.rows), static_cast<double>(l.categories), l.temperature};
        case LayerKind::reshape: {
            std::vector<double> d;
            for (auto e : l.dims) d.push_back(static_cast<double>(e));
            return d;
        }
        case LayerKind::concat: return {};
    }
    return {};
}

std::size_t as_size(double v) { return static_cast<std::size_t>(v); }

LayerSpec from_attributes(std::uint32_t tag, const std::vector<double>& a) {
    auto need = [&](std::size_t n) {
        if (a.size() != n) throw FormatError("layer attribute count mismatch");
    };
    switch (static_cast<LayerKind>(tag)) {
        case LayerKind::dense: need(1); return LayerSpec::dense(as_size(a[0]));
        case LayerKind::conv2d: need(3); return LayerSpec::conv2d(as_size(a[0]), as_size(a[1]), as_size(a[2]));
        case LayerKind::batchnorm: {
            need(2);
            LayerSpec l = LayerSpec::batchnorm();
            l.momentum = static_cast<float>(a[0]);
            l.epsilon = static_cast<float>(a[1]);
            return l;
        }
        case LayerKind::dropout: need(1); return LayerSpec::dropout(static_cast<float>(a[0]));
        case LayerKind::gaussian_noise: need(1); return LayerSpec::gaussian_noise(static_cast<float>(a[0]));
        case LayerKind::activation: {
            need(1);
            const auto act = static_cast<std::uint32_t>(a[0]);
            if (act > 2) throw FormatError("unknown activation id");
            return LayerSpec::act(static_cast<Activation>(act));
        }
        case LayerKind::gumbel_softmax:
            need(3);
            return LayerSpec::gumbel_softmax(as_size(a[0]), as_size(a[1]), static_cast<float>(a[2]));
        case LayerKind::reshape: {
            Shape dims;
            for (double d : a) dims.push_back(as_size(d));
            return LayerSpec::reshape(dims);
        }
        case LayerKind::concat: need(0); return LayerSpec::concat();
    }
    throw FormatError("unknown layer kind tag " + std::to_string(tag));
}

std::size_t param_count(LayerKind k) {
    switch (k) {
        case LayerKind::dense:
        case LayerKind::conv2d:
        case LayerKind::batchnorm: return 2;
        default: return 0;
    }
}

}  // namespace

void write_layers(std::ostream& os, const std::vector<LayerSpec>& layers) {
    bin::write_u64(os, layers.size());
    for (const LayerSpec& l : layers) {
        bin::write_u32(os, static_cast<std::uint32_t>(l.kind));
        const auto attrs = attributes(l);
        bin::write_u64(os, attrs.size());
        for (double a : attrs) bin::write_f64(os, a);
        bin::write_u64(os, l.params.size() + l.buffers.size());
        for (const Tensor& t : l.params) write_tensor(os, t);
        for (const Tensor& t : l.buffers) write_tensor(os, t);
    }
}

std::vector<LayerSpec> read_layers(std::istream& is) {
    const std::uint64_t count = bin::read_u64(is);
    if (count > 4096) throw FormatError("implausible layer count");
    std::vector<LayerSpec> layers;
    layers.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t tag = bin::read_u32(is);
        const std::uint64_t nattr = bin::read_u64(is);
        if (nattr > 64) throw FormatError("implausible attribute count");
        std::vector<double> attrs(nattr);
        for (double& a : attrs) a = bin::read_f64(is);
        LayerSpec l = from_attributes(tag, attrs);
        const std::uint64_t ntensors = bin::read_u64(is);
        const std::size_t np = param_count(l.kind);
        if (ntensors != 0 && ntensors != np + (l.kind == LayerKind::batchnorm ? 2 : 0))
            throw FormatError("layer " + std::to_string(i) + ": unexpected tensor count");
        for (std::uint64_t k = 0; k < ntensors; ++k) {
            Tensor t = read_tensor(is);
            (k < np ? l.params : l.buffers).push_back(std::move(t));
        }
        layers.push_back(std::move(l));
    }
    return layers;
}

void save_network(const std::string& path, const Network& net) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    bin::write_magic(os, "LPW1");
    write_layers(os, net.layers());
    if (!os) throw std::runtime_error("write failed: " + path);
}

Network load_network(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    bin::expect_magic(is, "LPW1", path);
    return Network(read_layers(is));
}

void save_model(const std::string& path, const ModelFile& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    bin::write_magic(os, "LPW1");
    bin::write_u8(os, model.kind);
    bin::write_u64(os, model.metadata.size());
    os.write(model.metadata.data(), static_cast<std::streamsize>(model.metadata.size()));
    bin::write_u64(os, model.networks.size());
    for (const auto& layers : model.networks) write_layers(os, layers);
    if (!os) throw std::runtime_error("write failed: " + path);
}

ModelFile load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    bin::expect_magic(is, "LPW1", path);
    ModelFile m;
    m.kind = bin::read_u8(is);
    const std::uint64_t len = bin::read_u64(is);
    if (len > (std::uint64_t{1} << 30)) throw FormatError("metadata too large");
    m.metadata.resize(len);
    if (!is.read(m.metadata.data(), static_cast<std::streamsize>(len))) throw FormatError("truncated metadata");
    const std::uint64_t nets = bin::read_u64(is);
    if (nets > 64) throw FormatError("implausible network count");
    for (std::uint64_t i = 0; i < nets; ++i) m.networks.push_back(read_layers(is));
    return m;
}

}  // namespace latplan::nd
