#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "latplan/nd/network.hpp"
#include "latplan/nd/tensor.hpp"

namespace latplan::nd {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Little-endian primitives shared by every binary format in the project.
namespace bin {
void write_u8(std::ostream& os, std::uint8_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f32(std::ostream& os, float v);
void write_f64(std::ostream& os, double v);
void write_f32s(std::ostream& os, const float* p, std::size_t n);
void write_magic(std::ostream& os, std::string_view magic);

std::uint8_t read_u8(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
float read_f32(std::istream& is);
double read_f64(std::istream& is);
void read_f32s(std::istream& is, float* p, std::size_t n);
/// Throws FormatError naming `what` when the next bytes are not `magic`.
void expect_magic(std::istream& is, std::string_view magic, std::string_view what);
}  // namespace bin

/// Tensor with rank and 64-bit extents followed by the float payload.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

/// Layer list body: u64 count, then per layer kind tag, attributes and tensors.
void write_layers(std::ostream& os, const std::vector<LayerSpec>& layers);
std::vector<LayerSpec> read_layers(std::istream& is);

/// "LPW1" checkpoint of a single network.
void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

/// Multi-network model file: "LPW1", a model-kind byte, a metadata string, then the
/// layer lists of each network.
struct ModelFile {
    std::uint8_t kind = 0;
    std::string metadata;
    std::vector<std::vector<LayerSpec>> networks;
};
void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

}  // namespace latplan::nd
