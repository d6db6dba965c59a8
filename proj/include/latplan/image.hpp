#pragma once

#include <span>
#include <string>

#include "latplan/nd/rng.hpp"
#include "latplan/nd/tensor.hpp"

namespace latplan {

using nd::Shape;
using nd::Tensor;

// Grayscale images are (H,W) tensors with values in [0,1].

Tensor read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Tensor& image);
/// Writes the images side by side (1px gray separator) as a binary PPM.
void write_ppm_strip(const std::string& path, std::span<const Tensor> images);

/// MNIST IDX image file (magic 0x00000803), returned as (count,H,W) scaled to [0,1].
Tensor read_idx_images(const std::string& path);

/// "LPT1" dataset tensor: rank, 64-bit extents, float payload.
void write_lpt(const std::string& path, const Tensor& t);
Tensor read_lpt(const std::string& path);

/// Area-average resampling to (h,w).
Tensor resize_area(const Tensor& image, std::size_t h, std::size_t w);
Tensor histogram_equalize(const Tensor& image, int levels = 256);
/// Linear stretch of [min,max] onto [0,1].
Tensor contrast_stretch(const Tensor& image);

/// Adds N(0, sigma^2) per pixel and clamps to [0,1].
Tensor add_gaussian_noise(const Tensor& image, double sigma, nd::RngStream& rng);
/// Sets each pixel to 0 or to 1 with probability p/2 each.
Tensor add_salt_pepper(const Tensor& image, double p, nd::RngStream& rng);

/// Swirl about the image center: each output pixel samples the input at an angular
/// offset strength * exp(-rho / (radius / 5)), bilinear, edges clamped.
Tensor swirl(const Tensor& image, double strength, double radius);

double mean_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace latplan
