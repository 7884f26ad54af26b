#pragma once

#include "nlpr/grid.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace nlpr {

/// Multiband image file (.mbi): a plain-text header followed by raw
/// little-endian float64 samples, band-major (band 0's p*q row-major pixels,
/// then band 1, ...). Header lines are "key value" pairs terminated by
/// "end_header":
///
///   MBI1
///   p 32
///   q 32
///   bands 8
///   scalar float64
///   endian little
///   order row-major
///   min 0        (optional)
///   max 1        (optional)
///   end_header
///
/// Round trips are bit-exact.
void write_mbi(const std::filesystem::path& path, const MultibandImage& img);
MultibandImage read_mbi(const std::filesystem::path& path);

/// 8-bit binary PGM (P5) of one band, linearly scaled to [0,255]; the scaling
/// min/max are recorded in a comment line.
void write_pgm(const std::filesystem::path& path, const MultibandImage& img, int band);

/// Flat key=value config text; '#' starts a comment. Values keep internal
/// whitespace; keys must be unique.
std::map<std::string, std::string> read_kv_file(const std::filesystem::path& path);
void write_kv_file(const std::filesystem::path& path,
                   const std::map<std::string, std::string>& kv);

/// Matrix <-> compact text (rows separated by ';', entries by ',') for
/// embedding small matrices such as R in config files.
std::string matrix_to_string(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_string(const std::string& s);

}  // namespace nlpr
