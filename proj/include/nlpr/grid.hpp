#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <utility>
#include <vector>

namespace nlpr {

/// A 2-D offset or shift (row delta, column delta).
using Shift = std::array<int, 2>;

/// A pixel position (row, column) on a grid.
using Pixel = std::array<int, 2>;

/// Periodic p x q image domain. Pixel (i1,i2) maps to linear row index
/// i = i1*q + i2 (row-major); this bijection is used by every module.
/// All index arithmetic wraps modularly on both axes.
struct Grid {
    int p = 0;
    int q = 0;

    Grid() = default;
    Grid(int rows, int cols) : p(rows), q(cols) {
        if (p < 1 || q < 1) throw std::invalid_argument("grid: p and q must be >= 1");
    }

    int pixels() const { return p * q; }

    /// Wrap a coordinate onto the grid.
    static int wrap(int a, int n) {
        int r = a % n;
        return r < 0 ? r + n : r;
    }

    /// Linear row index of (possibly out-of-range) coordinates, with wrap.
    int index(int i1, int i2) const { return wrap(i1, p) * q + wrap(i2, q); }
    int index(Pixel i) const { return index(i[0], i[1]); }

    Pixel coords(int row) const { return {row / q, row % q}; }

    bool operator==(const Grid&) const = default;
};

/// Multiband image: n_h x L matrix of band intensities bound to a periodic
/// grid. Column c is band c; rows follow the grid's row-major pixel order.
/// Images are immutable values in spirit: operations return new images.
class MultibandImage {
public:
    Grid grid;
    Eigen::MatrixXd data;  // pixels() x bands

    MultibandImage() = default;

    MultibandImage(Grid g, int bands) : grid(g), data(Eigen::MatrixXd::Zero(g.pixels(), bands)) {
        if (bands < 1) throw std::invalid_argument("image: band count must be >= 1");
    }

    MultibandImage(Grid g, Eigen::MatrixXd values) : grid(g), data(std::move(values)) {
        if (data.rows() != grid.pixels())
            throw std::invalid_argument("image: data rows must equal p*q");
    }

    /// Construct from external data, rejecting non-finite entries.
    static MultibandImage from_data(Grid g, Eigen::MatrixXd values) {
        MultibandImage img(g, std::move(values));
        if (!img.data.allFinite()) throw std::invalid_argument("image: non-finite entries");
        return img;
    }

    int bands() const { return static_cast<int>(data.cols()); }
    int pixels() const { return grid.pixels(); }

    double at(int i1, int i2, int c) const { return data(grid.index(i1, i2), c); }
    double& at(int i1, int i2, int c) { return data(grid.index(i1, i2), c); }
};

/// Circular shift: output(i,c) = img(i - tau, c) with modular wrap.
MultibandImage shift(const MultibandImage& img, Shift tau);

/// Patch geometry: a (2K+1) x (2K+1) window and the fixed ordering of the
/// index set Lambda = {(k, c)}: band c outermost, then k1, then k2.
struct PatchSpec {
    int K = 1;

    explicit PatchSpec(int radius = 1) : K(radius) {
        if (K < 0) throw std::invalid_argument("patch: K must be >= 0");
    }

    int side() const { return 2 * K + 1; }
    int offsets() const { return side() * side(); }
    int length(int bands) const { return offsets() * bands; }

    /// Position of (k, c) in the patch vector.
    int position(Shift k, int c) const {
        return (c * side() + (k[0] + K)) * side() + (k[1] + K);
    }

    /// All offsets k in [-K,K]^2, lexicographic (k1 then k2).
    std::vector<Shift> offset_list() const;
};

/// Patch vector P_i(X): values X_c(i - k) for (k,c) in Lambda order.
Eigen::VectorXd extract_patch(const MultibandImage& img, Pixel i, const PatchSpec& spec);

/// Patch difference P_{i,tau}(X) = P_i(X) - P_{i-tau}(X).
Eigen::VectorXd patch_difference(const MultibandImage& img, Pixel i, Shift tau,
                                 const PatchSpec& spec);

}  // namespace nlpr
