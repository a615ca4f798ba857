#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace regnoise {

/// Square banded matrix with `lower` sub- and `upper` super-diagonals, stored by row.
class BandedMatrix {
public:
    BandedMatrix() = default;
    BandedMatrix(std::size_t n, std::size_t lower, std::size_t upper);

    std::size_t size() const noexcept { return n_; }
    std::size_t lower() const noexcept { return lower_; }
    std::size_t upper() const noexcept { return upper_; }

    /// Entry (i, j); must lie inside the band.
    double& at(std::size_t i, std::size_t j);
    double at(std::size_t i, std::size_t j) const;
    /// Entry (i, j) or 0 outside the band.
    double get(std::size_t i, std::size_t j) const;

    bool in_band(std::size_t i, std::size_t j) const noexcept {
        return j + lower_ >= i && j <= i + upper_;
    }

    std::vector<double> multiply(std::span<const double> x) const;

    /// Returns I + scale * (*this).
    BandedMatrix identity_plus(double scale) const;

    /// Solves A x = b by banded Gaussian elimination without pivoting.
    /// Throws StructuralError on a zero or non-finite pivot.
    std::vector<double> solve(std::span<const double> b) const;

private:
    std::size_t index(std::size_t i, std::size_t j) const noexcept {
        return i * width_ + (j + lower_ - i);
    }

    std::size_t n_ = 0;
    std::size_t lower_ = 0;
    std::size_t upper_ = 0;
    std::size_t width_ = 1;
    std::vector<double> data_;
};

} // namespace regnoise
