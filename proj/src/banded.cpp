#include "regnoise/banded.hpp"

#include "regnoise/errors.hpp"

#include <algorithm>
#include <cmath>

namespace regnoise {

BandedMatrix::BandedMatrix(std::size_t n, std::size_t lower, std::size_t upper)
    : n_(n), lower_(lower), upper_(upper), width_(lower + upper + 1),
      data_(n * (lower + upper + 1), 0.0) {}

double& BandedMatrix::at(std::size_t i, std::size_t j) {
    if (i >= n_ || j >= n_ || !in_band(i, j)) {
        throw StructuralError("banded matrix index outside band");
    }
    return data_[index(i, j)];
}

double BandedMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_ || !in_band(i, j)) {
        throw StructuralError("banded matrix index outside band");
    }
    return data_[index(i, j)];
}

double BandedMatrix::get(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_ || !in_band(i, j)) return 0.0;
    return data_[index(i, j)];
}

std::vector<double> BandedMatrix::multiply(std::span<const double> x) const {
    if (x.size() != n_) throw StructuralError("banded multiply: dimension mismatch");
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i >= lower_ ? i - lower_ : 0;
        const std::size_t j1 = std::min(n_ - 1, i + upper_);
        double acc = 0.0;
        for (std::size_t j = j0; j <= j1; ++j) acc += data_[index(i, j)] * x[j];
        y[i] = acc;
    }
    return y;
}

BandedMatrix BandedMatrix::identity_plus(double scale) const {
    BandedMatrix out = *this;
    for (double& v : out.data_) v *= scale;
    for (std::size_t i = 0; i < n_; ++i) out.data_[out.index(i, i)] += 1.0;
    return out;
}

std::vector<double> BandedMatrix::solve(std::span<const double> b) const {
    if (b.size() != n_) throw StructuralError("banded solve: dimension mismatch");
    // Elimination without pivoting keeps the fill inside the band.
    BandedMatrix lu = *this;
    std::vector<double> x(b.begin(), b.end());
    for (std::size_t k = 0; k < n_; ++k) {
        const double pivot = lu.data_[lu.index(k, k)];
        if (!std::isfinite(pivot) || std::abs(pivot) < 1e-300) {
            throw StructuralError("banded solve: singular pivot at row " + std::to_string(k));
        }
        const std::size_t i1 = std::min(n_ - 1, k + lower_);
        const std::size_t j1 = std::min(n_ - 1, k + upper_);
        for (std::size_t i = k + 1; i <= i1; ++i) {
            const double factor = lu.data_[lu.index(i, k)] / pivot;
            if (factor == 0.0) continue;
            for (std::size_t j = k; j <= j1; ++j) {
                lu.data_[lu.index(i, j)] -= factor * lu.data_[lu.index(k, j)];
            }
            x[i] -= factor * x[k];
        }
    }
    for (std::size_t kk = n_; kk-- > 0;) {
        const std::size_t j1 = std::min(n_ - 1, kk + upper_);
        double acc = x[kk];
        for (std::size_t j = kk + 1; j <= j1; ++j) acc -= lu.data_[lu.index(kk, j)] * x[j];
        x[kk] = acc / lu.data_[lu.index(kk, kk)];
    }
    return x;
}

} // namespace regnoise
