#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wdan::wavelet {

/// Orthonormal two-channel filter pair. `lowpass` is the scaling filter h in
/// table order (it sums to sqrt(2)); `highpass` is its quadrature mirror
/// g[k] = (-1)^k h[L-1-k]. Analysis correlates with these filters and
/// synthesis applies their transpose.
struct WaveletBasis {
    std::string name;
    std::vector<double> lowpass;
    std::vector<double> highpass;

    std::size_t support() const noexcept { return lowpass.size(); }
};

/// Looks up one of the embedded filter tables (haar/db1, db2..db4,
/// coif1..coif3). Throws UnsupportedWavelet for anything else.
WaveletBasis make_basis(std::string_view name);

/// Names accepted by make_basis.
std::vector<std::string> supported_wavelets();

/// Checks the orthonormal-basis invariants (even equal length, unit norm,
/// double-shift orthogonality, DC gain sqrt(2), QMF relation). Returns an
/// empty string when all hold, otherwise a description of the first failure.
std::string validate_basis(const WaveletBasis& basis);

/// Half-sample symmetric extension: x[-1] = x[0], x[N] = x[N-1], and so on
/// periodically with period 2N. Valid for any integer index.
double symmetric_at(std::span<const double> signal, long index) noexcept;

/// Number of coefficients one analysis level produces for a signal of
/// `length` samples: floor((length + L - 1) / 2).
std::size_t coeff_length(std::size_t length, std::size_t support) noexcept;

struct LevelCoeffs {
    std::vector<double> approx;
    std::vector<double> detail;
};

/// One analysis level:
///   approx[n] = sum_k h[k] * ext[2n + k - (L - 2)]
///   detail[n] = sum_k g[k] * ext[2n + k - (L - 2)]
/// with `ext` the symmetric extension. Every coefficient whose filter support
/// touches the signal is kept, so synthesis is exact on [0, length).
LevelCoeffs dwt_level(std::span<const double> signal, const WaveletBasis& basis);

/// Synthesis for one level, evaluated on [0, target_length). Either input may
/// be all zeros. Throws LengthMismatch unless both have
/// coeff_length(target_length) entries.
std::vector<double> idwt_level(std::span<const double> approx,
                               std::span<const double> detail,
                               const WaveletBasis& basis,
                               std::size_t target_length);

/// K-level analysis chain. `level_lengths[k]` is the length of the signal fed
/// into level k+1 (so level_lengths[0] is the original length).
struct Decomposition {
    std::vector<double> approx;
    std::vector<std::vector<double>> details;  // details[0] is the finest level
    std::size_t levels = 0;
    std::size_t original_length = 0;
    std::vector<std::size_t> level_lengths;
};

Decomposition decompose(std::span<const double> signal, const WaveletBasis& basis,
                        std::size_t levels);

/// Inverse of decompose.
std::vector<double> reconstruct(const Decomposition& d, const WaveletBasis& basis);

struct ComponentSplit {
    std::vector<double> trend;
    std::vector<double> residual;
};

/// trend = reconstruction from the final approximation alone; residual = sum
/// over levels of the reconstruction from that level's detail alone.
ComponentSplit split_components(const Decomposition& d, const WaveletBasis& basis);

}  // namespace wdan::wavelet
