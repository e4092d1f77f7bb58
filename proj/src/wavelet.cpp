#include "wdan/wavelet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "wdan/error.hpp"

namespace wdan::wavelet {

namespace {

struct FilterTable {
    std::string_view name;
    std::span<const double> scaling;
};

// Scaling filters in table order (Daubechies, "Ten Lectures on Wavelets";
// identical to PyWavelets rec_lo).
constexpr std::array<double, 2> kHaar = {0.7071067811865476, 0.7071067811865476};

constexpr std::array<double, 4> kDb2 = {0.48296291314453416, 0.8365163037378079,
                                        0.2241438680420134, -0.12940952255126037};

constexpr std::array<double, 6> kDb3 = {0.33267055295008263,  0.8068915093110925,
                                        0.45987750211849154,  -0.13501102001025458,
                                        -0.08544127388202666, 0.03522629188570953};

constexpr std::array<double, 8> kDb4 = {
    0.2303778133088965,   0.7148465705529157,   0.6308807679298589,  -0.027983769416859854,
    -0.18703481171909309, 0.030841381835560764, 0.0328830116668852,  -0.010597401785069032};

constexpr std::array<double, 6> kCoif1 = {-0.07273261951252645, 0.3378976624574818,
                                          0.8525720202116004,   0.3848648468648578,
                                          -0.07273261951252645, -0.015655728135791993};

constexpr std::array<double, 12> kCoif2 = {
    0.01638733646320364,  -0.04146493678687178,   -0.0673725547237256,  0.3861100668227629,
    0.8127236354494135,   0.4170051844232391,     -0.07648859907828076, -0.05943441864643109,
    0.02368017194684777,  0.005611434819368834,   -0.0018232088709110323,
    -0.000720549445520347};

constexpr std::array<double, 18> kCoif3 = {
    -0.003793512864380802, 0.007782596425672746,  0.023452696142077168,  -0.06577191128146936,
    -0.06112339000297255,  0.40517690240911824,   0.7937772226260872,    0.42848347637737,
    -0.07179982161915484,  -0.08230192710629983,  0.03455502757329774,   0.015880544863669452,
    -0.009007976136730624, -0.0025745176881367972, 0.0011175187708306303, 0.0004662169598204029,
    -7.0983302506379e-05,  -3.459977319727278e-05};

constexpr std::array<FilterTable, 8> kTables = {{
    {"haar", kHaar},
    {"db1", kHaar},
    {"db2", kDb2},
    {"db3", kDb3},
    {"db4", kDb4},
    {"coif1", kCoif1},
    {"coif2", kCoif2},
    {"coif3", kCoif3},
}};

long as_long(std::size_t v) { return static_cast<long>(v); }

}  // namespace

WaveletBasis make_basis(std::string_view name) {
    auto it = std::find_if(kTables.begin(), kTables.end(),
                           [&](const FilterTable& t) { return t.name == name; });
    if (it == kTables.end()) {
        throw Error(ErrorKind::UnsupportedWavelet, "unknown wavelet '" + std::string(name) + "'");
    }

    WaveletBasis basis;
    basis.name = std::string(name);
    basis.lowpass.assign(it->scaling.begin(), it->scaling.end());
    const std::size_t len = basis.lowpass.size();
    basis.highpass.resize(len);
    for (std::size_t k = 0; k < len; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        basis.highpass[k] = sign * basis.lowpass[len - 1 - k];
    }

    if (auto problem = validate_basis(basis); !problem.empty()) {
        throw Error(ErrorKind::ContractViolation, "embedded filter table '" + basis.name +
                                                      "' failed validation: " + problem);
    }
    return basis;
}

std::vector<std::string> supported_wavelets() {
    std::vector<std::string> out;
    for (const auto& t : kTables) out.emplace_back(t.name);
    return out;
}

std::string validate_basis(const WaveletBasis& basis) {
    const auto& h = basis.lowpass;
    const auto& g = basis.highpass;
    const std::size_t len = h.size();
    std::ostringstream msg;
    if (len == 0 || len % 2 != 0) return "filter length must be even and nonzero";
    if (g.size() != len) return "lowpass/highpass length differ";

    double sum = 0.0;
    for (double v : h) sum += v;
    if (std::abs(sum - std::sqrt(2.0)) > 1e-10) {
        msg << "sum(h) = " << sum << ", expected sqrt(2)";
        return msg.str();
    }
    for (std::size_t shift = 0; shift < len; shift += 2) {
        double dot = 0.0;
        for (std::size_t k = 0; k + shift < len; ++k) dot += h[k] * h[k + shift];
        const double expected = shift == 0 ? 1.0 : 0.0;
        if (std::abs(dot - expected) > 1e-10) {
            msg << "sum h[k] h[k+" << shift << "] = " << dot;
            return msg.str();
        }
    }
    for (std::size_t k = 0; k < len; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        if (std::abs(g[k] - sign * h[len - 1 - k]) > 1e-12) {
            msg << "highpass is not the quadrature mirror at k=" << k;
            return msg.str();
        }
    }
    return {};
}

double symmetric_at(std::span<const double> signal, long index) noexcept {
    const long n = as_long(signal.size());
    const long period = 2 * n;
    long i = index % period;
    if (i < 0) i += period;
    if (i >= n) i = period - 1 - i;
    return signal[static_cast<std::size_t>(i)];
}

std::size_t coeff_length(std::size_t length, std::size_t support) noexcept {
    return (length + support - 1) / 2;
}

LevelCoeffs dwt_level(std::span<const double> signal, const WaveletBasis& basis) {
    if (signal.size() < 2) {
        throw Error(ErrorKind::SignalTooShort,
                    "dwt_level needs at least 2 samples, got " + std::to_string(signal.size()));
    }
    const auto& h = basis.lowpass;
    const auto& g = basis.highpass;
    const long len = as_long(basis.support());
    const long n_in = as_long(signal.size());
    const long offset = len - 2;
    const std::size_t n_out = coeff_length(signal.size(), basis.support());

    LevelCoeffs out;
    out.approx.resize(n_out);
    out.detail.resize(n_out);
    for (std::size_t n = 0; n < n_out; ++n) {
        const long start = 2 * as_long(n) - offset;
        double a = 0.0;
        double d = 0.0;
        if (start >= 0 && start + len <= n_in) {
            const double* x = signal.data() + start;
            for (long k = 0; k < len; ++k) {
                a += h[k] * x[k];
                d += g[k] * x[k];
            }
        } else {
            for (long k = 0; k < len; ++k) {
                const double v = symmetric_at(signal, start + k);
                a += h[k] * v;
                d += g[k] * v;
            }
        }
        out.approx[n] = a;
        out.detail[n] = d;
    }
    return out;
}

std::vector<double> idwt_level(std::span<const double> approx, std::span<const double> detail,
                               const WaveletBasis& basis, std::size_t target_length) {
    const std::size_t expected = coeff_length(target_length, basis.support());
    if (approx.size() != expected || detail.size() != expected) {
        throw Error(ErrorKind::LengthMismatch,
                    "idwt_level expects " + std::to_string(expected) + " coefficients for length " +
                        std::to_string(target_length) + ", got approx=" +
                        std::to_string(approx.size()) + " detail=" + std::to_string(detail.size()));
    }
    const auto& h = basis.lowpass;
    const auto& g = basis.highpass;
    const long len = as_long(basis.support());
    const long offset = len - 2;
    const long n_out = as_long(target_length);

    std::vector<double> out(target_length, 0.0);
    for (std::size_t n = 0; n < approx.size(); ++n) {
        const long start = 2 * as_long(n) - offset;
        const double a = approx[n];
        const double d = detail[n];
        const long k_lo = std::max(0L, -start);
        const long k_hi = std::min(len, n_out - start);
        for (long k = k_lo; k < k_hi; ++k) {
            out[static_cast<std::size_t>(start + k)] += a * h[k] + d * g[k];
        }
    }
    return out;
}

Decomposition decompose(std::span<const double> signal, const WaveletBasis& basis,
                        std::size_t levels) {
    if (levels == 0) throw Error(ErrorKind::InvalidLevels, "decomposition needs K >= 1");
    if (signal.size() < 2) {
        throw Error(ErrorKind::SignalTooShort,
                    "signal of length " + std::to_string(signal.size()) + " cannot be decomposed");
    }
    if (levels >= 8 * sizeof(std::size_t) || signal.size() < (std::size_t{1} << levels)) {
        throw Error(ErrorKind::TooManyLevels, std::to_string(levels) +
                                                  " levels need at least 2^K samples, got " +
                                                  std::to_string(signal.size()));
    }

    Decomposition d;
    d.levels = levels;
    d.original_length = signal.size();
    d.details.reserve(levels);
    d.level_lengths.reserve(levels);

    std::vector<double> current(signal.begin(), signal.end());
    for (std::size_t k = 0; k < levels; ++k) {
        d.level_lengths.push_back(current.size());
        auto [approx, detail] = dwt_level(current, basis);
        d.details.push_back(std::move(detail));
        current = std::move(approx);
    }
    d.approx = std::move(current);
    return d;
}

namespace {

// Runs synthesis from level `from_level` (1-based, coarsest = d.levels) down
// to the original length, with `approx` entering at that level and zero
// details everywhere except the optional `detail` at the entry level.
std::vector<double> synthesize_from(const Decomposition& d, const WaveletBasis& basis,
                                    std::size_t from_level, std::vector<double> approx,
                                    std::span<const double> detail) {
    std::vector<double> zeros(approx.size(), 0.0);
    std::vector<double> current =
        idwt_level(approx, detail.empty() ? std::span<const double>(zeros) : detail, basis,
                   d.level_lengths[from_level - 1]);
    for (std::size_t level = from_level - 1; level >= 1; --level) {
        zeros.assign(current.size(), 0.0);
        current = idwt_level(current, zeros, basis, d.level_lengths[level - 1]);
    }
    return current;
}

void check_decomposition(const Decomposition& d, const WaveletBasis& basis) {
    if (d.levels == 0 || d.details.size() != d.levels || d.level_lengths.size() != d.levels ||
        d.level_lengths.front() != d.original_length) {
        throw Error(ErrorKind::LengthMismatch, "malformed decomposition");
    }
    for (std::size_t k = 0; k < d.levels; ++k) {
        const std::size_t expected = coeff_length(d.level_lengths[k], basis.support());
        const std::size_t next = k + 1 < d.levels ? d.level_lengths[k + 1] : d.approx.size();
        if (d.details[k].size() != expected || next != expected) {
            throw Error(ErrorKind::LengthMismatch,
                        "decomposition level " + std::to_string(k + 1) +
                            " is inconsistent with basis '" + basis.name + "'");
        }
    }
}

}  // namespace

std::vector<double> reconstruct(const Decomposition& d, const WaveletBasis& basis) {
    check_decomposition(d, basis);
    std::vector<double> current = d.approx;
    for (std::size_t level = d.levels; level >= 1; --level) {
        current = idwt_level(current, d.details[level - 1], basis, d.level_lengths[level - 1]);
    }
    return current;
}

ComponentSplit split_components(const Decomposition& d, const WaveletBasis& basis) {
    check_decomposition(d, basis);
    ComponentSplit out;
    out.trend = synthesize_from(d, basis, d.levels, d.approx, {});
    out.residual.assign(d.original_length, 0.0);
    for (std::size_t level = 1; level <= d.levels; ++level) {
        const auto& detail = d.details[level - 1];
        std::vector<double> zeros(detail.size(), 0.0);
        auto part = synthesize_from(d, basis, level, std::move(zeros), detail);
        for (std::size_t t = 0; t < part.size(); ++t) out.residual[t] += part[t];
    }
    return out;
}

}  // namespace wdan::wavelet
