#include "cubevid/transform.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cubevid {

namespace {

void require_4d(const NdArray& array, const char* what)
{
    if (array.rank() != 4) {
        throw ShapeError(std::string(what) + " expects a [t, y, x, c] array, got shape " +
                         shape_to_string(array.shape()));
    }
}

} // namespace

bool is_supported_bit_depth(int bits)
{
    return std::find(std::begin(k_supported_bit_depths), std::end(k_supported_bit_depths), bits) !=
           std::end(k_supported_bit_depths);
}

QuantParams fit_quant(const NdArray& array, int bit_depth)
{
    require_4d(array, "fit_quant");
    if (!is_supported_bit_depth(bit_depth)) {
        throw ConfigError("unsupported bit depth " + std::to_string(bit_depth));
    }
    const std::size_t nc = array.dim(3);
    QuantParams params{bit_depth, std::vector<ChannelRange>(nc)};
    if (array.size() == 0) {
        throw ShapeError("cannot fit quantization on an empty array");
    }
    std::vector<double> lo(nc, std::numeric_limits<double>::infinity());
    std::vector<double> hi(nc, -std::numeric_limits<double>::infinity());
    const auto values = array.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (!std::isfinite(v)) {
            throw DataError("fit_quant: non-finite value at flat index " + std::to_string(i));
        }
        const std::size_t c = i % nc;
        lo[c] = std::min(lo[c], v);
        hi[c] = std::max(hi[c], v);
    }
    for (std::size_t c = 0; c < nc; ++c) {
        params.channels[c] = {lo[c], hi[c]};
    }
    return params;
}

SampleArray quantize(const NdArray& array, const QuantParams& params, bool clamp)
{
    require_4d(array, "quantize");
    const std::size_t nc = array.dim(3);
    if (params.channels.size() != nc) {
        throw ShapeError("quantize: " + std::to_string(nc) + " channels but parameters for " +
                         std::to_string(params.channels.size()));
    }
    const double levels = params.levels();
    SampleArray out(array.shape());
    const auto in = array.values();
    auto q = out.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
        const auto& range = params.channels[i % nc];
        double v = in[i];
        if (!std::isfinite(v)) {
            throw DataError("quantize: non-finite value at flat index " + std::to_string(i));
        }
        if (v < range.min || v > range.max) {
            if (!clamp) {
                throw DataError("quantize: value " + std::to_string(v) + " outside channel range [" +
                                std::to_string(range.min) + ", " + std::to_string(range.max) + "]");
            }
            v = std::clamp(v, range.min, range.max);
        }
        if (range.constant()) {
            q[i] = 0;
            continue;
        }
        const double scaled = std::round((v - range.min) / (range.max - range.min) * levels);
        q[i] = static_cast<std::uint16_t>(std::clamp(scaled, 0.0, levels));
    }
    return out;
}

NdArray dequantize(const SampleArray& samples, const QuantParams& params)
{
    if (samples.rank() != 4) {
        throw ShapeError("dequantize expects a [t, y, x, c] array");
    }
    const std::size_t nc = samples.dim(3);
    if (params.channels.size() != nc) {
        throw ShapeError("dequantize: " + std::to_string(nc) + " channels but parameters for " +
                         std::to_string(params.channels.size()));
    }
    const auto levels = params.levels();
    NdArray out(samples.shape());
    const auto in = samples.values();
    auto v = out.values();
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] > levels) {
            throw DataError("dequantize: sample " + std::to_string(in[i]) + " exceeds " + std::to_string(levels));
        }
        const auto& range = params.channels[i % nc];
        v[i] = range.constant() ? range.min
                                : range.min + static_cast<double>(in[i]) / levels * (range.max - range.min);
    }
    return out;
}

// --- PCA -------------------------------------------------------------------

double PcaModel::explained_variance_ratio(std::size_t k) const
{
    return total_variance > 0.0 ? explained_variance.at(k) / total_variance : 0.0;
}

PcaModel pca_fit(const NdArray& array, std::size_t n_keep)
{
    require_4d(array, "pca_fit");
    const std::size_t nc = array.dim(3);
    const std::size_t n = array.size() / std::max<std::size_t>(nc, 1);
    if (n_keep < 1 || n_keep > nc) {
        throw ConfigError("pca_fit: n_keep must be in [1, " + std::to_string(nc) + "], got " + std::to_string(n_keep));
    }
    if (n < nc || n < 2) {
        throw ShapeError("pca_fit: need at least " + std::to_string(std::max<std::size_t>(nc, 2)) +
                         " pixel samples, got " + std::to_string(n));
    }
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> samples(
        array.values().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nc));
    if (!samples.allFinite()) {
        throw DataError("pca_fit: non-finite input");
    }

    const Eigen::RowVectorXd mean = samples.colwise().mean();
    Eigen::MatrixXd centered = samples.rowwise() - mean;
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw DataError("pca_fit: eigendecomposition failed");
    }
    // Eigen returns ascending eigenvalues.
    const Eigen::VectorXd evals = solver.eigenvalues();
    const Eigen::MatrixXd evecs = solver.eigenvectors();

    PcaModel model;
    model.mean.assign(mean.data(), mean.data() + nc);
    model.total_variance = cov.trace();
    model.components.resize(n_keep * nc);
    for (std::size_t k = 0; k < n_keep; ++k) {
        const auto col = static_cast<Eigen::Index>(nc - 1 - k);
        Eigen::VectorXd v = evecs.col(col);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) {
            v = -v;
        }
        for (std::size_t c = 0; c < nc; ++c) {
            model.components[k * nc + c] = v(static_cast<Eigen::Index>(c));
        }
        // Round-off can leave tiny negative eigenvalues on rank-deficient input.
        model.explained_variance.push_back(std::max(evals(col), 0.0));
    }
    return model;
}

NdArray pca_forward(const NdArray& array, const PcaModel& model)
{
    require_4d(array, "pca_forward");
    const std::size_t nc = model.n_channels();
    const std::size_t nk = model.n_components();
    if (array.dim(3) != nc) {
        throw ShapeError("pca_forward: array has " + std::to_string(array.dim(3)) + " channels, model expects " +
                         std::to_string(nc));
    }
    NdArray out({array.dim(0), array.dim(1), array.dim(2), nk});
    const auto in = array.values();
    auto pcs = out.values();
    const std::size_t n = array.size() / nc;
    std::vector<double> centered(nc);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t c = 0; c < nc; ++c) {
            centered[c] = in[p * nc + c] - model.mean[c];
        }
        for (std::size_t k = 0; k < nk; ++k) {
            double acc = 0.0;
            for (std::size_t c = 0; c < nc; ++c) {
                acc += centered[c] * model.components[k * nc + c];
            }
            pcs[p * nk + k] = acc;
        }
    }
    return out;
}

NdArray pca_inverse(const NdArray& pcs, const PcaModel& model)
{
    require_4d(pcs, "pca_inverse");
    const std::size_t nc = model.n_channels();
    const std::size_t nk = model.n_components();
    if (pcs.dim(3) != nk) {
        throw ShapeError("pca_inverse: array has " + std::to_string(pcs.dim(3)) + " components, model keeps " +
                         std::to_string(nk));
    }
    NdArray out({pcs.dim(0), pcs.dim(1), pcs.dim(2), nc});
    const auto in = pcs.values();
    auto v = out.values();
    const std::size_t n = pcs.size() / std::max<std::size_t>(nk, 1);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t c = 0; c < nc; ++c) {
            double acc = model.mean[c];
            for (std::size_t k = 0; k < nk; ++k) {
                acc += in[p * nk + k] * model.components[k * nc + c];
            }
            v[p * nc + c] = acc;
        }
    }
    return out;
}

} // namespace cubevid
