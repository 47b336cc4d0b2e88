#pragma once

// Activation traces: per-layer token hidden states, the on-disk ADATRACE format,
// and row normalization.

#include "ada/errors.hpp"
#include "ada/linalg.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace ada {

/// Rows whose norm is below this are treated as degenerate.
inline constexpr double kMinRowNorm = 1e-12;

/// T×d token hidden states at one layer. Immutable after construction.
class LayerActivation {
public:
    LayerActivation(std::size_t layer_index, Matrix data) : layer_index_(layer_index), data_(std::move(data)) {
        if (data_.rows() == 0 || data_.cols() == 0) {
            throw dimension_mismatch("layer activation needs T >= 1 and d >= 1");
        }
        if (!all_finite(data_)) {
            throw data_error("layer " + std::to_string(layer_index_) + " contains non-finite activations");
        }
    }

    [[nodiscard]] std::size_t layer_index() const noexcept { return layer_index_; }
    [[nodiscard]] const Matrix& data() const noexcept { return data_; }
    [[nodiscard]] std::size_t tokens() const noexcept { return data_.rows(); }
    [[nodiscard]] std::size_t hidden_dim() const noexcept { return data_.cols(); }

private:
    std::size_t layer_index_;
    Matrix data_;
};

/// Row-normalized activation plus the original row norms.
class UnitRowActivation {
public:
    UnitRowActivation(Matrix data, std::vector<double> source_norms)
        : data_(std::move(data)), source_norms_(std::move(source_norms)) {}

    [[nodiscard]] const Matrix& data() const noexcept { return data_; }
    [[nodiscard]] std::span<const double> source_norms() const noexcept { return source_norms_; }
    [[nodiscard]] std::size_t tokens() const noexcept { return data_.rows(); }
    [[nodiscard]] std::span<const double> row(std::size_t t) const noexcept { return data_.row(t); }

private:
    Matrix data_;
    std::vector<double> source_norms_;
};

[[nodiscard]] inline UnitRowActivation row_normalize(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    std::vector<double> norms(x.rows());
    for (std::size_t t = 0; t < x.rows(); ++t) {
        const double n = norm2(x.row(t));
        if (!(n >= kMinRowNorm)) {
            throw zero_norm_row(t, n);
        }
        norms[t] = n;
        auto dst = out.row(t);
        const auto src = x.row(t);
        for (std::size_t j = 0; j < x.cols(); ++j) {
            dst[j] = src[j] / n;
        }
    }
    return {std::move(out), std::move(norms)};
}

[[nodiscard]] inline UnitRowActivation row_normalize(const LayerActivation& x) { return row_normalize(x.data()); }

/// A full model trace: L layers of identical shape, indexed 0..L-1.
class ActivationTrace {
public:
    ActivationTrace(std::string model_name, std::vector<LayerActivation> layers)
        : model_name_(std::move(model_name)), layers_(std::move(layers)) {
        if (layers_.empty()) {
            throw format_error("trace must contain at least one layer");
        }
        const std::size_t T = layers_.front().tokens();
        const std::size_t d = layers_.front().hidden_dim();
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            if (layers_[l].layer_index() != l) {
                throw format_error("layer indices must be contiguous from 0; position " + std::to_string(l) +
                                   " holds layer " + std::to_string(layers_[l].layer_index()));
            }
            if (layers_[l].tokens() != T || layers_[l].hidden_dim() != d) {
                throw format_error("layer " + std::to_string(l) + " shape differs from layer 0");
            }
        }
    }

    [[nodiscard]] const std::string& model_name() const noexcept { return model_name_; }
    [[nodiscard]] std::size_t num_layers() const noexcept { return layers_.size(); }
    [[nodiscard]] std::size_t seq_len() const noexcept { return layers_.front().tokens(); }
    [[nodiscard]] std::size_t hidden_dim() const noexcept { return layers_.front().hidden_dim(); }
    [[nodiscard]] const std::vector<LayerActivation>& layers() const noexcept { return layers_; }
    [[nodiscard]] const LayerActivation& layer(std::size_t l) const { return layers_.at(l); }

private:
    std::string model_name_;
    std::vector<LayerActivation> layers_;
};

namespace trace_format {

inline constexpr std::array<char, 8> kMagic = {'A', 'D', 'A', 'T', 'R', 'A', 'C', 'E'};
inline constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
    }
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

/// Canonical header: compact JSON with keys in sorted order.
[[nodiscard]] inline std::string header_json(const std::string& model, std::size_t L, std::size_t T, std::size_t d) {
    nlohmann::json h = {{"model", model}, {"L", L}, {"T", T}, {"d", d}, {"dtype", "f32"}};
    return h.dump();
}

/// Encodes a trace into its file bytes.
[[nodiscard]] inline std::string encode(const ActivationTrace& trace) {
    const std::size_t L = trace.num_layers();
    const std::size_t T = trace.seq_len();
    const std::size_t d = trace.hidden_dim();
    const std::string header = header_json(trace.model_name(), L, T, d);

    std::string out;
    out.reserve(16 + header.size() + L * T * d * 4);
    out.append(kMagic.data(), kMagic.size());
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    for (const auto& layer : trace.layers()) {
        for (double v : layer.data().values()) {
            const auto f = static_cast<float>(v);
            if (!std::isfinite(f)) {
                throw format_error("value " + std::to_string(v) + " is not representable as a finite f32");
            }
            put_f32(out, f);
        }
    }
    return out;
}

/// Decodes file bytes. Accepts any valid JSON header layout, not just the canonical one.
[[nodiscard]] inline ActivationTrace decode(const std::string& bytes) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 16 || std::memcmp(p, kMagic.data(), kMagic.size()) != 0) {
        throw format_error("missing ADATRACE magic");
    }
    const std::uint32_t version = get_u32(p + 8);
    if (version != kVersion) {
        throw format_error("unsupported trace version " + std::to_string(version));
    }
    const std::uint32_t header_len = get_u32(p + 12);
    if (bytes.size() - 16 < header_len) {
        throw format_error("header length " + std::to_string(header_len) + " exceeds file size");
    }

    nlohmann::json h;
    try {
        h = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("trace header is not valid JSON: ") + e.what());
    }

    std::string model;
    std::int64_t L = 0, T = 0, d = 0;
    try {
        model = h.at("model").get<std::string>();
        L = h.at("L").get<std::int64_t>();
        T = h.at("T").get<std::int64_t>();
        d = h.at("d").get<std::int64_t>();
        if (h.at("dtype").get<std::string>() != "f32") {
            throw format_error("unsupported dtype " + h.at("dtype").dump());
        }
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("trace header missing or mistyped field: ") + e.what());
    }
    if (L < 1 || T < 1 || d < 1) {
        throw format_error("trace header needs L, T, d >= 1");
    }

    const auto uL = static_cast<std::size_t>(L);
    const auto uT = static_cast<std::size_t>(T);
    const auto ud = static_cast<std::size_t>(d);
    const std::size_t payload = bytes.size() - 16 - header_len;
    // Guard the product against overflow before comparing.
    if (uT > payload / 4 / ud || uL > payload / 4 / (uT * ud)) {
        throw format_error("payload holds " + std::to_string(payload) + " bytes, fewer than L*T*d f32 values");
    }
    const std::size_t expected = uL * uT * ud * 4;
    if (payload != expected) {
        throw format_error("payload holds " + std::to_string(payload) + " bytes, expected " +
                           std::to_string(expected));
    }

    std::vector<LayerActivation> layers;
    layers.reserve(uL);
    const unsigned char* cursor = p + 16 + header_len;
    for (std::size_t l = 0; l < uL; ++l) {
        std::vector<double> values(uT * ud);
        for (double& v : values) {
            v = static_cast<double>(std::bit_cast<float>(get_u32(cursor)));
            cursor += 4;
        }
        layers.emplace_back(l, Matrix(uT, ud, std::move(values)));
    }
    return {std::move(model), std::move(layers)};
}

} // namespace trace_format

[[nodiscard]] inline ActivationTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open trace " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw io_error("read failed for " + path.string());
    }
    return trace_format::decode(bytes);
}

inline void write_trace(const ActivationTrace& trace, const std::filesystem::path& path) {
    const std::string bytes = trace_format::encode(trace);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io_error("cannot open " + path.string() + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw io_error("write failed for " + path.string());
    }
}

} // namespace ada
