#pragma once

// Reference softmax attention, attention restricted to the representative set, and the
// per-token error bound for the nearest-representative approximation.

#include "ada/errors.hpp"
#include "ada/linalg.hpp"
#include "ada/selector.hpp"
#include "ada/trace.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ada {

struct HeadProjections {
    Matrix w_q; ///< d×d_h
    Matrix w_k; ///< d×d_h
    Matrix w_v; ///< d×d_h
};

class AttentionWeights {
public:
    explicit AttentionWeights(std::vector<HeadProjections> heads) : heads_(std::move(heads)) {
        if (heads_.empty()) {
            throw config_error("attention needs at least one head");
        }
        const std::size_t d = heads_.front().w_q.rows();
        const std::size_t dh = heads_.front().w_q.cols();
        if (d == 0 || dh == 0) {
            throw config_error("projection matrices must be non-empty");
        }
        for (const auto& h : heads_) {
            for (const Matrix* m : {&h.w_q, &h.w_k, &h.w_v}) {
                if (m->rows() != d || m->cols() != dh) {
                    throw dimension_mismatch("all projections must be " + std::to_string(d) + "x" +
                                             std::to_string(dh));
                }
                if (!all_finite(*m)) {
                    throw data_error("projection matrix has non-finite entries");
                }
            }
        }
    }

    /// Gaussian projections with entries N(0, 1/d).
    static AttentionWeights random(std::size_t d, std::size_t head_dim, std::size_t num_heads, Rng& rng) {
        std::vector<HeadProjections> heads;
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        for (std::size_t h = 0; h < num_heads; ++h) {
            Matrix q = random_normal(d, head_dim, rng, scale);
            Matrix k = random_normal(d, head_dim, rng, scale);
            Matrix v = random_normal(d, head_dim, rng, scale);
            heads.push_back({std::move(q), std::move(k), std::move(v)});
        }
        return AttentionWeights(std::move(heads));
    }

    [[nodiscard]] std::size_t num_heads() const noexcept { return heads_.size(); }
    [[nodiscard]] std::size_t head_dim() const noexcept { return heads_.front().w_q.cols(); }
    [[nodiscard]] std::size_t model_dim() const noexcept { return heads_.front().w_q.rows(); }
    [[nodiscard]] const HeadProjections& head(std::size_t h) const {
        if (h >= heads_.size()) {
            throw dimension_mismatch("head " + std::to_string(h) + " out of range (" +
                                     std::to_string(heads_.size()) + " heads)");
        }
        return heads_[h];
    }

private:
    std::vector<HeadProjections> heads_;
};

/// T×d_h output of one head.
struct AttentionOutput {
    Matrix data;
};

namespace detail {

inline void check_attention_shapes(const Matrix& x, const AttentionWeights& w) {
    if (x.cols() != w.model_dim()) {
        throw dimension_mismatch("activation width " + std::to_string(x.cols()) + " != projection rows " +
                                 std::to_string(w.model_dim()));
    }
}

/// In-place row softmax with max subtraction.
inline void softmax_rows(Matrix& scores) {
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto row = scores.row(i);
        const double mx = *std::ranges::max_element(row);
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : row) {
            v /= sum;
        }
    }
}

/// softmax(Q Kᵀ / sqrt(d_h)) over the given rows of x.
inline Matrix probabilities(const Matrix& x_rows, const HeadProjections& p) {
    const Matrix q = matmul(x_rows, p.w_q);
    const Matrix k = matmul(x_rows, p.w_k);
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.w_q.cols()));
    Matrix scores = matmul(q, transpose(k));
    for (double& s : scores.values()) {
        s *= scale;
    }
    softmax_rows(scores);
    return scores;
}

inline Matrix attend(const Matrix& x_rows, const HeadProjections& p) {
    return matmul(probabilities(x_rows, p), matmul(x_rows, p.w_v));
}

inline double bound_from_norms(double tau, double wq_norm, double wv_norm, double k_frobenius, double x_norm,
                               std::size_t head_dim) {
    return tau * (wq_norm * k_frobenius / std::sqrt(static_cast<double>(head_dim)) + wv_norm) * x_norm;
}

} // namespace detail

/// Softmax attention weights for one head, T×T. Exposed for row-stochasticity checks.
[[nodiscard]] inline Matrix attention_probabilities(const LayerActivation& x, const AttentionWeights& w,
                                                    std::size_t head) {
    detail::check_attention_shapes(x.data(), w);
    return detail::probabilities(x.data(), w.head(head));
}

[[nodiscard]] inline AttentionOutput full_attention(const LayerActivation& x, const AttentionWeights& w,
                                                    std::size_t head) {
    detail::check_attention_shapes(x.data(), w);
    return {detail::attend(x.data(), w.head(head))};
}

/// Attention on the r×r representative subproblem; redundant tokens copy their nearest
/// representative's output row.
[[nodiscard]] inline AttentionOutput compressed_attention(const LayerActivation& x, const AttentionWeights& w,
                                                          const RepSet& reps, const RepAssignment& assign,
                                                          std::size_t head) {
    detail::check_attention_shapes(x.data(), w);
    if (reps.size() == 0) {
        throw empty_rep_set();
    }
    const std::size_t T = x.tokens();
    if (reps.seq_len() != T || assign.nearest.size() != T) {
        throw dimension_mismatch("representative set / assignment do not match T = " + std::to_string(T));
    }
    const Matrix rep_out = detail::attend(gather_rows(x.data(), reps.indices()), w.head(head));

    std::vector<std::size_t> slot(T, 0);
    for (std::size_t i = 0; i < reps.size(); ++i) {
        slot[reps.indices()[i]] = i;
    }
    Matrix out(T, w.head_dim());
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t s = assign.nearest[t];
        if (!reps.contains(s)) {
            throw dimension_mismatch("assignment maps token " + std::to_string(t) + " to non-representative " +
                                     std::to_string(s));
        }
        std::ranges::copy(rep_out.row(slot[s]), out.row(t).begin());
    }
    return {std::move(out)};
}

/// tau * (‖W_Q‖₂ ‖K‖_F / sqrt(d_h) + ‖W_V‖₂) * ‖x_t‖, spectral norms by power iteration.
[[nodiscard]] inline double attention_error_bound(double tau, const AttentionWeights& w, double k_frobenius,
                                                  double x_norm, std::size_t head) {
    if (!(tau >= 0.0 && tau < 1.0)) {
        throw config_error("tau must lie in [0, 1), got " + std::to_string(tau));
    }
    if (!(k_frobenius >= 0.0) || !(x_norm >= 0.0)) {
        throw data_error("norms must be nonnegative");
    }
    const auto& p = w.head(head);
    return detail::bound_from_norms(tau, spectral_norm(p.w_q).value, spectral_norm(p.w_v).value, k_frobenius,
                                    x_norm, w.head_dim());
}

/// ‖K‖_F with K = X W_K over all tokens.
[[nodiscard]] inline double key_frobenius(const LayerActivation& x, const AttentionWeights& w, std::size_t head) {
    detail::check_attention_shapes(x.data(), w);
    return frobenius_norm(matmul(x.data(), w.head(head).w_k));
}

/// Per-token ‖full(t) - compressed(t)‖.
[[nodiscard]] inline std::vector<double> empirical_attention_error(const LayerActivation& x,
                                                                   const AttentionWeights& w, const RepSet& reps,
                                                                   const RepAssignment& assign, std::size_t head) {
    const AttentionOutput full = full_attention(x, w, head);
    const AttentionOutput comp = compressed_attention(x, w, reps, assign, head);
    std::vector<double> err(x.tokens());
    for (std::size_t t = 0; t < x.tokens(); ++t) {
        err[t] = distance(full.data.row(t), comp.data.row(t));
    }
    return err;
}

/// Bound check over the redundant tokens of one head.
struct BoundAudit {
    std::size_t redundant = 0;
    /// Redundant tokens whose normalized distance to the nearest rep is <= tau.
    std::size_t hypothesis_holds = 0;
    /// Among those, tokens whose empirical error exceeds the bound.
    std::size_t violations = 0;
    double max_error = 0.0;
    double max_ratio = 0.0; ///< max error / bound over hypothesis-satisfying tokens
    /// Same check on |full(t) - full(s*)|, which leaves out the key-set truncation.
    std::size_t pair_violations = 0;
    double max_pair_ratio = 0.0;

    [[nodiscard]] double coverage() const noexcept {
        return redundant == 0 ? 1.0 : static_cast<double>(hypothesis_holds) / static_cast<double>(redundant);
    }
};

[[nodiscard]] inline BoundAudit audit_attention_bound(const LayerActivation& x, const AttentionWeights& w,
                                                      const RepSet& reps, const RepAssignment& assign,
                                                      double tau, std::size_t head) {
    const UnitRowActivation xhat = row_normalize(x);
    const std::vector<double> err = empirical_attention_error(x, w, reps, assign, head);
    const Matrix full = full_attention(x, w, head).data;
    const double kf = key_frobenius(x, w, head);
    const double wq = spectral_norm(w.head(head).w_q).value;
    const double wv = spectral_norm(w.head(head).w_v).value;
    BoundAudit audit;
    for (std::size_t t = 0; t < x.tokens(); ++t) {
        if (reps.contains(t)) {
            continue;
        }
        ++audit.redundant;
        audit.max_error = std::max(audit.max_error, err[t]);
        if (distance(xhat.row(t), xhat.row(assign.nearest[t])) > tau) {
            continue;
        }
        ++audit.hypothesis_holds;
        const double bound = detail::bound_from_norms(tau, wq, wv, kf, xhat.source_norms()[t], w.head_dim());
        if (bound > 0.0) {
            audit.max_ratio = std::max(audit.max_ratio, err[t] / bound);
        }
        if (err[t] > bound) {
            ++audit.violations;
        }
        const double pair = distance(full.row(t), full.row(assign.nearest[t]));
        if (bound > 0.0) {
            audit.max_pair_ratio = std::max(audit.max_pair_ratio, pair / bound);
        }
        if (pair > bound) {
            ++audit.pair_violations;
        }
    }
    return audit;
}

} // namespace ada
