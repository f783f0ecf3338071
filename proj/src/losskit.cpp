#include "qacap/losskit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qacap/error.hpp"

namespace qacap::loss {

namespace {

void require_finite(const Matrix& m, const char* what) {
    for (double v : m.data())
        if (!std::isfinite(v)) throw ParameterError(std::string(what) + " has a non-finite entry");
}

void require_same_shape(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw ShapeError("shape mismatch: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

void require_targets(const Matrix& m, std::span<const std::size_t> targets) {
    if (targets.size() != m.rows())
        throw ShapeError(std::to_string(targets.size()) + " targets for " +
                         std::to_string(m.rows()) + " steps");
    for (std::size_t t = 0; t < targets.size(); ++t)
        if (targets[t] >= m.cols())
            throw ParameterError("target " + std::to_string(targets[t]) + " at step " +
                                 std::to_string(t) + " outside vocabulary of " +
                                 std::to_string(m.cols()));
}

void require_stochastic(const Matrix& p, const char* what) {
    for (std::size_t r = 0; r < p.rows(); ++r) {
        double s = 0.0;
        for (double v : p.row(r)) {
            if (v < 0.0) throw ParameterError(std::string(what) + " has a negative probability");
            s += v;
        }
        if (std::abs(s - 1.0) > kStochasticTol)
            throw ParameterError(std::string(what) + " row " + std::to_string(r) + " sums to " +
                                 std::to_string(s));
    }
}

double log_sum_exp(std::span<const double> x) {
    const double m = *std::max_element(x.begin(), x.end());
    double s = 0.0;
    for (double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

// Vector-Jacobian product of a softmax row: p * (g - <g, p>).
void softmax_vjp(std::span<const double> p, std::span<const double> g, std::span<double> out) {
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += g[i] * p[i];
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] * (g[i] - dot);
}

}  // namespace

std::string_view to_string(Consistency c) {
    switch (c) {
        case Consistency::LAC: return "lac";
        case Consistency::LOC: return "loc";
        case Consistency::LBC: return "lbc";
    }
    return "unknown";
}

Consistency consistency_from_string(std::string_view s) {
    if (s == "lac" || s == "LAC") return Consistency::LAC;
    if (s == "loc" || s == "LOC") return Consistency::LOC;
    if (s == "lbc" || s == "LBC") return Consistency::LBC;
    throw ParameterError("unknown consistency loss \"" + std::string(s) + "\"");
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw ParameterError("softmax of an empty vector");
    for (double v : logits)
        if (!std::isfinite(v)) throw ParameterError("softmax input has a non-finite entry");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double s = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) s += out[i] = std::exp(logits[i] - m);
    for (double& v : out) v /= s;
    return out;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto p = softmax(logits.row(r));
        std::copy(p.begin(), p.end(), out.row(r).begin());
    }
    return out;
}

double xe_loss(const Matrix& probs, std::span<const std::size_t> targets) {
    require_finite(probs, "probabilities");
    require_targets(probs, targets);
    require_stochastic(probs, "probabilities");
    double loss = 0.0;
    for (std::size_t t = 0; t < targets.size(); ++t)
        loss -= std::log(std::max(probs(t, targets[t]), kProbFloor));
    return loss;
}

double xe_loss_from_logits(const Matrix& logits, std::span<const std::size_t> targets) {
    require_finite(logits, "logits");
    require_targets(logits, targets);
    double loss = 0.0;
    for (std::size_t t = 0; t < targets.size(); ++t)
        loss += log_sum_exp(logits.row(t)) - logits(t, targets[t]);
    return loss;
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b);
    require_finite(a, "first matrix");
    require_finite(b, "second matrix");
    const auto x = a.data(), y = b.data();
    // Scale by the largest difference so huge entries do not overflow.
    double scale = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) scale = std::max(scale, std::abs(x[i] - y[i]));
    if (scale == 0.0) return 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = (x[i] - y[i]) / scale;
        ss += d * d;
    }
    return scale * std::sqrt(ss);
}

double lac_loss(const Matrix& latent_orig, const Matrix& latent_aug) {
    return frobenius_distance(latent_orig, latent_aug);
}

double loc_loss(const Matrix& logits_orig, const Matrix& logits_aug) {
    return frobenius_distance(logits_orig, logits_aug);
}

double lbc_loss(const Matrix& probs_orig, const Matrix& probs_aug) {
    require_same_shape(probs_orig, probs_aug);
    require_stochastic(probs_orig, "original predictions");
    require_stochastic(probs_aug, "augmented predictions");
    return frobenius_distance(probs_orig, probs_aug);
}

LossBundle combined_loss(double xe_orig, double xe_aug, double cons, double lambda,
                         Consistency kind) {
    for (double v : {xe_orig, xe_aug, cons, lambda})
        if (!std::isfinite(v)) throw ParameterError("combined loss input is not finite");
    if (lambda < 0.0) throw ParameterError("lambda must be >= 0");
    return {xe_orig, xe_aug, cons, kind, lambda, xe_orig + xe_aug + lambda * cons};
}

Matrix grad_xe_logits(const Matrix& logits, std::span<const std::size_t> targets) {
    require_finite(logits, "logits");
    require_targets(logits, targets);
    Matrix g = softmax_rows(logits);
    for (std::size_t t = 0; t < targets.size(); ++t) g(t, targets[t]) -= 1.0;
    return g;
}

Matrix grad_xe_probs(const Matrix& probs, std::span<const std::size_t> targets) {
    require_finite(probs, "probabilities");
    require_targets(probs, targets);
    Matrix g(probs.rows(), probs.cols());
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const double p = probs(t, targets[t]);
        // Below the floor the clamped loss is flat.
        if (p > kProbFloor) g(t, targets[t]) = -1.0 / p;
    }
    return g;
}

PairGrad grad_frobenius(const Matrix& a, const Matrix& b) {
    const double d = frobenius_distance(a, b);
    PairGrad g{Matrix(a.rows(), a.cols()), Matrix(a.rows(), a.cols())};
    if (d == 0.0) return g;  // subgradient at the singularity
    const auto x = a.data(), y = b.data();
    auto ga = g.d_first.data(), gb = g.d_second.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        ga[i] = (x[i] - y[i]) / d;
        gb[i] = -ga[i];
    }
    return g;
}

PairGrad grad_lbc_logits(const Matrix& logits_orig, const Matrix& logits_aug) {
    require_same_shape(logits_orig, logits_aug);
    const Matrix p = softmax_rows(logits_orig);
    const Matrix q = softmax_rows(logits_aug);
    const PairGrad dp = grad_frobenius(p, q);
    PairGrad g{Matrix(p.rows(), p.cols()), Matrix(p.rows(), p.cols())};
    for (std::size_t r = 0; r < p.rows(); ++r) {
        softmax_vjp(p.row(r), dp.d_first.row(r), g.d_first.row(r));
        softmax_vjp(q.row(r), dp.d_second.row(r), g.d_second.row(r));
    }
    return g;
}

LossBundle dual_branch_loss(const DualBranchInputs& in, Consistency kind, double lambda) {
    const double xe_o = xe_loss_from_logits(in.logits_orig, in.targets);
    const double xe_a = xe_loss_from_logits(in.logits_aug, in.targets);
    double cons = 0.0;
    switch (kind) {
        case Consistency::LAC: cons = lac_loss(in.latent_orig, in.latent_aug); break;
        case Consistency::LOC: cons = loc_loss(in.logits_orig, in.logits_aug); break;
        case Consistency::LBC:
            cons = lbc_loss(softmax_rows(in.logits_orig), softmax_rows(in.logits_aug));
            break;
    }
    return combined_loss(xe_o, xe_a, cons, lambda, kind);
}

DualBranchGrad dual_branch_grad(const DualBranchInputs& in, Consistency kind, double lambda) {
    if (lambda < 0.0) throw ParameterError("lambda must be >= 0");
    DualBranchGrad g{Matrix(in.latent_orig.rows(), in.latent_orig.cols()),
                     Matrix(in.latent_aug.rows(), in.latent_aug.cols()),
                     grad_xe_logits(in.logits_orig, in.targets),
                     grad_xe_logits(in.logits_aug, in.targets)};
    auto add_scaled = [lambda](Matrix& dst, const Matrix& src) {
        auto d = dst.data();
        auto s = src.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += lambda * s[i];
    };
    switch (kind) {
        case Consistency::LAC: {
            auto c = grad_frobenius(in.latent_orig, in.latent_aug);
            add_scaled(g.d_latent_orig, c.d_first);
            add_scaled(g.d_latent_aug, c.d_second);
            break;
        }
        case Consistency::LOC: {
            auto c = grad_frobenius(in.logits_orig, in.logits_aug);
            add_scaled(g.d_logits_orig, c.d_first);
            add_scaled(g.d_logits_aug, c.d_second);
            break;
        }
        case Consistency::LBC: {
            auto c = grad_lbc_logits(in.logits_orig, in.logits_aug);
            add_scaled(g.d_logits_orig, c.d_first);
            add_scaled(g.d_logits_aug, c.d_second);
            break;
        }
    }
    return g;
}

}  // namespace qacap::loss
