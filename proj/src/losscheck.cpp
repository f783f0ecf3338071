#include "qacap/losscheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qacap/rng.hpp"

namespace qacap::loss {

namespace {

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

std::vector<std::size_t> random_targets(Rng& rng, std::size_t steps, std::size_t vocab) {
    std::vector<std::size_t> t(steps);
    for (auto& v : t) v = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(vocab) - 1));
    return t;
}

class Tracker {
public:
    Tracker(std::string name, double tol) {
        r_.name = std::move(name);
        r_.tolerance = tol;
    }

    void observe(double err) {
        ++r_.trials;
        if (!(err <= r_.tolerance)) r_.passed = false;  // NaN fails too
        if (std::isnan(err) || err > r_.worst) r_.worst = err;
    }
    void require(bool ok) { observe(ok ? 0.0 : std::numeric_limits<double>::infinity()); }

    CheckResult result() const { return r_; }

private:
    CheckResult r_;
};

double scaled_gap(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double d = analytic[i] - numeric[i];
        diff += d * d;
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    const double denom = std::sqrt(na) + std::sqrt(nn);
    if (denom == 0.0) return 0.0;
    return std::sqrt(diff) / denom;
}

Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, Matrix& x, double step) {
    Matrix g(x.rows(), x.cols());
    auto xs = x.data();
    auto gs = g.data();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double saved = xs[i];
        xs[i] = saved + step;
        const double up = f(x);
        xs[i] = saved - step;
        const double down = f(x);
        xs[i] = saved;
        gs[i] = (up - down) / (2.0 * step);
    }
    return g;
}

std::vector<CheckResult> run_loss_checks(const CheckOptions& opt, const GradientSet& grads) {
    Rng rng(opt.seed);
    const double gtol = opt.gradient_tol, ptol = opt.property_tol;
    Tracker g_xe("grad xe wrt logits", gtol);
    Tracker g_frob_a("grad frobenius wrt first", gtol);
    Tracker g_frob_b("grad frobenius wrt second", gtol);
    Tracker g_lbc("grad lbc wrt logits", gtol);
    Tracker g_dual[3] = {Tracker("grad dual-branch objective (lac)", gtol),
                         Tracker("grad dual-branch objective (loc)", gtol),
                         Tracker("grad dual-branch objective (lbc)", gtol)};
    Tracker p_fixed("losses vanish at fixed points", ptol);
    Tracker p_nonneg("losses are non-negative", 0.0);
    Tracker p_sym("consistency losses are symmetric", 0.0);
    Tracker p_tri("consistency losses obey triangle inequality", ptol);
    Tracker p_scale("frobenius scales with |s|", ptol);
    Tracker p_shift("softmax invariant to logit shift", ptol);
    Tracker p_affine("total is affine in lambda", ptol);
    Tracker p_xe_routes("xe from probs equals xe from logits", 1e-10);

    for (std::size_t c = 0; c < opt.cases; ++c) {
        const auto steps = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(opt.max_rows)));
        const auto vocab = static_cast<std::size_t>(rng.uniform_int(2, static_cast<std::int64_t>(opt.max_cols)));
        const auto lat_r = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(opt.max_rows)));
        const auto lat_c = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(opt.max_cols)));

        DualBranchInputs in{random_matrix(rng, lat_r, lat_c, -2, 2),
                            random_matrix(rng, lat_r, lat_c, -2, 2),
                            random_matrix(rng, steps, vocab, -3, 3),
                            random_matrix(rng, steps, vocab, -3, 3),
                            random_targets(rng, steps, vocab)};
        const double drawn_lambda = rng.uniform(0.0, 2.0);
        const double lambda = opt.lambda.value_or(drawn_lambda);
        const double h = opt.step;

        // Cross-entropy through softmax.
        {
            Matrix x = in.logits_orig;
            auto num = numeric_gradient(
                [&](const Matrix& m) { return xe_loss_from_logits(m, in.targets); }, x, h);
            g_xe.observe(relative_error(grads.xe_logits(x, in.targets).data(), num.data()));
        }
        // Frobenius distance, both arguments.
        {
            Matrix a = in.latent_orig, b = in.latent_aug;
            const PairGrad an = grads.frobenius(a, b);
            auto na = numeric_gradient([&](const Matrix& m) { return frobenius_distance(m, b); }, a, h);
            auto nb = numeric_gradient([&](const Matrix& m) { return frobenius_distance(a, m); }, b, h);
            g_frob_a.observe(relative_error(an.d_first.data(), na.data()));
            g_frob_b.observe(relative_error(an.d_second.data(), nb.data()));
        }
        // Label consistency through both softmaxes.
        {
            Matrix a = in.logits_orig, b = in.logits_aug;
            const PairGrad an = grads.lbc_logits(a, b);
            auto f_a = [&](const Matrix& m) { return lbc_loss(softmax_rows(m), softmax_rows(b)); };
            auto f_b = [&](const Matrix& m) { return lbc_loss(softmax_rows(a), softmax_rows(m)); };
            auto na = numeric_gradient(f_a, a, h);
            auto nb = numeric_gradient(f_b, b, h);
            g_lbc.observe(std::max(relative_error(an.d_first.data(), na.data()),
                                   relative_error(an.d_second.data(), nb.data())));
        }
        // Full objective, every consistency kind, every input.
        for (auto kind : {Consistency::LAC, Consistency::LOC, Consistency::LBC}) {
            const DualBranchGrad an = grads.dual_branch(in, kind, lambda);
            DualBranchInputs x = in;
            auto total = [&](const Matrix&) { return dual_branch_loss(x, kind, lambda).total; };
            const double err = std::max(
                {relative_error(an.d_latent_orig.data(), numeric_gradient(total, x.latent_orig, h).data()),
                 relative_error(an.d_latent_aug.data(), numeric_gradient(total, x.latent_aug, h).data()),
                 relative_error(an.d_logits_orig.data(), numeric_gradient(total, x.logits_orig, h).data()),
                 relative_error(an.d_logits_aug.data(), numeric_gradient(total, x.logits_aug, h).data())});
            g_dual[static_cast<int>(kind)].observe(err);
        }

        const Matrix p = softmax_rows(in.logits_orig), q = softmax_rows(in.logits_aug);
        const Matrix& la = in.latent_orig;
        const Matrix& lb = in.latent_aug;
        const Matrix lc = random_matrix(rng, lat_r, lat_c, -2, 2);

        // Fixed points: equal inputs and one-hot perfect predictions.
        {
            Matrix perfect(steps, vocab);
            for (std::size_t t = 0; t < steps; ++t) perfect(t, in.targets[t]) = 1.0;
            p_fixed.observe(std::max({lac_loss(la, la), loc_loss(in.logits_orig, in.logits_orig),
                                      lbc_loss(p, p), xe_loss(perfect, in.targets)}));
        }
        for (double v : {lac_loss(la, lb), loc_loss(in.logits_orig, in.logits_aug), lbc_loss(p, q),
                         xe_loss(p, in.targets), xe_loss_from_logits(in.logits_aug, in.targets)})
            p_nonneg.require(v >= 0.0);

        p_sym.require(lac_loss(la, lb) == lac_loss(lb, la) &&
                      loc_loss(in.logits_orig, in.logits_aug) == loc_loss(in.logits_aug, in.logits_orig) &&
                      lbc_loss(p, q) == lbc_loss(q, p));

        {
            const double ab = frobenius_distance(la, lb), bc = frobenius_distance(lb, lc),
                         ac = frobenius_distance(la, lc);
            p_tri.observe(std::max(0.0, ac - (ab + bc)) / std::max(1.0, ab + bc));
        }
        {
            const double s = rng.uniform(-5.0, 5.0);
            const double d = frobenius_distance(s * la, s * lb);
            p_scale.observe(scaled_gap(d, std::abs(s) * frobenius_distance(la, lb)));
        }
        {
            const double shift = rng.uniform(-50.0, 50.0);
            for (std::size_t t = 0; t < steps; ++t) {
                std::vector<double> shifted(in.logits_orig.row(t).begin(), in.logits_orig.row(t).end());
                for (double& v : shifted) v += shift;
                const auto a = softmax(in.logits_orig.row(t));
                const auto b = softmax(shifted);
                double gap = 0.0;
                for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
                p_shift.observe(gap);
            }
        }
        {
            const double l1 = rng.uniform(0.0, 3.0), l2 = rng.uniform(0.0, 3.0);
            for (auto kind : {Consistency::LAC, Consistency::LOC, Consistency::LBC}) {
                const auto b1 = dual_branch_loss(in, kind, l1);
                const auto b2 = dual_branch_loss(in, kind, l2);
                p_affine.observe(scaled_gap(b2.total - b1.total, (l2 - l1) * b1.cons));
            }
        }
        p_xe_routes.observe(scaled_gap(xe_loss(p, in.targets),
                                       xe_loss_from_logits(in.logits_orig, in.targets)));
    }

    std::vector<CheckResult> out;
    for (const Tracker* t : {&g_xe, &g_frob_a, &g_frob_b, &g_lbc, &g_dual[0], &g_dual[1], &g_dual[2],
                             &p_fixed, &p_nonneg, &p_sym, &p_tri, &p_scale, &p_shift, &p_affine,
                             &p_xe_routes})
        out.push_back(t->result());
    return out;
}

}  // namespace qacap::loss
